#pragma once

#include <stdexcept>
#include <string>

namespace ntg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// pcap
struct BadMagic : Error { using Error::Error; };
struct TruncatedRecord : Error { using Error::Error; };
struct UnsupportedLinkType : Error { using Error::Error; };
struct OversizedPacket : Error { using Error::Error; };

// packet headers
struct NotIPv4 : Error { using Error::Error; };
struct NotEthernet : Error { using Error::Error; };
struct HeaderTruncated : Error { using Error::Error; };

// tokenizer / generation
struct UnknownLabel : Error { using Error::Error; };
struct SequenceTooLong : Error { using Error::Error; };
struct SeedTooLong : Error { using Error::Error; };

// training / evaluation
struct EmptyCorpus : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };

// file formats
struct BadFileFormat : Error { using Error::Error; };

} // namespace ntg
