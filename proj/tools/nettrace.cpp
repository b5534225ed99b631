// nettrace: byte-level flow modeling pipeline.
//   split | dnsfilter | tokenize | train | generate | nprint | similarity | memcheck
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ntg/fieldbits.hpp"
#include "ntg/flow.hpp"
#include "ntg/generate.hpp"
#include "ntg/model.hpp"
#include "ntg/pcap.hpp"
#include "ntg/similarity.hpp"
#include "ntg/tokenizer.hpp"
#include "ntg/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void emit(const json& summary, bool as_json) {
    if (as_json) {
        std::cout << summary.dump(2) << "\n";
    } else {
        for (const auto& [k, v] : summary.items())
            std::cout << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ntg::Error("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ntg::Error("cannot open " + path);
    return json::parse(in);
}

ntg::ModelConfig preset_config(const std::string& name, size_t vocab) {
    if (name == "desk") return ntg::ModelConfig::desk_preset(vocab);
    if (name == "paper") return ntg::ModelConfig::paper_preset(vocab);
    throw CLI::ValidationError("--preset", "unknown preset: " + name);
}

int cmd_split(const std::string& input, const std::string& label, const std::string& out_dir,
              bool as_json) {
    ntg::CaptureFile cap = ntg::read_pcap_file(input);
    ntg::SplitResult res = ntg::split_flows(cap, label);
    fs::create_directories(out_dir);
    json manifest = json::array();
    for (const ntg::FlowRecord& f : res.flows) {
        ntg::CaptureFile fc;
        fc.link_type = cap.link_type;
        fc.resolution = cap.resolution;
        fc.packets = f.packets;
        const std::string path = (fs::path(out_dir) / (f.key.to_string() + ".pcap")).string();
        ntg::write_pcap_file(path, fc);
        manifest.push_back({{"pcap", path}, {"label", label}});
    }
    write_json_file((fs::path(out_dir) / "manifest.json").string(), manifest);
    emit({{"flows", res.flows.size()}, {"diverted", res.diverted}}, as_json);
    return 0;
}

int cmd_dnsfilter(const std::string& input, const std::vector<std::string>& patterns,
                  const std::string& output, bool as_json) {
    ntg::CaptureFile cap = ntg::read_pcap_file(input);
    ntg::DnsFilterResult res = ntg::dns_filter(cap, patterns);
    ntg::write_pcap_file(output, res.capture);
    json addrs = json::array();
    for (uint32_t a : res.resolved) addrs.push_back(ntg::ipv4_to_string(a));
    emit({{"kept_packets", res.capture.packets.size()},
          {"resolved", addrs},
          {"malformed_dns", res.malformed_dns}},
         as_json);
    return 0;
}

int cmd_tokenize(const std::string& manifest_path, const std::string& labels_path,
                 const std::string& output, bool as_json) {
    ntg::Vocabulary vocab = ntg::Vocabulary::load(labels_path);
    json manifest = load_json_file(manifest_path);
    std::vector<ntg::TokenStream> samples;
    size_t tokens = 0;
    for (const json& entry : manifest) {
        ntg::CaptureFile cap = ntg::read_pcap_file(entry.at("pcap"));
        const std::string label = entry.at("label");
        ntg::SplitResult res = ntg::split_flows(cap, label);
        for (const ntg::FlowRecord& f : res.flows) {
            samples.push_back(ntg::encode_flow(f, vocab));
            tokens += samples.back().size();
        }
    }
    ntg::write_corpus(output, samples);
    write_json_file(output + ".config.json",
                    {{"manifest", manifest_path}, {"labels", labels_path},
                     {"samples", samples.size()}});
    emit({{"samples", samples.size()}, {"tokens", tokens}}, as_json);
    return 0;
}

int cmd_train(CLI::App* cmd, const std::string& corpus_path, const std::string& labels_path,
              const std::string& output, std::string preset, size_t epochs, double lr,
              double clip, std::string clip_mode, uint64_t seed, size_t max_seq_len,
              double stop_loss, const std::string& checkpoint_dir,
              const std::string& config_path, bool as_json) {
    // config file supplies defaults; explicit flags win
    if (!config_path.empty()) {
        json cfg = load_json_file(config_path);
        auto take = [&](const char* flag, auto& slot) {
            if (cmd->count(flag) == 0 && cfg.contains(flag + 2))
                slot = cfg.at(flag + 2).get<std::decay_t<decltype(slot)>>();
        };
        take("--preset", preset);
        take("--epochs", epochs);
        take("--lr", lr);
        take("--clip", clip);
        take("--clip-mode", clip_mode);
        take("--seed", seed);
        take("--max-seq-len", max_seq_len);
        take("--stop-loss", stop_loss);
    }

    ntg::Vocabulary vocab = ntg::Vocabulary::load(labels_path);
    std::vector<ntg::TokenStream> corpus = ntg::read_corpus(corpus_path);

    ntg::ModelConfig mcfg = preset_config(preset, vocab.size());
    mcfg.rng_seed = seed;
    if (max_seq_len > 0) mcfg.max_seq_len = max_seq_len;

    ntg::TrainConfig tcfg;
    tcfg.learning_rate = lr;
    tcfg.clip_value = clip;
    tcfg.clip_mode = clip_mode == "norm" ? ntg::ClipMode::Norm : ntg::ClipMode::Value;
    tcfg.epochs = epochs;
    tcfg.max_seq_len = mcfg.max_seq_len;
    tcfg.rng_seed = seed;
    tcfg.stop_loss = stop_loss;

    if (!checkpoint_dir.empty()) fs::create_directories(checkpoint_dir);
    ntg::EpochCallback cb;
    if (!checkpoint_dir.empty())
        cb = [&](size_t epoch, double, const ntg::ModelParameters& p) {
            ntg::save_model(
                (fs::path(checkpoint_dir) / ("epoch" + std::to_string(epoch) + ".ntgm"))
                    .string(),
                p, mcfg, vocab.labels());
        };

    ntg::TrainResult res = ntg::train(corpus, tcfg, mcfg, cb);
    ntg::save_model(output, res.params, mcfg, vocab.labels());
    ntg::write_loss_csv(output + ".loss.csv", res.loss_trace);
    write_json_file(output + ".config.json",
                    {{"preset", preset},
                     {"model", mcfg.to_json()},
                     {"epochs", epochs},
                     {"epochs_run", res.epochs_run},
                     {"lr", lr},
                     {"clip", clip},
                     {"clip_mode", clip_mode},
                     {"seed", seed},
                     {"stop_loss", stop_loss},
                     {"corpus", corpus_path}});
    emit({{"epochs_run", res.epochs_run},
          {"final_loss_nats", res.loss_trace.empty() ? 0.0 : res.loss_trace.back()}},
         as_json);
    return 0;
}

int cmd_generate(const std::string& model_path, const std::string& seed_pcap, size_t flow_index,
                 const std::string& label, const std::string& output, size_t length,
                 double temperature, bool greedy, uint64_t seed, bool as_json) {
    ntg::LoadedModel m = ntg::load_model(model_path);
    ntg::Vocabulary vocab(m.labels);

    ntg::CaptureFile cap = ntg::read_pcap_file(seed_pcap);
    ntg::SplitResult flows = ntg::split_flows(cap, label);
    if (flow_index >= flows.flows.size())
        throw ntg::Error("flow index " + std::to_string(flow_index) + " out of range (" +
                         std::to_string(flows.flows.size()) + " flows)");
    const ntg::FlowRecord& flow = flows.flows[flow_index];

    ntg::GenerationRequest req;
    req.seed = ntg::make_seed(flow, vocab);
    req.length = length > 0 ? length : ntg::default_length(flow, vocab);
    req.sampling.greedy = greedy;
    req.sampling.temperature = temperature;
    req.sampling.rng_seed = seed;

    ntg::TokenStream out_ts = ntg::generate(m.params, m.config, vocab, req);
    ntg::RebuildResult rb = ntg::rebuild_pcap(out_ts, vocab);
    ntg::write_pcap_file(output, rb.capture);

    const json report = {{"seed_tokens", req.seed.size()},
                         {"budget", req.length},
                         {"generated_tokens", out_ts.size()},
                         {"packets", rb.packet_count},
                         {"malformed_dropped", rb.malformed},
                         {"truncated_tail", rb.truncated_tail},
                         {"greedy", greedy},
                         {"temperature", temperature},
                         {"rng_seed", seed}};
    write_json_file(output + ".json", report);
    emit(report, as_json);
    return 0;
}

int cmd_nprint(const std::string& input, const std::string& output, bool as_json) {
    ntg::CaptureFile cap = ntg::read_pcap_file(input);
    ntg::write_fieldbits_csv(output, cap.packets);
    emit({{"packets", cap.packets.size()}, {"bits", ntg::fieldbits_total}}, as_json);
    return 0;
}

int cmd_similarity(const std::vector<std::string>& real_paths,
                   const std::vector<std::string>& synth_paths, bool use_random,
                   uint64_t random_seed, const std::string& output, bool as_json) {
    std::vector<ntg::CaptureFile> real;
    for (const std::string& p : real_paths) real.push_back(ntg::read_pcap_file(p));
    std::vector<ntg::CaptureFile> synth;
    if (use_random) {
        synth = ntg::random_baseline(real, random_seed);
    } else {
        for (const std::string& p : synth_paths) synth.push_back(ntg::read_pcap_file(p));
    }
    ntg::SimilarityReport rep = ntg::similarity(real, synth);
    if (!output.empty()) write_json_file(output, rep.to_json());
    emit(rep.to_json(), as_json);
    return 0;
}

int cmd_memcheck(const std::vector<std::string>& real_paths,
                 const std::vector<std::string>& synth_paths, size_t K,
                 const std::string& output, const std::string& csv, bool as_json) {
    if (real_paths.size() != synth_paths.size())
        throw ntg::Error("--real and --synth must pair up one-to-one");
    // each real file holds one flow's packets (as written by `split`)
    std::vector<ntg::FlowRecord> flows;
    std::vector<ntg::CaptureFile> synth;
    for (size_t i = 0; i < real_paths.size(); ++i) {
        ntg::CaptureFile rc = ntg::read_pcap_file(real_paths[i]);
        ntg::FlowRecord f;
        f.packets = rc.packets;
        flows.push_back(std::move(f));
        synth.push_back(ntg::read_pcap_file(synth_paths[i]));
    }
    ntg::MemorizationReport rep = ntg::memorization(flows, synth, K);
    if (!output.empty()) write_json_file(output, rep.to_json());
    if (!csv.empty()) ntg::write_field_change_csv(csv, rep);
    emit(rep.to_json(), as_json);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"byte-level network flow modeling and synthetic trace generation"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "machine-readable JSON summary on stdout");

    // split
    auto* split = app.add_subcommand("split", "split a capture into per-flow PCAPs");
    std::string sp_input, sp_label = "unknown", sp_out;
    split->add_option("--input", sp_input, "input PCAP")->required();
    split->add_option("--label", sp_label, "traffic label for all flows");
    split->add_option("--out", sp_out, "output directory")->required();

    // dnsfilter
    auto* dnsf = app.add_subcommand("dnsfilter", "keep traffic to DNS-resolved services");
    std::string df_input, df_out;
    std::vector<std::string> df_patterns;
    dnsf->add_option("--input", df_input, "input PCAP")->required();
    dnsf->add_option("--pattern", df_patterns, "domain-name suffix (repeatable)");
    dnsf->add_option("--out", df_out, "output PCAP")->required();

    // tokenize
    auto* tok = app.add_subcommand("tokenize", "encode flows listed in a manifest");
    std::string tk_manifest, tk_labels, tk_out;
    tok->add_option("--manifest", tk_manifest, "dataset manifest JSON")->required();
    tok->add_option("--labels", tk_labels, "vocabulary labels JSON")->required();
    tok->add_option("--out", tk_out, "output corpus (.ntgc)")->required();

    // train
    auto* tr = app.add_subcommand("train", "train a model on a corpus");
    std::string tr_corpus, tr_labels, tr_out, tr_preset = "desk", tr_clip_mode = "value";
    std::string tr_ckpt, tr_config;
    size_t tr_epochs = 50, tr_msl = 0;
    double tr_lr = 5e-4, tr_clip = 1.0, tr_stop = 0.0;
    uint64_t tr_seed = 0;
    tr->add_option("--corpus", tr_corpus, "corpus file (.ntgc)")->required();
    tr->add_option("--labels", tr_labels, "vocabulary labels JSON")->required();
    tr->add_option("--out", tr_out, "output model (.ntgm)")->required();
    tr->add_option("--preset", tr_preset, "model preset: desk | paper");
    tr->add_option("--epochs", tr_epochs, "training epochs");
    tr->add_option("--lr", tr_lr, "learning rate");
    tr->add_option("--clip", tr_clip, "gradient clip value");
    tr->add_option("--clip-mode", tr_clip_mode, "value | norm");
    tr->add_option("--seed", tr_seed, "rng seed");
    tr->add_option("--max-seq-len", tr_msl, "override preset sequence cap");
    tr->add_option("--stop-loss", tr_stop, "stop early below this epoch-mean loss");
    tr->add_option("--checkpoint-dir", tr_ckpt, "write per-epoch checkpoints here");
    tr->add_option("--config", tr_config, "JSON config supplying defaults");

    // generate
    auto* gen = app.add_subcommand("generate", "generate a synthetic flow PCAP");
    std::string gn_model, gn_seed_pcap, gn_label, gn_out;
    size_t gn_flow = 0, gn_length = 0;
    double gn_temp = 1.0;
    bool gn_greedy = false;
    uint64_t gn_seed = 0;
    gen->add_option("--model", gn_model, "model file (.ntgm)")->required();
    gen->add_option("--seed-pcap", gn_seed_pcap, "PCAP providing the seed flow")->required();
    gen->add_option("--flow-index", gn_flow, "flow index within the seed PCAP");
    gen->add_option("--label", gn_label, "label of the seed flow")->required();
    gen->add_option("--out", gn_out, "output PCAP")->required();
    gen->add_option("--length", gn_length, "token budget (default: real + 10)");
    gen->add_option("--temperature", gn_temp, "sampling temperature");
    gen->add_flag("--greedy", gn_greedy, "greedy decoding");
    gen->add_option("--seed", gn_seed, "sampling rng seed");

    // nprint
    auto* np = app.add_subcommand("nprint", "per-bit header encoding to CSV");
    std::string np_input, np_out;
    np->add_option("--input", np_input, "input PCAP")->required();
    np->add_option("--out", np_out, "output CSV")->required();

    // similarity
    auto* sim = app.add_subcommand("similarity", "distribution distance real vs synthetic");
    std::vector<std::string> sm_real, sm_synth;
    std::string sm_out;
    bool sm_random = false;
    uint64_t sm_rseed = 0;
    sim->add_option("--real", sm_real, "real PCAP (repeatable)")->required();
    sim->add_option("--synth", sm_synth, "synthetic PCAP (repeatable)");
    sim->add_flag("--random", sm_random, "compare against the random baseline instead");
    sim->add_option("--random-seed", sm_rseed, "baseline rng seed");
    sim->add_option("--out", sm_out, "report JSON path");

    // memcheck
    auto* mem = app.add_subcommand("memcheck", "bytewise memorization analysis");
    std::vector<std::string> mc_real, mc_synth;
    std::string mc_out, mc_csv;
    size_t mc_k = 100;
    mem->add_option("--real", mc_real, "real per-flow PCAP (repeatable)")->required();
    mem->add_option("--synth", mc_synth, "paired synthetic PCAP (repeatable)")->required();
    mem->add_option("-K,--first", mc_k, "packets compared per pair");
    mem->add_option("--out", mc_out, "report JSON path");
    mem->add_option("--csv", mc_csv, "per-field change CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (split->parsed()) return cmd_split(sp_input, sp_label, sp_out, as_json);
        if (dnsf->parsed()) return cmd_dnsfilter(df_input, df_patterns, df_out, as_json);
        if (tok->parsed()) return cmd_tokenize(tk_manifest, tk_labels, tk_out, as_json);
        if (tr->parsed())
            return cmd_train(tr, tr_corpus, tr_labels, tr_out, tr_preset, tr_epochs, tr_lr,
                             tr_clip, tr_clip_mode, tr_seed, tr_msl, tr_stop, tr_ckpt,
                             tr_config, as_json);
        if (gen->parsed())
            return cmd_generate(gn_model, gn_seed_pcap, gn_flow, gn_label, gn_out, gn_length,
                                gn_temp, gn_greedy, gn_seed, as_json);
        if (np->parsed()) return cmd_nprint(np_input, np_out, as_json);
        if (sim->parsed())
            return cmd_similarity(sm_real, sm_synth, sm_random, sm_rseed, sm_out, as_json);
        if (mem->parsed()) return cmd_memcheck(mc_real, mc_synth, mc_k, mc_out, mc_csv, as_json);
    } catch (const ntg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
