// Command-line driver for few-shot event detection experiments:
// episodic training, evaluation, lambda sweeps, dump files, and synthetic
// data generation.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dmbpn/harness.hpp"

namespace fs = std::filesystem;
using namespace dmbpn;

namespace {

struct CliOptions {
    RunConfig cfg;
    std::string metric = "mproto";
    std::string memory_update = "relu";
    std::string config_path;
};

void parse_into(const std::string& text, int& out) { out = std::stoi(text); }
void parse_into(const std::string& text, double& out) { out = std::stod(text); }
void parse_into(const std::string& text, std::uint64_t& out) { out = std::stoull(text); }
void parse_into(const std::string& text, std::string& out) { out = text; }

/// Flat key=value config file; '#' starts a comment. Keys are the long flag
/// names without dashes. Values from the command line take precedence.
void apply_config_file(CLI::App* cmd, CliOptions& opt) {
    if (opt.config_path.empty()) return;
    std::ifstream in(opt.config_path);
    if (!in) throw std::runtime_error("cannot open config file " + opt.config_path);

    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }

    RunConfig& cfg = opt.cfg;
    auto apply = [&](const std::string& key, auto& field) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        const CLI::Option* o = cmd->get_option_no_throw("--" + key);
        if (o != nullptr && o->count() > 0) {
            kv.erase(it);  // explicit flag wins
            return;
        }
        parse_into(it->second, field);
        kv.erase(it);
    };
    apply("n-way", cfg.n_way);
    apply("k-shot", cfg.k_shot);
    apply("q-query", cfg.q_query);
    apply("train-iters", cfg.train_iters);
    apply("test-iters", cfg.test_iters);
    apply("metric", opt.metric);
    apply("lambda", cfg.lambda);
    apply("passes", cfg.passes);
    apply("d-w", cfg.d_w);
    apply("d-p", cfg.d_p);
    apply("hidden", cfg.hidden);
    apply("memory-dim", cfg.memory_dim);
    apply("dropout", cfg.dropout);
    apply("memory-update", opt.memory_update);
    apply("lr", cfg.lr);
    apply("seed", cfg.seed);
    apply("data", cfg.data_path);
    apply("embeddings", cfg.embeddings_path);
    apply("out", cfg.output_dir);
    apply("max-len", cfg.max_len);
    apply("min-count", cfg.min_count);
    apply("train-frac", cfg.train_frac);
    apply("val-frac", cfg.val_frac);
    apply("test-frac", cfg.test_frac);
    apply("log-interval", cfg.log_interval);
    apply("val-interval", cfg.val_interval);
    apply("val-iters", cfg.val_iters);
    apply("sweep-iters", cfg.sweep_iters);
    apply("dump-episodes", cfg.dump_episodes);
    if (!kv.empty())
        throw std::runtime_error("unknown config key '" + kv.begin()->first + "'");
}

void add_run_flags(CLI::App* cmd, CliOptions& opt) {
    RunConfig& cfg = opt.cfg;
    cmd->add_option("--n-way", cfg.n_way, "Event types per episode");
    cmd->add_option("--k-shot", cfg.k_shot, "Support instances per type");
    cmd->add_option("--q-query", cfg.q_query, "Query instances per episode (0 = same as N)");
    cmd->add_option("--train-iters", cfg.train_iters, "Training episodes");
    cmd->add_option("--test-iters", cfg.test_iters, "Evaluation episodes");
    cmd->add_option("--metric", opt.metric, "match | proto | mproto");
    cmd->add_option("--lambda", cfg.lambda, "Joint-loss weight on trigger identification");
    cmd->add_option("--passes", cfg.passes, "Memory passes T");
    cmd->add_option("--d-w", cfg.d_w, "Word embedding dimension");
    cmd->add_option("--d-p", cfg.d_p, "Position embedding dimension (per component)");
    cmd->add_option("--hidden", cfg.hidden, "Bi-GRU hidden size per direction");
    cmd->add_option("--memory-dim", cfg.memory_dim, "Memory unit dimension");
    cmd->add_option("--dropout", cfg.dropout, "Input dropout rate");
    cmd->add_option("--memory-update", opt.memory_update, "relu | gru");
    cmd->add_option("--lr", cfg.lr, "SGD learning rate");
    cmd->add_option("--seed", cfg.seed, "Random seed");
    cmd->add_option("--data", cfg.data_path, "Mention JSONL file");
    cmd->add_option("--embeddings", cfg.embeddings_path, "Pretrained embedding text file");
    cmd->add_option("--out", cfg.output_dir, "Output directory");
    cmd->add_option("--max-len", cfg.max_len, "Maximum sentence length");
    cmd->add_option("--min-count", cfg.min_count, "Vocabulary frequency threshold");
    cmd->add_option("--train-frac", cfg.train_frac, "Fraction of types for training");
    cmd->add_option("--val-frac", cfg.val_frac, "Fraction of types for validation");
    cmd->add_option("--test-frac", cfg.test_frac, "Fraction of types for testing");
    cmd->add_option("--log-interval", cfg.log_interval, "CSV log row interval");
    cmd->add_option("--val-interval", cfg.val_interval, "Validation interval");
    cmd->add_option("--val-iters", cfg.val_iters, "Validation episodes");
    cmd->add_option("--sweep-iters", cfg.sweep_iters, "Training episodes per sweep point");
    cmd->add_option("--dump-episodes", cfg.dump_episodes, "Episodes per dump file");
    cmd->add_option("--config", opt.config_path, "Flat key=value config file (flags override)");
}

void finalize(CLI::App* cmd, CliOptions& opt) {
    apply_config_file(cmd, opt);
    opt.cfg.metric = metric_from_string(opt.metric);
    opt.cfg.memory_update = memory_update_from_string(opt.memory_update);
    opt.cfg.validate();
}

fs::path ensure_outdir(const RunConfig& cfg) {
    fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    return dir;
}

int cmd_train(CLI::App* cmd, CliOptions& opt, bool quiet) {
    finalize(cmd, opt);
    RunConfig& cfg = opt.cfg;
    fs::path dir = ensure_outdir(cfg);

    PreparedData data = prepare_data(cfg);
    std::cerr << "loaded " << data.split.by_type.size() << " types ("
              << data.split.train_types.size() << " train / " << data.split.val_types.size()
              << " val / " << data.split.test_types.size() << " test), "
              << data.rejected << " rejected, " << data.truncated << " truncated\n";

    DmbPn model = build_model(cfg, data);
    TrainOutput out = train(model, cfg, data, quiet ? nullptr : &std::cerr);
    write_log_csv(out.log, cfg.log_interval, (dir / "train_log.csv").string());

    const std::string fp = cfg.model_config().fingerprint(data.vocab.size());
    checkpoint_save(model.params(), fp, (dir / "checkpoint.ckpt").string());
    if (out.best_params) {
        checkpoint_save(*out.best_params, fp, (dir / "best.ckpt").string());
        std::cerr << "best validation accuracy " << out.best_val_accuracy << "\n";
    }

    Metrics m = evaluate(model, cfg, data.split.test_section(), data.vocab,
                         derive_seed(cfg.seed, 0xe7a1));
    std::ofstream mj(dir / "metrics.json");
    mj << m.to_json() << "\n";
    std::cout << m.to_json() << "\n";
    return 0;
}

int cmd_eval(CLI::App* cmd, CliOptions& opt, const std::string& checkpoint) {
    finalize(cmd, opt);
    RunConfig& cfg = opt.cfg;
    fs::path dir = ensure_outdir(cfg);

    PreparedData data = prepare_data(cfg);
    DmbPn model = build_model(cfg, data);
    ParamRegistry loaded =
        checkpoint_load(checkpoint, cfg.model_config().fingerprint(data.vocab.size()));
    copy_values(loaded, model.params());

    Metrics m = evaluate(model, cfg, data.split.test_section(), data.vocab,
                         derive_seed(cfg.seed, 0xe7a1));
    std::ofstream mj(dir / "metrics.json");
    mj << m.to_json() << "\n";
    std::cout << m.to_json() << "\n";
    return 0;
}

int cmd_sweep(CLI::App* cmd, CliOptions& opt, std::vector<double>& lambdas) {
    finalize(cmd, opt);
    RunConfig& cfg = opt.cfg;
    fs::path dir = ensure_outdir(cfg);
    if (lambdas.empty()) lambdas = {0.1, 0.3, 0.5, 0.7, 0.9};

    PreparedData data = prepare_data(cfg);
    std::vector<SweepRow> rows = lambda_sweep(cfg, data, lambdas, &std::cerr);
    write_sweep_csv(rows, (dir / "lambda_sweep.csv").string());
    for (const auto& r : rows)
        std::cout << r.lambda << "," << r.ti_accuracy << "," << r.ec_accuracy << "\n";
    return 0;
}

int cmd_dump(CLI::App* cmd, CliOptions& opt, const std::string& checkpoint, const std::string& kind,
             bool memory_trace) {
    finalize(cmd, opt);
    RunConfig& cfg = opt.cfg;
    fs::path dir = ensure_outdir(cfg);

    PreparedData data = prepare_data(cfg);
    DmbPn model = build_model(cfg, data);
    if (!checkpoint.empty()) {
        ParamRegistry loaded =
            checkpoint_load(checkpoint, cfg.model_config().fingerprint(data.vocab.size()));
        copy_values(loaded, model.params());
    }

    TypeSection section = data.split.test_section();
    if (kind == "attention" || kind == "all")
        dump(DumpKind::Attention, model, cfg, section, data.vocab,
             (dir / "attention.csv").string());
    if (kind == "prototypes" || kind == "all")
        dump(DumpKind::Prototypes, model, cfg, section, data.vocab,
             (dir / "prototypes.csv").string());
    if (kind == "episodes" || kind == "all")
        dump(DumpKind::Episodes, model, cfg, section, data.vocab,
             (dir / "episodes.json").string());
    if (memory_trace)
        dump_memory_trace(model, cfg, section, data.vocab,
                          (dir / "memory_trace.json").string());
    return 0;
}

int cmd_synth(int n_types, int per_type, int vocab_size, int sentence_len,
              std::uint64_t seed, const std::string& out_path) {
    SynthOptions opts;
    opts.sentence_len = sentence_len;
    std::vector<EventMention> mentions = synth_generate(n_types, per_type, vocab_size, seed, opts);
    write_jsonl(out_path, mentions);
    std::cerr << "wrote " << mentions.size() << " mentions (" << n_types << " types) to "
              << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Few-shot event detection with a dynamic-memory prototypical network"};
    app.require_subcommand(1);

    CliOptions train_opt, eval_opt, sweep_opt, dump_opt;
    bool quiet = false;
    std::string eval_ckpt, dump_ckpt, dump_kind = "all";
    bool memory_trace = false;
    std::vector<double> lambdas;

    CLI::App* train_cmd = app.add_subcommand("train", "Meta-train a model");
    add_run_flags(train_cmd, train_opt);
    train_cmd->add_flag("--quiet", quiet, "Suppress per-iteration progress");

    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    add_run_flags(eval_cmd, eval_opt);
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();

    CLI::App* sweep_cmd = app.add_subcommand("sweep-lambda", "Train/evaluate across lambda values");
    add_run_flags(sweep_cmd, sweep_opt);
    sweep_cmd->add_option("--lambdas", lambdas, "Lambda values to sweep");

    CLI::App* dump_cmd = app.add_subcommand("dump", "Write attention/prototype/episode dumps");
    add_run_flags(dump_cmd, dump_opt);
    dump_cmd->add_option("--checkpoint", dump_ckpt, "Checkpoint file (optional)");
    dump_cmd->add_option("--kind", dump_kind, "attention | prototypes | episodes | all");
    dump_cmd->add_flag("--memory-trace", memory_trace, "Also write per-pass gate attention");

    int synth_types = 20, synth_per_type = 30, synth_vocab = 150, synth_len = 7;
    std::uint64_t synth_seed = 7;
    std::string synth_out = "synth.jsonl";
    CLI::App* synth_cmd = app.add_subcommand("synth-data", "Generate a synthetic separable corpus");
    synth_cmd->add_option("--types", synth_types, "Number of event types");
    synth_cmd->add_option("--per-type", synth_per_type, "Mentions per type");
    synth_cmd->add_option("--vocab", synth_vocab, "Vocabulary size");
    synth_cmd->add_option("--sentence-len", synth_len, "Tokens per sentence");
    synth_cmd->add_option("--seed", synth_seed, "Random seed");
    synth_cmd->add_option("--out", synth_out, "Output JSONL path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_cmd, train_opt, quiet);
        if (eval_cmd->parsed()) return cmd_eval(eval_cmd, eval_opt, eval_ckpt);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_cmd, sweep_opt, lambdas);
        if (dump_cmd->parsed()) return cmd_dump(dump_cmd, dump_opt, dump_ckpt, dump_kind, memory_trace);
        if (synth_cmd->parsed())
            return cmd_synth(synth_types, synth_per_type, synth_vocab, synth_len, synth_seed,
                             synth_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
