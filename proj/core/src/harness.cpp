#include "dmbpn/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace dmbpn {

namespace {
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamTrain = 2;
constexpr std::uint64_t kStreamVal = 3;
constexpr std::uint64_t kStreamDropout = 4;
constexpr std::uint64_t kStreamEval = 5;
constexpr std::uint64_t kStreamDump = 6;
}  // namespace

ModelConfig RunConfig::model_config() const {
    ModelConfig m;
    m.d_w = d_w;
    m.d_p = d_p;
    m.hidden = hidden;
    m.memory_dim = memory_dim;
    m.passes = passes;
    m.pos_rows = pos_rows;
    m.dropout = dropout;
    m.lambda = lambda;
    m.metric = metric;
    m.update = memory_update;
    return m;
}

void RunConfig::validate() const {
    episode_config().validate();
    model_config().validate();
    if (lr <= 0.0) throw DomainError("config: learning rate must be positive");
    if (max_len < 1) throw DomainError("config: max_len must be >= 1");
}

std::string Metrics::to_json() const {
    nlohmann::json j;
    j["accuracy"] = accuracy;
    j["accuracy_ci95"] = accuracy_ci;
    j["f1"] = f1;
    j["f1_ci95"] = f1_ci;
    j["ti_accuracy"] = ti_accuracy;
    j["ti_accuracy_ci95"] = ti_accuracy_ci;
    j["episodes"] = episodes;
    j["queries"] = queries;
    j["mentions"] = mentions;
    return j.dump(2);
}

PreparedData prepare_data(const RunConfig& cfg) {
    if (cfg.data_path.empty()) throw StateError("prepare_data: no data path configured");
    LoadResult loaded = load_jsonl(cfg.data_path, cfg.max_len);
    PreparedData data = prepare_data(cfg, loaded.mentions);
    data.rejected = loaded.rejected;
    data.truncated = loaded.truncated;
    return data;
}

PreparedData prepare_data(const RunConfig& cfg, const std::vector<EventMention>& mentions) {
    PreparedData data;
    data.split = split_by_type(mentions, cfg.train_frac, cfg.val_frac, cfg.test_frac,
                               derive_seed(cfg.seed, 0x5b11));
    data.vocab = build_vocab(mentions, cfg.min_count);
    return data;
}

DmbPn build_model(const RunConfig& cfg, const PreparedData& data) {
    cfg.validate();
    DmbPn model(cfg.model_config(), data.vocab.size(), derive_seed(cfg.seed, kStreamInit));
    if (!cfg.embeddings_path.empty()) {
        EmbeddingTable pretrained = load_embeddings(cfg.embeddings_path, data.vocab, cfg.d_w,
                                                    derive_seed(cfg.seed, kStreamInit));
        model.params().get("embed.words").values = pretrained.table.values;
    }
    return model;
}

namespace {

ParamRegistry snapshot(const ParamRegistry& reg) {
    ParamRegistry copy;
    reg.for_each([&](const std::string& name, const Tensor& t) {
        Tensor c = t;
        c.clear_grad();
        copy.add(name, std::move(c));
    });
    return copy;
}

double validation_accuracy(const DmbPn& model, const RunConfig& cfg,
                           const TypeSection& section, const Vocabulary& vocab,
                           std::uint64_t seed, std::size_t iters) {
    EpisodeStream stream(section, cfg.episode_config(), iters, seed);
    Tape tape;
    std::size_t hits = 0, total = 0;
    while (auto ep = stream.next()) {
        tape.reset();
        EpisodeResult res = model.forward(tape, *ep, vocab, false);
        for (std::size_t i = 0; i < res.query_pred.size(); ++i) {
            if (res.query_pred[i] == res.query_gold[i]) ++hits;
            ++total;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

TrainOutput train(DmbPn& model, const RunConfig& cfg, const PreparedData& data,
                  std::ostream* progress) {
    cfg.validate();
    TrainOutput out;
    if (cfg.train_iters == 0) return out;

    TypeSection train_section = data.split.train_section();
    TypeSection val_section = data.split.val_section();
    // Validation only runs when the split can actually form episodes of the
    // configured shape.
    const bool can_validate =
        static_cast<int>(eligible_types(val_section, cfg.episode_config()).types.size()) >=
        cfg.n_way;
    EpisodeStream stream(train_section, cfg.episode_config(), cfg.train_iters,
                         derive_seed(cfg.seed, kStreamTrain));
    Rng dropout_rng(derive_seed(cfg.seed, kStreamDropout));

    Tape tape;
    std::size_t iteration = 0;
    while (auto ep = stream.next()) {
        ++iteration;
        tape.reset();
        EpisodeResult res;
        double joint = 0.0;
        try {
            res = model.forward(tape, *ep, data.vocab, true, &dropout_rng);
            joint = tape.scalar(res.joint);
            if (!std::isfinite(joint)) throw NumericError("non-finite joint loss");
            tape.backward(res.joint);
            sgd_step(model.params(), cfg.lr);
        } catch (const NumericError& e) {
            throw NumericError("training diverged at iteration " + std::to_string(iteration) +
                               ": " + e.what());
        }

        out.log.push_back({iteration, tape.scalar(res.loss_ti), tape.scalar(res.loss_ec),
                           joint, res.query_accuracy()});

        if (can_validate && cfg.val_interval > 0 && iteration % cfg.val_interval == 0) {
            const double acc =
                validation_accuracy(model, cfg, val_section, data.vocab,
                                    derive_seed(cfg.seed, kStreamVal) + iteration,
                                    cfg.val_iters);
            out.validation.emplace_back(iteration, acc);
            if (acc > out.best_val_accuracy) {
                out.best_val_accuracy = acc;
                out.best_params = snapshot(model.params());
            }
        }
        if (progress && cfg.log_interval > 0 && iteration % cfg.log_interval == 0) {
            const LogRow& r = out.log.back();
            (*progress) << "iter " << r.iteration << " ti=" << r.loss_ti
                        << " ec=" << r.loss_ec << " joint=" << r.loss_joint
                        << " acc=" << r.episode_accuracy << "\n";
        }
    }
    return out;
}

Metrics evaluate(const DmbPn& model, const RunConfig& cfg, const TypeSection& section,
                 const Vocabulary& vocab, std::uint64_t seed) {
    EpisodeStream stream(section, cfg.episode_config(), cfg.test_iters, seed);
    Tape tape;

    // Confusion counts over local labels; micro-F1 is computed from these
    // rather than reusing the accuracy counter.
    std::map<int, std::size_t> tp, fp, fn;
    std::size_t correct = 0, queries = 0;
    std::size_t ti_correct = 0, mentions = 0;
    std::size_t episodes = 0;

    while (auto ep = stream.next()) {
        ++episodes;
        tape.reset();
        EpisodeResult res = model.forward(tape, *ep, vocab, false);
        for (std::size_t i = 0; i < res.query_pred.size(); ++i) {
            const int pred = res.query_pred[i], gold = res.query_gold[i];
            ++queries;
            if (pred == gold) {
                ++correct;
                ++tp[gold];
            } else {
                ++fp[pred];
                ++fn[gold];
            }
        }
        for (const auto& m : res.mentions) {
            ++mentions;
            if (m.ti_pred == m.trigger_gold) ++ti_correct;
        }
    }

    Metrics metrics;
    metrics.episodes = episodes;
    metrics.queries = queries;
    metrics.mentions = mentions;
    if (queries > 0)
        metrics.accuracy = static_cast<double>(correct) / static_cast<double>(queries);
    std::size_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
    for (auto& [k, v] : tp) tp_sum += v;
    for (auto& [k, v] : fp) fp_sum += v;
    for (auto& [k, v] : fn) fn_sum += v;
    const double precision =
        tp_sum + fp_sum == 0 ? 0.0 : static_cast<double>(tp_sum) / (tp_sum + fp_sum);
    const double recall =
        tp_sum + fn_sum == 0 ? 0.0 : static_cast<double>(tp_sum) / (tp_sum + fn_sum);
    // The harmonic mean of two equal values is that value; taking the
    // shortcut keeps micro-F1 bit-identical to accuracy in the single-label
    // closed-set case where precision == recall by construction.
    metrics.f1 = precision == recall
                     ? precision
                     : (precision + recall == 0.0
                            ? 0.0
                            : 2.0 * precision * recall / (precision + recall));
    if (mentions > 0)
        metrics.ti_accuracy = static_cast<double>(ti_correct) / static_cast<double>(mentions);

    auto half_width = [](double p, std::size_t n) {
        return n == 0 ? 0.0 : 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    };
    metrics.accuracy_ci = half_width(metrics.accuracy, queries);
    metrics.f1_ci = half_width(metrics.f1, queries);
    metrics.ti_accuracy_ci = half_width(metrics.ti_accuracy, mentions);

    // Single-label episodes over a closed label set: micro-F1 and accuracy
    // must coincide.
    if (queries > 0 && std::fabs(metrics.f1 - metrics.accuracy) > 1e-12)
        throw StateError("evaluate: micro-F1 diverged from accuracy");
    return metrics;
}

std::vector<SweepRow> lambda_sweep(const RunConfig& cfg, const PreparedData& data,
                                   const std::vector<double>& lambdas,
                                   std::ostream* progress) {
    std::vector<SweepRow> rows;
    for (double lambda : lambdas) {
        if (lambda < 0.0 || lambda > 1.0)
            throw DomainError("lambda_sweep: lambda must lie in [0, 1]");
        RunConfig run = cfg;
        run.lambda = lambda;
        run.train_iters = cfg.sweep_iters;
        DmbPn model = build_model(run, data);
        train(model, run, data, nullptr);
        Metrics m = evaluate(model, run, data.split.test_section(), data.vocab,
                             derive_seed(run.seed, kStreamEval));
        rows.push_back({lambda, m.ti_accuracy, m.accuracy});
        if (progress)
            (*progress) << "lambda=" << lambda << " ti_acc=" << m.ti_accuracy
                        << " ec_acc=" << m.accuracy << "\n";
    }
    return rows;
}

namespace {
std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}
}  // namespace

void dump(DumpKind kind, const DmbPn& model, const RunConfig& cfg,
          const TypeSection& section, const Vocabulary& vocab, const std::string& path) {
    EpisodeStream stream(section, cfg.episode_config(), cfg.dump_episodes,
                         derive_seed(cfg.seed, kStreamDump));
    std::ofstream out(path);
    if (!out) throw StateError("dump: cannot open " + path);
    out.precision(17);
    Tape tape;

    if (kind == DumpKind::Attention) out << "episode_id,mention_id,token_index,token,attention_weight,is_trigger\n";
    if (kind == DumpKind::Prototypes) out << "episode_id,kind,label,components...\n";
    nlohmann::json episodes_json = nlohmann::json::array();

    std::size_t episode_id = 0;
    while (auto ep = stream.next()) {
        if (kind == DumpKind::Episodes) {
            episodes_json.push_back(nlohmann::json::parse(ep->to_json()));
            ++episode_id;
            continue;
        }
        tape.reset();
        EpisodeResult res = model.forward(tape, *ep, vocab, false);

        if (kind == DumpKind::Attention) {
            // Mentions are emitted in forward order: support grid, then queries.
            std::vector<const EventMention*> flat;
            for (const auto& row : ep->support)
                for (const auto& m : row) flat.push_back(&m);
            for (const auto& m : ep->query) flat.push_back(&m);
            for (std::size_t mi = 0; mi < flat.size(); ++mi) {
                const auto& att = res.mentions[mi].attention;
                for (std::size_t t = 0; t < att.size(); ++t)
                    out << episode_id << "," << mi << "," << t << ","
                        << csv_escape(flat[mi]->tokens[t]) << "," << att[t] << ","
                        << (static_cast<int>(t) == flat[mi]->trigger_index ? 1 : 0)
                        << "\n";
            }
        } else if (kind == DumpKind::Prototypes) {
            for (std::size_t p = 0; p < res.prototype_values.size(); ++p) {
                out << episode_id << ",prototype," << csv_escape(ep->type_names[p]);
                for (double v : res.prototype_values[p]) out << "," << v;
                out << "\n";
            }
            // Per-query rows: the encoding the classifier compared, labeled
            // with its gold type.
            for (std::size_t q = 0; q < res.query_encoding_values.size(); ++q) {
                out << episode_id << ",query,"
                    << csv_escape(
                           ep->type_names[static_cast<std::size_t>(res.query_gold[q])]);
                for (double v : res.query_encoding_values[q]) out << "," << v;
                out << "\n";
            }
        }
        ++episode_id;
    }
    if (kind == DumpKind::Episodes) out << episodes_json.dump(2) << "\n";
}

void dump_memory_trace(const DmbPn& model, const RunConfig& cfg, const TypeSection& section,
                       const Vocabulary& vocab, const std::string& path) {
    EpisodeStream stream(section, cfg.episode_config(), 1, derive_seed(cfg.seed, kStreamDump));
    auto ep = stream.next();
    if (!ep) throw StateError("dump_memory_trace: no episode available");

    std::ofstream out(path);
    if (!out) throw StateError("dump_memory_trace: cannot open " + path);
    nlohmann::json traces = nlohmann::json::array();

    Tape tape;
    std::size_t mention_id = 0;
    auto trace_mention = [&](const EventMention& m) {
        tape.reset();
        auto mf = model.encode_mention(tape, m, vocab, false, nullptr);
        // Trace the memory run of the final word (the one seeding the answer
        // module).
        MemoryTrace trace;
        model.word_memory_traced(tape, mf.facts, mf.questions.back(), &trace);
        for (std::size_t pass = 0; pass < trace.pass_attention.size(); ++pass)
            for (std::size_t f = 0; f < trace.pass_attention[pass].size(); ++f)
                traces.push_back({{"mention", mention_id},
                                  {"pass", pass},
                                  {"fact", f},
                                  {"weight", trace.pass_attention[pass][f]}});
        ++mention_id;
    };
    for (const auto& row : ep->support)
        for (const auto& m : row) trace_mention(m);
    for (const auto& m : ep->query) trace_mention(m);
    out << traces.dump(2) << "\n";
}

void write_log_csv(const std::vector<LogRow>& log, std::size_t interval,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw StateError("write_log_csv: cannot open " + path);
    out << "iteration,loss_ti,loss_ec,loss_joint,episode_accuracy\n";
    if (interval == 0) interval = 1;
    for (const auto& r : log)
        if (r.iteration % interval == 0 || r.iteration == log.size())
            out << r.iteration << "," << r.loss_ti << "," << r.loss_ec << ","
                << r.loss_joint << "," << r.episode_accuracy << "\n";
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw StateError("write_sweep_csv: cannot open " + path);
    out << "lambda,ti_accuracy,ec_accuracy\n";
    for (const auto& r : rows)
        out << r.lambda << "," << r.ti_accuracy << "," << r.ec_accuracy << "\n";
}

GradCheckReport gradcheck_episode(DmbPn& model, const Episode& episode,
                                  const Vocabulary& vocab, const GradCheckOptions& opts) {
    LossFn loss_fn = [&](ParamRegistry&, bool with_grad) {
        Tape tape;
        EpisodeResult res = model.forward(tape, episode, vocab, false);
        if (with_grad) tape.backward(res.joint);
        return tape.scalar(res.joint);
    };
    return finite_diff_check(loss_fn, model.params(), opts);
}

}  // namespace dmbpn
