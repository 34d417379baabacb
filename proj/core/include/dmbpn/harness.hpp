#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dmbpn/checkpoint.hpp"
#include "dmbpn/gradcheck.hpp"
#include "dmbpn/model.hpp"

namespace dmbpn {

/// Full experiment configuration. CLI flags and the flat key=value config
/// file both map onto these fields.
struct RunConfig {
    // episode protocol
    int n_way = 5;
    int k_shot = 5;
    int q_query = 0;  // 0 = one balanced batch, i.e. Q = N
    std::size_t train_iters = 30000;
    std::size_t test_iters = 2000;

    // model
    Metric metric = Metric::MProto;
    double lambda = 0.5;
    int passes = 3;
    int d_w = 50;
    int d_p = 30;
    int hidden = 25;
    int memory_dim = 50;
    int pos_rows = 256;
    double dropout = 0.2;
    MemoryUpdate memory_update = MemoryUpdate::Relu;

    // optimization
    double lr = 1e-3;
    std::uint64_t seed = 7;

    // data
    std::string data_path;
    std::string embeddings_path;
    std::string output_dir = ".";
    int max_len = 40;
    std::size_t min_count = 1;
    double train_frac = 0.8;
    double val_frac = 0.1;
    double test_frac = 0.1;

    // bookkeeping
    std::size_t log_interval = 1;
    std::size_t val_interval = 500;
    std::size_t val_iters = 50;
    std::size_t sweep_iters = 500;
    std::size_t dump_episodes = 10;

    EpisodeConfig episode_config() const {
        return {n_way, k_shot, q_query > 0 ? q_query : n_way};
    }
    ModelConfig model_config() const;
    void validate() const;
};

struct Metrics {
    double accuracy = 0.0;
    double f1 = 0.0;
    double ti_accuracy = 0.0;
    double accuracy_ci = 0.0;    // 95% normal-approximation half-width
    double f1_ci = 0.0;
    double ti_accuracy_ci = 0.0;
    std::size_t episodes = 0;
    std::size_t queries = 0;
    std::size_t mentions = 0;
    std::string to_json() const;
};

struct LogRow {
    std::size_t iteration = 0;
    double loss_ti = 0.0;
    double loss_ec = 0.0;
    double loss_joint = 0.0;
    double episode_accuracy = 0.0;
};

struct TrainOutput {
    std::vector<LogRow> log;                    // one row per iteration
    std::vector<std::pair<std::size_t, double>> validation;  // (iteration, accuracy)
    double best_val_accuracy = -1.0;
    std::optional<ParamRegistry> best_params;   // snapshot at the best validation
};

/// Data prepared for a run: loaded (or provided) mentions, the type split,
/// and the vocabulary.
struct PreparedData {
    DatasetSplit split;
    Vocabulary vocab;
    std::size_t rejected = 0;
    std::size_t truncated = 0;
};

/// Loads cfg.data_path and splits by type.
PreparedData prepare_data(const RunConfig& cfg);
/// Same, over mentions already in memory (tests, synthetic runs).
PreparedData prepare_data(const RunConfig& cfg, const std::vector<EventMention>& mentions);

/// Builds a model for the prepared data, applying pretrained embeddings when
/// cfg.embeddings_path is set.
DmbPn build_model(const RunConfig& cfg, const PreparedData& data);

/// Episodic meta-training: one episode per SGD step. Logs every iteration;
/// validates every cfg.val_interval iterations when a validation split
/// exists, retaining the best parameter snapshot. Aborts with NumericError
/// naming the iteration if the loss goes non-finite.
TrainOutput train(DmbPn& model, const RunConfig& cfg, const PreparedData& data,
                  std::ostream* progress = nullptr);

/// Frozen-parameter evaluation over cfg.test_iters episodes from `section`.
Metrics evaluate(const DmbPn& model, const RunConfig& cfg, const TypeSection& section,
                 const Vocabulary& vocab, std::uint64_t seed);

struct SweepRow {
    double lambda = 0.0;
    double ti_accuracy = 0.0;
    double ec_accuracy = 0.0;
};

/// Trains one model per lambda at cfg.sweep_iters and evaluates on the test
/// split.
std::vector<SweepRow> lambda_sweep(const RunConfig& cfg, const PreparedData& data,
                                   const std::vector<double>& lambdas,
                                   std::ostream* progress = nullptr);

enum class DumpKind { Attention, Prototypes, Episodes };

/// Writes the dump files declared by the encoder/classifier interfaces:
///  - attention:   CSV (episode_id, mention_id, token_index, token,
///                  attention_weight, is_trigger)
///  - prototypes:  CSV (episode_id, kind, label, v0..)  with N prototype rows
///                 and Q query rows per episode
///  - episodes:    JSON array of episode dumps
void dump(DumpKind kind, const DmbPn& model, const RunConfig& cfg,
          const TypeSection& section, const Vocabulary& vocab, const std::string& path);

/// Per-pass memory-gate attention for one episode's mentions (debug aid);
/// writes a JSON array of {mention, pass, fact, weight}.
void dump_memory_trace(const DmbPn& model, const RunConfig& cfg, const TypeSection& section,
                       const Vocabulary& vocab, const std::string& path);

void write_log_csv(const std::vector<LogRow>& log, std::size_t interval,
                   const std::string& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

/// Gradient check of the full joint loss on one fixed episode (dropout off).
GradCheckReport gradcheck_episode(DmbPn& model, const Episode& episode,
                                  const Vocabulary& vocab, const GradCheckOptions& opts);

}  // namespace dmbpn
