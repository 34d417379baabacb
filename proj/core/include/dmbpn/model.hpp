#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dmbpn/fewshot_ec.hpp"
#include "dmbpn/ti_encoder.hpp"

namespace dmbpn {

enum class Metric { Match, Proto, MProto };

Metric metric_from_string(const std::string& s);
std::string to_string(Metric m);
MemoryUpdate memory_update_from_string(const std::string& s);
std::string to_string(MemoryUpdate u);

struct ModelConfig {
    int d_w = 50;
    int d_p = 30;
    int hidden = 25;   // per Bi-GRU direction; sentence encodings are 2*hidden
    int memory_dim = 50;
    int passes = 3;
    int pos_rows = 256;
    double dropout = 0.2;
    double lambda = 0.5;
    Metric metric = Metric::MProto;
    MemoryUpdate update = MemoryUpdate::Relu;

    int sentence_dim() const { return 2 * hidden; }
    void validate() const;
    /// Shape-relevant identity, embedded in checkpoints.
    std::string fingerprint(int vocab_size) const;
};

struct MentionOutput {
    std::vector<double> attention;  // sentence-reader weights per token
    int ti_pred = -1;               // argmax trigger position
    int trigger_gold = -1;
    bool is_query = false;
};

struct EpisodeResult {
    Var joint;
    Var loss_ti;
    Var loss_ec;
    std::vector<int> query_pred;
    std::vector<int> query_gold;
    std::vector<std::vector<double>> query_probs;
    std::vector<std::vector<double>> query_encoding_values;
    std::vector<MentionOutput> mentions;             // support (grid order) then queries
    std::vector<std::vector<double>> prototype_values;
    double query_accuracy() const;
    double ti_accuracy() const;
};

/// The joint trigger-identification + few-shot classification model. Owns a
/// ParamRegistry; forward() builds the whole differentiable graph for one
/// episode on the caller's tape.
class DmbPn {
public:
    DmbPn(const ModelConfig& cfg, int vocab_size, std::uint64_t init_seed);

    EpisodeResult forward(Tape& tape, const Episode& episode, const Vocabulary& vocab,
                          bool training, Rng* dropout_rng = nullptr) const;

    ParamRegistry& params() { return reg_; }
    const ParamRegistry& params() const { return reg_; }
    const ModelConfig& config() const { return cfg_; }
    int vocab_size() const { return vocab_size_; }

    /// Per-mention TI pipeline (shared by both stages); exposed for tests
    /// and dumps.
    struct MentionForward {
        std::vector<Var> facts;
        std::vector<Var> questions;
        std::vector<Var> memories;
        std::vector<Var> trigger_dist;
        SentenceEncoding sentence;
    };
    MentionForward encode_mention(Tape& tape, const EventMention& mention,
                                  const Vocabulary& vocab, bool training,
                                  Rng* dropout_rng) const;

    /// Reruns one word's memory module with per-pass attention recording.
    Var word_memory_traced(Tape& tape, std::span<const Var> facts, Var question,
                           MemoryTrace* trace) const;

private:
    ModelConfig cfg_;
    int vocab_size_;
    ParamRegistry reg_;

    EmbedTables tables_;
    BiGruParams ti_fusion_;
    BiGruParams ti_question_;
    MemoryParams ti_memory_;
    TiAnswerParams ti_answer_;
    SentenceReaderParams reader_;
    BiGruParams ec_fusion_;
    BiGruParams ec_question_;
    MemoryParams ec_memory_;
};

}  // namespace dmbpn
