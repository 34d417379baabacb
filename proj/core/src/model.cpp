#include "dmbpn/model.hpp"

#include <algorithm>
#include <sstream>

namespace dmbpn {

Metric metric_from_string(const std::string& s) {
    if (s == "match") return Metric::Match;
    if (s == "proto") return Metric::Proto;
    if (s == "mproto") return Metric::MProto;
    throw DomainError("unknown metric '" + s + "' (expected match|proto|mproto)");
}

std::string to_string(Metric m) {
    switch (m) {
        case Metric::Match: return "match";
        case Metric::Proto: return "proto";
        case Metric::MProto: return "mproto";
    }
    return "?";
}

MemoryUpdate memory_update_from_string(const std::string& s) {
    if (s == "relu") return MemoryUpdate::Relu;
    if (s == "gru") return MemoryUpdate::Gru;
    throw DomainError("unknown memory update '" + s + "' (expected relu|gru)");
}

std::string to_string(MemoryUpdate u) {
    return u == MemoryUpdate::Relu ? "relu" : "gru";
}

void ModelConfig::validate() const {
    if (d_w < 1 || d_p < 1 || hidden < 1 || memory_dim < 1)
        throw DomainError("model config: dimensions must be positive");
    if (passes < 1) throw DomainError("model config: passes must be >= 1");
    if (pos_rows < 2) throw DomainError("model config: pos_rows must be >= 2");
    if (dropout < 0.0 || dropout >= 1.0)
        throw DomainError("model config: dropout must be in [0, 1)");
    if (lambda < 0.0 || lambda > 1.0)
        throw DomainError("model config: lambda must lie in [0, 1]");
    if (metric == Metric::MProto && memory_dim != sentence_dim())
        throw DomainError(
            "model config: mproto compares queries against memory-refined prototypes, "
            "which requires memory_dim == 2*hidden (got " + std::to_string(memory_dim) +
            " vs " + std::to_string(sentence_dim()) + ")");
}

std::string ModelConfig::fingerprint(int vocab_size) const {
    std::ostringstream os;
    os << "dw=" << d_w << ";dp=" << d_p << ";hidden=" << hidden
       << ";mem=" << memory_dim << ";pos=" << pos_rows << ";metric=" << to_string(metric)
       << ";update=" << to_string(update) << ";vocab=" << vocab_size;
    return os.str();
}

double EpisodeResult::query_accuracy() const {
    if (query_pred.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < query_pred.size(); ++i)
        if (query_pred[i] == query_gold[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(query_pred.size());
}

double EpisodeResult::ti_accuracy() const {
    if (mentions.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& m : mentions)
        if (m.ti_pred == m.trigger_gold) ++hits;
    return static_cast<double>(hits) / static_cast<double>(mentions.size());
}

DmbPn::DmbPn(const ModelConfig& cfg, int vocab_size, std::uint64_t init_seed)
    : cfg_(cfg), vocab_size_(vocab_size) {
    cfg_.validate();
    if (vocab_size < 2) throw DomainError("model: vocabulary too small");
    Rng rng(derive_seed(init_seed, 0x1217));

    tables_.d_w = cfg_.d_w;
    tables_.d_p = cfg_.d_p;
    tables_.pos_rows = cfg_.pos_rows;
    // From-scratch word vectors use a pretrained-like component scale;
    // pretrained tables loaded from file replace these values wholesale.
    tables_.words = &reg_.add("embed.words",
                              Tensor::uniform({vocab_size, cfg_.d_w}, rng, -1.0, 1.0));
    tables_.pos_start = &reg_.add(
        "embed.pos_start", Tensor::uniform({cfg_.pos_rows, cfg_.d_p}, rng, -0.25, 0.25));
    tables_.pos_end = &reg_.add(
        "embed.pos_end", Tensor::uniform({cfg_.pos_rows, cfg_.d_p}, rng, -0.25, 0.25));
    tables_.pos_len = &reg_.add(
        "embed.pos_len", Tensor::uniform({cfg_.pos_rows, cfg_.d_p}, rng, -0.25, 0.25));

    const int in_dim = tables_.word_input_dim();
    const int fact_dim = cfg_.sentence_dim();
    ti_fusion_ = make_bigru(reg_, "ti.fusion", in_dim, cfg_.hidden, rng);
    ti_question_ = make_bigru(reg_, "ti.question", in_dim, cfg_.hidden, rng);
    ti_memory_ = make_memory(reg_, "ti.memory", fact_dim, cfg_.memory_dim, cfg_.update, rng);
    ti_answer_.answer_gru =
        make_gru(reg_, "ti.answer", 2 + fact_dim, cfg_.memory_dim, rng);
    // Zero-initialized output head: the untrained answer module predicts the
    // uniform distribution at every position.
    ti_answer_.w_out = &reg_.add("ti.answer_out", Tensor::zeros({2, cfg_.memory_dim}));
    reader_.score_hidden = make_matrix(reg_, "ti.reader_hidden", cfg_.memory_dim, cfg_.memory_dim, rng);
    reader_.score_out = make_matrix(reg_, "ti.reader_out", 1, cfg_.memory_dim, rng);

    if (cfg_.metric == Metric::MProto) {
        ec_fusion_ = make_bigru(reg_, "ec.fusion", fact_dim, cfg_.hidden, rng);
        ec_question_ = make_bigru(reg_, "ec.question", fact_dim, cfg_.hidden, rng);
        ec_memory_ =
            make_memory(reg_, "ec.memory", fact_dim, cfg_.memory_dim, cfg_.update, rng);
    }
}

DmbPn::MentionForward DmbPn::encode_mention(Tape& tape, const EventMention& mention,
                                            const Vocabulary& vocab, bool training,
                                            Rng* dropout_rng) const {
    MentionForward mf;
    std::vector<Var> inputs = embed_words(tape, mention, vocab, tables_);
    if (training && cfg_.dropout > 0.0) {
        if (!dropout_rng) throw StateError("encode_mention: dropout requires an rng");
        for (Var& v : inputs) v = tape.dropout(v, cfg_.dropout, *dropout_rng, true);
    }
    mf.facts = fuse_inputs(tape, inputs, ti_fusion_);
    mf.questions = ti_question(tape, inputs, ti_question_);
    mf.memories.reserve(mf.facts.size());
    for (std::size_t i = 0; i < mf.facts.size(); ++i)
        mf.memories.push_back(
            per_word_memory(tape, mf.facts, mf.questions[i], cfg_.passes, ti_memory_));
    mf.trigger_dist = ti_answer(tape, mf.memories, mf.questions, ti_answer_);
    mf.sentence = read_sentence(tape, mf.facts, mf.memories, reader_);
    return mf;
}

Var DmbPn::word_memory_traced(Tape& tape, std::span<const Var> facts, Var question,
                              MemoryTrace* trace) const {
    return run_episodic_memory(tape, facts, question, cfg_.passes, ti_memory_, trace);
}

namespace {
int argmax(std::span<const double> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}
}  // namespace

EpisodeResult DmbPn::forward(Tape& tape, const Episode& episode, const Vocabulary& vocab,
                             bool training, Rng* dropout_rng) const {
    EpisodeResult result;

    // Trigger identification runs over every mention of the episode, support
    // first (grid order) then queries. L_TI averages over all of them.
    std::vector<Var> encodings;
    std::vector<Var> ti_losses;
    auto process_mention = [&](const EventMention& m, bool is_query) {
        MentionForward mf = encode_mention(tape, m, vocab, training, dropout_rng);
        ti_losses.push_back(ti_loss(tape, mf.trigger_dist, m.trigger_index));
        encodings.push_back(mf.sentence.vector);

        MentionOutput out;
        auto att = tape.value(mf.sentence.attention);
        out.attention.assign(att.begin(), att.end());
        out.trigger_gold = m.trigger_index;
        out.is_query = is_query;
        std::vector<double> trigger_prob;
        trigger_prob.reserve(mf.trigger_dist.size());
        for (Var d : mf.trigger_dist) trigger_prob.push_back(tape.value(d)[0]);
        out.ti_pred = argmax(trigger_prob);
        result.mentions.push_back(std::move(out));
    };

    for (const auto& row : episode.support)
        for (const auto& m : row) process_mention(m, false);
    for (const auto& m : episode.query) process_mention(m, true);

    result.loss_ti = tape.average(ti_losses);

    auto [support, queries] = integrate_sentences(episode, encodings);

    PrototypeSet protos;
    std::vector<Var> query_dists;
    query_dists.reserve(queries.list.size());
    switch (cfg_.metric) {
        case Metric::MProto: {
            std::vector<Var> facts = fuse_support(tape, support, ec_fusion_);
            std::vector<Var> questions = ec_question(tape, support, ec_question_);
            protos = memory_prototypes(tape, support, facts, questions, cfg_.passes,
                                       ec_memory_);
            for (Var q : queries.list) query_dists.push_back(classify_query(tape, q, protos));
            break;
        }
        case Metric::Proto: {
            protos = avg_prototype(tape, support);
            for (Var q : queries.list) query_dists.push_back(classify_query(tape, q, protos));
            break;
        }
        case Metric::Match: {
            for (Var q : queries.list)
                query_dists.push_back(matching_score(tape, q, support));
            break;
        }
    }

    std::vector<Var> ec_losses;
    ec_losses.reserve(query_dists.size());
    for (std::size_t q = 0; q < query_dists.size(); ++q) {
        ec_losses.push_back(ec_loss(tape, query_dists[q], episode.query_label[q]));
        auto probs = tape.value(query_dists[q]);
        result.query_probs.emplace_back(probs.begin(), probs.end());
        result.query_pred.push_back(argmax(probs));
        result.query_gold.push_back(episode.query_label[q]);
        auto enc = tape.value(queries.list[q]);
        result.query_encoding_values.emplace_back(enc.begin(), enc.end());
    }
    result.loss_ec = tape.average(ec_losses);
    result.joint = joint_loss(tape, result.loss_ti, result.loss_ec, cfg_.lambda);

    for (Var e : protos.prototypes) {
        auto v = tape.value(e);
        result.prototype_values.emplace_back(v.begin(), v.end());
    }
    return result;
}

}  // namespace dmbpn
