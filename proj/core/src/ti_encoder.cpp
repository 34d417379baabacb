#include "dmbpn/ti_encoder.hpp"

#include <algorithm>

namespace dmbpn {

std::vector<Var> embed_words(Tape& tape, const EventMention& mention,
                             const Vocabulary& vocab, const EmbedTables& tables) {
    const int n = static_cast<int>(mention.tokens.size());
    if (n < 1) throw DomainError("embed_words: empty mention");
    auto positions = position_features(n, tables.pos_rows - 1);

    std::vector<Var> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int word_id = vocab.id_of(mention.tokens[static_cast<std::size_t>(i)]);
        const auto& pos = positions[static_cast<std::size_t>(i)];
        const Var parts[4] = {
            tape.param_row(*tables.words, word_id),
            tape.param_row(*tables.pos_start, pos[0]),
            tape.param_row(*tables.pos_end, pos[1]),
            tape.param_row(*tables.pos_len, pos[2]),
        };
        out.push_back(tape.concat(parts));
    }
    return out;
}

std::vector<Var> fuse_inputs(Tape& tape, std::span<const Var> inputs, const BiGruParams& p) {
    if (inputs.empty()) throw DomainError("fuse_inputs: empty input");
    return bigru_sequence(tape, inputs, p);
}

std::vector<Var> ti_question(Tape& tape, std::span<const Var> inputs, const BiGruParams& p) {
    if (inputs.empty()) throw DomainError("ti_question: empty input");
    return bigru_sequence(tape, inputs, p);
}

Var per_word_memory(Tape& tape, std::span<const Var> facts, Var question_i, int passes,
                    const MemoryParams& memory, MemoryTrace* trace) {
    return run_episodic_memory(tape, facts, question_i, passes, memory, trace);
}

std::vector<Var> ti_answer(Tape& tape, std::span<const Var> memories,
                           std::span<const Var> questions, const TiAnswerParams& p) {
    if (memories.size() != questions.size())
        throw DimensionError("ti_answer: memories and questions must align");
    if (memories.empty()) throw DomainError("ti_answer: empty sequence");

    Var d = memories.back();  // d_0: the word sequence's final memory
    Var prev = tape.constant({0.5, 0.5});
    std::vector<Var> out;
    out.reserve(memories.size());
    for (std::size_t t = 0; t < memories.size(); ++t) {
        const Var step_in[2] = {prev, questions[t]};
        d = gru_cell(tape, tape.concat(step_in), d, p.answer_gru);
        Var dist = tape.softmax(tape.matvec(*p.w_out, d));
        out.push_back(dist);
        prev = dist;
    }
    return out;
}

Var ti_loss(Tape& tape, std::span<const Var> word_distributions, int gold_index) {
    const int n = static_cast<int>(word_distributions.size());
    if (gold_index < 0 || gold_index >= n)
        throw DomainError("ti_loss: gold index " + std::to_string(gold_index) +
                          " out of range for " + std::to_string(n) + " positions");
    // Class 0 = trigger, class 1 = not-trigger.
    Var sum = tape.cross_entropy(word_distributions[0], gold_index == 0 ? 0 : 1);
    for (int i = 1; i < n; ++i)
        sum = tape.add(sum, tape.cross_entropy(word_distributions[static_cast<std::size_t>(i)],
                                               i == gold_index ? 0 : 1));
    return tape.scale(sum, 1.0 / static_cast<double>(n));
}

SentenceEncoding read_sentence(Tape& tape, std::span<const Var> facts,
                               std::span<const Var> memories,
                               const SentenceReaderParams& p) {
    if (facts.size() != memories.size())
        throw DimensionError("read_sentence: facts and memories must align");
    if (facts.empty()) throw DomainError("read_sentence: empty sentence");

    std::vector<Var> scores;
    scores.reserve(memories.size());
    for (Var m : memories)
        scores.push_back(tape.matvec(*p.score_out, tape.tanh(tape.matvec(*p.score_hidden, m))));
    Var alpha = tape.softmax(tape.concat(scores));

    Var s = tape.scale_elem(alpha, 0, facts[0]);
    for (std::size_t i = 1; i < facts.size(); ++i)
        s = tape.add(s, tape.scale_elem(alpha, static_cast<int>(i), facts[i]));
    return {s, alpha};
}

}  // namespace dmbpn
