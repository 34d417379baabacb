#pragma once

#include <span>
#include <vector>

#include "dmbpn/corpus.hpp"
#include "dmbpn/memory.hpp"

namespace dmbpn {

/// Embedding tables feeding the word encoder: one word table plus three
/// position tables (distance to start, distance to end, sentence length).
struct EmbedTables {
    Tensor* words = nullptr;      // [vocab, d_w]
    Tensor* pos_start = nullptr;  // [pos_rows, d_p]
    Tensor* pos_end = nullptr;
    Tensor* pos_len = nullptr;
    int d_w = 0;
    int d_p = 0;
    int pos_rows = 0;

    int word_input_dim() const { return d_w + 3 * d_p; }
};

/// Per-token [word_emb | pos_start | pos_end | pos_len], one Var per token.
std::vector<Var> embed_words(Tape& tape, const EventMention& mention,
                             const Vocabulary& vocab, const EmbedTables& tables);

/// Input fusion layer: Bi-GRU over the word inputs; one fact per token of
/// dimension 2*hidden.
std::vector<Var> fuse_inputs(Tape& tape, std::span<const Var> inputs, const BiGruParams& p);

/// Question module: Bi-GRU over the same inputs; one question vector per
/// token ("is this word the trigger?").
std::vector<Var> ti_question(Tape& tape, std::span<const Var> inputs, const BiGruParams& p);

/// Memory-refined representation of word i: the episodic memory run over all
/// facts of the sentence with word i's question.
Var per_word_memory(Tape& tape, std::span<const Var> facts, Var question_i, int passes,
                    const MemoryParams& memory, MemoryTrace* trace = nullptr);

struct TiAnswerParams {
    GruParams answer_gru;   // input [prev 2-dist | question], hidden = memory dim
    Tensor* w_out = nullptr;  // [2, memory dim]
};

/// Answer module: a GRU over positions whose initial state is the final
/// per-word memory; each step consumes [previous predicted distribution |
/// question of the current word] and emits a 2-class softmax (trigger /
/// not-trigger). The step-0 "previous prediction" is uniform.
std::vector<Var> ti_answer(Tape& tape, std::span<const Var> memories,
                           std::span<const Var> questions, const TiAnswerParams& p);

/// Mean binary cross-entropy over positions, positive class only at the gold
/// trigger position.
Var ti_loss(Tape& tape, std::span<const Var> word_distributions, int gold_index);

struct SentenceEncoding {
    Var vector;     // dimension 2*hidden
    Var attention;  // one weight per token, sums to 1
};

struct SentenceReaderParams {
    Tensor* score_hidden = nullptr;  // [mem, mem]
    Tensor* score_out = nullptr;  // [1, mem]
};

/// Sentence reader: scalar attention per word from its memory vector through
/// a two-layer perceptron + softmax, then the attention-weighted sum of the
/// facts.
SentenceEncoding read_sentence(Tape& tape, std::span<const Var> facts,
                               std::span<const Var> memories, const SentenceReaderParams& p);

}  // namespace dmbpn
