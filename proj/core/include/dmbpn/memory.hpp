#pragma once

#include <span>
#include <vector>

#include "dmbpn/recurrent.hpp"

namespace dmbpn {

enum class MemoryUpdate { Relu, Gru };

/// Weights of the episodic memory module. Facts and the question enter
/// through learned affine projections so that facts, question, and memory
/// share one dimension (the elementwise gate features are undefined
/// otherwise). Gate scores come from a two-layer perceptron, the context from
/// a GRU over attention-scaled facts, and the memory update is either the
/// relu-affine form (default) or a GRU step.
struct MemoryParams {
    AffineParams fact_proj;   // fact dim -> memory dim
    AffineParams question_proj;
    Tensor* gate_hidden = nullptr;  // [mem, 4*mem]
    Tensor* gate_out = nullptr;  // [1, mem]
    GruParams attn_gru;         // input mem -> hidden mem
    MemoryUpdate update = MemoryUpdate::Relu;
    Tensor* update_w = nullptr;  // [mem, 3*mem]  (relu form)
    Tensor* update_b = nullptr;  // [mem]
    GruParams update_gru;        // input mem -> hidden mem (gru form)
    int fact_dim = 0;
    int memory_dim = 0;
};

MemoryParams make_memory(ParamRegistry& reg, const std::string& prefix, int fact_dim,
                         int memory_dim, MemoryUpdate update, Rng& rng);
MemoryParams bind_memory(ParamRegistry& reg, const std::string& prefix, int fact_dim,
                         int memory_dim, MemoryUpdate update);

/// Attention over already-projected facts given question and previous
/// memory: per-fact features [F*q, |F-q|, F*m, |F-m|] scored by the
/// perceptron, normalized by softmax. Returns one weight per fact.
Var attention_gate(Tape& tape, std::span<const Var> facts, Var q, Var m_prev,
                   const MemoryParams& p);

/// GRU over facts scaled by their attention weights; the context is the
/// final hidden state.
Var attentional_gru(Tape& tape, std::span<const Var> facts, Var attention,
                    const MemoryParams& p);

/// New memory from (m_prev, context, question); relu form clamps at zero.
Var memory_update(Tape& tape, Var m_prev, Var context, Var q, const MemoryParams& p);

/// Per-pass attention weights, recorded when a trace sink is supplied.
struct MemoryTrace {
    std::vector<std::vector<double>> pass_attention;
};

/// Runs `passes` rounds of gate -> attentional GRU -> update over the raw
/// facts/question (projections applied internally; m_0 is the projected
/// question). Returns the final memory.
Var run_episodic_memory(Tape& tape, std::span<const Var> facts, Var q, int passes,
                        const MemoryParams& p, MemoryTrace* trace = nullptr);

}  // namespace dmbpn
