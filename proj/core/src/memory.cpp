#include "dmbpn/memory.hpp"

namespace dmbpn {

namespace {
// The attentional GRU consumes facts scaled by softmax weights (mean 1/n per
// fact), and the gate features include products of two sub-unit-scale
// vectors, so a plain 1/sqrt(fan_in) init leaves the whole module an order
// of magnitude quieter than its inputs and gradients stall. The input-side
// matrices start with a compensating gain.
constexpr double kAttnInputGain = 4.0;
constexpr double kGateGain = 2.0;

void scale_values(Tensor* t, double gain) {
    for (double& v : t->values) v *= gain;
}
}  // namespace

MemoryParams make_memory(ParamRegistry& reg, const std::string& prefix, int fact_dim,
                         int memory_dim, MemoryUpdate update, Rng& rng) {
    MemoryParams p;
    p.fact_dim = fact_dim;
    p.memory_dim = memory_dim;
    p.update = update;
    p.fact_proj = make_affine(reg, prefix + ".fact_proj", fact_dim, memory_dim, rng);
    p.question_proj = make_affine(reg, prefix + ".q_proj", fact_dim, memory_dim, rng);
    p.gate_hidden = make_matrix(reg, prefix + ".gate_hidden", memory_dim, 4 * memory_dim, rng);
    p.gate_out = make_matrix(reg, prefix + ".gate_out", 1, memory_dim, rng);
    scale_values(p.gate_hidden, kGateGain);
    scale_values(p.gate_out, kGateGain);
    p.attn_gru = make_gru(reg, prefix + ".attn_gru", memory_dim, memory_dim, rng);
    scale_values(p.attn_gru.wz, kAttnInputGain);
    scale_values(p.attn_gru.wr, kAttnInputGain);
    scale_values(p.attn_gru.wh, kAttnInputGain);
    if (update == MemoryUpdate::Relu) {
        p.update_w = make_matrix(reg, prefix + ".update_w", memory_dim, 3 * memory_dim, rng);
        p.update_b = &reg.add(prefix + ".update_b", Tensor::zeros({memory_dim}));
        scale_values(p.update_w, kGateGain);
    } else {
        p.update_gru = make_gru(reg, prefix + ".update_gru", memory_dim, memory_dim, rng);
        scale_values(p.update_gru.wz, kGateGain);
        scale_values(p.update_gru.wr, kGateGain);
        scale_values(p.update_gru.wh, kGateGain);
    }
    return p;
}

MemoryParams bind_memory(ParamRegistry& reg, const std::string& prefix, int fact_dim,
                         int memory_dim, MemoryUpdate update) {
    MemoryParams p;
    p.fact_dim = fact_dim;
    p.memory_dim = memory_dim;
    p.update = update;
    p.fact_proj = bind_affine(reg, prefix + ".fact_proj");
    p.question_proj = bind_affine(reg, prefix + ".q_proj");
    p.gate_hidden = &reg.get(prefix + ".gate_hidden");
    p.gate_out = &reg.get(prefix + ".gate_out");
    p.attn_gru = bind_gru(reg, prefix + ".attn_gru", memory_dim, memory_dim);
    if (update == MemoryUpdate::Relu) {
        p.update_w = &reg.get(prefix + ".update_w");
        p.update_b = &reg.get(prefix + ".update_b");
    } else {
        p.update_gru = bind_gru(reg, prefix + ".update_gru", memory_dim, memory_dim);
    }
    return p;
}

Var attention_gate(Tape& tape, std::span<const Var> facts, Var q, Var m_prev,
                   const MemoryParams& p) {
    if (facts.empty()) throw DomainError("attention_gate: no facts");
    for (Var f : facts)
        if (tape.dim(f) != tape.dim(q) || tape.dim(f) != tape.dim(m_prev))
            throw DimensionError("attention_gate: fact/question/memory dims differ");

    std::vector<Var> scores;
    scores.reserve(facts.size());
    for (Var f : facts) {
        const Var features[4] = {
            tape.mul(f, q),
            tape.abs(tape.sub(f, q)),
            tape.mul(f, m_prev),
            tape.abs(tape.sub(f, m_prev)),
        };
        Var u = tape.concat(features);
        Var hidden = tape.tanh(tape.matvec(*p.gate_hidden, u));
        scores.push_back(tape.matvec(*p.gate_out, hidden));
    }
    return tape.softmax(tape.concat(scores));
}

Var attentional_gru(Tape& tape, std::span<const Var> facts, Var attention,
                    const MemoryParams& p) {
    if (tape.dim(attention) != static_cast<int>(facts.size()))
        throw DimensionError("attentional_gru: |attention| != |facts|");
    Var h = tape.zeros(p.memory_dim);
    for (std::size_t t = 0; t < facts.size(); ++t) {
        Var scaled = tape.scale_elem(attention, static_cast<int>(t), facts[t]);
        h = gru_cell(tape, scaled, h, p.attn_gru);
    }
    return h;
}

Var memory_update(Tape& tape, Var m_prev, Var context, Var q, const MemoryParams& p) {
    if (p.update == MemoryUpdate::Gru)
        return gru_cell(tape, context, m_prev, p.update_gru);
    const Var parts[3] = {m_prev, context, q};
    Var cat = tape.concat(parts);
    return tape.relu(tape.add(tape.matvec(*p.update_w, cat), tape.param(*p.update_b)));
}

Var run_episodic_memory(Tape& tape, std::span<const Var> facts, Var q, int passes,
                        const MemoryParams& p, MemoryTrace* trace) {
    if (passes < 1) throw DomainError("run_episodic_memory: passes must be >= 1");
    if (facts.empty()) throw DomainError("run_episodic_memory: no facts");

    std::vector<Var> projected;
    projected.reserve(facts.size());
    for (Var f : facts)
        projected.push_back(tape.affine(*p.fact_proj.w, *p.fact_proj.b, f));
    Var question = tape.affine(*p.question_proj.w, *p.question_proj.b, q);

    Var m = question;  // m_0
    for (int t = 0; t < passes; ++t) {
        Var a = attention_gate(tape, projected, question, m, p);
        if (trace) {
            auto av = tape.value(a);
            trace->pass_attention.emplace_back(av.begin(), av.end());
        }
        Var c = attentional_gru(tape, projected, a, p);
        m = memory_update(tape, m, c, question, p);
    }
    return m;
}

}  // namespace dmbpn
