#include "dmbpn/recurrent.hpp"

#include <cmath>

namespace dmbpn {

namespace {
Tensor uniform_weight(int rows, int cols, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    return Tensor::uniform({rows, cols}, rng, -bound, bound);
}
}  // namespace

Tensor* make_matrix(ParamRegistry& reg, const std::string& name, int rows, int cols,
                    Rng& rng) {
    return &reg.add(name, uniform_weight(rows, cols, rng));
}

AffineParams make_affine(ParamRegistry& reg, const std::string& prefix, int in_dim,
                         int out_dim, Rng& rng) {
    AffineParams p;
    p.w = &reg.add(prefix + ".w", uniform_weight(out_dim, in_dim, rng));
    p.b = &reg.add(prefix + ".b", Tensor::zeros({out_dim}));
    return p;
}

AffineParams bind_affine(ParamRegistry& reg, const std::string& prefix) {
    return {&reg.get(prefix + ".w"), &reg.get(prefix + ".b")};
}

GruParams make_gru(ParamRegistry& reg, const std::string& prefix, int input_dim,
                   int hidden_dim, Rng& rng) {
    GruParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.wz = &reg.add(prefix + ".wz", uniform_weight(hidden_dim, input_dim, rng));
    p.uz = &reg.add(prefix + ".uz", uniform_weight(hidden_dim, hidden_dim, rng));
    p.bz = &reg.add(prefix + ".bz", Tensor::zeros({hidden_dim}));
    p.wr = &reg.add(prefix + ".wr", uniform_weight(hidden_dim, input_dim, rng));
    p.ur = &reg.add(prefix + ".ur", uniform_weight(hidden_dim, hidden_dim, rng));
    p.br = &reg.add(prefix + ".br", Tensor::zeros({hidden_dim}));
    p.wh = &reg.add(prefix + ".wh", uniform_weight(hidden_dim, input_dim, rng));
    p.uh = &reg.add(prefix + ".uh", uniform_weight(hidden_dim, hidden_dim, rng));
    p.bh = &reg.add(prefix + ".bh", Tensor::zeros({hidden_dim}));
    return p;
}

GruParams bind_gru(ParamRegistry& reg, const std::string& prefix, int input_dim,
                   int hidden_dim) {
    GruParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.wz = &reg.get(prefix + ".wz");
    p.uz = &reg.get(prefix + ".uz");
    p.bz = &reg.get(prefix + ".bz");
    p.wr = &reg.get(prefix + ".wr");
    p.ur = &reg.get(prefix + ".ur");
    p.br = &reg.get(prefix + ".br");
    p.wh = &reg.get(prefix + ".wh");
    p.uh = &reg.get(prefix + ".uh");
    p.bh = &reg.get(prefix + ".bh");
    return p;
}

Var gru_cell(Tape& tape, Var x, Var h_prev, const GruParams& p) {
    if (tape.dim(x) != p.input_dim)
        throw DimensionError("gru_cell: input dim " + std::to_string(tape.dim(x)) +
                             " != " + std::to_string(p.input_dim));
    if (tape.dim(h_prev) != p.hidden_dim)
        throw DimensionError("gru_cell: hidden dim " + std::to_string(tape.dim(h_prev)) +
                             " != " + std::to_string(p.hidden_dim));
    Var z = tape.sigmoid(tape.add(tape.add(tape.matvec(*p.wz, x), tape.matvec(*p.uz, h_prev)),
                                  tape.param(*p.bz)));
    Var r = tape.sigmoid(tape.add(tape.add(tape.matvec(*p.wr, x), tape.matvec(*p.ur, h_prev)),
                                  tape.param(*p.br)));
    Var cand = tape.tanh(tape.add(
        tape.add(tape.matvec(*p.wh, x), tape.matvec(*p.uh, tape.mul(r, h_prev))),
        tape.param(*p.bh)));
    return tape.gate_mix(z, h_prev, cand);
}

BiGruParams make_bigru(ParamRegistry& reg, const std::string& prefix, int input_dim,
                       int hidden_dim, Rng& rng) {
    return {make_gru(reg, prefix + ".fwd", input_dim, hidden_dim, rng),
            make_gru(reg, prefix + ".bwd", input_dim, hidden_dim, rng)};
}

BiGruParams bind_bigru(ParamRegistry& reg, const std::string& prefix, int input_dim,
                       int hidden_dim) {
    return {bind_gru(reg, prefix + ".fwd", input_dim, hidden_dim),
            bind_gru(reg, prefix + ".bwd", input_dim, hidden_dim)};
}

std::vector<Var> bigru_sequence(Tape& tape, std::span<const Var> xs, const BiGruParams& p) {
    if (xs.empty()) throw DomainError("bigru_sequence: empty input sequence");
    const std::size_t n = xs.size();

    std::vector<Var> fwd(n), bwd(n);
    Var h = tape.zeros(p.fwd.hidden_dim);
    for (std::size_t i = 0; i < n; ++i) {
        h = gru_cell(tape, xs[i], h, p.fwd);
        fwd[i] = h;
    }
    h = tape.zeros(p.bwd.hidden_dim);
    for (std::size_t i = n; i-- > 0;) {
        h = gru_cell(tape, xs[i], h, p.bwd);
        bwd[i] = h;
    }

    std::vector<Var> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Var parts[2] = {fwd[i], bwd[i]};
        out[i] = tape.concat(parts);
    }
    return out;
}

}  // namespace dmbpn
