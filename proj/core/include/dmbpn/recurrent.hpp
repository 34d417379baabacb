#pragma once

#include <span>
#include <string>
#include <vector>

#include "dmbpn/tape.hpp"

namespace dmbpn {

/// Weight block for one GRU cell:
///   z = sigmoid(Wz x + Uz h + bz)
///   r = sigmoid(Wr x + Ur h + br)
///   hcand = tanh(Wh x + Uh (r*h) + bh)
///   h' = (1-z)*h + z*hcand
struct GruParams {
    Tensor *wz = nullptr, *uz = nullptr, *bz = nullptr;
    Tensor *wr = nullptr, *ur = nullptr, *br = nullptr;
    Tensor *wh = nullptr, *uh = nullptr, *bh = nullptr;
    int input_dim = 0;
    int hidden_dim = 0;
};

/// Registers the nine tensors of a GRU cell under `prefix` and returns the
/// bound pointers. Weights are uniform +-1/sqrt(fan_in), biases zero.
GruParams make_gru(ParamRegistry& reg, const std::string& prefix, int input_dim,
                   int hidden_dim, Rng& rng);

/// Re-binds pointers after the registry was populated elsewhere (checkpoint
/// load into a fresh registry).
GruParams bind_gru(ParamRegistry& reg, const std::string& prefix, int input_dim,
                   int hidden_dim);

Var gru_cell(Tape& tape, Var x, Var h_prev, const GruParams& p);

struct BiGruParams {
    GruParams fwd;
    GruParams bwd;
};

BiGruParams make_bigru(ParamRegistry& reg, const std::string& prefix, int input_dim,
                       int hidden_dim, Rng& rng);
BiGruParams bind_bigru(ParamRegistry& reg, const std::string& prefix, int input_dim,
                       int hidden_dim);

/// Runs the forward GRU left-to-right and the backward GRU right-to-left,
/// both from zero initial state, and concatenates the two hidden states per
/// position. Output dimension is 2*hidden per element.
std::vector<Var> bigru_sequence(Tape& tape, std::span<const Var> xs, const BiGruParams& p);

/// Single affine map registered under `prefix` (`.w` and `.b`).
struct AffineParams {
    Tensor* w = nullptr;
    Tensor* b = nullptr;
};

AffineParams make_affine(ParamRegistry& reg, const std::string& prefix, int in_dim,
                         int out_dim, Rng& rng);
AffineParams bind_affine(ParamRegistry& reg, const std::string& prefix);

/// Matrix without bias (perceptron layers written as plain products).
Tensor* make_matrix(ParamRegistry& reg, const std::string& name, int rows, int cols, Rng& rng);

}  // namespace dmbpn
