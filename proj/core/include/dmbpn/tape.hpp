#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "dmbpn/tensor.hpp"

namespace dmbpn {

/// Handle to a node on a Tape. Only meaningful together with the tape that
/// produced it.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode differentiation tape over vector-valued nodes.
///
/// Ops evaluate eagerly on creation; backward() walks the node list in
/// reverse and accumulates parameter gradients directly into the registry
/// tensors referenced by affine/matvec/param nodes. Storage is arena-backed,
/// so reset() keeps capacity across training iterations.
///
/// Every op checks its output for NaN/Inf and throws NumericError at the op
/// boundary.
///
/// Threading: distinct tapes running forward over frozen parameters may be
/// used concurrently; backward() writes into the shared parameter tensors
/// and must be serialized with any other access to them.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // ---- leaves ----
    Var constant(std::span<const double> v);
    Var constant(std::initializer_list<double> v);
    Var zeros(int dim);
    /// Whole tensor (flattened) as a differentiable leaf bound to `t`.
    Var param(Tensor& t);
    /// Row of a 2-D table as a differentiable leaf (embedding lookup).
    Var param_row(Tensor& t, int row);

    // ---- elementwise / linear ----
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var scale(Var a, double c);
    /// weights[index] * v, with the scalar taken from a vector node.
    Var scale_elem(Var weights, int index, Var v);
    /// (1 - z) * h + z * cand, fused GRU state blend.
    Var gate_mix(Var z, Var h, Var cand);
    /// W x  (W is a 2-D registry tensor, x a vector node).
    Var matvec(Tensor& w, Var x);
    /// W x + b.
    Var affine(Tensor& w, Tensor& b, Var x);

    // ---- nonlinearities ----
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var relu(Var a);
    Var abs(Var a);
    Var clamp_min(Var a, double floor);

    // ---- reductions / structure ----
    Var dot(Var a, Var b);
    /// Euclidean norm, 1-dim output.
    Var norm(Var a);
    Var concat(std::span<const Var> parts);
    /// Arithmetic mean of same-dimension vectors. Computed as
    /// v0 + sum_i(v_i - v0)/n so that the mean of n identical vectors
    /// reproduces the input bit-for-bit.
    Var average(std::span<const Var> vs);

    // ---- probability ops ----
    /// Max-subtracted softmax over the whole vector.
    Var softmax(Var a);
    /// -log(probs[target]) with probs[target] floored at 1e-12.
    Var cross_entropy(Var probs, int target);
    /// Inverted dropout: train mode zeroes entries with probability `rate`
    /// and scales survivors by 1/(1-rate); eval mode is the identity.
    Var dropout(Var a, double rate, Rng& rng, bool training);

    // ---- access ----
    int dim(Var v) const;
    std::span<const double> value(Var v) const;
    std::span<const double> gradient(Var v) const;
    double scalar(Var v) const;

    /// Backpropagates from a 1-dim root. Parameter gradients accumulate into
    /// the referenced registry tensors (allocated on demand).
    void backward(Var root);

    std::size_t node_count() const { return nodes_.size(); }
    void reset();

    static constexpr double kLogFloor = 1e-12;

private:
    enum class Op : std::uint8_t {
        Constant, Param, ParamRow,
        Add, Sub, Mul, Div, Scale, ScaleElem, GateMix, MatVec, Affine,
        Sigmoid, Tanh, Relu, Abs, ClampMin,
        Dot, Norm, Concat,
        Softmax, CrossEntropy, Dropout,
    };

    struct Node {
        Op op;
        int a = -1, b = -1, c3 = -1;  // operand node ids
        Tensor* tensor = nullptr;     // bound parameter (Param/ParamRow/MatVec/Affine)
        Tensor* bias = nullptr;       // Affine only
        int aux = 0;                  // row / target / element index
        double cval = 0.0;            // scale factor / clamp floor / keep-prob
        int off = 0, len = 0;         // value slice in buf_
        int args_off = 0, args_len = 0;  // concat children
        int mask_off = -1;            // dropout mask slice
    };

    Var push(Node n);
    const Node& node(Var v) const;
    double* val(Node& n) { return buf_.data() + n.off; }
    const double* val(const Node& n) const { return buf_.data() + n.off; }
    double* grd(const Node& n) { return gbuf_.data() + n.off; }
    void check_finite(const Node& n, const char* opname) const;
    void require_same_dim(Var a, Var b, const char* opname) const;

    std::vector<Node> nodes_;
    std::vector<double> buf_;
    std::vector<double> gbuf_;
    std::vector<int> args_;
    std::vector<std::uint8_t> mask_;
};

}  // namespace dmbpn
