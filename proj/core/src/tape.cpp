#include "dmbpn/tape.hpp"

#include <algorithm>
#include <cmath>

namespace dmbpn {

namespace {
std::string dim_msg(const char* opname, int got, int want) {
    return std::string(opname) + ": dimension mismatch (" + std::to_string(got) +
           " vs " + std::to_string(want) + ")";
}
}  // namespace

Var Tape::push(Node n) {
    nodes_.push_back(n);
    return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
        throw StateError("invalid tape handle");
    return nodes_[static_cast<std::size_t>(v.id)];
}

void Tape::check_finite(const Node& n, const char* opname) const {
    const double* p = val(n);
    for (int i = 0; i < n.len; ++i)
        if (!std::isfinite(p[i]))
            throw NumericError(std::string(opname) + ": non-finite output");
}

void Tape::require_same_dim(Var a, Var b, const char* opname) const {
    if (node(a).len != node(b).len)
        throw DimensionError(dim_msg(opname, node(a).len, node(b).len));
}

void Tape::reset() {
    nodes_.clear();
    buf_.clear();
    gbuf_.clear();
    args_.clear();
    mask_.clear();
}

int Tape::dim(Var v) const { return node(v).len; }

std::span<const double> Tape::value(Var v) const {
    const Node& n = node(v);
    return {buf_.data() + n.off, static_cast<std::size_t>(n.len)};
}

std::span<const double> Tape::gradient(Var v) const {
    const Node& n = node(v);
    if (gbuf_.size() != buf_.size()) throw StateError("gradient(): backward not run");
    return {gbuf_.data() + n.off, static_cast<std::size_t>(n.len)};
}

double Tape::scalar(Var v) const {
    const Node& n = node(v);
    if (n.len != 1) throw DimensionError("scalar(): node is not 1-dim");
    return buf_[static_cast<std::size_t>(n.off)];
}

Var Tape::constant(std::span<const double> v) {
    if (v.empty()) throw DomainError("constant: empty vector");
    Node n{};
    n.op = Op::Constant;
    n.off = static_cast<int>(buf_.size());
    n.len = static_cast<int>(v.size());
    buf_.insert(buf_.end(), v.begin(), v.end());
    Var out = push(n);
    check_finite(nodes_.back(), "constant");
    return out;
}

Var Tape::constant(std::initializer_list<double> v) {
    return constant(std::span<const double>(v.begin(), v.size()));
}

Var Tape::zeros(int d) {
    if (d <= 0) throw DomainError("zeros: dimension must be positive");
    Node n{};
    n.op = Op::Constant;
    n.off = static_cast<int>(buf_.size());
    n.len = d;
    buf_.insert(buf_.end(), static_cast<std::size_t>(d), 0.0);
    return push(n);
}

Var Tape::param(Tensor& t) {
    Node n{};
    n.op = Op::Param;
    n.tensor = &t;
    n.off = static_cast<int>(buf_.size());
    n.len = static_cast<int>(t.size());
    buf_.insert(buf_.end(), t.values.begin(), t.values.end());
    Var out = push(n);
    check_finite(nodes_.back(), "param");
    return out;
}

Var Tape::param_row(Tensor& t, int row) {
    int r = t.rows(), c = t.cols();
    if (row < 0 || row >= r)
        throw DimensionError("param_row: row " + std::to_string(row) + " out of range");
    Node n{};
    n.op = Op::ParamRow;
    n.tensor = &t;
    n.aux = row;
    n.off = static_cast<int>(buf_.size());
    n.len = c;
    const double* src = t.values.data() + static_cast<std::size_t>(row) * c;
    buf_.insert(buf_.end(), src, src + c);
    Var out = push(n);
    check_finite(nodes_.back(), "param_row");
    return out;
}

Var Tape::add(Var a, Var b) {
    require_same_dim(a, b, "add");
    Node n{};
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.off = static_cast<int>(buf_.size());
    n.len = node(a).len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double *pa = val(node(a)), *pb = val(node(b));
    double* out = buf_.data() + n.off;
    for (int i = 0; i < n.len; ++i) out[i] = pa[i] + pb[i];
    Var v = push(n);
    check_finite(nodes_.back(), "add");
    return v;
}

Var Tape::sub(Var a, Var b) {
    require_same_dim(a, b, "sub");
    Node n{};
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.off = static_cast<int>(buf_.size());
    n.len = node(a).len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double *pa = val(node(a)), *pb = val(node(b));
    double* out = buf_.data() + n.off;
    for (int i = 0; i < n.len; ++i) out[i] = pa[i] - pb[i];
    Var v = push(n);
    check_finite(nodes_.back(), "sub");
    return v;
}

Var Tape::mul(Var a, Var b) {
    require_same_dim(a, b, "mul");
    Node n{};
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    n.off = static_cast<int>(buf_.size());
    n.len = node(a).len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double *pa = val(node(a)), *pb = val(node(b));
    double* out = buf_.data() + n.off;
    for (int i = 0; i < n.len; ++i) out[i] = pa[i] * pb[i];
    Var v = push(n);
    check_finite(nodes_.back(), "mul");
    return v;
}

Var Tape::div(Var a, Var b) {
    require_same_dim(a, b, "div");
    Node n{};
    n.op = Op::Div;
    n.a = a.id;
    n.b = b.id;
    n.off = static_cast<int>(buf_.size());
    n.len = node(a).len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double *pa = val(node(a)), *pb = val(node(b));
    double* out = buf_.data() + n.off;
    for (int i = 0; i < n.len; ++i) out[i] = pa[i] / pb[i];
    Var v = push(n);
    check_finite(nodes_.back(), "div");
    return v;
}

Var Tape::scale(Var a, double c) {
    Node n{};
    n.op = Op::Scale;
    n.a = a.id;
    n.cval = c;
    n.off = static_cast<int>(buf_.size());
    n.len = node(a).len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double* pa = val(node(a));
    double* out = buf_.data() + n.off;
    for (int i = 0; i < n.len; ++i) out[i] = c * pa[i];
    Var v = push(n);
    check_finite(nodes_.back(), "scale");
    return v;
}

Var Tape::scale_elem(Var weights, int index, Var v) {
    if (index < 0 || index >= node(weights).len)
        throw DimensionError("scale_elem: index out of range");
    Node n{};
    n.op = Op::ScaleElem;
    n.a = weights.id;
    n.b = v.id;
    n.aux = index;
    n.off = static_cast<int>(buf_.size());
    n.len = node(v).len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    double w = val(node(weights))[index];
    const double* pv = val(node(v));
    double* out = buf_.data() + n.off;
    for (int i = 0; i < n.len; ++i) out[i] = w * pv[i];
    Var out_v = push(n);
    check_finite(nodes_.back(), "scale_elem");
    return out_v;
}

Var Tape::gate_mix(Var z, Var h, Var cand) {
    require_same_dim(z, h, "gate_mix");
    require_same_dim(z, cand, "gate_mix");
    Node n{};
    n.op = Op::GateMix;
    n.a = z.id;
    n.b = h.id;
    n.c3 = cand.id;
    n.off = static_cast<int>(buf_.size());
    n.len = node(z).len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double *pz = val(node(z)), *ph = val(node(h)), *pc = val(node(cand));
    double* out = buf_.data() + n.off;
    for (int i = 0; i < n.len; ++i) out[i] = (1.0 - pz[i]) * ph[i] + pz[i] * pc[i];
    Var v = push(n);
    check_finite(nodes_.back(), "gate_mix");
    return v;
}

Var Tape::matvec(Tensor& w, Var x) {
    int r = w.rows(), c = w.cols();
    if (node(x).len != c) throw DimensionError(dim_msg("matvec", node(x).len, c));
    Node n{};
    n.op = Op::MatVec;
    n.tensor = &w;
    n.a = x.id;
    n.off = static_cast<int>(buf_.size());
    n.len = r;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double* px = val(node(x));
    double* out = buf_.data() + n.off;
    const double* wd = w.values.data();
    for (int i = 0; i < r; ++i) {
        double acc = 0.0;
        const double* row = wd + static_cast<std::size_t>(i) * c;
        for (int j = 0; j < c; ++j) acc += row[j] * px[j];
        out[i] = acc;
    }
    Var v = push(n);
    check_finite(nodes_.back(), "matvec");
    return v;
}

Var Tape::affine(Tensor& w, Tensor& b, Var x) {
    int r = w.rows(), c = w.cols();
    if (node(x).len != c) throw DimensionError(dim_msg("affine", node(x).len, c));
    if (static_cast<int>(b.size()) != r)
        throw DimensionError(dim_msg("affine bias", static_cast<int>(b.size()), r));
    Node n{};
    n.op = Op::Affine;
    n.tensor = &w;
    n.bias = &b;
    n.a = x.id;
    n.off = static_cast<int>(buf_.size());
    n.len = r;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double* px = val(node(x));
    double* out = buf_.data() + n.off;
    const double* wd = w.values.data();
    for (int i = 0; i < r; ++i) {
        double acc = b.values[static_cast<std::size_t>(i)];
        const double* row = wd + static_cast<std::size_t>(i) * c;
        for (int j = 0; j < c; ++j) acc += row[j] * px[j];
        out[i] = acc;
    }
    Var v = push(n);
    check_finite(nodes_.back(), "affine");
    return v;
}

Var Tape::sigmoid(Var a) {
    Node n{};
    n.op = Op::Sigmoid;
    n.a = a.id;
    n.off = static_cast<int>(buf_.size());
    n.len = node(a).len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double* pa = val(node(a));
    double* out = buf_.data() + n.off;
    for (int i = 0; i < n.len; ++i) out[i] = 1.0 / (1.0 + std::exp(-pa[i]));
    Var v = push(n);
    check_finite(nodes_.back(), "sigmoid");
    return v;
}

Var Tape::tanh(Var a) {
    Node n{};
    n.op = Op::Tanh;
    n.a = a.id;
    n.off = static_cast<int>(buf_.size());
    n.len = node(a).len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double* pa = val(node(a));
    double* out = buf_.data() + n.off;
    for (int i = 0; i < n.len; ++i) out[i] = std::tanh(pa[i]);
    Var v = push(n);
    check_finite(nodes_.back(), "tanh");
    return v;
}

Var Tape::relu(Var a) {
    Node n{};
    n.op = Op::Relu;
    n.a = a.id;
    n.off = static_cast<int>(buf_.size());
    n.len = node(a).len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double* pa = val(node(a));
    double* out = buf_.data() + n.off;
    for (int i = 0; i < n.len; ++i) out[i] = pa[i] > 0.0 ? pa[i] : 0.0;
    Var v = push(n);
    check_finite(nodes_.back(), "relu");
    return v;
}

Var Tape::abs(Var a) {
    Node n{};
    n.op = Op::Abs;
    n.a = a.id;
    n.off = static_cast<int>(buf_.size());
    n.len = node(a).len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double* pa = val(node(a));
    double* out = buf_.data() + n.off;
    for (int i = 0; i < n.len; ++i) out[i] = std::fabs(pa[i]);
    Var v = push(n);
    check_finite(nodes_.back(), "abs");
    return v;
}

Var Tape::clamp_min(Var a, double floor) {
    Node n{};
    n.op = Op::ClampMin;
    n.a = a.id;
    n.cval = floor;
    n.off = static_cast<int>(buf_.size());
    n.len = node(a).len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double* pa = val(node(a));
    double* out = buf_.data() + n.off;
    for (int i = 0; i < n.len; ++i) out[i] = pa[i] > floor ? pa[i] : floor;
    Var v = push(n);
    check_finite(nodes_.back(), "clamp_min");
    return v;
}

Var Tape::dot(Var a, Var b) {
    require_same_dim(a, b, "dot");
    Node n{};
    n.op = Op::Dot;
    n.a = a.id;
    n.b = b.id;
    n.off = static_cast<int>(buf_.size());
    n.len = 1;
    const double *pa = val(node(a)), *pb = val(node(b));
    double acc = 0.0;
    for (int i = 0; i < node(a).len; ++i) acc += pa[i] * pb[i];
    buf_.push_back(acc);
    Var v = push(n);
    check_finite(nodes_.back(), "dot");
    return v;
}

Var Tape::norm(Var a) {
    Node n{};
    n.op = Op::Norm;
    n.a = a.id;
    n.off = static_cast<int>(buf_.size());
    n.len = 1;
    const double* pa = val(node(a));
    double acc = 0.0;
    for (int i = 0; i < node(a).len; ++i) acc += pa[i] * pa[i];
    buf_.push_back(std::sqrt(acc));
    Var v = push(n);
    check_finite(nodes_.back(), "norm");
    return v;
}

Var Tape::concat(std::span<const Var> parts) {
    if (parts.empty()) throw DomainError("concat: empty argument list");
    Node n{};
    n.op = Op::Concat;
    n.args_off = static_cast<int>(args_.size());
    n.args_len = static_cast<int>(parts.size());
    int total = 0;
    for (Var p : parts) {
        args_.push_back(p.id);
        total += node(p).len;
    }
    n.off = static_cast<int>(buf_.size());
    n.len = total;
    buf_.resize(buf_.size() + static_cast<std::size_t>(total));
    double* out = buf_.data() + n.off;
    for (Var p : parts) {
        const Node& pn = node(p);
        std::copy(val(pn), val(pn) + pn.len, out);
        out += pn.len;
    }
    return push(n);
}

Var Tape::average(std::span<const Var> vs) {
    if (vs.empty()) throw DomainError("average: empty argument list");
    if (vs.size() == 1) return vs[0];
    double inv = 1.0 / static_cast<double>(vs.size());
    Var acc = sub(vs[1], vs[0]);
    for (std::size_t i = 2; i < vs.size(); ++i) acc = add(acc, sub(vs[i], vs[0]));
    return add(vs[0], scale(acc, inv));
}

Var Tape::softmax(Var a) {
    const Node& an = node(a);
    if (an.len < 1) throw DomainError("softmax: empty vector");
    Node n{};
    n.op = Op::Softmax;
    n.a = a.id;
    n.off = static_cast<int>(buf_.size());
    n.len = an.len;
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    const double* pa = val(node(a));
    double* out = buf_.data() + n.off;
    double mx = pa[0];
    for (int i = 1; i < n.len; ++i) mx = std::max(mx, pa[i]);
    double sum = 0.0;
    for (int i = 0; i < n.len; ++i) {
        out[i] = std::exp(pa[i] - mx);
        sum += out[i];
    }
    for (int i = 0; i < n.len; ++i) out[i] /= sum;
    Var v = push(n);
    check_finite(nodes_.back(), "softmax");
    return v;
}

Var Tape::cross_entropy(Var probs, int target) {
    const Node& pn = node(probs);
    if (target < 0 || target >= pn.len)
        throw DomainError("cross_entropy: target " + std::to_string(target) +
                          " out of range for " + std::to_string(pn.len) + " classes");
    Node n{};
    n.op = Op::CrossEntropy;
    n.a = probs.id;
    n.aux = target;
    n.off = static_cast<int>(buf_.size());
    n.len = 1;
    double p = std::max(val(node(probs))[target], kLogFloor);
    buf_.push_back(-std::log(p));
    Var v = push(n);
    check_finite(nodes_.back(), "cross_entropy");
    return v;
}

Var Tape::dropout(Var a, double rate, Rng& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0)
        throw DomainError("dropout: rate must be in [0, 1)");
    if (!training || rate == 0.0) return a;
    Node n{};
    n.op = Op::Dropout;
    n.a = a.id;
    n.cval = 1.0 / (1.0 - rate);
    n.off = static_cast<int>(buf_.size());
    n.len = node(a).len;
    n.mask_off = static_cast<int>(mask_.size());
    buf_.resize(buf_.size() + static_cast<std::size_t>(n.len));
    mask_.resize(mask_.size() + static_cast<std::size_t>(n.len));
    const double* pa = val(node(a));
    double* out = buf_.data() + n.off;
    std::uint8_t* m = mask_.data() + n.mask_off;
    for (int i = 0; i < n.len; ++i) {
        m[i] = rng.uniform() >= rate ? 1 : 0;
        out[i] = m[i] ? pa[i] * n.cval : 0.0;
    }
    Var v = push(n);
    check_finite(nodes_.back(), "dropout");
    return v;
}

void Tape::backward(Var root) {
    const Node& rn = node(root);
    if (rn.len != 1) throw DimensionError("backward: root must be 1-dim");
    gbuf_.assign(buf_.size(), 0.0);
    gbuf_[static_cast<std::size_t>(rn.off)] = 1.0;

    for (std::size_t k = nodes_.size(); k-- > 0;) {
        Node& n = nodes_[k];
        const double* g = gbuf_.data() + n.off;
        switch (n.op) {
            case Op::Constant:
                break;
            case Op::Param: {
                n.tensor->ensure_grad();
                for (int i = 0; i < n.len; ++i) n.tensor->grad[i] += g[i];
                break;
            }
            case Op::ParamRow: {
                n.tensor->ensure_grad();
                double* tg = n.tensor->grad.data() +
                             static_cast<std::size_t>(n.aux) * n.len;
                for (int i = 0; i < n.len; ++i) tg[i] += g[i];
                break;
            }
            case Op::Add: {
                double *ga = grd(nodes_[n.a]), *gb = grd(nodes_[n.b]);
                for (int i = 0; i < n.len; ++i) {
                    ga[i] += g[i];
                    gb[i] += g[i];
                }
                break;
            }
            case Op::Sub: {
                double *ga = grd(nodes_[n.a]), *gb = grd(nodes_[n.b]);
                for (int i = 0; i < n.len; ++i) {
                    ga[i] += g[i];
                    gb[i] -= g[i];
                }
                break;
            }
            case Op::Mul: {
                const double *pa = val(nodes_[n.a]), *pb = val(nodes_[n.b]);
                double *ga = grd(nodes_[n.a]), *gb = grd(nodes_[n.b]);
                for (int i = 0; i < n.len; ++i) {
                    ga[i] += pb[i] * g[i];
                    gb[i] += pa[i] * g[i];
                }
                break;
            }
            case Op::Div: {
                const double *pa = val(nodes_[n.a]), *pb = val(nodes_[n.b]);
                double *ga = grd(nodes_[n.a]), *gb = grd(nodes_[n.b]);
                for (int i = 0; i < n.len; ++i) {
                    ga[i] += g[i] / pb[i];
                    gb[i] -= g[i] * pa[i] / (pb[i] * pb[i]);
                }
                break;
            }
            case Op::Scale: {
                double* ga = grd(nodes_[n.a]);
                for (int i = 0; i < n.len; ++i) ga[i] += n.cval * g[i];
                break;
            }
            case Op::ScaleElem: {
                const double w = val(nodes_[n.a])[n.aux];
                const double* pv = val(nodes_[n.b]);
                double* gw = grd(nodes_[n.a]);
                double* gv = grd(nodes_[n.b]);
                double acc = 0.0;
                for (int i = 0; i < n.len; ++i) {
                    gv[i] += w * g[i];
                    acc += pv[i] * g[i];
                }
                gw[n.aux] += acc;
                break;
            }
            case Op::GateMix: {
                const double *pz = val(nodes_[n.a]), *ph = val(nodes_[n.b]),
                             *pc = val(nodes_[n.c3]);
                double *gz = grd(nodes_[n.a]), *gh = grd(nodes_[n.b]),
                       *gc = grd(nodes_[n.c3]);
                for (int i = 0; i < n.len; ++i) {
                    gz[i] += (pc[i] - ph[i]) * g[i];
                    gh[i] += (1.0 - pz[i]) * g[i];
                    gc[i] += pz[i] * g[i];
                }
                break;
            }
            case Op::MatVec:
            case Op::Affine: {
                Tensor& w = *n.tensor;
                const int r = n.len, c = w.cols();
                w.ensure_grad();
                const double* px = val(nodes_[n.a]);
                double* gx = grd(nodes_[n.a]);
                const double* wd = w.values.data();
                double* wg = w.grad.data();
                for (int i = 0; i < r; ++i) {
                    const double gi = g[i];
                    if (gi == 0.0) continue;
                    const double* row = wd + static_cast<std::size_t>(i) * c;
                    double* grow = wg + static_cast<std::size_t>(i) * c;
                    for (int j = 0; j < c; ++j) {
                        grow[j] += gi * px[j];
                        gx[j] += gi * row[j];
                    }
                }
                if (n.op == Op::Affine) {
                    n.bias->ensure_grad();
                    for (int i = 0; i < r; ++i) n.bias->grad[i] += g[i];
                }
                break;
            }
            case Op::Sigmoid: {
                const double* py = val(n);
                double* ga = grd(nodes_[n.a]);
                for (int i = 0; i < n.len; ++i) ga[i] += py[i] * (1.0 - py[i]) * g[i];
                break;
            }
            case Op::Tanh: {
                const double* py = val(n);
                double* ga = grd(nodes_[n.a]);
                for (int i = 0; i < n.len; ++i) ga[i] += (1.0 - py[i] * py[i]) * g[i];
                break;
            }
            case Op::Relu: {
                const double* px = val(nodes_[n.a]);
                double* ga = grd(nodes_[n.a]);
                for (int i = 0; i < n.len; ++i)
                    if (px[i] > 0.0) ga[i] += g[i];
                break;
            }
            case Op::Abs: {
                const double* px = val(nodes_[n.a]);
                double* ga = grd(nodes_[n.a]);
                for (int i = 0; i < n.len; ++i) {
                    if (px[i] > 0.0) ga[i] += g[i];
                    else if (px[i] < 0.0) ga[i] -= g[i];
                }
                break;
            }
            case Op::ClampMin: {
                const double* px = val(nodes_[n.a]);
                double* ga = grd(nodes_[n.a]);
                for (int i = 0; i < n.len; ++i)
                    if (px[i] > n.cval) ga[i] += g[i];
                break;
            }
            case Op::Dot: {
                const double g0 = g[0];
                const double *pa = val(nodes_[n.a]), *pb = val(nodes_[n.b]);
                double *ga = grd(nodes_[n.a]), *gb = grd(nodes_[n.b]);
                const int d = nodes_[n.a].len;
                for (int i = 0; i < d; ++i) {
                    ga[i] += pb[i] * g0;
                    gb[i] += pa[i] * g0;
                }
                break;
            }
            case Op::Norm: {
                const double y = val(n)[0];
                if (y > 1e-300) {
                    const double g0 = g[0] / y;
                    const double* px = val(nodes_[n.a]);
                    double* ga = grd(nodes_[n.a]);
                    const int d = nodes_[n.a].len;
                    for (int i = 0; i < d; ++i) ga[i] += px[i] * g0;
                }
                break;
            }
            case Op::Concat: {
                int pos = 0;
                for (int k2 = 0; k2 < n.args_len; ++k2) {
                    Node& child = nodes_[args_[static_cast<std::size_t>(n.args_off + k2)]];
                    double* gc = grd(child);
                    for (int i = 0; i < child.len; ++i) gc[i] += g[pos + i];
                    pos += child.len;
                }
                break;
            }
            case Op::Softmax: {
                const double* py = val(n);
                double* ga = grd(nodes_[n.a]);
                double inner = 0.0;
                for (int i = 0; i < n.len; ++i) inner += g[i] * py[i];
                for (int i = 0; i < n.len; ++i) ga[i] += py[i] * (g[i] - inner);
                break;
            }
            case Op::CrossEntropy: {
                const double p = val(nodes_[n.a])[n.aux];
                if (p > kLogFloor) grd(nodes_[n.a])[n.aux] -= g[0] / p;
                break;
            }
            case Op::Dropout: {
                const std::uint8_t* m = mask_.data() + n.mask_off;
                double* ga = grd(nodes_[n.a]);
                for (int i = 0; i < n.len; ++i)
                    if (m[i]) ga[i] += n.cval * g[i];
                break;
            }
        }
    }
}

}  // namespace dmbpn
