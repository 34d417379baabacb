#include "dmbpn/tensor.hpp"

#include <cmath>

namespace dmbpn {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + stream * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::size_t shape_product(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor extents must be positive");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape_in, double fill)
    : shape(std::move(shape_in)), values(shape_product(shape), fill) {}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape), 0.0); }

Tensor Tensor::uniform(std::vector<int> shape, Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    for (double& v : t.values) v = rng.uniform(lo, hi);
    return t;
}

int Tensor::rows() const {
    if (shape.size() != 2) throw DimensionError("rows(): tensor is not 2-D");
    return shape[0];
}

int Tensor::cols() const {
    if (shape.size() != 2) throw DimensionError("cols(): tensor is not 2-D");
    return shape[1];
}

void Tensor::ensure_grad() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
}

void Tensor::check_invariants(const std::string& name) const {
    if (shape_product(shape) != values.size())
        throw DimensionError(name + ": shape does not match value count");
    if (!grad.empty() && grad.size() != values.size())
        throw DimensionError(name + ": gradient shape does not match values");
    for (double v : values)
        if (!std::isfinite(v)) throw NumericError(name + ": non-finite value");
}

Tensor& ParamRegistry::add(const std::string& name, Tensor t) {
    if (tensors_.count(name)) throw DomainError("duplicate parameter name: " + name);
    t.check_invariants(name);
    order_.push_back(name);
    return tensors_.emplace(name, std::move(t)).first->second;
}

Tensor& ParamRegistry::get(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw StateError("unknown parameter: " + name);
    return it->second;
}

const Tensor& ParamRegistry::get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw StateError("unknown parameter: " + name);
    return it->second;
}

std::size_t ParamRegistry::total_parameters() const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors_) n += t.size();
    return n;
}

void ParamRegistry::clear_grads() {
    for (auto& [name, t] : tensors_) t.clear_grad();
}

void sgd_step(ParamRegistry& registry, double lr) {
    registry.for_each([lr](const std::string& name, Tensor& t) {
        if (!t.trainable) return;
        if (!t.has_grad())
            throw StateError("sgd_step: missing gradient for trainable tensor '" + name + "'");
        for (std::size_t i = 0; i < t.values.size(); ++i) {
            double v = t.values[i] - lr * t.grad[i];
            if (!std::isfinite(v))
                throw NumericError("sgd_step: non-finite update for '" + name + "'");
            t.values[i] = v;
        }
    });
    registry.clear_grads();
}

}  // namespace dmbpn
