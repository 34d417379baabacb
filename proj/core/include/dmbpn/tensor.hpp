#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dmbpn/error.hpp"

namespace dmbpn {

/// Deterministic random stream. Wraps mt19937_64 but derives all values
/// through our own conversions, so the stream is identical on every platform
/// for a given seed and call sequence (std distributions make no such
/// guarantee).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw DomainError("uniform_int: n must be positive");
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Fisher-Yates shuffle driven by this stream.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_int(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

/// Derives an independent seed for a named sub-stream (sampler, init,
/// dropout, ...) from a base seed. splitmix64 finalizer.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Dense row-major tensor of 64-bit reals with an optional gradient buffer
/// of the same shape.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until first accumulation
    bool trainable = true;

    Tensor() = default;
    explicit Tensor(std::vector<int> shape_in, double fill = 0.0);

    static Tensor zeros(std::vector<int> shape);
    static Tensor uniform(std::vector<int> shape, Rng& rng, double lo, double hi);

    std::size_t size() const { return values.size(); }
    int rows() const;
    int cols() const;

    bool has_grad() const { return !grad.empty(); }
    void ensure_grad();
    void clear_grad() { grad.clear(); }

    /// Validates shape/value consistency and finiteness.
    void check_invariants(const std::string& name = "tensor") const;
};

std::size_t shape_product(const std::vector<int>& shape);

/// Named parameter tensors with stable insertion-order iteration and stable
/// element addresses (code holds Tensor* across training).
class ParamRegistry {
public:
    Tensor& add(const std::string& name, Tensor t);
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const { return tensors_.count(name) > 0; }

    const std::vector<std::string>& names() const { return order_; }
    std::size_t size() const { return order_.size(); }
    std::size_t total_parameters() const;

    void clear_grads();

    template <typename F>
    void for_each(F&& f) {
        for (const auto& n : order_) f(n, tensors_.at(n));
    }
    template <typename F>
    void for_each(F&& f) const {
        for (const auto& n : order_) f(n, tensors_.at(n));
    }

private:
    std::vector<std::string> order_;
    std::map<std::string, Tensor> tensors_;
};

/// Plain SGD: p <- p - lr * grad(p) for every trainable tensor, then clears
/// all gradients. Throws StateError if a trainable tensor has no gradient.
void sgd_step(ParamRegistry& registry, double lr);

}  // namespace dmbpn
