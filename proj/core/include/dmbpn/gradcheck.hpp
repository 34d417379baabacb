#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dmbpn/tensor.hpp"

namespace dmbpn {

/// Scalar loss over a registry. When `with_grad` is true the callee must also
/// accumulate analytic gradients into the registry tensors (typically by
/// running a tape backward). The function must be deterministic given the
/// registry contents.
using LossFn = std::function<double(ParamRegistry&, bool with_grad)>;

struct GradCheckOptions {
    double epsilon = 1e-5;
    double tolerance = 1e-4;
    /// Coordinates checked per tensor; larger tensors are subsampled
    /// deterministically. 0 means every coordinate.
    std::size_t max_coords_per_tensor = 0;
    std::uint64_t sample_seed = 0x5eedULL;
    /// Relative-error denominator floor; differences below tolerance*floor
    /// are treated as noise.
    double denom_floor = 1e-3;
};

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t coords_checked = 0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
    bool pass = true;
    std::string summary() const;
};

/// Central-difference check of analytic gradients, per trainable tensor:
/// rel = |analytic - (f(p+eps)-f(p-eps))/2eps| / max(|analytic|, |numeric|, floor).
///
/// Evaluates the loss twice up front and throws DeterminismError if the two
/// values differ.
GradCheckReport finite_diff_check(const LossFn& loss_fn, ParamRegistry& registry,
                                  const GradCheckOptions& opts = {});

}  // namespace dmbpn
