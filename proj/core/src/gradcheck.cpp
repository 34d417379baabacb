#include "dmbpn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dmbpn {

std::string GradCheckReport::summary() const {
    std::ostringstream os;
    os << (pass ? "PASS" : "FAIL") << " max_rel_error=" << max_rel_error << "\n";
    for (const auto& e : entries)
        os << "  " << (e.pass ? "ok  " : "FAIL") << " " << e.name
           << " rel=" << e.max_rel_error << " coords=" << e.coords_checked << "\n";
    return os.str();
}

GradCheckReport finite_diff_check(const LossFn& loss_fn, ParamRegistry& registry,
                                  const GradCheckOptions& opts) {
    const double f1 = loss_fn(registry, false);
    const double f2 = loss_fn(registry, false);
    if (f1 != f2)
        throw DeterminismError("finite_diff_check: loss function is not deterministic (" +
                               std::to_string(f1) + " vs " + std::to_string(f2) + ")");

    registry.clear_grads();
    loss_fn(registry, true);

    // Snapshot analytic gradients before the perturbed evaluations touch
    // anything.
    std::vector<std::vector<double>> analytic;
    registry.for_each([&](const std::string&, const Tensor& t) {
        analytic.push_back(t.has_grad() ? t.grad : std::vector<double>(t.size(), 0.0));
    });

    GradCheckReport report;
    std::size_t tensor_idx = 0;
    Rng sampler(opts.sample_seed);
    registry.for_each([&](const std::string& name, Tensor& t) {
        const std::vector<double>& g = analytic[tensor_idx++];
        if (!t.trainable) return;

        std::vector<std::size_t> coords(t.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        if (opts.max_coords_per_tensor > 0 && coords.size() > opts.max_coords_per_tensor) {
            sampler.shuffle(coords);
            coords.resize(opts.max_coords_per_tensor);
        }

        GradCheckEntry entry;
        entry.name = name;
        entry.coords_checked = coords.size();
        for (std::size_t c : coords) {
            const double saved = t.values[c];
            t.values[c] = saved + opts.epsilon;
            const double fp = loss_fn(registry, false);
            t.values[c] = saved - opts.epsilon;
            const double fm = loss_fn(registry, false);
            t.values[c] = saved;
            const double numeric = (fp - fm) / (2.0 * opts.epsilon);
            const double denom =
                std::max({std::fabs(g[c]), std::fabs(numeric), opts.denom_floor});
            const double rel = std::fabs(g[c] - numeric) / denom;
            entry.max_rel_error = std::max(entry.max_rel_error, rel);
        }
        entry.pass = entry.max_rel_error < opts.tolerance;
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.pass = report.pass && entry.pass;
        report.entries.push_back(std::move(entry));
    });

    registry.clear_grads();
    return report;
}

}  // namespace dmbpn
