#ifndef RECALL_GRADIENT_CHECK_HPP
#define RECALL_GRADIENT_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "encoder.hpp"
#include "errors.hpp"
#include "losses.hpp"

namespace recall
{

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t parameters_checked = 0;
};

/// Central finite differences over every parameter, compared against
/// total_loss gradients. Relative error uses max(|analytic|, |numeric|, 1e-8)
/// as denominator.
inline GradientCheckResult finite_difference_report(const EncoderParameters& params, const LossBatch& batch,
                                                    const LossConfig& config, double step)
{
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw ArgumentError("finite_difference_check: step must be positive");
    }
    const Gradients analytic = total_loss(params, batch, config);

    // The numeric side runs in extended precision so that (L+ - L-) / 2h is
    // not swamped by double rounding on tiny gradient entries.
    using Extended = long double;
    auto probe = cast_parameters<Extended>(params);
    std::vector<Extended*> probe_refs;
    for_each_parameter(probe, [&probe_refs](Extended& x) { probe_refs.push_back(&x); });
    std::vector<double> grads;
    grads.reserve(probe_refs.size());
    for_each_parameter(analytic.grad, [&grads](const double& g) { grads.push_back(g); });

    GradientCheckResult result;
    result.parameters_checked = probe_refs.size();
    const Extended h = step;
    for (std::size_t k = 0; k < probe_refs.size(); ++k) {
        Extended* p = probe_refs[k];
        const Extended original = *p;
        *p = original + h;
        const Extended plus = batch_loss(probe, batch, config).total;
        *p = original - h;
        const Extended minus = batch_loss(probe, batch, config).total;
        *p = original;

        const double numeric = static_cast<double>((plus - minus) / (2 * h));
        const double denom = std::max({std::abs(grads[k]), std::abs(numeric), 1e-8});
        const double err = std::abs(grads[k] - numeric) / denom;
        if (err > result.max_relative_error) {
            result.max_relative_error = err;
            result.worst_index = k;
            result.worst_analytic = grads[k];
            result.worst_numeric = numeric;
        }
    }
    return result;
}

inline double finite_difference_check(const EncoderParameters& params, const LossBatch& batch,
                                      const LossConfig& config, double step)
{
    return finite_difference_report(params, batch, config, step).max_relative_error;
}

} // namespace recall

#endif
