// The two evaluation metrics. Both use the SIGNED maximum of the
// reference (and prediction), exactly as the error definitions are
// written, not the max-abs peak used by preprocessing.
//
//   eps_p = (1/N) sum_i |max(pred_i) - max(ref_i)| / max(ref_i)
//   eps_s = (1/N) sum_i [ sum_j |pred_ij - ref_ij| ] / max(ref_i)

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "shockcal/errors.hpp"
#include "shockcal/signal.hpp"

namespace shockcal {

// eps_p, eps_s and the per-signal errors they average, for one method on
// one dataset split.
struct EvalReport {
    double eps_p = 0.0;
    double eps_s = 0.0;
    std::vector<double> per_signal_peak_err;
    std::vector<double> per_signal_shape_err;
    std::size_t n = 0;
};

inline EvalReport evaluate(const std::vector<ShockSignal>& preds,
                           const std::vector<ShockSignal>& refs) {
    if (preds.size() != refs.size() || preds.empty())
        throw MismatchedSets("evaluate: prediction/reference counts differ or are empty");

    EvalReport report;
    report.n = preds.size();
    report.per_signal_peak_err.reserve(report.n);
    report.per_signal_shape_err.reserve(report.n);

    double peak_sum = 0.0;
    double shape_sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto& p = preds[i].samples;
        const auto& r = refs[i].samples;
        if (p.size() != r.size() || p.empty())
            throw MismatchedSets("evaluate: signal lengths differ");

        const double ref_max = *std::max_element(r.begin(), r.end());
        if (!(ref_max > 0.0))
            throw NonPositiveReferencePeak("evaluate: reference signed max must be positive");
        const double pred_max = *std::max_element(p.begin(), p.end());

        const double peak_err = std::fabs(pred_max - ref_max) / ref_max;
        double abs_sum = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) abs_sum += std::fabs(p[j] - r[j]);
        const double shape_err = abs_sum / ref_max;

        report.per_signal_peak_err.push_back(peak_err);
        report.per_signal_shape_err.push_back(shape_err);
        peak_sum += peak_err;
        shape_sum += shape_err;
    }
    report.eps_p = peak_sum / static_cast<double>(report.n);
    report.eps_s = shape_sum / static_cast<double>(report.n);
    return report;
}

inline double metric_eps_p(const std::vector<ShockSignal>& preds,
                           const std::vector<ShockSignal>& refs) {
    return evaluate(preds, refs).eps_p;
}

inline double metric_eps_s(const std::vector<ShockSignal>& preds,
                           const std::vector<ShockSignal>& refs) {
    return evaluate(preds, refs).eps_s;
}

}  // namespace shockcal
