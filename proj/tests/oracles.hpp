#pragma once

// Independent oracles for the test and acceptance suites. These deliberately
// avoid the implementation paths they check: the gradient oracle only calls
// sample_loss (forward path), and the selection oracle is a full stable sort
// rather than a partial selection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "prunebench/model.hpp"
#include "prunebench/pruner.hpp"

namespace oracles {

inline double mean_batch_loss(const prunebench::ModelParams& params,
                              std::span<const double> features, std::size_t feature_dim,
                              std::span<const int> labels) {
    double sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        sum += prunebench::sample_loss(
            params, features.subspan(i * feature_dim, feature_dim), labels[i]);
    }
    return sum / static_cast<double>(labels.size());
}

/// Central finite differences of the mean batch loss w.r.t. every weight.
inline prunebench::Gradient finite_diff_grad(const prunebench::ModelParams& params,
                                             std::span<const double> features,
                                             std::size_t feature_dim,
                                             std::span<const int> labels, double step) {
    prunebench::Gradient grad(params.weights.size(), 0.0);
    prunebench::ModelParams probe = params;
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
        probe.weights[i] = params.weights[i] + step;
        const double up = mean_batch_loss(probe, features, feature_dim, labels);
        probe.weights[i] = params.weights[i] - step;
        const double down = mean_batch_loss(probe, features, feature_dim, labels);
        probe.weights[i] = params.weights[i];
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

/// Bounded relative error |a-b| / max(1, |a|, |b|), the usual grad-check metric.
inline double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

inline double max_rel_err(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i]));
    return worst;
}

/// Full stable sort by score descending (stability keeps ascending-index tie
/// order), then a prefix take of floor(rho * N).
inline prunebench::SelectionMask selection_oracle(std::span<const double> scores,
                                                  double rho) {
    const std::size_t n = scores.size();
    const auto m = static_cast<std::size_t>(std::floor(rho * static_cast<double>(n)));
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&scores](std::uint32_t a, std::uint32_t b) {
        return scores[a] > scores[b];
    });
    prunebench::SelectionMask mask;
    mask.retained.assign(n, 0);
    mask.M = m;
    for (std::size_t i = 0; i < m; ++i) mask.retained[idx[i]] = 1;
    return mask;
}

inline std::vector<std::size_t> retained_indices(const prunebench::SelectionMask& mask) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mask.retained.size(); ++i) {
        if (mask.retained[i]) out.push_back(i);
    }
    return out;
}

}  // namespace oracles
