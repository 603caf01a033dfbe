#pragma once

#include <cstdint>
#include <span>

namespace pentropy {

/// Shannon entropy -sum p ln p in nats with the continuity convention
/// 0 ln 0 = 0.  Validates: every mass nonnegative, sum within 1e-9 of 1.
/// Result clamped into [0, ln n].
double entropy_nats(std::span<const double> masses);

/// Same computation without validation; used on internal distributions that
/// are exact by construction.  Summation is Kahan-compensated so that
/// large-support joins keep near-ulp accuracy.
double entropy_nats_unchecked(std::span<const double> masses);

/// Plug-in entropy of an empirical distribution given occupancy counts.
struct SampledEntropy {
    double value;                  ///< Miller-Madow corrected estimate, nats
    double std_error;              ///< estimator standard error, nats
    std::uint64_t observed_support;///< number of nonzero counts
};

/// Entropy estimate from counts out of n samples.  Empty cells contribute 0.
/// The Miller-Madow correction (observed_support - 1) / (2n) is added to the
/// plug-in value.  The standard error combines the delta-method first-order
/// term with the chi-square second-order term, which keeps the error bar
/// honest near uniform distributions where the first-order term vanishes.
SampledEntropy entropy_from_counts(std::span<const std::uint64_t> counts, std::uint64_t n_samples);

}  // namespace pentropy
