#include "pentropy/estimate.hpp"

#include <cmath>

#include "pentropy/errors.hpp"

namespace pentropy {

namespace {

// Kahan-compensated accumulation of -sum p ln p.
double neg_plogp_sum(std::span<const double> masses) {
    double sum = 0.0, comp = 0.0;
    for (const double p : masses) {
        if (p <= 0.0) continue;
        const double term = -p * std::log(p);
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace

double entropy_nats_unchecked(std::span<const double> masses) {
    double h = neg_plogp_sum(masses);
    if (h < 0.0) h = 0.0;
    return h;
}

double entropy_nats(std::span<const double> masses) {
    if (masses.empty())
        throw InvalidDistributionError("entropy: empty mass vector");
    double sum = 0.0;
    for (const double p : masses) {
        if (p < 0.0)
            throw InvalidDistributionError("entropy: negative mass " + std::to_string(p));
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidDistributionError("entropy: masses sum to " + std::to_string(sum) +
                                       ", outside 1e-9 of 1");
    double h = entropy_nats_unchecked(masses);
    const double h_max = std::log(static_cast<double>(masses.size()));
    if (h > h_max) h = h_max;
    return h;
}

SampledEntropy entropy_from_counts(std::span<const std::uint64_t> counts, std::uint64_t n_samples) {
    if (n_samples == 0)
        throw InvalidDistributionError("entropy_from_counts: zero samples");

    const double n = static_cast<double>(n_samples);
    double h_sum = 0.0, h_comp = 0.0;
    double m2 = 0.0;  // sum p (ln p)^2
    std::uint64_t observed = 0;
    for (const std::uint64_t c : counts) {
        if (c == 0) continue;
        ++observed;
        const double p = static_cast<double>(c) / n;
        const double lp = std::log(p);
        const double term = -p * lp;
        const double y = term - h_comp;
        const double t = h_sum + y;
        h_comp = (t - h_sum) - y;
        h_sum = t;
        m2 += p * lp * lp;
    }
    double plug_in = h_sum < 0.0 ? 0.0 : h_sum;

    const double k = static_cast<double>(observed);
    const double corrected = plug_in + (k - 1.0) / (2.0 * n);

    double var1 = m2 - plug_in * plug_in;
    if (var1 < 0.0) var1 = 0.0;
    const double var = var1 / n + (k - 1.0) / (2.0 * n * n);
    return {corrected, std::sqrt(var), observed};
}

}  // namespace pentropy
