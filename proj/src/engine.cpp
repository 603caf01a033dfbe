#include "pentropy/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pentropy/errors.hpp"
#include "pentropy/estimate.hpp"

namespace pentropy {

const char* join_method_name(JoinMethod m) {
    switch (m) {
        case JoinMethod::exact: return "exact";
        case JoinMethod::sampled: return "sampled";
        case JoinMethod::skipped: return "skipped";
    }
    return "unknown";
}

HjEstimate h_j(const SystemModel& system, const SystemPartition& xi,
               std::span<const std::int64_t> p_j, const EstimationMode& mode) {
    detail::check_iterates(p_j);
    const double inv_len = 1.0 / static_cast<double>(p_j.size());

    if (mode.prefer_exact && system.exact_join_capable()) {
        const LabelDistribution joint = system.exact_join(xi, p_j);
        return {joint.entropy() * inv_len, 0.0, JoinMethod::exact, joint.support_size()};
    }

    const auto counts = system.sampled_counts(xi, p_j, mode.plan);
    const SampledEntropy est = entropy_from_counts(counts, mode.plan.n_samples);
    return {est.value * inv_len, est.std_error * inv_len, JoinMethod::sampled,
            est.observed_support};
}

PEntropyReport h_p(const SystemModel& system, const SystemPartition& xi,
                   const ProgressionSequence& sequence, double tail_fraction,
                   const EstimationMode& mode, bool allow_skips) {
    if (sequence.size() < 2)
        throw InvalidArgumentError("h_p: sequence needs at least 2 entries");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw InvalidArgumentError("h_p: tail_fraction must lie in (0,1]");

    PEntropyReport report;
    report.partition_id = xi.id();
    report.partition_entropy = xi.abstract().entropy();

    EstimationMode per_j_mode = mode;
    for (std::size_t idx = 0; idx < sequence.size(); ++idx) {
        const auto& entry = sequence.entries()[idx];
        const auto p_set = sequence.progression(idx);
        per_j_mode.plan.seed =
            rng::derive_seed(mode.plan.seed, static_cast<std::uint64_t>(entry.j));
        PerJRow row{entry.j, entry.length, 0.0, 0.0, JoinMethod::skipped};
        try {
            const HjEstimate est = h_j(system, xi, p_set, per_j_mode);
            row.h_value = est.value;
            row.std_error = est.std_error;
            row.method = est.method;
        } catch (const CombinatorialExplosionError&) {
            if (!allow_skips) throw;
        } catch (const UnsupportedOperationError&) {
            if (!allow_skips) throw;
        }
        report.per_j.push_back(row);
    }

    // Tail max as the finite-prefix stand-in for limsup_j.
    const std::size_t count = report.per_j.size();
    const auto window =
        static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(count)));
    report.tail_window = std::min(std::max<std::size_t>(window, 1), count);

    double tail_max = 0.0;
    double var_sum = 0.0;
    std::size_t measured = 0;
    for (std::size_t idx = count - report.tail_window; idx < count; ++idx) {
        const auto& row = report.per_j[idx];
        if (row.method == JoinMethod::skipped) continue;
        tail_max = std::max(tail_max, row.h_value);
        var_sum += row.std_error * row.std_error;
        ++measured;
    }
    report.h_p_estimate = tail_max;
    report.pooled_std_error = measured ? std::sqrt(var_sum / static_cast<double>(measured)) : 0.0;
    return report;
}

nlohmann::json PEntropyReport::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : per_j)
        rows.push_back({{"j", row.j},
                        {"L", row.length},
                        {"h_j", row.h_value},
                        {"stderr", row.std_error},
                        {"method", join_method_name(row.method)}});
    return nlohmann::json{{"partition_id", partition_id},
                          {"partition_entropy", partition_entropy},
                          {"per_j", rows},
                          {"tail_window", tail_window},
                          {"h_P_estimate", h_p_estimate},
                          {"pooled_stderr", pooled_std_error}};
}

std::string PEntropyReport::to_csv_rows() const {
    std::ostringstream out;
    out.precision(17);
    for (const auto& row : per_j)
        out << partition_id << ',' << row.j << ',' << row.length << ',' << row.h_value << ','
            << row.std_error << ',' << join_method_name(row.method) << '\n';
    return out.str();
}

SupResult h_p_sup(const SystemModel& system, std::span<const SystemPartition* const> family,
                  const ProgressionSequence& sequence, double tail_fraction,
                  const EstimationMode& mode, bool allow_skips) {
    if (family.empty())
        throw InvalidArgumentError("h_p_sup: empty partition family");
    SupResult result;
    bool first = true;
    for (const auto* xi : family) {
        PEntropyReport report = h_p(system, *xi, sequence, tail_fraction, mode, allow_skips);
        if (first || report.h_p_estimate > result.lower_bound) {
            result.lower_bound = report.h_p_estimate;
            result.witness_id = report.partition_id;
            first = false;
        }
        result.reports.push_back(std::move(report));
    }
    return result;
}

CpeReport cpe_probe(const SystemModel& system, std::span<const SystemPartition* const> family,
                    const ProgressionSequence& sequence, double threshold,
                    double tail_fraction, const EstimationMode& mode, bool allow_skips) {
    if (family.empty())
        throw InvalidArgumentError("cpe_probe: empty partition family");
    for (const auto* xi : family)
        if (!xi->abstract().non_trivial())
            throw InvalidArgumentError("cpe_probe: trivial partition in family: '" + xi->id() +
                                       "' needs at least 2 cells of positive mass");

    CpeReport report;
    for (const auto* xi : family)
        report.reports.push_back(h_p(system, *xi, sequence, tail_fraction, mode, allow_skips));

    if (threshold <= 0.0) {
        // Default: 3 x pooled standard error across the family, separating
        // statistical zero from genuine positivity.
        double var_sum = 0.0;
        for (const auto& r : report.reports)
            var_sum += r.pooled_std_error * r.pooled_std_error;
        threshold = 3.0 * std::sqrt(var_sum / static_cast<double>(report.reports.size()));
    }
    report.threshold = threshold;

    report.all_positive = true;
    bool first = true;
    for (const auto& r : report.reports) {
        if (first || r.h_p_estimate < report.min_h_p) report.min_h_p = r.h_p_estimate;
        first = false;
        if (!(r.h_p_estimate > threshold)) {
            report.all_positive = false;
            report.failing_partitions.push_back(r.partition_id);
        }
    }
    return report;
}

std::vector<std::unique_ptr<SystemPartition>> dyadic_arc_family(int max_depth) {
    if (max_depth < 1)
        throw InvalidArgumentError("dyadic_arc_family: depth must be >= 1");
    std::vector<std::unique_ptr<SystemPartition>> family;
    for (int d = 1; d <= max_depth; ++d)
        family.push_back(std::make_unique<ArcPartition>(ArcPartition::dyadic(d)));
    return family;
}

std::vector<std::unique_ptr<SystemPartition>> mass_family(
    std::span<const std::vector<double>> mass_vectors) {
    std::vector<std::unique_ptr<SystemPartition>> family;
    for (std::size_t i = 0; i < mass_vectors.size(); ++i)
        family.push_back(std::make_unique<MassPartition>(
            "masses" + std::to_string(i), Partition::from_masses(mass_vectors[i])));
    return family;
}

std::vector<const SystemPartition*> family_view(
    const std::vector<std::unique_ptr<SystemPartition>>& family) {
    std::vector<const SystemPartition*> view;
    view.reserve(family.size());
    for (const auto& p : family) view.push_back(p.get());
    return view;
}

}  // namespace pentropy
