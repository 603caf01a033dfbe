#include "pentropy/partition.hpp"

#include <cmath>
#include <unordered_set>

#include "pentropy/errors.hpp"
#include "pentropy/estimate.hpp"

namespace pentropy {

Partition::Partition(std::vector<std::string> labels, std::vector<double> masses)
    : labels_(std::move(labels)), masses_(std::move(masses)) {
    if (masses_.empty())
        throw InvalidDistributionError("Partition: needs at least one cell");
    if (labels_.size() != masses_.size())
        throw InvalidDistributionError("Partition: label/mass count mismatch");
    double sum = 0.0;
    for (const double m : masses_) {
        if (m < 0.0 || m > 1.0)
            throw InvalidDistributionError("Partition: cell mass " + std::to_string(m) +
                                           " outside [0,1]");
        sum += m;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw InvalidDistributionError("Partition: masses sum to " + std::to_string(sum) +
                                       ", outside 1e-12 of 1");
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_)
        if (!seen.insert(l).second)
            throw InvalidDistributionError("Partition: duplicate label '" + l + "'");
}

Partition Partition::from_masses(std::vector<double> masses) {
    std::vector<std::string> labels;
    labels.reserve(masses.size());
    for (std::size_t i = 0; i < masses.size(); ++i) labels.push_back("c" + std::to_string(i));
    return Partition(std::move(labels), std::move(masses));
}

Partition Partition::uniform(std::size_t cells) {
    return from_masses(std::vector<double>(cells, 1.0 / static_cast<double>(cells)));
}

double Partition::entropy() const { return entropy_nats(masses_); }

bool Partition::non_trivial() const {
    std::size_t positive = 0;
    for (const double m : masses_)
        if (m > 0.0) ++positive;
    return positive >= 2;
}

LabelDistribution::LabelDistribution(std::size_t arity, Map masses)
    : arity_(arity), mass_(std::move(masses)) {
    double sum = 0.0;
    for (const auto& [tuple, m] : mass_) {
        if (tuple.size() != arity_)
            throw InvalidDistributionError("LabelDistribution: tuple arity mismatch");
        if (m < 0.0)
            throw InvalidDistributionError("LabelDistribution: negative mass");
        sum += m;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidDistributionError("LabelDistribution: masses sum to " +
                                       std::to_string(sum) + ", outside 1e-9 of 1");
}

LabelDistribution LabelDistribution::from_counts(std::size_t arity,
                                                 const std::map<Tuple, std::uint64_t>& counts,
                                                 std::uint64_t total) {
    if (total == 0)
        throw InvalidDistributionError("LabelDistribution: zero total count");
    Map m;
    for (const auto& [tuple, c] : counts)
        if (c > 0) m.emplace(tuple, static_cast<double>(c) / static_cast<double>(total));
    return LabelDistribution(arity, std::move(m));
}

double LabelDistribution::mass_of(const Tuple& t) const {
    const auto it = mass_.find(t);
    return it == mass_.end() ? 0.0 : it->second;
}

double LabelDistribution::entropy() const {
    std::vector<double> masses;
    masses.reserve(mass_.size());
    for (const auto& [tuple, m] : mass_) masses.push_back(m);
    return entropy_nats_unchecked(masses);
}

double LabelDistribution::total_variation(const LabelDistribution& other) const {
    double acc = 0.0;
    auto it = mass_.begin();
    auto jt = other.mass_.begin();
    while (it != mass_.end() || jt != other.mass_.end()) {
        if (jt == other.mass_.end() || (it != mass_.end() && it->first < jt->first)) {
            acc += it->second;
            ++it;
        } else if (it == mass_.end() || jt->first < it->first) {
            acc += jt->second;
            ++jt;
        } else {
            acc += std::abs(it->second - jt->second);
            ++it;
            ++jt;
        }
    }
    return 0.5 * acc;
}

}  // namespace pentropy
