#include "pentropy/psequence.hpp"

#include <algorithm>

#include "pentropy/engine.hpp"
#include "pentropy/errors.hpp"

namespace pentropy {

std::vector<std::int64_t> materialize(std::int64_t j, std::int64_t length) {
    if (j < 1 || length < 1)
        throw InvalidArgumentError("materialize: j and length must be >= 1");
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(length));
    for (std::int64_t k = 1; k <= length; ++k) out.push_back(j * k);
    return out;
}

ProgressionSequence::ProgressionSequence(std::vector<ProgressionEntry> entries)
    : entries_(std::move(entries)) {
    if (entries_.empty())
        throw InvalidArgumentError("ProgressionSequence: needs at least one entry");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].j < 1 || entries_[i].length < 1)
            throw InvalidArgumentError("ProgressionSequence: j and L must be >= 1");
        if (i > 0) {
            if (entries_[i].j <= entries_[i - 1].j)
                throw InvalidArgumentError("ProgressionSequence: j must increase strictly");
            if (entries_[i].length < entries_[i - 1].length)
                throw InvalidArgumentError("ProgressionSequence: L(j) must be nondecreasing");
        }
    }
}

ProgressionSequence ProgressionSequence::length_equals_j(std::int64_t j_max) {
    std::vector<ProgressionEntry> entries;
    for (std::int64_t j = 1; j <= j_max; ++j) entries.push_back({j, j});
    return ProgressionSequence(std::move(entries));
}

ProgressionSequence ProgressionSequence::length_powers_of_two(std::int64_t j_max) {
    std::vector<ProgressionEntry> entries;
    for (std::int64_t j = 1; j <= j_max; ++j) entries.push_back({j, std::int64_t{1} << j});
    return ProgressionSequence(std::move(entries));
}

std::vector<std::int64_t> ProgressionSequence::progression(std::size_t index) const {
    const auto& e = entries_.at(index);
    return materialize(e.j, e.length);
}

nlohmann::json ProgressionSequence::to_json() const {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : entries_) entries.push_back({e.j, e.length});
    return nlohmann::json{{"entries", entries}};
}

ProgressionSequence ProgressionSequence::from_json(const nlohmann::json& doc) {
    if (!doc.contains("entries") || !doc["entries"].is_array())
        throw InvalidArgumentError("ProgressionSequence: document needs an 'entries' array");
    std::vector<ProgressionEntry> entries;
    for (const auto& item : doc["entries"]) {
        if (!item.is_array() || item.size() != 2)
            throw InvalidArgumentError("ProgressionSequence: entries must be [j, L] pairs");
        entries.push_back({item[0].get<std::int64_t>(), item[1].get<std::int64_t>()});
    }
    return ProgressionSequence(std::move(entries));
}

VanishingSearchResult vanishing_sequence_search(
    const SystemModel& system, std::span<const SystemPartition* const> family,
    std::span<const double> epsilon_schedule, std::span<const std::int64_t> j_candidates,
    std::int64_t length_bound, const SearchBudget& budget) {
    if (family.empty())
        throw InvalidArgumentError("vanishing_sequence_search: empty partition family");
    if (epsilon_schedule.empty())
        throw InvalidArgumentError("vanishing_sequence_search: empty epsilon schedule");
    if (j_candidates.empty())
        throw InvalidArgumentError("vanishing_sequence_search: no candidate j values");
    if (length_bound < 1)
        throw InvalidArgumentError("vanishing_sequence_search: length bound must be >= 1");

    EstimationMode mode;
    mode.prefer_exact = budget.prefer_exact;
    mode.plan.n_samples = budget.n_samples;
    mode.plan.support_cap = budget.support_cap;

    VanishingSearchResult result;
    result.success = true;

    std::int64_t min_length = 1;  // keeps L(j) nondecreasing across entries
    for (std::size_t idx = 0; idx < j_candidates.size(); ++idx) {
        const std::int64_t j = j_candidates[idx];
        const double epsilon =
            epsilon_schedule[std::min(idx, epsilon_schedule.size() - 1)];

        // Doubling ladder from the previous accepted length, with a final
        // probe at the bound itself.
        std::vector<std::int64_t> ladder;
        for (std::int64_t length = min_length; length < length_bound; length *= 2)
            ladder.push_back(length);
        ladder.push_back(length_bound);

        SearchWitness best{};
        best.j = j;
        bool found = false;
        for (const std::int64_t length : ladder) {
            const auto p_set = materialize(j, length);
            SearchWitness worst{};
            worst.j = j;
            worst.length = length;
            for (const auto* xi : family) {
                mode.plan.seed = rng::derive_seed(budget.seed, static_cast<std::uint64_t>(j));
                const HjEstimate est = h_j(system, *xi, p_set, mode);
                if (est.value >= worst.h_value) {
                    worst.h_value = est.value;
                    worst.std_error = est.std_error;
                    worst.partition_id = xi->id();
                    worst.exact = est.method == JoinMethod::exact;
                }
            }
            if (best.length == 0 || worst.h_value < best.h_value) best = worst;
            if (worst.h_value < epsilon) {
                result.entries.push_back({j, length});
                result.witnesses.push_back(worst);
                min_length = length;
                found = true;
                break;
            }
        }
        if (!found) {
            result.success = false;
            result.failures.push_back(best);
        }
    }
    return result;
}

}  // namespace pentropy
