#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pentropy/systems.hpp"

namespace pentropy {

/// One progression P_j = {j, 2j, ..., L*j}; `length` is L = |P_j|.
struct ProgressionEntry {
    std::int64_t j;
    std::int64_t length;
};

/// The set {j*k : 1 <= k <= length}, strictly increasing.
std::vector<std::int64_t> materialize(std::int64_t j, std::int64_t length);

/// A finite prefix of an increasing-progression sequence: j strictly
/// increasing, L(j) nondecreasing.
class ProgressionSequence {
  public:
    explicit ProgressionSequence(std::vector<ProgressionEntry> entries);

    /// L(j) = j for j = 1..j_max.
    static ProgressionSequence length_equals_j(std::int64_t j_max);
    /// L(j) = 2^j for j = 1..j_max.
    static ProgressionSequence length_powers_of_two(std::int64_t j_max);

    const std::vector<ProgressionEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::vector<std::int64_t> progression(std::size_t index) const;

    nlohmann::json to_json() const;
    static ProgressionSequence from_json(const nlohmann::json& doc);

  private:
    std::vector<ProgressionEntry> entries_;
};

/// Budget for the vanishing-sequence search.
struct SearchBudget {
    bool prefer_exact = true;       ///< use exact joins when the system can
    std::uint64_t n_samples = 200000;
    std::uint64_t seed = 1;
    std::uint64_t support_cap = 1000000;
};

/// One accepted (j, L) with the worst h_j over the partition family.
struct SearchWitness {
    std::int64_t j = 0;
    std::int64_t length = 0;
    double h_value = 0.0;
    double std_error = 0.0;
    std::string partition_id;  ///< the family member attaining the max
    bool exact = false;
};

/// Structured search outcome.  A failed search is a negative result, not an
/// exception: `failures` carries the best h_j achieved for each failed j.
struct VanishingSearchResult {
    bool success = false;
    std::vector<ProgressionEntry> entries;
    std::vector<SearchWitness> witnesses;   ///< one per accepted entry
    std::vector<SearchWitness> failures;    ///< best length tried per failed j

    ProgressionSequence sequence() const { return ProgressionSequence(entries); }
};

/// Searches, for each candidate j, the smallest length (by doubling, then
/// keeping lengths nondecreasing across entries) whose worst-case h_j over
/// the partition family drops below the epsilon schedule.  The caller
/// asserts the system is deterministic (zero entropy); the search itself
/// only measures.
VanishingSearchResult vanishing_sequence_search(
    const SystemModel& system, std::span<const SystemPartition* const> family,
    std::span<const double> epsilon_schedule, std::span<const std::int64_t> j_candidates,
    std::int64_t length_bound, const SearchBudget& budget);

}  // namespace pentropy
