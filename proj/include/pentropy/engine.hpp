#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pentropy/psequence.hpp"
#include "pentropy/systems.hpp"

namespace pentropy {

/// How a join distribution was obtained.
enum class JoinMethod { exact, sampled, skipped };
const char* join_method_name(JoinMethod m);

/// One h_j estimate: H(join along P_j) / |P_j|.
struct HjEstimate {
    double value = 0.0;
    double std_error = 0.0;   ///< 0 in exact mode
    JoinMethod method = JoinMethod::exact;
    std::uint64_t support = 0;  ///< observed (sampled) or exact support size
};

/// Join-mode request: exact joins when the system supports them, else the
/// sampled estimator with this plan.
struct EstimationMode {
    bool prefer_exact = true;
    SamplingPlan plan;
};

/// h_j(T, xi) along the progression P_j.
HjEstimate h_j(const SystemModel& system, const SystemPartition& xi,
               std::span<const std::int64_t> p_j, const EstimationMode& mode);

/// Per-entry row of a sequence-entropy report.
struct PerJRow {
    std::int64_t j = 0;
    std::int64_t length = 0;
    double h_value = 0.0;
    double std_error = 0.0;
    JoinMethod method = JoinMethod::exact;
};

/// Sequence-entropy report for one partition: all finite h_j values plus
/// the tail-max stand-in for limsup_j h_j.
struct PEntropyReport {
    std::string partition_id;
    double partition_entropy = 0.0;  ///< H(xi)
    std::vector<PerJRow> per_j;
    std::size_t tail_window = 0;     ///< rows entering the tail max
    double h_p_estimate = 0.0;       ///< max h_j over the tail window
    double pooled_std_error = 0.0;   ///< rms stderr over the tail window

    nlohmann::json to_json() const;
    /// CSV rows "partition_id,j,L,h_j,stderr,method" (no header).
    std::string to_csv_rows() const;
};

/// Runs h_j over every entry of the sequence; h_P is the max over the last
/// ceil(tail_fraction * count) rows.  Entries whose join is unavailable
/// (support cap, missing capability) are recorded as skipped rows rather
/// than aborting the report when `allow_skips` is set.
PEntropyReport h_p(const SystemModel& system, const SystemPartition& xi,
                   const ProgressionSequence& sequence, double tail_fraction,
                   const EstimationMode& mode, bool allow_skips = false);

/// Lower bound for sup_xi h_P(T, xi) over an explicit finite family.
struct SupResult {
    double lower_bound = 0.0;
    std::string witness_id;
    std::vector<PEntropyReport> reports;
};

SupResult h_p_sup(const SystemModel& system, std::span<const SystemPartition* const> family,
                  const ProgressionSequence& sequence, double tail_fraction,
                  const EstimationMode& mode, bool allow_skips = false);

/// Completely-positive-entropy probe: does every family member show
/// h_P above the threshold?  Evidence, not proof.
struct CpeReport {
    bool all_positive = false;
    double min_h_p = 0.0;
    double threshold = 0.0;
    std::vector<std::string> failing_partitions;
    std::vector<PEntropyReport> reports;
};

/// threshold <= 0 requests the default: 3 x pooled standard error across
/// the family's tail windows.
CpeReport cpe_probe(const SystemModel& system, std::span<const SystemPartition* const> family,
                    const ProgressionSequence& sequence, double threshold,
                    double tail_fraction, const EstimationMode& mode,
                    bool allow_skips = false);

/// Family generators matching each system's natural generators.
std::vector<std::unique_ptr<SystemPartition>> dyadic_arc_family(int max_depth);
std::vector<std::unique_ptr<SystemPartition>> mass_family(
    std::span<const std::vector<double>> mass_vectors);

/// Non-owning view helper for the family-based entry points.
std::vector<const SystemPartition*> family_view(
    const std::vector<std::unique_ptr<SystemPartition>>& family);

}  // namespace pentropy
