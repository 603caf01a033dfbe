#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pentropy/precise.hpp"
#include "pentropy/psequence.hpp"
#include "pentropy/systems.hpp"

namespace pentropy {

/// Half-open interval [lo, hi) with exact rational endpoints.
struct TowerInterval {
    Rational lo;
    Rational hi;
    Rational width() const { return hi - lo; }
};

/// One cutting-and-stacking step: cut the current tower into `cuts` equal
/// columns and put spacers[i] fresh spacer levels on top of column i.
struct StageSpec {
    std::int64_t cuts = 2;
    std::vector<std::int64_t> spacers;
};

/// Designated sub-tower (union of levels of one stage).
struct XMarker {
    int stage = 0;
    std::vector<std::int64_t> levels;  ///< strictly increasing
};

/// Infinite-measure rank-one construction built from the unit interval.
/// Stage 0 is the single level [0,1); stage n+1 has height
/// h_{n+1} = r_n h_n + sum_i s_{n,i}.  Every level of every stage is a
/// single rational interval; levels are evaluated lazily through the strip
/// structure, so deep stages stay cheap to build.  Spacer levels take fresh
/// intervals past everything allocated so far, which is what makes the
/// total measure grow without bound.
class TowerConstruction {
  public:
    explicit TowerConstruction(double measure_cap = 1e6);

    /// Appends one stage.  Throws StageLimitError when the new total
    /// measure would exceed the cap (or heights would overflow).
    void add_stage(const StageSpec& spec);

    /// Deepest built stage index (0 = just the base).
    int deepest_stage() const { return static_cast<int>(heights_.size()) - 1; }
    std::int64_t height(int stage) const;
    Rational level_width(int stage) const;
    /// Total measure of the stage-n tower (= h_n * w_n).
    Rational total_measure(int stage) const;
    const std::vector<StageSpec>& stage_specs() const { return specs_; }

    /// Exact interval of one level.
    TowerInterval level_interval(int stage, std::int64_t level) const;

    /// Level indices of the same point set one stage deeper (all strips).
    std::vector<std::int64_t> lift_levels(int stage,
                                          std::span<const std::int64_t> levels) const;

    /// Start offset of strip `i` of stage `stage` inside stage+1.
    std::int64_t strip_offset(int stage, std::int64_t strip) const;

    void mark_x(int j, XMarker marker);
    bool has_x_marker(int j) const;
    const XMarker& x_marker(int j) const;
    const std::map<int, XMarker>& x_markers() const { return x_markers_; }

    nlohmann::json to_json() const;
    static TowerConstruction from_json(const nlohmann::json& doc, double measure_cap = 1e6);

  private:
    double measure_cap_;
    std::vector<StageSpec> specs_;                       // build n -> n+1
    std::vector<std::int64_t> heights_;                  // h_0..h_N
    std::vector<Rational> widths_;                       // w_0..w_N
    std::vector<std::vector<std::int64_t>> strip_offsets_;  // per build
    std::vector<Rational> allocated_;                    // measure allocated before build n
    std::map<int, XMarker> x_markers_;
};

/// Point identified by (stage, level, offset within the level).
struct OrbitPoint {
    int stage = 0;
    std::int64_t level = 0;
    Rational offset = 0;
};

/// Absolute coordinate of the point on the line (interval.lo + offset).
Rational position(const TowerConstruction& tower, const OrbitPoint& point);

/// Exact image under `steps` applications of the tower map.  The point is
/// first re-expressed at the deepest stage; the orbit must stay within it,
/// otherwise NeedsDeeperStageError tells the caller to build further.
OrbitPoint apply_T(const TowerConstruction& tower, OrbitPoint point, std::int64_t steps);

/// Exact overlap evidence for one pair of translates.
struct OverlapWitness {
    std::int64_t p = 0;
    std::int64_t q = 0;
    std::int64_t level = 0;  ///< common level index at `stage`
    TowerInterval where;
};

struct DisjointnessVerdict {
    bool disjoint = false;
    int stage = 0;  ///< stage at which the sets were resolved
    std::vector<OverlapWitness> witnesses;
};

/// Exact verdict on whether the translates T^p X_j, p in p_set, are
/// pairwise disjoint.  Uses the stored marker for j, or the default marker
/// (full stage-j tower minus its top max(p_set) levels) when none is set.
/// Level sets are lifted to deeper stages until every translate resolves.
DisjointnessVerdict check_disjoint(const TowerConstruction& tower, int j,
                                   std::span<const std::int64_t> p_set,
                                   std::size_t level_budget = std::size_t{1} << 24);

struct SynthesisOptions {
    double measure_cap = 1e6;
    int max_escalations = 6;       ///< spacer scale doublings allowed
    double initial_scale = 1.0;    ///< scales the starting spacer module
    std::size_t level_budget = std::size_t{1} << 21;  ///< max |X_j| levels
};

struct SynthesisStageNote {
    int j = 0;
    std::int64_t spacer_module = 0;   ///< M_n actually used
    std::int64_t marker_levels = 0;   ///< |X_j|
    std::string marker_measure;       ///< exact rational, as string
    bool disjoint = false;
};

struct SynthesisReport {
    std::shared_ptr<TowerConstruction> tower;
    int escalations_used = 0;
    std::int64_t separation = 0;      ///< minimum level stride G
    std::vector<SynthesisStageNote> notes;
};

/// Builds cuts/spacers and X_j markers such that check_disjoint passes for
/// every j <= depth of the sequence.  Spacer rule: r_n = 2,
/// s_{n,i} = i * M_n with M_n about (max P_n + 1) h_{n-1}, escalated by
/// doubling whenever the exact checker rejects the design.  The
/// post-condition is verified per stage, never assumed.
SynthesisReport sidon_spacer_synthesis(const ProgressionSequence& sequence, int depth,
                                       const SynthesisOptions& options = {});

/// Exports the first `count` marked levels of X_j as trajectory coordinate
/// indices: the level separation certified by check_disjoint means the
/// translated coordinate sets {c + p}, p in P_j, never collide, which is
/// the coordinate design a cylinder partition needs.
std::vector<std::int64_t> marker_coordinates(const TowerConstruction& tower, int j,
                                             std::size_t count);

/// Partition of one stage's levels into labeled groups.
class LevelPartition final : public SystemPartition {
  public:
    LevelPartition(std::string id, int stage, std::vector<std::uint32_t> label_of_level);

    const Partition& abstract() const override { return partition_; }
    const std::string& id() const override { return id_; }
    int stage() const { return stage_; }
    const std::vector<std::uint32_t>& label_of_level() const { return labels_; }

    /// Two groups: lower half / upper half of the tower.
    static LevelPartition halves(int stage, std::int64_t height);

  private:
    std::string id_;
    int stage_;
    std::vector<std::uint32_t> labels_;
    Partition partition_;
};

/// Probability-space stand-in for the rank-one map: the cyclic tower
/// approximation at a fixed stage (levels shift up by one, the top level
/// returns to the base).  This periodic approximation is exactly measure
/// preserving, so joins are exact; it agrees with the rank-one map except
/// on orbits through the top level.
class RankOneSystem final : public SystemModel {
  public:
    RankOneSystem(std::shared_ptr<const TowerConstruction> tower, int stage,
                  std::int64_t exact_height_bound = std::int64_t{1} << 22);

    std::string kind() const override { return "rank_one"; }
    bool exact_join_capable() const override;
    LabelDistribution exact_join(const SystemPartition& xi,
                                 std::span<const std::int64_t> iterates) const override;
    std::unique_ptr<TupleSampler> tuple_sampler(
        const SystemPartition& xi, std::span<const std::int64_t> iterates) const override;

    int stage() const { return stage_; }
    std::int64_t height() const { return height_; }

  private:
    std::shared_ptr<const TowerConstruction> tower_;
    int stage_;
    std::int64_t height_;
    std::int64_t exact_height_bound_;
};

}  // namespace pentropy
