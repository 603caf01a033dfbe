#include "pentropy/tower.hpp"

#include <algorithm>
#include <cmath>

#include "pentropy/errors.hpp"

namespace pentropy {

namespace {

// Largest strip whose offset is <= level.
std::int64_t strip_of(const std::vector<std::int64_t>& offsets, std::int64_t level) {
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), level);
    return static_cast<std::int64_t>(it - offsets.begin()) - 1;
}

}  // namespace

TowerConstruction::TowerConstruction(double measure_cap) : measure_cap_(measure_cap) {
    heights_.push_back(1);
    widths_.push_back(Rational(1));
    allocated_.push_back(Rational(1));
}

void TowerConstruction::add_stage(const StageSpec& spec) {
    if (spec.cuts < 2)
        throw InvalidArgumentError("add_stage: needs at least 2 cuts");
    if (spec.spacers.size() != static_cast<std::size_t>(spec.cuts))
        throw InvalidArgumentError("add_stage: one spacer count per cut required");
    for (const auto s : spec.spacers)
        if (s < 0) throw InvalidArgumentError("add_stage: negative spacer count");

    const std::int64_t h = heights_.back();
    // Overflow guard before computing the next height.
    double projected = static_cast<double>(h) * static_cast<double>(spec.cuts);
    for (const auto s : spec.spacers) projected += static_cast<double>(s);
    if (projected > 4e18)
        throw StageLimitError("add_stage: height overflow");

    std::vector<std::int64_t> offsets(spec.cuts);
    std::int64_t acc = 0;
    for (std::int64_t i = 0; i < spec.cuts; ++i) {
        offsets[static_cast<std::size_t>(i)] = acc;
        acc += h + spec.spacers[static_cast<std::size_t>(i)];
    }
    const std::int64_t new_height = acc;
    const Rational new_width = widths_.back() / spec.cuts;
    const Rational new_measure = Rational(new_height) * new_width;
    if (static_cast<double>(new_measure) > measure_cap_)
        throw StageLimitError("add_stage: total measure " +
                              std::to_string(static_cast<double>(new_measure)) +
                              " exceeds cap " + std::to_string(measure_cap_));

    std::int64_t spacer_total = 0;
    for (const auto s : spec.spacers) spacer_total += s;

    specs_.push_back(spec);
    strip_offsets_.push_back(std::move(offsets));
    heights_.push_back(new_height);
    widths_.push_back(new_width);
    allocated_.push_back(allocated_.back() + Rational(spacer_total) * new_width);
}

std::int64_t TowerConstruction::height(int stage) const {
    if (stage < 0 || stage > deepest_stage())
        throw InvalidArgumentError("height: stage not built");
    return heights_[static_cast<std::size_t>(stage)];
}

Rational TowerConstruction::level_width(int stage) const {
    if (stage < 0 || stage > deepest_stage())
        throw InvalidArgumentError("level_width: stage not built");
    return widths_[static_cast<std::size_t>(stage)];
}

Rational TowerConstruction::total_measure(int stage) const {
    return Rational(height(stage)) * level_width(stage);
}

std::int64_t TowerConstruction::strip_offset(int stage, std::int64_t strip) const {
    if (stage < 0 || stage >= static_cast<int>(specs_.size()))
        throw InvalidArgumentError("strip_offset: build not present");
    return strip_offsets_[static_cast<std::size_t>(stage)][static_cast<std::size_t>(strip)];
}

TowerInterval TowerConstruction::level_interval(int stage, std::int64_t level) const {
    if (stage < 0 || stage > deepest_stage())
        throw InvalidArgumentError("level_interval: stage not built");
    if (level < 0 || level >= height(stage))
        throw InvalidArgumentError("level_interval: level out of range");
    if (stage == 0) return {Rational(0), Rational(1)};

    const int build = stage - 1;
    const auto& offsets = strip_offsets_[static_cast<std::size_t>(build)];
    const std::int64_t strip = strip_of(offsets, level);
    const std::int64_t local = level - offsets[static_cast<std::size_t>(strip)];
    const std::int64_t inner_height = heights_[static_cast<std::size_t>(build)];
    const Rational w = widths_[static_cast<std::size_t>(stage)];

    if (local < inner_height) {
        // Strip `strip` of the corresponding level one stage up.
        const TowerInterval inner = level_interval(build, local);
        const Rational lo = inner.lo + Rational(strip) * w;
        return {lo, lo + w};
    }

    // Spacer level: fresh interval allocated after everything before it.
    const auto& spec = specs_[static_cast<std::size_t>(build)];
    std::int64_t ordinal = local - inner_height;
    for (std::int64_t t = 0; t < strip; ++t)
        ordinal += spec.spacers[static_cast<std::size_t>(t)];
    const Rational lo = allocated_[static_cast<std::size_t>(build)] + Rational(ordinal) * w;
    return {lo, lo + w};
}

std::vector<std::int64_t> TowerConstruction::lift_levels(
    int stage, std::span<const std::int64_t> levels) const {
    if (stage < 0 || stage >= static_cast<int>(specs_.size()))
        throw NeedsDeeperStageError("lift_levels: stage " + std::to_string(stage + 1) +
                                    " not built");
    const auto& offsets = strip_offsets_[static_cast<std::size_t>(stage)];
    std::vector<std::int64_t> out;
    out.reserve(levels.size() * offsets.size());
    for (const auto off : offsets)
        for (const auto level : levels) out.push_back(off + level);
    std::sort(out.begin(), out.end());
    return out;
}

void TowerConstruction::mark_x(int j, XMarker marker) {
    if (marker.stage < 0 || marker.stage > deepest_stage())
        throw InvalidArgumentError("mark_x: marker stage not built");
    if (marker.levels.empty())
        throw InvalidArgumentError("mark_x: empty level set");
    for (std::size_t i = 0; i < marker.levels.size(); ++i) {
        if (marker.levels[i] < 0 || marker.levels[i] >= height(marker.stage))
            throw InvalidArgumentError("mark_x: level out of range");
        if (i > 0 && marker.levels[i] <= marker.levels[i - 1])
            throw InvalidArgumentError("mark_x: levels must increase strictly");
    }
    x_markers_[j] = std::move(marker);
}

bool TowerConstruction::has_x_marker(int j) const { return x_markers_.count(j) > 0; }

const XMarker& TowerConstruction::x_marker(int j) const {
    const auto it = x_markers_.find(j);
    if (it == x_markers_.end())
        throw InvalidArgumentError("x_marker: no marker for j=" + std::to_string(j));
    return it->second;
}

nlohmann::json TowerConstruction::to_json() const {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& spec : specs_)
        stages.push_back({{"r", spec.cuts}, {"spacers", spec.spacers}});
    nlohmann::json marks = nlohmann::json::array();
    for (const auto& [j, marker] : x_markers_)
        marks.push_back({{"j", j}, {"stage", marker.stage}, {"levels", marker.levels}});
    return nlohmann::json{{"stages", stages}, {"X_marks", marks}};
}

TowerConstruction TowerConstruction::from_json(const nlohmann::json& doc, double measure_cap) {
    TowerConstruction tower(measure_cap);
    for (const auto& stage : doc.at("stages")) {
        StageSpec spec;
        spec.cuts = stage.at("r").get<std::int64_t>();
        spec.spacers = stage.at("spacers").get<std::vector<std::int64_t>>();
        tower.add_stage(spec);
    }
    if (doc.contains("X_marks"))
        for (const auto& mark : doc["X_marks"])
            tower.mark_x(mark.at("j").get<int>(),
                         {mark.at("stage").get<int>(),
                          mark.at("levels").get<std::vector<std::int64_t>>()});
    return tower;
}

Rational position(const TowerConstruction& tower, const OrbitPoint& point) {
    return tower.level_interval(point.stage, point.level).lo + point.offset;
}

OrbitPoint apply_T(const TowerConstruction& tower, OrbitPoint point, std::int64_t steps) {
    if (point.stage < 0 || point.stage > tower.deepest_stage())
        throw InvalidArgumentError("apply_T: point stage not built");
    if (point.level < 0 || point.level >= tower.height(point.stage))
        throw InvalidArgumentError("apply_T: point level out of range");
    if (point.offset < 0 || point.offset >= tower.level_width(point.stage))
        throw InvalidArgumentError("apply_T: offset outside [0, level width)");

    // Re-express the point at the deepest stage; the map is then a plain
    // level shift, and offsets are untouched (equal cuts preserve them).
    while (point.stage < tower.deepest_stage()) {
        const Rational w_next = tower.level_width(point.stage + 1);
        const Rational ratio = point.offset / w_next;
        const std::int64_t strip = (boost::multiprecision::numerator(ratio) /
                                    boost::multiprecision::denominator(ratio))
                                       .convert_to<std::int64_t>();
        point.offset -= Rational(strip) * w_next;
        point.level = tower.strip_offset(point.stage, strip) + point.level;
        point.stage += 1;
    }

    const std::int64_t target = point.level + steps;
    if (target < 0 || target >= tower.height(point.stage))
        throw NeedsDeeperStageError(
            "apply_T: orbit escapes the built region (level " + std::to_string(target) +
            " at stage " + std::to_string(point.stage) + "); build deeper stages");
    point.level = target;
    return point;
}

DisjointnessVerdict check_disjoint(const TowerConstruction& tower, int j,
                                   std::span<const std::int64_t> p_set,
                                   std::size_t level_budget) {
    detail::check_iterates(p_set);
    if (p_set.front() < 0)
        throw InvalidArgumentError("check_disjoint: translates must be nonnegative");
    const std::int64_t max_p = p_set.back();

    int stage;
    std::vector<std::int64_t> levels;
    if (tower.has_x_marker(j)) {
        const auto& marker = tower.x_marker(j);
        stage = marker.stage;
        levels = marker.levels;
    } else {
        // Default: full stage-j tower minus its top max_p levels.
        stage = j;
        if (stage > tower.deepest_stage())
            throw NeedsDeeperStageError("check_disjoint: stage " + std::to_string(stage) +
                                        " not built; build deeper or mark X_j");
        const std::int64_t keep = tower.height(stage) - max_p;
        if (keep <= 0)
            throw NeedsDeeperStageError(
                "check_disjoint: default X_j empty at stage " + std::to_string(stage) +
                "; mark X_j explicitly or build deeper");
        levels.resize(static_cast<std::size_t>(keep));
        for (std::int64_t k = 0; k < keep; ++k) levels[static_cast<std::size_t>(k)] = k;
    }

    // An overlap among levels whose translates stay inside the current
    // stage is already an exact negative verdict; certifying disjointness
    // needs every translate resolved, which may require lifting the level
    // set into deeper stages.
    constexpr std::size_t kMaxWitnesses = 16;
    while (true) {
        const std::int64_t h = tower.height(stage);

        DisjointnessVerdict verdict;
        verdict.stage = stage;
        verdict.disjoint = true;
        // (X + p) and (X + q) share the level x + p exactly when x - (q-p)
        // is marked and the shifted level index stays below the height.
        for (std::size_t a = 0; a < p_set.size(); ++a) {
            for (std::size_t b = a + 1; b < p_set.size(); ++b) {
                const std::int64_t d = p_set[b] - p_set[a];
                std::size_t lo = 0;
                for (const std::int64_t x : levels) {
                    if (x + p_set[a] >= h) break;  // common level x + p_a resolvable
                    while (lo < levels.size() && levels[lo] < x - d) ++lo;
                    if (lo < levels.size() && levels[lo] == x - d) {
                        verdict.disjoint = false;
                        if (verdict.witnesses.size() < kMaxWitnesses) {
                            const std::int64_t common = x + p_set[a];
                            verdict.witnesses.push_back(
                                {p_set[a], p_set[b], common,
                                 tower.level_interval(stage, common)});
                        }
                    }
                }
            }
        }
        if (!verdict.disjoint) return verdict;
        if (levels.back() + max_p < h) return verdict;  // fully resolved, no overlap

        if (stage == tower.deepest_stage())
            throw NeedsDeeperStageError(
                "check_disjoint: translates unresolved at the deepest stage; build deeper");
        if (levels.size() * static_cast<std::size_t>(tower.stage_specs()
                                                         [static_cast<std::size_t>(stage)]
                                                             .cuts) > level_budget)
            throw CombinatorialExplosionError("check_disjoint: level budget exceeded");
        levels = tower.lift_levels(stage, levels);
        stage += 1;
    }
}

SynthesisReport sidon_spacer_synthesis(const ProgressionSequence& sequence, int depth,
                                       const SynthesisOptions& options) {
    if (depth < 1)
        throw InvalidArgumentError("sidon_spacer_synthesis: depth must be >= 1");
    if (sequence.size() < static_cast<std::size_t>(depth))
        throw InvalidArgumentError("sidon_spacer_synthesis: sequence shorter than depth");

    std::vector<std::vector<std::int64_t>> progressions;
    std::int64_t max_p_all = 0;
    for (int n = 0; n < depth; ++n) {
        progressions.push_back(sequence.progression(static_cast<std::size_t>(n)));
        max_p_all = std::max(max_p_all, progressions.back().back());
    }
    const std::int64_t separation = max_p_all + 1;  // minimum level stride G

    int first_failing_j = 1;
    std::string last_reason;

    std::int64_t escalation = 1;
    for (int attempt = 0; attempt <= options.max_escalations; ++attempt, escalation *= 2) {
        auto tower = std::make_shared<TowerConstruction>(options.measure_cap);
        SynthesisReport report;
        report.tower = tower;
        report.escalations_used = attempt;
        report.separation = separation;

        bool attempt_ok = true;
        std::vector<std::int64_t> x_prev;
        for (int n = 1; n <= depth && attempt_ok; ++n) {
            const auto& p_set = progressions[static_cast<std::size_t>(n - 1)];
            const std::int64_t max_p = p_set.back();
            const std::int64_t h_prev = tower->height(n - 1);

            // Spacer module: (max P_n + 1) h_{n-1} scaled, then doubled per
            // escalation so escalations bite even when the scaled base
            // floors at 1.
            const double raw =
                options.initial_scale * static_cast<double>(max_p + 1) *
                static_cast<double>(h_prev);
            const double scaled =
                std::max(1.0, std::ceil(raw)) * static_cast<double>(escalation);
            if (scaled > 2e18) {
                first_failing_j = n;
                last_reason = "spacer module overflow";
                attempt_ok = false;
                break;
            }
            const std::int64_t module = static_cast<std::int64_t>(scaled);

            try {
                tower->add_stage({2, {module, 2 * module}});
            } catch (const StageLimitError& e) {
                // Larger spacers only grow the measure; escalating further
                // cannot recover, so fail out with the cause.
                throw SynthesisFailureError(
                    "sidon_spacer_synthesis: stage limit at j=" + std::to_string(n) + ": " +
                        e.what(),
                    n);
            }

            const std::int64_t h = tower->height(n);
            const std::int64_t top_bound = h - 1 - max_p;

            std::vector<std::int64_t> x_levels;
            if (n == 1) {
                for (std::int64_t level = 0; level <= top_bound; level += separation)
                    x_levels.push_back(level);
            } else {
                // Keep every strip image of X_{n-1} (point-set inclusion
                // X_{n-1} within X_n), then fill spacer zones on a stride.
                const auto& spec = tower->stage_specs()[static_cast<std::size_t>(n - 1)];
                for (std::int64_t strip = 0; strip < spec.cuts; ++strip) {
                    const std::int64_t off = tower->strip_offset(n - 1, strip);
                    for (const auto level : x_prev) x_levels.push_back(off + level);
                }
                if (!x_levels.empty() && x_levels.back() > top_bound) {
                    first_failing_j = n;
                    last_reason = "strip image of X_{n-1} exceeds the translate bound";
                    attempt_ok = false;
                    break;
                }

                // Candidate extras per spacer zone, keeping a `separation`
                // buffer on both sides of the zone.
                std::vector<std::pair<std::int64_t, std::int64_t>> zones;
                std::int64_t candidates = 0;
                for (std::int64_t strip = 0; strip < spec.cuts; ++strip) {
                    const std::int64_t off = tower->strip_offset(n - 1, strip);
                    const std::int64_t zone_lo = off + h_prev + separation;
                    const std::int64_t zone_end =
                        off + h_prev + spec.spacers[static_cast<std::size_t>(strip)] - 1;
                    const std::int64_t zone_hi = std::min(zone_end - separation, top_bound);
                    if (zone_hi >= zone_lo) {
                        zones.emplace_back(zone_lo, zone_hi);
                        candidates += (zone_hi - zone_lo) / separation + 1;
                    }
                }
                std::int64_t stride = separation;
                const std::int64_t room =
                    static_cast<std::int64_t>(options.level_budget) -
                    static_cast<std::int64_t>(x_levels.size());
                if (room > 0 && candidates > room)
                    stride = separation * ((candidates + room - 1) / room);
                if (room > 0)
                    for (const auto& [lo, hi] : zones)
                        for (std::int64_t level = lo; level <= hi; level += stride)
                            x_levels.push_back(level);
                std::sort(x_levels.begin(), x_levels.end());
            }

            if (x_levels.empty()) {
                first_failing_j = n;
                last_reason = "designed X_j empty";
                attempt_ok = false;
                break;
            }

            tower->mark_x(n, {n, x_levels});
            const DisjointnessVerdict verdict = check_disjoint(*tower, n, p_set);
            SynthesisStageNote note;
            note.j = n;
            note.spacer_module = module;
            note.marker_levels = static_cast<std::int64_t>(x_levels.size());
            note.marker_measure =
                (Rational(static_cast<std::int64_t>(x_levels.size())) * tower->level_width(n))
                    .str();
            note.disjoint = verdict.disjoint;
            report.notes.push_back(note);
            if (!verdict.disjoint) {
                first_failing_j = n;
                last_reason = "exact checker found overlapping translates";
                attempt_ok = false;
                break;
            }
            x_prev = std::move(x_levels);
        }

        if (attempt_ok) return report;
    }

    throw SynthesisFailureError("sidon_spacer_synthesis: failed at j=" +
                                    std::to_string(first_failing_j) + " (" + last_reason +
                                    ") after exhausting escalations",
                                first_failing_j);
}

std::vector<std::int64_t> marker_coordinates(const TowerConstruction& tower, int j,
                                             std::size_t count) {
    const auto& marker = tower.x_marker(j);
    if (count == 0 || count > marker.levels.size())
        throw InvalidArgumentError("marker_coordinates: count outside [1, |X_j|]");
    return std::vector<std::int64_t>(marker.levels.begin(),
                                     marker.levels.begin() + static_cast<std::ptrdiff_t>(count));
}

// --- LevelPartition ---------------------------------------------------------

LevelPartition::LevelPartition(std::string id, int stage,
                               std::vector<std::uint32_t> label_of_level)
    : id_(std::move(id)), stage_(stage), labels_(std::move(label_of_level)), partition_([&] {
          if (labels_.empty())
              throw InvalidArgumentError("LevelPartition: empty level labeling");
          std::uint32_t cells = 0;
          for (const auto l : labels_) cells = std::max(cells, l + 1);
          std::vector<double> masses(cells, 0.0);
          const double unit = 1.0 / static_cast<double>(labels_.size());
          for (const auto l : labels_) masses[l] += unit;
          return Partition::from_masses(std::move(masses));
      }()) {}

LevelPartition LevelPartition::halves(int stage, std::int64_t height) {
    std::vector<std::uint32_t> labels(static_cast<std::size_t>(height), 0);
    for (std::int64_t k = height / 2; k < height; ++k)
        labels[static_cast<std::size_t>(k)] = 1;
    return LevelPartition("tower_halves", stage, std::move(labels));
}

// --- RankOneSystem -----------------------------------------------------------

RankOneSystem::RankOneSystem(std::shared_ptr<const TowerConstruction> tower, int stage,
                             std::int64_t exact_height_bound)
    : tower_(std::move(tower)), stage_(stage), exact_height_bound_(exact_height_bound) {
    if (!tower_) throw InvalidArgumentError("RankOneSystem: null tower");
    height_ = tower_->height(stage_);
}

bool RankOneSystem::exact_join_capable() const { return height_ <= exact_height_bound_; }

namespace {

const LevelPartition& expect_level_partition(const SystemPartition& xi, int stage,
                                             std::int64_t height) {
    const auto* lp = dynamic_cast<const LevelPartition*>(&xi);
    if (!lp)
        throw UnsupportedOperationError("rank_one: partition '" + xi.id() +
                                        "' is not a LevelPartition");
    if (lp->stage() != stage ||
        lp->label_of_level().size() != static_cast<std::size_t>(height))
        throw InvalidArgumentError("rank_one: partition built for another stage");
    return *lp;
}

}  // namespace

LabelDistribution RankOneSystem::exact_join(const SystemPartition& xi,
                                            std::span<const std::int64_t> iterates) const {
    detail::check_iterates(iterates);
    if (!exact_join_capable())
        throw UnsupportedOperationError("rank_one: stage height " + std::to_string(height_) +
                                        " beyond the exact-join bound");
    const auto& lp = expect_level_partition(xi, stage_, height_);
    const auto& labels = lp.label_of_level();

    std::map<LabelDistribution::Tuple, std::uint64_t> counts;
    LabelDistribution::Tuple tuple(iterates.size());
    for (std::int64_t k = 0; k < height_; ++k) {
        for (std::size_t i = 0; i < iterates.size(); ++i) {
            const std::int64_t shifted = ((k + iterates[i]) % height_ + height_) % height_;
            tuple[i] = labels[static_cast<std::size_t>(shifted)];
        }
        ++counts[tuple];
    }
    return LabelDistribution::from_counts(iterates.size(), counts,
                                          static_cast<std::uint64_t>(height_));
}

namespace {

class RankOneTupleSampler final : public TupleSampler {
  public:
    RankOneTupleSampler(const std::vector<std::uint32_t>& labels,
                        std::vector<std::int64_t> iterates)
        : labels_(labels), iterates_(std::move(iterates)) {}
    void draw(rng::Stream& stream, std::span<std::uint32_t> out) override {
        const auto height = static_cast<std::int64_t>(labels_.size());
        const auto k = static_cast<std::int64_t>(stream.below(labels_.size()));
        for (std::size_t i = 0; i < iterates_.size(); ++i) {
            const std::int64_t shifted = ((k + iterates_[i]) % height + height) % height;
            out[i] = labels_[static_cast<std::size_t>(shifted)];
        }
    }

  private:
    const std::vector<std::uint32_t>& labels_;
    std::vector<std::int64_t> iterates_;
};

}  // namespace

std::unique_ptr<TupleSampler> RankOneSystem::tuple_sampler(
    const SystemPartition& xi, std::span<const std::int64_t> iterates) const {
    detail::check_iterates(iterates);
    const auto& lp = expect_level_partition(xi, stage_, height_);
    return std::make_unique<RankOneTupleSampler>(
        lp.label_of_level(), std::vector<std::int64_t>(iterates.begin(), iterates.end()));
}

}  // namespace pentropy
