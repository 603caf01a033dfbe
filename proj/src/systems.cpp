#include "pentropy/systems.hpp"

#include <algorithm>
#include <cmath>

#include "pentropy/errors.hpp"

namespace pentropy {

namespace detail {

void check_iterates(std::span<const std::int64_t> iterates) {
    if (iterates.empty())
        throw InvalidArgumentError("iterate set must be nonempty");
    for (std::size_t i = 1; i < iterates.size(); ++i)
        if (iterates[i] <= iterates[i - 1])
            throw InvalidArgumentError("iterates must be strictly increasing");
}

std::optional<std::uint64_t> packed_support(std::size_t cells, std::size_t arity,
                                            std::uint64_t cap) {
    std::uint64_t support = 1;
    for (std::size_t i = 0; i < arity; ++i) {
        if (support > cap / cells) return std::nullopt;
        support *= cells;
        if (support > cap) return std::nullopt;
    }
    return support;
}

LabelDistribution::Tuple unpack_tuple(std::uint64_t packed, std::size_t cells,
                                      std::size_t arity) {
    LabelDistribution::Tuple t(arity);
    for (std::size_t k = 0; k < arity; ++k) {
        t[k] = static_cast<std::uint32_t>(packed % cells);
        packed /= cells;
    }
    return t;
}

}  // namespace detail

namespace {

template <typename Flavor>
const Flavor& expect_flavor(const SystemPartition& xi, const char* system,
                            const char* flavor) {
    const auto* cast = dynamic_cast<const Flavor*>(&xi);
    if (!cast)
        throw UnsupportedOperationError(std::string(system) + ": partition '" + xi.id() +
                                        "' is not a " + flavor);
    return *cast;
}

std::vector<double> cdf_of(std::span<const double> masses) {
    std::vector<double> cdf(masses.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        acc += masses[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0 + 1e-30;  // closes the top bin against rounding
    return cdf;
}

constexpr std::uint64_t kExactSupportCap = 1000000;

}  // namespace

// --- SymbolPartition ---------------------------------------------------

SymbolPartition::SymbolPartition(std::string id, std::vector<std::uint32_t> group_of,
                                 std::span<const double> symbol_probs)
    : id_(std::move(id)),
      group_of_(std::move(group_of)),
      partition_([&] {
          if (group_of_.size() != symbol_probs.size())
              throw InvalidArgumentError("SymbolPartition: group map size mismatch");
          std::uint32_t cells = 0;
          for (const auto g : group_of_) cells = std::max(cells, g + 1);
          std::vector<double> masses(cells, 0.0);
          for (std::size_t s = 0; s < group_of_.size(); ++s)
              masses[group_of_[s]] += symbol_probs[s];
          return Partition::from_masses(std::move(masses));
      }()) {}

// --- ArcPartition --------------------------------------------------------

ArcPartition::ArcPartition(std::string id, std::vector<Real50> breakpoints)
    : id_(std::move(id)), breakpoints_(std::move(breakpoints)), partition_([&] {
          if (breakpoints_.empty())
              throw InvalidArgumentError("ArcPartition: needs at least one breakpoint");
          for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
              if (breakpoints_[i] < 0 || breakpoints_[i] >= 1)
                  throw InvalidArgumentError("ArcPartition: breakpoint outside [0,1)");
              if (i > 0 && breakpoints_[i] <= breakpoints_[i - 1])
                  throw InvalidArgumentError("ArcPartition: breakpoints must increase strictly");
          }
          const std::size_t n = breakpoints_.size();
          std::vector<double> masses(n);
          for (std::size_t k = 0; k + 1 < n; ++k)
              masses[k] = static_cast<double>(breakpoints_[k + 1] - breakpoints_[k]);
          masses[n - 1] = static_cast<double>(Real50(1) - breakpoints_[n - 1] + breakpoints_[0]);
          return Partition::from_masses(std::move(masses));
      }()) {}

std::uint32_t ArcPartition::arc_of(const Real50& x) const {
    if (x < breakpoints_.front())
        return static_cast<std::uint32_t>(breakpoints_.size() - 1);
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    return static_cast<std::uint32_t>(it - breakpoints_.begin() - 1);
}

ArcPartition ArcPartition::dyadic(int depth) {
    const std::size_t n = std::size_t{1} << depth;
    std::vector<Real50> bps;
    bps.reserve(n);
    for (std::size_t k = 0; k < n; ++k) bps.push_back(Real50(k) / Real50(n));
    return ArcPartition("dyadic_arcs_depth" + std::to_string(depth), std::move(bps));
}

// --- SystemModel sampled path -------------------------------------------

LabelDistribution SystemModel::exact_join(const SystemPartition&,
                                          std::span<const std::int64_t>) const {
    throw UnsupportedOperationError(kind() + ": exact joins not available");
}

std::vector<std::uint64_t> SystemModel::sampled_counts(
    const SystemPartition& xi, std::span<const std::int64_t> iterates,
    const SamplingPlan& plan) const {
    detail::check_iterates(iterates);
    if (plan.n_samples == 0)
        throw InvalidArgumentError("sampled_join: n_samples must be >= 1");
    const std::size_t cells = xi.abstract().cell_count();
    const std::size_t arity = iterates.size();
    const auto support = detail::packed_support(cells, arity, plan.support_cap);
    if (!support)
        throw CombinatorialExplosionError(
            "sampled_join: support " + std::to_string(cells) + "^" + std::to_string(arity) +
            " exceeds cap " + std::to_string(plan.support_cap) +
            "; reduce the progression length |P_j| or the partition cell count");

    auto sampler = tuple_sampler(xi, iterates);
    std::vector<std::uint64_t> counts(*support, 0);
    std::vector<std::uint32_t> tuple(arity);

    const std::uint64_t n_batches = (plan.n_samples + rng::kBatchSize - 1) / rng::kBatchSize;
    for (std::uint64_t b = 0; b < n_batches; ++b) {
        rng::Stream stream = rng::batch_stream(plan.seed, b);
        const std::uint64_t lo = b * rng::kBatchSize;
        const std::uint64_t batch = std::min<std::uint64_t>(rng::kBatchSize, plan.n_samples - lo);
        for (std::uint64_t s = 0; s < batch; ++s) {
            sampler->draw(stream, tuple);
            std::uint64_t packed = 0, radix = 1;
            for (std::size_t k = 0; k < arity; ++k) {
                packed += tuple[k] * radix;
                radix *= cells;
            }
            ++counts[packed];
        }
    }
    return counts;
}

LabelDistribution SystemModel::sampled_join(const SystemPartition& xi,
                                            std::span<const std::int64_t> iterates,
                                            const SamplingPlan& plan) const {
    const auto counts = sampled_counts(xi, iterates, plan);
    const std::size_t cells = xi.abstract().cell_count();
    std::map<LabelDistribution::Tuple, std::uint64_t> sparse;
    for (std::uint64_t packed = 0; packed < counts.size(); ++packed)
        if (counts[packed] > 0)
            sparse.emplace(detail::unpack_tuple(packed, cells, iterates.size()), counts[packed]);
    return LabelDistribution::from_counts(iterates.size(), sparse, plan.n_samples);
}

// --- IdentitySystem -------------------------------------------------------

LabelDistribution IdentitySystem::exact_join(const SystemPartition& xi,
                                             std::span<const std::int64_t> iterates) const {
    detail::check_iterates(iterates);
    const auto& masses = xi.abstract().masses();
    LabelDistribution::Map mass;
    for (std::uint32_t cell = 0; cell < masses.size(); ++cell) {
        if (masses[cell] <= 0.0) continue;
        mass.emplace(LabelDistribution::Tuple(iterates.size(), cell), masses[cell]);
    }
    return LabelDistribution(iterates.size(), std::move(mass));
}

namespace {

class IdentityTupleSampler final : public TupleSampler {
  public:
    explicit IdentityTupleSampler(std::vector<double> cdf) : cdf_(std::move(cdf)) {}
    void draw(rng::Stream& stream, std::span<std::uint32_t> out) override {
        const auto cell = static_cast<std::uint32_t>(stream.categorical(cdf_));
        std::fill(out.begin(), out.end(), cell);
    }

  private:
    std::vector<double> cdf_;
};

}  // namespace

std::unique_ptr<TupleSampler> IdentitySystem::tuple_sampler(
    const SystemPartition& xi, std::span<const std::int64_t> iterates) const {
    detail::check_iterates(iterates);
    return std::make_unique<IdentityTupleSampler>(cdf_of(xi.abstract().masses()));
}

// --- BernoulliSystem ------------------------------------------------------

BernoulliSystem::BernoulliSystem(std::vector<double> symbol_probs)
    : probs_(std::move(symbol_probs)) {
    // Partition validation covers the probability-vector rules.
    (void)Partition::from_masses(probs_);
}

SymbolPartition BernoulliSystem::generating_partition() const {
    std::vector<std::uint32_t> group(probs_.size());
    for (std::uint32_t s = 0; s < group.size(); ++s) group[s] = s;
    return SymbolPartition("generator", std::move(group), probs_);
}

SymbolPartition BernoulliSystem::group_partition(std::string id,
                                                 std::vector<std::uint32_t> group_of) const {
    return SymbolPartition(std::move(id), std::move(group_of), probs_);
}

LabelDistribution BernoulliSystem::exact_join(const SystemPartition& xi,
                                              std::span<const std::int64_t> iterates) const {
    detail::check_iterates(iterates);
    const auto& sp = expect_flavor<SymbolPartition>(xi, "bernoulli", "SymbolPartition");
    if (sp.group_of().size() != probs_.size())
        throw InvalidArgumentError("bernoulli: partition built for another alphabet size");

    // Distinct coordinates are independent, so the join is the product of
    // the cell marginal over the iterate positions.
    const auto& marginal = sp.abstract().masses();
    const std::size_t cells = marginal.size();
    const std::size_t arity = iterates.size();
    const auto support = detail::packed_support(cells, arity, kExactSupportCap);
    if (!support)
        throw CombinatorialExplosionError(
            "bernoulli exact join: support exceeds cap; reduce the progression length "
            "|P_j| or the partition cell count");

    LabelDistribution::Map mass;
    LabelDistribution::Tuple tuple(arity, 0);
    for (std::uint64_t packed = 0; packed < *support; ++packed) {
        std::uint64_t rest = packed;
        double m = 1.0;
        for (std::size_t k = 0; k < arity; ++k) {
            const auto cell = static_cast<std::uint32_t>(rest % cells);
            rest /= cells;
            tuple[k] = cell;
            m *= marginal[cell];
        }
        if (m > 0.0) mass.emplace(tuple, m);
    }
    return LabelDistribution(arity, std::move(mass));
}

namespace {

class BernoulliTupleSampler final : public TupleSampler {
  public:
    BernoulliTupleSampler(std::vector<double> symbol_cdf, std::vector<std::uint32_t> group_of)
        : cdf_(std::move(symbol_cdf)), group_of_(std::move(group_of)) {}
    void draw(rng::Stream& stream, std::span<std::uint32_t> out) override {
        for (auto& label : out) label = group_of_[stream.categorical(cdf_)];
    }

  private:
    std::vector<double> cdf_;
    std::vector<std::uint32_t> group_of_;
};

}  // namespace

std::unique_ptr<TupleSampler> BernoulliSystem::tuple_sampler(
    const SystemPartition& xi, std::span<const std::int64_t> iterates) const {
    detail::check_iterates(iterates);
    const auto& sp = expect_flavor<SymbolPartition>(xi, "bernoulli", "SymbolPartition");
    if (sp.group_of().size() != probs_.size())
        throw InvalidArgumentError("bernoulli: partition built for another alphabet size");
    return std::make_unique<BernoulliTupleSampler>(cdf_of(probs_), sp.group_of());
}

// --- RotationSystem -------------------------------------------------------

RotationSystem::RotationSystem(Real50 angle) : angle_(frac(std::move(angle))) {}

RotationSystem RotationSystem::golden_mean() {
    return RotationSystem((boost::multiprecision::sqrt(Real50(5)) - 1) / 2);
}

LabelDistribution RotationSystem::arc_join(const ArcPartition& xi,
                                           std::span<const std::int64_t> iterates) const {
    detail::check_iterates(iterates);
    const std::size_t arity = iterates.size();

    // Shift of each iterate, and the pulled-back cell boundaries.
    std::vector<Real50> shifts;
    shifts.reserve(arity);
    for (const auto p : iterates) shifts.push_back(frac(Real50(p) * angle_));

    std::vector<Real50> endpoints;
    endpoints.reserve(arity * xi.breakpoints().size());
    for (const auto& s : shifts)
        for (const auto& b : xi.breakpoints()) endpoints.push_back(frac(b - s));
    std::sort(endpoints.begin(), endpoints.end());
    endpoints.erase(std::unique(endpoints.begin(), endpoints.end()), endpoints.end());

    // Each gap between consecutive endpoints carries one constant tuple.
    std::map<LabelDistribution::Tuple, Real50> exact_mass;
    LabelDistribution::Tuple tuple(arity);
    const std::size_t n = endpoints.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Real50& lo = endpoints[k];
        const Real50 hi = (k + 1 < n) ? endpoints[k + 1] : endpoints[0] + 1;
        const Real50 len = hi - lo;
        if (len == 0) continue;
        const Real50 mid = lo + len / 2;
        for (std::size_t i = 0; i < arity; ++i) {
            Real50 y = mid + shifts[i];
            if (y >= 1) y -= 1;
            if (y >= 1) y -= 1;
            tuple[i] = xi.arc_of(y);
        }
        exact_mass[tuple] += len;
    }

    LabelDistribution::Map mass;
    for (const auto& [t, m] : exact_mass) mass.emplace(t, static_cast<double>(m));
    return LabelDistribution(arity, std::move(mass));
}

LabelDistribution RotationSystem::exact_join(const SystemPartition& xi,
                                             std::span<const std::int64_t> iterates) const {
    return arc_join(expect_flavor<ArcPartition>(xi, "rotation", "ArcPartition"), iterates);
}

namespace {

class RotationTupleSampler final : public TupleSampler {
  public:
    RotationTupleSampler(std::vector<double> breakpoints, std::vector<double> shifts)
        : breakpoints_(std::move(breakpoints)), shifts_(std::move(shifts)) {}
    void draw(rng::Stream& stream, std::span<std::uint32_t> out) override {
        const double x = stream.uniform01();
        for (std::size_t i = 0; i < shifts_.size(); ++i) {
            double y = x + shifts_[i];
            if (y >= 1.0) y -= 1.0;
            out[i] = arc_of(y);
        }
    }

  private:
    std::uint32_t arc_of(double y) const {
        if (y < breakpoints_.front())
            return static_cast<std::uint32_t>(breakpoints_.size() - 1);
        const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), y);
        return static_cast<std::uint32_t>(it - breakpoints_.begin() - 1);
    }

    std::vector<double> breakpoints_;
    std::vector<double> shifts_;
};

}  // namespace

std::unique_ptr<TupleSampler> RotationSystem::tuple_sampler(
    const SystemPartition& xi, std::span<const std::int64_t> iterates) const {
    detail::check_iterates(iterates);
    const auto& arcs = expect_flavor<ArcPartition>(xi, "rotation", "ArcPartition");
    std::vector<double> bps;
    bps.reserve(arcs.breakpoints().size());
    for (const auto& b : arcs.breakpoints()) bps.push_back(static_cast<double>(b));
    std::vector<double> shifts;
    shifts.reserve(iterates.size());
    for (const auto p : iterates)
        shifts.push_back(static_cast<double>(frac(Real50(p) * angle_)));
    return std::make_unique<RotationTupleSampler>(std::move(bps), std::move(shifts));
}

}  // namespace pentropy
