#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pentropy/partition.hpp"
#include "pentropy/precise.hpp"
#include "pentropy/rng.hpp"

namespace pentropy {

/// A partition together with the geometric data a concrete system needs to
/// evaluate it.  Each system accepts its own realization flavor and rejects
/// the others.
class SystemPartition {
  public:
    virtual ~SystemPartition() = default;
    /// Labels and masses of the cells (the abstract view used for H(xi)).
    virtual const Partition& abstract() const = 0;
    /// Identifier used in reports and family listings.
    virtual const std::string& id() const = 0;
};

/// Partition carrying nothing but labels and masses.  The identity system
/// accepts any realization, so this is its natural flavor.
class MassPartition final : public SystemPartition {
  public:
    MassPartition(std::string id, Partition partition)
        : id_(std::move(id)), partition_(std::move(partition)) {}
    const Partition& abstract() const override { return partition_; }
    const std::string& id() const override { return id_; }

  private:
    std::string id_;
    Partition partition_;
};

/// Partition of a product-shift alphabet by the symbol at coordinate zero:
/// cell = group of symbols.  `group_of[s]` is the cell index of symbol s.
class SymbolPartition final : public SystemPartition {
  public:
    SymbolPartition(std::string id, std::vector<std::uint32_t> group_of,
                    std::span<const double> symbol_probs);
    const Partition& abstract() const override { return partition_; }
    const std::string& id() const override { return id_; }
    const std::vector<std::uint32_t>& group_of() const { return group_of_; }

  private:
    std::string id_;
    std::vector<std::uint32_t> group_of_;
    Partition partition_;
};

/// Partition of the circle [0,1) into arcs.  Breakpoints are strictly
/// increasing in [0,1); arc k is [b_k, b_{k+1}) and the last arc wraps.
/// Endpoints are kept at 50 decimal digits so that joins of rotated copies
/// make stable coincidence decisions.
class ArcPartition final : public SystemPartition {
  public:
    ArcPartition(std::string id, std::vector<Real50> breakpoints);
    const Partition& abstract() const override { return partition_; }
    const std::string& id() const override { return id_; }
    const std::vector<Real50>& breakpoints() const { return breakpoints_; }
    std::size_t arc_count() const { return breakpoints_.size(); }

    /// Index of the arc containing x in [0,1).
    std::uint32_t arc_of(const Real50& x) const;

    /// Dyadic partition into 2^depth equal arcs.
    static ArcPartition dyadic(int depth);

  private:
    std::string id_;
    std::vector<Real50> breakpoints_;
    Partition partition_;
};

/// One prepared sampler for a (partition, iterate set) pair: draws a fresh
/// initial point and writes the label tuple along the iterates.
class TupleSampler {
  public:
    virtual ~TupleSampler() = default;
    virtual void draw(rng::Stream& stream, std::span<std::uint32_t> out) = 0;
};

/// Sampling request for empirical joins.
struct SamplingPlan {
    std::uint64_t n_samples = 100000;
    std::uint64_t seed = 1;
    std::uint64_t support_cap = 1000000;  ///< max (cells)^|iterates|
};

/// A measure-preserving system exposing exact joins (where analytically
/// tractable) and seeded empirical joins of label tuples along iterate sets.
class SystemModel {
  public:
    virtual ~SystemModel() = default;

    virtual std::string kind() const = 0;
    virtual bool exact_join_capable() const = 0;

    /// Exact distribution of (label of T^p x)_{p in iterates}.  Iterates
    /// must be strictly increasing.  Throws UnsupportedOperationError when
    /// the system has no exact capability for this partition flavor.
    virtual LabelDistribution exact_join(const SystemPartition& xi,
                                         std::span<const std::int64_t> iterates) const;

    /// Empirical join from independent draws of the initial point.
    /// Deterministic in (plan.seed, plan.n_samples): samples are split into
    /// fixed-size batches with per-batch derived streams, and counts merge
    /// by summation, so scheduling cannot change the result.
    LabelDistribution sampled_join(const SystemPartition& xi,
                                   std::span<const std::int64_t> iterates,
                                   const SamplingPlan& plan) const;

    /// Raw occupancy counts behind sampled_join; tuple index is the packed
    /// mixed-radix label tuple.  Exposed for the entropy estimator, which
    /// needs counts rather than masses.
    std::vector<std::uint64_t> sampled_counts(const SystemPartition& xi,
                                              std::span<const std::int64_t> iterates,
                                              const SamplingPlan& plan) const;

    /// Prepared per-draw sampler; the heart of the sampled path.
    virtual std::unique_ptr<TupleSampler> tuple_sampler(
        const SystemPartition& xi, std::span<const std::int64_t> iterates) const = 0;
};

/// The identity map: every iterate sees the same cell.
class IdentitySystem final : public SystemModel {
  public:
    std::string kind() const override { return "identity"; }
    bool exact_join_capable() const override { return true; }
    LabelDistribution exact_join(const SystemPartition& xi,
                                 std::span<const std::int64_t> iterates) const override;
    std::unique_ptr<TupleSampler> tuple_sampler(
        const SystemPartition& xi, std::span<const std::int64_t> iterates) const override;
};

/// Product shift over a finite alphabet with i.i.d. coordinates.
class BernoulliSystem final : public SystemModel {
  public:
    explicit BernoulliSystem(std::vector<double> symbol_probs);

    std::string kind() const override { return "bernoulli"; }
    bool exact_join_capable() const override { return true; }
    LabelDistribution exact_join(const SystemPartition& xi,
                                 std::span<const std::int64_t> iterates) const override;
    std::unique_ptr<TupleSampler> tuple_sampler(
        const SystemPartition& xi, std::span<const std::int64_t> iterates) const override;

    const std::vector<double>& symbol_probs() const { return probs_; }
    /// The partition by the symbol at coordinate zero.
    SymbolPartition generating_partition() const;
    /// Grouping of symbols into labeled cells.
    SymbolPartition group_partition(std::string id, std::vector<std::uint32_t> group_of) const;

  private:
    std::vector<double> probs_;
};

/// Circle rotation x -> x + angle (mod 1).  Exact joins enumerate the arc
/// endpoints of all rotated copies of the partition.
class RotationSystem final : public SystemModel {
  public:
    explicit RotationSystem(Real50 angle);
    static RotationSystem golden_mean();

    std::string kind() const override { return "rotation"; }
    bool exact_join_capable() const override { return true; }
    LabelDistribution exact_join(const SystemPartition& xi,
                                 std::span<const std::int64_t> iterates) const override;
    std::unique_ptr<TupleSampler> tuple_sampler(
        const SystemPartition& xi, std::span<const std::int64_t> iterates) const override;

    const Real50& angle() const { return angle_; }

    /// The exact join realized as an arc partition of the circle, with one
    /// label per distinct tuple; used by refinement diagnostics.
    LabelDistribution arc_join(const ArcPartition& xi,
                               std::span<const std::int64_t> iterates) const;

  private:
    Real50 angle_;
};

namespace detail {

/// Validates iterates (nonempty, strictly increasing) and returns the
/// packed support size cells^|iterates|, or nullopt on overflow past cap.
std::optional<std::uint64_t> packed_support(std::size_t cells, std::size_t arity,
                                            std::uint64_t cap);

/// Unpacks a mixed-radix packed tuple index.
LabelDistribution::Tuple unpack_tuple(std::uint64_t packed, std::size_t cells,
                                      std::size_t arity);

void check_iterates(std::span<const std::int64_t> iterates);

}  // namespace detail

}  // namespace pentropy
