#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pentropy {

/// A finite labeled partition of a probability space: opaque cell labels
/// plus cell masses.  Masses must be in [0,1] and sum to 1 within 1e-12;
/// labels must be pairwise distinct.
class Partition {
  public:
    Partition(std::vector<std::string> labels, std::vector<double> masses);

    /// Labels "c0", "c1", ...
    static Partition from_masses(std::vector<double> masses);
    static Partition uniform(std::size_t cells);

    std::size_t cell_count() const { return masses_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<double>& masses() const { return masses_; }

    /// H(xi) in nats.
    double entropy() const;

    /// At least two cells of positive mass.
    bool non_trivial() const;

  private:
    std::vector<std::string> labels_;
    std::vector<double> masses_;
};

/// Joint distribution of a label tuple (one label per iterate).  Keys are
/// tuples of cell indices of fixed arity; values are probability masses
/// summing to 1 within 1e-9.
class LabelDistribution {
  public:
    using Tuple = std::vector<std::uint32_t>;
    using Map = std::map<Tuple, double>;

    LabelDistribution(std::size_t arity, Map masses);

    static LabelDistribution from_counts(std::size_t arity,
                                         const std::map<Tuple, std::uint64_t>& counts,
                                         std::uint64_t total);

    std::size_t arity() const { return arity_; }
    std::size_t support_size() const { return mass_.size(); }
    const Map& masses() const { return mass_; }
    double mass_of(const Tuple& t) const;

    /// H of the tuple distribution, in nats.
    double entropy() const;

    /// Total-variation distance, over the union of supports.
    double total_variation(const LabelDistribution& other) const;

  private:
    std::size_t arity_;
    Map mass_;
};

}  // namespace pentropy
