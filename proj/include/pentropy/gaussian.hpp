#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pentropy/spectral.hpp"
#include "pentropy/systems.hpp"

namespace pentropy {

/// Stationary centered Gaussian sequence sampler with covariance
/// r(n) = Fourier coefficient of a normalized spectral measure.  Draws over
/// a finite index set use a dense symmetric eigenfactorization of the Gram
/// matrix [r(a-b)], with eigenvalues in [-1e-8, 0) clipped to 0.
class GaussianTrajectorySampler {
  public:
    GaussianTrajectorySampler(SpectralMeasure sigma, std::int64_t horizon,
                              std::size_t max_dimension = 64);

    const SpectralMeasure& sigma() const { return sigma_; }
    std::int64_t horizon() const { return horizon_; }
    std::size_t max_dimension() const { return max_dimension_; }

    /// r(|n|); |n| must be within the horizon.
    double covariance(std::int64_t n) const;

    /// Prepared factor for one index set: draw = factor * iid normals.
    struct Design {
        std::vector<std::int64_t> indices;   ///< strictly increasing
        std::size_t dimension = 0;
        std::vector<double> factor;          ///< row-major dim x dim
        double min_eigenvalue = 0.0;         ///< before clipping
    };

    /// Builds the factor over the given (not necessarily sorted) indices;
    /// duplicates are rejected.  Throws IllConditionedCovarianceError when
    /// the Gram matrix has an eigenvalue below -1e-8.
    Design prepare(std::span<const std::int64_t> indices) const;

    /// One draw into `out` (size = design dimension).
    void draw(const Design& design, rng::Stream& stream, std::span<double> out) const;

    /// Convenience single draw with its own derived stream.
    std::vector<double> sample_trajectory(std::span<const std::int64_t> indices,
                                          std::uint64_t seed) const;

  private:
    SpectralMeasure sigma_;
    std::int64_t horizon_;
    std::size_t max_dimension_;
    std::vector<double> coeffs_;  ///< r(0..horizon)
};

/// Cylinder partition: finite coordinate set plus axis-aligned threshold
/// grids.  Cells are the product boxes; masses come from the normal CDF
/// when the coordinates are uncorrelated, otherwise from a seeded
/// Monte-Carlo estimate (reported via mass_method()).
class CylinderPartition final : public SystemPartition {
  public:
    static CylinderPartition make(const GaussianTrajectorySampler& sampler, std::string id,
                                  std::vector<std::int64_t> coords,
                                  std::vector<std::vector<double>> thresholds);

    /// Two cells split at 0 on one coordinate.
    static CylinderPartition sign(const GaussianTrajectorySampler& sampler,
                                  std::int64_t coord);
    /// k equal-mass cells split at standard-normal quantiles.
    static CylinderPartition quantiles(const GaussianTrajectorySampler& sampler,
                                       std::int64_t coord, int cells);

    const Partition& abstract() const override { return partition_; }
    const std::string& id() const override { return id_; }

    const std::vector<std::int64_t>& coords() const { return coords_; }
    const std::vector<std::vector<double>>& thresholds() const { return thresholds_; }
    const std::string& mass_method() const { return mass_method_; }
    std::size_t cell_count() const { return partition_.cell_count(); }

    /// Cell index of a projected value vector (one value per coordinate).
    std::uint32_t label(std::span<const double> values) const;

  private:
    CylinderPartition(std::string id, std::vector<std::int64_t> coords,
                      std::vector<std::vector<double>> thresholds, Partition partition,
                      std::string mass_method);

    std::string id_;
    std::vector<std::int64_t> coords_;
    std::vector<std::vector<double>> thresholds_;
    Partition partition_;
    std::string mass_method_;
};

/// Gaussian automorphism simulator: the shift acting on cylinder labels of
/// a stationary Gaussian trajectory.  Sampling only; no exact joins.
class GaussianSystem final : public SystemModel {
  public:
    explicit GaussianSystem(std::shared_ptr<const GaussianTrajectorySampler> sampler);

    std::string kind() const override { return "gaussian"; }
    bool exact_join_capable() const override { return false; }
    std::unique_ptr<TupleSampler> tuple_sampler(
        const SystemPartition& xi, std::span<const std::int64_t> iterates) const override;

    const GaussianTrajectorySampler& sampler() const { return *sampler_; }

  private:
    std::shared_ptr<const GaussianTrajectorySampler> sampler_;
};

/// Empirical independence check of the translated cylinder labels along a
/// progression: total-variation distance between the joint label law and
/// the product of its marginals.
struct IndependenceReport {
    double tv_distance = 0.0;
    double tolerance = 0.0;  ///< 5 sqrt(support / n_samples)
    bool independent = false;
    std::uint64_t support = 0;
    std::uint64_t n_samples = 0;
};

IndependenceReport independence_test(const GaussianTrajectorySampler& sampler,
                                     const CylinderPartition& cylinder,
                                     std::span<const std::int64_t> p_set,
                                     std::uint64_t n_samples, std::uint64_t seed);

/// Probabilists' Hermite polynomial He_m(x).
double hermite_polynomial(int degree, double x);

/// Normalized covariance of degree-m Hermite observables of a standard
/// Gaussian pair with correlation rho: rho^m.
double hermite_chaos_covariance(int degree, double rho);

/// Cylinder partition over caller-designated coordinates, with an
/// independence certificate granted exactly when the covariance vanishes
/// (|r| <= 1e-12) across all distinct translates of the coordinate set.
struct OrthogonalityPartition {
    CylinderPartition partition;
    bool certificate = false;
    double max_cross_covariance = 0.0;
};

OrthogonalityPartition orthogonality_driven_partition(
    const GaussianTrajectorySampler& sampler, std::string id,
    std::vector<std::int64_t> coords, std::vector<std::vector<double>> thresholds,
    std::span<const std::int64_t> p_set);

/// Two-sample chi-square homogeneity test between the cylinder label law
/// at the design coordinates and at the shifted coordinates.
struct StationarityReport {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    bool pass_at_1pct = false;
};

StationarityReport stationarity_test(const GaussianTrajectorySampler& sampler,
                                     const CylinderPartition& cylinder, std::int64_t shift,
                                     std::uint64_t n_samples, std::uint64_t seed);

/// Kolmogorov-Smirnov distance of a sample against the standard normal,
/// with the 1% critical value for that sample size.
struct KsReport {
    double statistic = 0.0;
    double critical_1pct = 0.0;
    bool pass_at_1pct = false;
};

KsReport ks_test_standard_normal(std::vector<double> values);

/// Standard normal CDF.
double normal_cdf(double x);

/// One trajectory draw as "index,value" CSV rows (with header).
std::string trajectory_csv(const GaussianTrajectorySampler& sampler,
                           std::span<const std::int64_t> indices, std::uint64_t seed);

/// Sampler description {sigma, horizon, max_dimension} and its inverse.
nlohmann::json sampler_spec(const GaussianTrajectorySampler& sampler);
GaussianTrajectorySampler sampler_from_spec(const nlohmann::json& doc);

}  // namespace pentropy
