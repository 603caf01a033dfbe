#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace pentropy {

/// Point mass on the circle [0,1).
struct Atom {
    double location;
    double mass;
};

/// Piecewise-constant density piece: height on [lo, hi).
struct DensityPiece {
    double lo;
    double hi;
    double height;
};

/// Truncated Riesz product factor list: prod_k (1 + a_k cos(2 pi n_k x))
/// over lacunary frequencies (n_{k+1} >= 3 n_k), carrying `weight` of the
/// total mass.
struct RieszComponent {
    std::vector<std::int64_t> freqs;
    std::vector<double> coeffs;
    double weight;
};

/// Symmetric probability measure on the circle given as atoms + a
/// piecewise-constant density + an optional truncated Riesz product.
/// Total mass must be 1 within 1e-12 and the measure must be invariant
/// under x -> 1-x so that every Fourier coefficient is real.
class SpectralMeasure {
  public:
    SpectralMeasure(std::vector<Atom> atoms, std::vector<DensityPiece> pieces,
                    std::optional<RieszComponent> riesz);

    /// Normalized Lebesgue measure (white noise).
    static SpectralMeasure lebesgue();
    /// Unit mass at 0.
    static SpectralMeasure dirac_zero();
    /// (weight/2)(delta_theta + delta_{1-theta}); a single atom when theta
    /// is 0 or 1/2.  Remaining mass must come from other parts.
    static std::vector<Atom> atom_pair(double theta, double weight);
    /// Measure consisting only of the truncated Riesz product.
    static SpectralMeasure riesz_product(std::vector<std::int64_t> freqs,
                                         std::vector<double> coeffs);

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<DensityPiece>& pieces() const { return pieces_; }
    const std::optional<RieszComponent>& riesz() const { return riesz_; }

    /// Sum of squared atom masses (the Wiener limit).
    double atom_mass_squared() const;

    /// Fourier coefficients r(0..n_max); r(0) = 1.  Atom and density parts
    /// are closed-form per term; the Riesz part is expanded exactly over
    /// its signed-frequency sums.
    std::vector<double> fourier(std::int64_t n_max) const;

    nlohmann::json to_json() const;
    static SpectralMeasure from_json(const nlohmann::json& doc);

  private:
    std::vector<Atom> atoms_;
    std::vector<DensityPiece> pieces_;
    std::optional<RieszComponent> riesz_;
};

/// Fourier coefficient r(n) of sigma; validates normalization.
double covariance(const SpectralMeasure& sigma, std::int64_t n);

/// Coefficients of the m-fold convolution power: r(n)^m pointwise.
std::vector<double> convolution_power_coeffs(std::span<const double> coeffs, int m);

/// Cesaro means (1/N) sum_{n=1..N} |r(n)|^2 at dyadic checkpoints.  The
/// final mean estimates the sum of squared atom masses.
struct WienerReport {
    std::vector<std::pair<std::int64_t, double>> dyadic_means;
    double mean_square = 0.0;
    double atom_mass_sq_estimate = 0.0;
};

WienerReport wiener_continuity_test(std::span<const double> coeffs, std::int64_t n_limit);

/// l2 partial sums of r(n)^m over dyadic N.  A flattening trend certifies a
/// square-integrable density for the m-fold convolution power (hence
/// absolute continuity); divergence only rules out an L2 density and does
/// NOT certify singularity.
struct AcReport {
    enum class Verdict { converging, diverging, inconclusive };
    std::vector<std::pair<std::int64_t, double>> l2_partial_sums;
    Verdict verdict = Verdict::inconclusive;
    double tail_increment_ratio = 0.0;
    std::string interpretation;
};

const char* ac_verdict_name(AcReport::Verdict v);

AcReport ac_diagnostic(std::span<const double> coeffs, int m, std::int64_t n_limit,
                       double converging_ratio = 0.75, double diverging_ratio = 0.95);

/// Synthetic power-decay coefficient envelope r(n) = n^{-alpha}, r(0) = 1.
std::vector<double> power_decay_coeffs(double alpha, std::int64_t n_max);

}  // namespace pentropy
