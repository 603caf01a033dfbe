#include "pentropy/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "pentropy/errors.hpp"
#include "pentropy/kernels.hpp"

namespace pentropy {

namespace {

constexpr double kEigenClipTolerance = -1e-8;
constexpr double kCertificateTolerance = 1e-12;
constexpr std::uint64_t kIndependenceSupportCap = 1000000;

std::uint32_t bin_of(std::span<const double> thresholds, double value) {
    const auto it = std::upper_bound(thresholds.begin(), thresholds.end(), value);
    return static_cast<std::uint32_t>(it - thresholds.begin());
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// --- GaussianTrajectorySampler --------------------------------------------

GaussianTrajectorySampler::GaussianTrajectorySampler(SpectralMeasure sigma,
                                                     std::int64_t horizon,
                                                     std::size_t max_dimension)
    : sigma_(std::move(sigma)), horizon_(horizon), max_dimension_(max_dimension) {
    if (horizon_ < 0) throw InvalidArgumentError("sampler: horizon must be >= 0");
    coeffs_ = sigma_.fourier(horizon_);
    if (std::abs(coeffs_[0] - 1.0) > 1e-9)
        throw InvalidMeasureError("sampler: spectral measure not normalized (r(0) != 1)");
}

double GaussianTrajectorySampler::covariance(std::int64_t n) const {
    if (n < 0) n = -n;
    if (n > horizon_)
        throw InvalidArgumentError("sampler: lag " + std::to_string(n) +
                                   " beyond horizon " + std::to_string(horizon_));
    return coeffs_[static_cast<std::size_t>(n)];
}

GaussianTrajectorySampler::Design GaussianTrajectorySampler::prepare(
    std::span<const std::int64_t> indices) const {
    if (indices.empty()) throw InvalidArgumentError("sampler: empty index set");
    Design design;
    design.indices.assign(indices.begin(), indices.end());
    std::sort(design.indices.begin(), design.indices.end());
    if (std::adjacent_find(design.indices.begin(), design.indices.end()) !=
        design.indices.end())
        throw InvalidArgumentError("sampler: duplicate trajectory index");
    const std::size_t d = design.indices.size();
    if (d > max_dimension_)
        throw InvalidArgumentError("sampler: index set larger than the dimension cap " +
                                   std::to_string(max_dimension_));
    if (design.indices.back() - design.indices.front() > horizon_)
        throw InvalidArgumentError("sampler: index spread exceeds horizon");

    Eigen::MatrixXd gram(d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
            gram(a, b) = covariance(design.indices[a] - design.indices[b]);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
        throw IllConditionedCovarianceError("sampler: eigendecomposition failed");
    Eigen::VectorXd evals = solver.eigenvalues();
    design.min_eigenvalue = evals.minCoeff();
    if (design.min_eigenvalue < kEigenClipTolerance)
        throw IllConditionedCovarianceError(
            "sampler: covariance eigenvalue " + std::to_string(design.min_eigenvalue) +
            " below clipping tolerance -1e-8");
    for (Eigen::Index i = 0; i < evals.size(); ++i)
        evals(i) = evals(i) > 0.0 ? std::sqrt(evals(i)) : 0.0;
    const Eigen::MatrixXd factor = solver.eigenvectors() * evals.asDiagonal();

    design.dimension = d;
    design.factor.resize(d * d);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) design.factor[r * d + c] = factor(r, c);
    return design;
}

void GaussianTrajectorySampler::draw(const Design& design, rng::Stream& stream,
                                     std::span<double> out) const {
    const std::size_t d = design.dimension;
    std::vector<double> z(d);
    for (auto& v : z) v = stream.normal();
    kernels::matvec(design.factor, d, d, z, out);
}

std::vector<double> GaussianTrajectorySampler::sample_trajectory(
    std::span<const std::int64_t> indices, std::uint64_t seed) const {
    const Design design = prepare(indices);
    rng::Stream stream(rng::splitmix64(seed));
    std::vector<double> out(design.dimension);
    draw(design, stream, out);
    return out;
}

// --- CylinderPartition -----------------------------------------------------

CylinderPartition::CylinderPartition(std::string id, std::vector<std::int64_t> coords,
                                     std::vector<std::vector<double>> thresholds,
                                     Partition partition, std::string mass_method)
    : id_(std::move(id)),
      coords_(std::move(coords)),
      thresholds_(std::move(thresholds)),
      partition_(std::move(partition)),
      mass_method_(std::move(mass_method)) {}

CylinderPartition CylinderPartition::make(const GaussianTrajectorySampler& sampler,
                                          std::string id, std::vector<std::int64_t> coords,
                                          std::vector<std::vector<double>> thresholds) {
    if (coords.empty() || coords.size() != thresholds.size())
        throw InvalidArgumentError("CylinderPartition: coords/thresholds mismatch");
    for (auto& t : thresholds) {
        if (t.empty())
            throw InvalidArgumentError("CylinderPartition: each coordinate needs >= 1 threshold");
        if (!std::is_sorted(t.begin(), t.end()))
            throw InvalidArgumentError("CylinderPartition: thresholds must be sorted");
    }
    std::set<std::int64_t> unique_coords(coords.begin(), coords.end());
    if (unique_coords.size() != coords.size())
        throw InvalidArgumentError("CylinderPartition: duplicate coordinate");

    // Cell count = product of per-coordinate bin counts.
    std::size_t cells = 1;
    for (const auto& t : thresholds) cells *= t.size() + 1;
    if (cells > 4096) throw InvalidArgumentError("CylinderPartition: too many cells");

    // Uncorrelated coordinates give exact CDF-product masses.
    bool diagonal = true;
    for (std::size_t a = 0; a < coords.size() && diagonal; ++a)
        for (std::size_t b = a + 1; b < coords.size() && diagonal; ++b)
            if (std::abs(sampler.covariance(coords[a] - coords[b])) > kCertificateTolerance)
                diagonal = false;

    std::vector<double> masses(cells, 0.0);
    std::string method;
    if (diagonal) {
        method = "cdf_product";
        for (std::size_t cell = 0; cell < cells; ++cell) {
            std::size_t rest = cell;
            double m = 1.0;
            for (const auto& t : thresholds) {
                const std::size_t bins = t.size() + 1;
                const std::size_t bin = rest % bins;
                rest /= bins;
                const double lo = bin == 0 ? 0.0 : normal_cdf(t[bin - 1]);
                const double hi = bin == t.size() ? 1.0 : normal_cdf(t[bin]);
                m *= hi - lo;
            }
            masses[cell] = m;
        }
    } else {
        // Correlated cylinder coordinates: estimate masses once with a
        // fixed internal stream so the partition stays deterministic.
        method = "monte_carlo(4e5)";
        const auto design = sampler.prepare(coords);
        rng::Stream stream(rng::splitmix64(0xC11D0ULL));
        const std::uint64_t n = 400000;
        std::vector<double> values(coords.size());
        std::vector<std::uint64_t> counts(cells, 0);
        // prepare() sorts indices; map sorted positions back to the
        // caller's coordinate order.
        std::vector<std::size_t> pos(coords.size());
        for (std::size_t i = 0; i < coords.size(); ++i) {
            const auto it = std::lower_bound(design.indices.begin(), design.indices.end(),
                                             coords[i]);
            pos[i] = static_cast<std::size_t>(it - design.indices.begin());
        }
        std::vector<double> draw_buf(design.dimension);
        std::vector<std::vector<double>> tcopy(thresholds.begin(), thresholds.end());
        for (std::uint64_t s = 0; s < n; ++s) {
            sampler.draw(design, stream, draw_buf);
            std::size_t cell = 0, radix = 1;
            for (std::size_t i = 0; i < coords.size(); ++i) {
                cell += bin_of(tcopy[i], draw_buf[pos[i]]) * radix;
                radix *= tcopy[i].size() + 1;
            }
            ++counts[cell];
        }
        for (std::size_t cell = 0; cell < cells; ++cell)
            masses[cell] = static_cast<double>(counts[cell]) / static_cast<double>(n);
    }

    std::vector<std::string> labels;
    labels.reserve(cells);
    for (std::size_t cell = 0; cell < cells; ++cell)
        labels.push_back("box" + std::to_string(cell));
    return CylinderPartition(std::move(id), std::move(coords), std::move(thresholds),
                             Partition(std::move(labels), std::move(masses)),
                             std::move(method));
}

CylinderPartition CylinderPartition::sign(const GaussianTrajectorySampler& sampler,
                                          std::int64_t coord) {
    return make(sampler, "sign@" + std::to_string(coord), {coord}, {{0.0}});
}

CylinderPartition CylinderPartition::quantiles(const GaussianTrajectorySampler& sampler,
                                               std::int64_t coord, int cells) {
    if (cells < 2) throw InvalidArgumentError("quantiles: needs >= 2 cells");
    boost::math::normal_distribution<double> normal;
    std::vector<double> t;
    for (int i = 1; i < cells; ++i)
        t.push_back(boost::math::quantile(normal, static_cast<double>(i) / cells));
    return make(sampler, "quantiles" + std::to_string(cells) + "@" + std::to_string(coord),
                {coord}, {std::move(t)});
}

std::uint32_t CylinderPartition::label(std::span<const double> values) const {
    std::uint32_t cell = 0, radix = 1;
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
        cell += bin_of(thresholds_[i], values[i]) * radix;
        radix *= static_cast<std::uint32_t>(thresholds_[i].size() + 1);
    }
    return cell;
}

// --- GaussianSystem ---------------------------------------------------------

GaussianSystem::GaussianSystem(std::shared_ptr<const GaussianTrajectorySampler> sampler)
    : sampler_(std::move(sampler)) {
    if (!sampler_) throw InvalidArgumentError("GaussianSystem: null sampler");
}

namespace {

struct TranslatedDesign {
    GaussianTrajectorySampler::Design design;
    // position of (translate, cylinder coordinate) in the design vector
    std::vector<std::vector<std::size_t>> positions;
};

TranslatedDesign build_translated_design(const GaussianTrajectorySampler& sampler,
                                         const CylinderPartition& cylinder,
                                         std::span<const std::int64_t> p_set) {
    std::set<std::int64_t> index_set;
    for (const auto p : p_set)
        for (const auto c : cylinder.coords()) index_set.insert(c + p);
    std::vector<std::int64_t> indices(index_set.begin(), index_set.end());

    TranslatedDesign out{sampler.prepare(indices), {}};
    out.positions.resize(p_set.size());
    for (std::size_t k = 0; k < p_set.size(); ++k) {
        out.positions[k].reserve(cylinder.coords().size());
        for (const auto c : cylinder.coords()) {
            const auto it = std::lower_bound(out.design.indices.begin(),
                                             out.design.indices.end(), c + p_set[k]);
            out.positions[k].push_back(
                static_cast<std::size_t>(it - out.design.indices.begin()));
        }
    }
    return out;
}

class GaussianTupleSampler final : public TupleSampler {
  public:
    GaussianTupleSampler(const GaussianTrajectorySampler& sampler, TranslatedDesign design,
                         const CylinderPartition& cylinder)
        : sampler_(sampler),
          design_(std::move(design)),
          cylinder_(cylinder),
          draw_buf_(design_.design.dimension),
          proj_buf_(cylinder.coords().size()) {}

    void draw(rng::Stream& stream, std::span<std::uint32_t> out) override {
        sampler_.draw(design_.design, stream, draw_buf_);
        for (std::size_t k = 0; k < out.size(); ++k) {
            const auto& pos = design_.positions[k];
            for (std::size_t i = 0; i < pos.size(); ++i) proj_buf_[i] = draw_buf_[pos[i]];
            out[k] = cylinder_.label(proj_buf_);
        }
    }

  private:
    const GaussianTrajectorySampler& sampler_;
    TranslatedDesign design_;
    const CylinderPartition& cylinder_;
    std::vector<double> draw_buf_;
    std::vector<double> proj_buf_;
};

}  // namespace

std::unique_ptr<TupleSampler> GaussianSystem::tuple_sampler(
    const SystemPartition& xi, std::span<const std::int64_t> iterates) const {
    detail::check_iterates(iterates);
    const auto* cylinder = dynamic_cast<const CylinderPartition*>(&xi);
    if (!cylinder)
        throw UnsupportedOperationError("gaussian: partition '" + xi.id() +
                                        "' is not a CylinderPartition");
    return std::make_unique<GaussianTupleSampler>(
        *sampler_, build_translated_design(*sampler_, *cylinder, iterates), *cylinder);
}

// --- independence test ------------------------------------------------------

IndependenceReport independence_test(const GaussianTrajectorySampler& sampler,
                                     const CylinderPartition& cylinder,
                                     std::span<const std::int64_t> p_set,
                                     std::uint64_t n_samples, std::uint64_t seed) {
    detail::check_iterates(p_set);
    if (n_samples == 0) throw InvalidArgumentError("independence_test: needs samples");
    const std::size_t cells = cylinder.cell_count();
    const std::size_t arity = p_set.size();
    const auto support = detail::packed_support(cells, arity, kIndependenceSupportCap);
    if (!support)
        throw CombinatorialExplosionError(
            "independence_test: joint support exceeds cap; reduce |P_j| or cells");

    TranslatedDesign design = build_translated_design(sampler, cylinder, p_set);
    std::vector<std::uint64_t> joint(*support, 0);
    std::vector<std::vector<std::uint64_t>> marginals(arity,
                                                      std::vector<std::uint64_t>(cells, 0));

    std::vector<double> draw_buf(design.design.dimension);
    std::vector<double> proj_buf(cylinder.coords().size());
    std::vector<std::uint32_t> labels(arity);
    const std::uint64_t n_batches = (n_samples + rng::kBatchSize - 1) / rng::kBatchSize;
    for (std::uint64_t b = 0; b < n_batches; ++b) {
        rng::Stream stream = rng::batch_stream(seed, b);
        const std::uint64_t lo = b * rng::kBatchSize;
        const std::uint64_t batch = std::min<std::uint64_t>(rng::kBatchSize, n_samples - lo);
        for (std::uint64_t s = 0; s < batch; ++s) {
            sampler.draw(design.design, stream, draw_buf);
            std::uint64_t packed = 0, radix = 1;
            for (std::size_t k = 0; k < arity; ++k) {
                const auto& pos = design.positions[k];
                for (std::size_t i = 0; i < pos.size(); ++i) proj_buf[i] = draw_buf[pos[i]];
                labels[k] = cylinder.label(proj_buf);
                ++marginals[k][labels[k]];
                packed += labels[k] * radix;
                radix *= cells;
            }
            ++joint[packed];
        }
    }

    const double n = static_cast<double>(n_samples);
    double tv = 0.0;
    for (std::uint64_t packed = 0; packed < *support; ++packed) {
        double product = 1.0;
        std::uint64_t rest = packed;
        for (std::size_t k = 0; k < arity; ++k) {
            product *= static_cast<double>(marginals[k][rest % cells]) / n;
            rest /= cells;
        }
        tv += std::abs(static_cast<double>(joint[packed]) / n - product);
    }
    tv *= 0.5;

    IndependenceReport report;
    report.tv_distance = tv;
    report.tolerance = 5.0 * std::sqrt(static_cast<double>(*support) / n);
    report.independent = tv < report.tolerance;
    report.support = *support;
    report.n_samples = n_samples;
    return report;
}

// --- Hermite chaos -----------------------------------------------------------

double hermite_polynomial(int degree, double x) {
    if (degree < 0) throw InvalidArgumentError("hermite_polynomial: degree must be >= 0");
    double prev = 1.0;  // He_0
    if (degree == 0) return prev;
    double cur = x;  // He_1
    for (int m = 1; m < degree; ++m) {
        const double next = x * cur - static_cast<double>(m) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double hermite_chaos_covariance(int degree, double rho) {
    if (degree < 1) throw InvalidArgumentError("hermite_chaos_covariance: degree must be >= 1");
    if (rho < -1.0 || rho > 1.0)
        throw InvalidArgumentError("hermite_chaos_covariance: |rho| must be <= 1");
    double out = 1.0;
    for (int k = 0; k < degree; ++k) out *= rho;
    return out;
}

// --- orthogonality-driven partition -----------------------------------------

OrthogonalityPartition orthogonality_driven_partition(
    const GaussianTrajectorySampler& sampler, std::string id,
    std::vector<std::int64_t> coords, std::vector<std::vector<double>> thresholds,
    std::span<const std::int64_t> p_set) {
    detail::check_iterates(p_set);
    OrthogonalityPartition out{
        CylinderPartition::make(sampler, std::move(id), coords, std::move(thresholds)),
        false, 0.0};

    // Certificate requires r = 0 across every cross pair of distinct
    // translates of the coordinate set.
    double max_cross = 0.0;
    for (std::size_t i = 0; i < p_set.size(); ++i)
        for (std::size_t k = i + 1; k < p_set.size(); ++k)
            for (const auto a : out.partition.coords())
                for (const auto b : out.partition.coords()) {
                    const auto lag = (a + p_set[i]) - (b + p_set[k]);
                    max_cross = std::max(max_cross, std::abs(sampler.covariance(lag)));
                }
    out.max_cross_covariance = max_cross;
    out.certificate = max_cross <= kCertificateTolerance;
    return out;
}

// --- distribution tests -------------------------------------------------------

StationarityReport stationarity_test(const GaussianTrajectorySampler& sampler,
                                     const CylinderPartition& cylinder, std::int64_t shift,
                                     std::uint64_t n_samples, std::uint64_t seed) {
    if (n_samples < 2) throw InvalidArgumentError("stationarity_test: needs samples");
    const std::size_t cells = cylinder.cell_count();

    auto count_labels = [&](std::int64_t offset, std::uint64_t stream_seed) {
        std::vector<std::int64_t> shifted;
        shifted.reserve(cylinder.coords().size());
        for (const auto c : cylinder.coords()) shifted.push_back(c + offset);
        const auto design = sampler.prepare(shifted);
        std::vector<std::size_t> pos(shifted.size());
        for (std::size_t i = 0; i < shifted.size(); ++i)
            pos[i] = static_cast<std::size_t>(
                std::lower_bound(design.indices.begin(), design.indices.end(), shifted[i]) -
                design.indices.begin());
        std::vector<std::uint64_t> counts(cells, 0);
        std::vector<double> draw_buf(design.dimension);
        std::vector<double> proj(shifted.size());
        const std::uint64_t n_batches = (n_samples + rng::kBatchSize - 1) / rng::kBatchSize;
        for (std::uint64_t b = 0; b < n_batches; ++b) {
            rng::Stream stream = rng::batch_stream(stream_seed, b);
            const std::uint64_t lo = b * rng::kBatchSize;
            const std::uint64_t batch =
                std::min<std::uint64_t>(rng::kBatchSize, n_samples - lo);
            for (std::uint64_t s = 0; s < batch; ++s) {
                sampler.draw(design, stream, draw_buf);
                for (std::size_t i = 0; i < pos.size(); ++i) proj[i] = draw_buf[pos[i]];
                ++counts[cylinder.label(proj)];
            }
        }
        return counts;
    };

    const auto c1 = count_labels(0, rng::derive_seed(seed, 0));
    const auto c2 = count_labels(shift, rng::derive_seed(seed, 1));

    const double n1 = static_cast<double>(n_samples);
    const double n2 = static_cast<double>(n_samples);
    double statistic = 0.0;
    std::size_t occupied = 0;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const double a = static_cast<double>(c1[cell]);
        const double b = static_cast<double>(c2[cell]);
        if (a + b == 0.0) continue;
        ++occupied;
        const double term = std::sqrt(n2 / n1) * a - std::sqrt(n1 / n2) * b;
        statistic += term * term / (a + b);
    }
    StationarityReport report;
    report.statistic = statistic;
    report.dof = occupied > 1 ? occupied - 1 : 1;
    boost::math::chi_squared_distribution<double> chi2(static_cast<double>(report.dof));
    report.p_value = boost::math::cdf(boost::math::complement(chi2, statistic));
    report.pass_at_1pct = report.p_value > 0.01;
    return report;
}

std::string trajectory_csv(const GaussianTrajectorySampler& sampler,
                           std::span<const std::int64_t> indices, std::uint64_t seed) {
    const auto values = sampler.sample_trajectory(indices, seed);
    std::vector<std::int64_t> sorted(indices.begin(), indices.end());
    std::sort(sorted.begin(), sorted.end());
    std::ostringstream out;
    out.precision(17);
    out << "index,value\n";
    for (std::size_t i = 0; i < sorted.size(); ++i)
        out << sorted[i] << ',' << values[i] << '\n';
    return out.str();
}

nlohmann::json sampler_spec(const GaussianTrajectorySampler& sampler) {
    return nlohmann::json{{"sigma", sampler.sigma().to_json()},
                          {"horizon", sampler.horizon()},
                          {"max_dimension", sampler.max_dimension()}};
}

GaussianTrajectorySampler sampler_from_spec(const nlohmann::json& doc) {
    return GaussianTrajectorySampler(SpectralMeasure::from_json(doc.at("sigma")),
                                     doc.at("horizon").get<std::int64_t>(),
                                     doc.value("max_dimension", std::size_t{64}));
}

KsReport ks_test_standard_normal(std::vector<double> values) {
    if (values.empty()) throw InvalidArgumentError("ks_test: empty sample");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double cdf = normal_cdf(values[i]);
        const double hi = static_cast<double>(i + 1) / n - cdf;
        const double lo = cdf - static_cast<double>(i) / n;
        d = std::max({d, hi, lo});
    }
    KsReport report;
    report.statistic = d;
    // c(alpha) = sqrt(-ln(alpha/2)/2) with alpha = 0.01.
    report.critical_1pct = 1.6276236115189503 / std::sqrt(n);
    report.pass_at_1pct = d < report.critical_1pct;
    return report;
}

}  // namespace pentropy
