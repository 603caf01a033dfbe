#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "pentropy/engine.hpp"
#include "pentropy/errors.hpp"
#include "pentropy/gaussian.hpp"
#include "pentropy/kernels.hpp"
#include "pentropy/tower.hpp"

using namespace pentropy;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

GaussianTrajectorySampler white_noise(std::int64_t horizon = 64) {
    return GaussianTrajectorySampler(SpectralMeasure::lebesgue(), horizon);
}

GaussianTrajectorySampler atom_pair_sampler(double theta, std::int64_t horizon = 64) {
    return GaussianTrajectorySampler(
        SpectralMeasure(SpectralMeasure::atom_pair(theta, 1.0), {}, std::nullopt), horizon);
}

// Empirical covariance over n draws of a prepared design.
std::vector<double> empirical_covariance(const GaussianTrajectorySampler& sampler,
                                         const GaussianTrajectorySampler::Design& design,
                                         std::uint64_t n, std::uint64_t seed) {
    const std::size_t d = design.dimension;
    std::vector<double> cov(d * d, 0.0);
    std::vector<double> draw(d);
    rng::Stream stream(rng::splitmix64(seed));
    for (std::uint64_t s = 0; s < n; ++s) {
        sampler.draw(design, stream, draw);
        kernels::accumulate_outer_lower(cov, draw);
    }
    for (auto& c : cov) c /= static_cast<double>(n);
    return cov;
}

// Two-dimensional Simpson quadrature oracle for E[He_m(X) He_m(Y)] with
// Y = rho X + sqrt(1-rho^2) Z; independent of the closed form under test.
double hermite_cov_quadrature(int m, double rho) {
    const double s = std::sqrt(1.0 - rho * rho);
    const int n = 400;
    const double lo = -8.0, hi = 8.0;
    const double h = (hi - lo) / n;
    auto weight = [&](int i) {
        if (i == 0 || i == n) return 1.0;
        return i % 2 == 1 ? 4.0 : 2.0;
    };
    const double inv_sqrt_2pi = 0.3989422804014326779399461;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = lo + i * h;
        const double fx = hermite_polynomial(m, x) * inv_sqrt_2pi * std::exp(-x * x / 2);
        double inner = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double z = lo + k * h;
            inner += weight(k) * hermite_polynomial(m, rho * x + s * z) * inv_sqrt_2pi *
                     std::exp(-z * z / 2);
        }
        acc += weight(i) * fx * inner * (h / 3.0);
    }
    return acc * (h / 3.0);
}

double factorial(int m) {
    double f = 1.0;
    for (int k = 2; k <= m; ++k) f *= k;
    return f;
}

}  // namespace

TEST_CASE("covariance of the basic spectral measures") {
    const auto white = white_noise();
    CHECK(white.covariance(0) == doctest::Approx(1.0));
    for (std::int64_t n = 1; n <= 8; ++n)
        CHECK(white.covariance(n) == doctest::Approx(0.0).epsilon(1e-12));

    const double theta = 0.15;
    const auto pair = atom_pair_sampler(theta);
    for (std::int64_t n = 0; n <= 16; ++n) {
        const double expected = std::cos(kTwoPi * static_cast<double>(n) * theta);
        CHECK(pair.covariance(n) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(pair.covariance(-n) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK_THROWS_AS(pair.covariance(100), InvalidArgumentError);
}

TEST_CASE("white noise draws have identity empirical covariance") {
    const auto sampler = white_noise();
    const auto design = sampler.prepare(std::vector<std::int64_t>{0, 1, 2});
    const auto cov = empirical_covariance(sampler, design, 100000, 11);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k <= i; ++k)
            CHECK(cov[i * 3 + k] == doctest::Approx(i == k ? 1.0 : 0.0).epsilon(0.02));
}

TEST_CASE("atom pair draws reproduce cos correlations") {
    const double theta = 0.15;
    const auto sampler = atom_pair_sampler(theta);
    for (const std::int64_t n : {1, 3, 7}) {
        const auto design = sampler.prepare(std::vector<std::int64_t>{0, n});
        const auto cov = empirical_covariance(sampler, design, 100000, 17 + n);
        const double expected = std::cos(kTwoPi * static_cast<double>(n) * theta);
        CHECK(cov[2] == doctest::Approx(expected).epsilon(0.03));
    }
}

TEST_CASE("single-coordinate marginal passes the KS test at 1%") {
    const auto sampler = white_noise();
    const auto design = sampler.prepare(std::vector<std::int64_t>{5});
    rng::Stream stream(rng::splitmix64(23));
    std::vector<double> values(100000);
    std::vector<double> draw(1);
    for (auto& v : values) {
        sampler.draw(design, stream, draw);
        v = draw[0];
    }
    const KsReport ks = ks_test_standard_normal(values);
    CHECK(ks.pass_at_1pct);
    CHECK(ks.statistic < ks.critical_1pct);
}

TEST_CASE("Gram matrices of valid measures stay PSD before clipping") {
    const std::vector<SpectralMeasure> measures{
        SpectralMeasure::lebesgue(),
        SpectralMeasure(SpectralMeasure::atom_pair(0.25, 1.0), {}, std::nullopt),
        SpectralMeasure::riesz_product({3, 9, 27}, {1.0, -1.0, 0.5}),
        SpectralMeasure(SpectralMeasure::atom_pair(0.1, 0.3), {{0.0, 1.0, 0.7}},
                        std::nullopt),
    };
    for (const auto& sigma : measures) {
        const GaussianTrajectorySampler sampler(sigma, 64);
        const auto design =
            sampler.prepare(std::vector<std::int64_t>{0, 1, 2, 3, 5, 8, 13, 21});
        CHECK(design.min_eigenvalue >= -1e-8);
    }
}

TEST_CASE("prepare rejects malformed index sets") {
    const auto sampler = white_noise(16);
    CHECK_THROWS_AS(sampler.prepare(std::vector<std::int64_t>{1, 1}), InvalidArgumentError);
    CHECK_THROWS_AS(sampler.prepare(std::vector<std::int64_t>{0, 20}),
                    InvalidArgumentError);
    CHECK_THROWS_AS(sampler.prepare(std::vector<std::int64_t>{}), InvalidArgumentError);
    const GaussianTrajectorySampler tiny(SpectralMeasure::lebesgue(), 64, 2);
    CHECK_THROWS_AS(tiny.prepare(std::vector<std::int64_t>{0, 1, 2}), InvalidArgumentError);
}

TEST_CASE("independence holds for white noise along any progression") {
    const auto sampler = white_noise();
    const auto cylinder = CylinderPartition::sign(sampler, 0);
    const IndependenceReport report =
        independence_test(sampler, cylinder, std::vector<std::int64_t>{1, 2, 3}, 200000, 5);
    CHECK(report.support == 8);
    CHECK(report.independent);
    CHECK(report.tv_distance < 0.02);
}

TEST_CASE("period-4 correlations destroy independence (r(4) = 1)") {
    const auto sampler = atom_pair_sampler(0.25);
    CHECK(sampler.covariance(4) == doctest::Approx(1.0).epsilon(1e-12));
    const auto cylinder = CylinderPartition::sign(sampler, 0);
    const IndependenceReport report =
        independence_test(sampler, cylinder, std::vector<std::int64_t>{4, 8}, 100000, 5);
    CHECK_FALSE(report.independent);
    CHECK(report.tv_distance > 0.3);
}

TEST_CASE("a single translate is trivially independent") {
    const auto sampler = atom_pair_sampler(0.25);
    const auto cylinder = CylinderPartition::sign(sampler, 0);
    const IndependenceReport report =
        independence_test(sampler, cylinder, std::vector<std::int64_t>{4}, 20000, 5);
    CHECK(report.tv_distance == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("hermite chaos covariance is rho^m") {
    CHECK(hermite_chaos_covariance(1, 0.3) == doctest::Approx(0.3));
    CHECK(hermite_chaos_covariance(2, -1.0) == doctest::Approx(1.0));
    CHECK(hermite_chaos_covariance(3, -0.5) == doctest::Approx(-0.125));
    CHECK_THROWS_AS(hermite_chaos_covariance(0, 0.5), InvalidArgumentError);
    CHECK_THROWS_AS(hermite_chaos_covariance(2, 1.5), InvalidArgumentError);

    // Quadrature oracle: E[He_2(X) He_2(Y)] / 2! = rho^2 at rho = 0.5.
    const double oracle = hermite_cov_quadrature(2, 0.5) / factorial(2);
    CHECK(oracle == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(hermite_chaos_covariance(2, 0.5) == doctest::Approx(oracle).epsilon(1e-5));
    // And degree 3 at rho = 0.4.
    const double oracle3 = hermite_cov_quadrature(3, 0.4) / factorial(3);
    CHECK(hermite_chaos_covariance(3, 0.4) == doctest::Approx(oracle3).epsilon(1e-5));
}

TEST_CASE("orthogonality-driven partitions carry sound certificates") {
    // White noise: any disjoint translates are certified.
    const auto white = white_noise();
    const auto granted = orthogonality_driven_partition(
        white, "w", {0}, {{0.0}}, std::vector<std::int64_t>{1, 2, 3});
    CHECK(granted.certificate);
    CHECK(granted.max_cross_covariance <= 1e-12);

    // theta = 1/4 and translates differing by 4: r(4) = 1, withheld.
    const auto quarter = atom_pair_sampler(0.25);
    const auto withheld = orthogonality_driven_partition(
        quarter, "q", {0}, {{0.0}}, std::vector<std::int64_t>{4, 8});
    CHECK_FALSE(withheld.certificate);
    CHECK(withheld.max_cross_covariance == doctest::Approx(1.0));

    // theta = 1/8 with P = {2, 8}: the only cross lag is 6 with r(6) = 0,
    // while r(4) = -1 lives off the difference set; certified.
    const auto eighth = atom_pair_sampler(0.125);
    CHECK(eighth.covariance(4) == doctest::Approx(-1.0).epsilon(1e-12));
    const auto offset = orthogonality_driven_partition(
        eighth, "e", {0}, {{0.0}}, std::vector<std::int64_t>{2, 8});
    CHECK(offset.certificate);
}

TEST_CASE("certificate soundness: certified partitions give independent labels and maximal h_j") {
    const auto sampler_ptr = std::make_shared<const GaussianTrajectorySampler>(
        SpectralMeasure(SpectralMeasure::atom_pair(0.125, 1.0), {}, std::nullopt), 64);
    const auto& sampler = *sampler_ptr;
    const std::vector<std::int64_t> p_set{2, 8};
    const auto granted =
        orthogonality_driven_partition(sampler, "cert", {0}, {{0.0}}, p_set);
    REQUIRE(granted.certificate);

    const IndependenceReport indep =
        independence_test(sampler, granted.partition, p_set, 200000, 7);
    CHECK(indep.tv_distance < indep.tolerance);

    const GaussianSystem system(sampler_ptr);
    EstimationMode mode;
    mode.prefer_exact = false;
    mode.plan.n_samples = 200000;
    mode.plan.seed = 7;
    const auto est = h_j(system, granted.partition, p_set, mode);
    const double h_xi = granted.partition.abstract().entropy();
    CHECK(std::abs(est.value - h_xi) <= 3 * est.std_error + 1e-3);
}

TEST_CASE("gaussian systems have no exact joins") {
    const auto sampler_ptr =
        std::make_shared<const GaussianTrajectorySampler>(SpectralMeasure::lebesgue(), 32);
    const GaussianSystem system(sampler_ptr);
    const auto cylinder = CylinderPartition::sign(*sampler_ptr, 0);
    CHECK_FALSE(system.exact_join_capable());
    CHECK_THROWS_AS(system.exact_join(cylinder, std::vector<std::int64_t>{1, 2}),
                    UnsupportedOperationError);
}

TEST_CASE("cylinder masses: sign and quantile splits") {
    const auto sampler = white_noise();
    const auto sign = CylinderPartition::sign(sampler, 0);
    CHECK(sign.cell_count() == 2);
    CHECK(sign.abstract().masses()[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sign.mass_method() == "cdf_product");

    const auto quart = CylinderPartition::quantiles(sampler, 0, 4);
    CHECK(quart.cell_count() == 4);
    for (const double m : quart.abstract().masses())
        CHECK(m == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(quart.abstract().entropy() == doctest::Approx(std::log(4.0)).epsilon(1e-9));

    // Labeling is the box index.
    CHECK(sign.label(std::vector<double>{-0.5}) == 0);
    CHECK(sign.label(std::vector<double>{0.5}) == 1);
}

TEST_CASE("correlated multi-coordinate cylinders fall back to Monte-Carlo masses") {
    const auto sampler = atom_pair_sampler(0.125);
    // lag 1: r(1) = cos(pi/4) != 0, so the cylinder coordinates correlate.
    const auto cyl = CylinderPartition::make(sampler, "pairbox", {0, 1}, {{0.0}, {0.0}});
    CHECK(cyl.mass_method() != "cdf_product");
    double total = 0.0;
    for (const double m : cyl.abstract().masses()) total += m;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    // Positive correlation raises the same-sign masses above 1/4.
    CHECK(cyl.abstract().masses()[0] > 0.3);
    CHECK(cyl.abstract().masses()[3] > 0.3);
}

TEST_CASE("stationarity: shifted cylinder laws agree at the 1% level") {
    const auto sampler = atom_pair_sampler(0.1, 128);
    const auto cylinder = CylinderPartition::quantiles(sampler, 0, 3);
    const StationarityReport report = stationarity_test(sampler, cylinder, 17, 100000, 31);
    CHECK(report.pass_at_1pct);
    CHECK(report.p_value > 0.01);
}

TEST_CASE("white-noise sign-cylinder joins are uniform over 8 tuples at 1e6 samples") {
    const auto sampler_ptr =
        std::make_shared<const GaussianTrajectorySampler>(SpectralMeasure::lebesgue(), 16);
    const GaussianSystem system(sampler_ptr);
    const auto cylinder = CylinderPartition::sign(*sampler_ptr, 0);
    SamplingPlan plan;
    plan.n_samples = 1000000;
    plan.seed = 33;
    const auto joint = system.sampled_join(cylinder, std::vector<std::int64_t>{1, 2, 3}, plan);
    CHECK(joint.support_size() == 8);
    for (const auto& [tuple, mass] : joint.masses())
        CHECK(mass == doctest::Approx(0.125).epsilon(0.04));  // |mass - 1/8| < 0.005
}

TEST_CASE("h_P of the white-noise system stays at H(xi) for sign cylinders") {
    const auto sampler_ptr =
        std::make_shared<const GaussianTrajectorySampler>(SpectralMeasure::lebesgue(), 128);
    const GaussianSystem system(sampler_ptr);
    const auto cylinder = CylinderPartition::sign(*sampler_ptr, 0);
    EstimationMode mode;
    mode.prefer_exact = false;
    mode.plan.n_samples = 150000;
    mode.plan.seed = 8;
    const auto report =
        h_p(system, cylinder, ProgressionSequence::length_equals_j(8), 0.5, mode);
    CHECK(std::abs(report.h_p_estimate - std::log(2.0)) <=
          3 * report.pooled_std_error + 1e-3);
    for (const auto& row : report.per_j)
        CHECK(std::abs(row.h_value - std::log(2.0)) <= 3 * row.std_error + 1e-3);
}

TEST_CASE("h_p_sup over threshold cylinders attains ln k at the finest") {
    const auto sampler_ptr =
        std::make_shared<const GaussianTrajectorySampler>(SpectralMeasure::lebesgue(), 64);
    const GaussianSystem system(sampler_ptr);
    const auto two = CylinderPartition::sign(*sampler_ptr, 0);
    const auto three = CylinderPartition::quantiles(*sampler_ptr, 0, 3);
    const auto four = CylinderPartition::quantiles(*sampler_ptr, 0, 4);
    const std::vector<const SystemPartition*> family{&two, &three, &four};
    EstimationMode mode;
    mode.prefer_exact = false;
    mode.plan.n_samples = 150000;
    mode.plan.seed = 12;
    const auto sup =
        h_p_sup(system, family, ProgressionSequence::length_equals_j(5), 0.5, mode);
    CHECK(sup.witness_id == "quantiles4@0");
    CHECK(sup.lower_bound == doctest::Approx(std::log(4.0)).epsilon(0.01));
}

TEST_CASE("cpe probe: white-noise sign cylinders over coordinates 0..4 all positive") {
    const auto sampler_ptr =
        std::make_shared<const GaussianTrajectorySampler>(SpectralMeasure::lebesgue(), 64);
    const GaussianSystem system(sampler_ptr);
    std::vector<CylinderPartition> cylinders;
    for (std::int64_t c = 0; c <= 4; ++c)
        cylinders.push_back(CylinderPartition::sign(*sampler_ptr, c));
    std::vector<const SystemPartition*> family;
    for (const auto& c : cylinders) family.push_back(&c);
    EstimationMode mode;
    mode.prefer_exact = false;
    mode.plan.n_samples = 100000;
    mode.plan.seed = 13;
    const auto probe =
        cpe_probe(system, family, ProgressionSequence::length_equals_j(5), 0.1, 0.5, mode);
    CHECK(probe.all_positive);
    CHECK(probe.min_h_p > 0.6);
}

TEST_CASE("tower markers export collision-free coordinate designs") {
    // The level separation certified by check_disjoint means translated
    // coordinate sets never collide, which is exactly the coordinate
    // design the cylinder machinery needs.
    const auto seq = ProgressionSequence::length_equals_j(3);
    const SynthesisReport synthesis = sidon_spacer_synthesis(seq, 3);
    const auto coords = marker_coordinates(*synthesis.tower, 3, 2);
    const auto p_set = seq.progression(2);  // {3, 6, 9}

    std::set<std::int64_t> translated;
    for (const auto p : p_set)
        for (const auto c : coords) translated.insert(c + p);
    CHECK(translated.size() == coords.size() * p_set.size());

    // White noise over that design: certificate granted, labels independent.
    const std::int64_t spread = *translated.rbegin() - *translated.begin();
    const GaussianTrajectorySampler sampler(SpectralMeasure::lebesgue(), spread + 1, 64);
    std::vector<std::vector<double>> thresholds(coords.size(), std::vector<double>{0.0});
    const auto granted =
        orthogonality_driven_partition(sampler, "tower_coords", coords, thresholds, p_set);
    CHECK(granted.certificate);
    const auto indep = independence_test(sampler, granted.partition, p_set, 100000, 3);
    CHECK(indep.independent);
}

TEST_CASE("trajectory CSV dump and sampler spec round trip") {
    const GaussianTrajectorySampler sampler(
        SpectralMeasure(SpectralMeasure::atom_pair(0.1, 1.0), {}, std::nullopt), 32);
    const std::string csv =
        trajectory_csv(sampler, std::vector<std::int64_t>{0, 3, 7}, 19);
    CHECK(csv.find("index,value\n0,") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 rows
    // Same seed, same draw.
    CHECK(csv == trajectory_csv(sampler, std::vector<std::int64_t>{0, 3, 7}, 19));

    const GaussianTrajectorySampler back = sampler_from_spec(sampler_spec(sampler));
    CHECK(back.horizon() == sampler.horizon());
    for (std::int64_t n = 0; n <= 8; ++n)
        CHECK(back.covariance(n) == doctest::Approx(sampler.covariance(n)).epsilon(1e-14));
}

TEST_CASE("even-degree chaos observables are exactly sign-invariant") {
    const auto sampler = atom_pair_sampler(0.1);
    const auto design = sampler.prepare(std::vector<std::int64_t>{0, 3, 6});
    rng::Stream stream(rng::splitmix64(41));
    std::vector<double> draw(design.dimension);
    for (int trial = 0; trial < 200; ++trial) {
        sampler.draw(design, stream, draw);
        for (const double x : draw) {
            CHECK(hermite_polynomial(2, x) == hermite_polynomial(2, -x));
            CHECK(hermite_polynomial(4, x) == hermite_polynomial(4, -x));
            // Odd chaos flips sign, which is what the even factor quotients out.
            CHECK(hermite_polynomial(3, x) == -hermite_polynomial(3, -x));
        }
    }
}
