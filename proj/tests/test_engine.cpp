#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pentropy/engine.hpp"
#include "pentropy/errors.hpp"

using namespace pentropy;

namespace {

const EstimationMode kExact{};

EstimationMode sampled_mode(std::uint64_t n, std::uint64_t seed) {
    EstimationMode mode;
    mode.prefer_exact = false;
    mode.plan.n_samples = n;
    mode.plan.seed = seed;
    return mode;
}

}  // namespace

TEST_CASE("h_j on the identity: H(xi)/|P_j| exactly") {
    const IdentitySystem identity;
    const MassPartition xi("fair", Partition::from_masses({0.5, 0.5}));
    const auto est = h_j(identity, xi, std::vector<std::int64_t>{2, 4, 6, 8, 10}, kExact);
    CHECK(est.value == doctest::Approx(std::log(2.0) / 5.0).epsilon(1e-14));
    CHECK(est.std_error == 0.0);
    CHECK(est.method == JoinMethod::exact);
}

TEST_CASE("h_j on a Bernoulli generator: ln 2 exactly (independence maximality)") {
    const BernoulliSystem fair({0.5, 0.5});
    const SymbolPartition gen = fair.generating_partition();
    const auto est = h_j(fair, gen, std::vector<std::int64_t>{1, 2, 3}, kExact);
    CHECK(est.value == doctest::Approx(std::log(2.0)).epsilon(1e-13));
    CHECK(est.support == 8);

    // Sampled mode agrees within its own error bar.
    const auto sampled =
        h_j(fair, gen, std::vector<std::int64_t>{1, 2, 3}, sampled_mode(200000, 3));
    CHECK(sampled.method == JoinMethod::sampled);
    CHECK(sampled.std_error > 0.0);
    CHECK(std::abs(sampled.value - std::log(2.0)) < 3 * sampled.std_error + 1e-3);
}

TEST_CASE("h_j on the golden-mean rotation with P = {3,6,9,12}") {
    const RotationSystem rotation = RotationSystem::golden_mean();
    const ArcPartition arcs("halves", {Real50(0), Real50(1) / 2});
    const auto est = h_j(rotation, arcs, std::vector<std::int64_t>{3, 6, 9, 12}, kExact);
    // Frozen from the 60-digit endpoint-enumeration oracle.
    CHECK(est.value == doctest::Approx(0.50771837042994255828).epsilon(1e-12));
    CHECK(est.value > 0.0);
    CHECK(est.value <= std::log(8.0) / 4.0 + 1e-12);
}

TEST_CASE("subadditivity: h_j never exceeds H(xi)") {
    const RotationSystem rotation = RotationSystem::golden_mean();
    for (int depth = 1; depth <= 3; ++depth) {
        const ArcPartition arcs = ArcPartition::dyadic(depth);
        for (const auto& p_set :
             {std::vector<std::int64_t>{1, 2}, std::vector<std::int64_t>{5, 10, 15},
              std::vector<std::int64_t>{7, 14, 21, 28}}) {
            const auto est = h_j(rotation, arcs, p_set, kExact);
            CHECK(est.value <= arcs.abstract().entropy() + 1e-12);
        }
    }
}

TEST_CASE("identity scaling: h_j * |P_j| = H(xi) exactly") {
    const IdentitySystem identity;
    const MassPartition xi("skew", Partition::from_masses({0.2, 0.3, 0.5}));
    const double h_xi = xi.abstract().entropy();
    for (const auto& p_set :
         {std::vector<std::int64_t>{4}, std::vector<std::int64_t>{1, 2, 3, 4, 5, 6, 7}}) {
        const auto est = h_j(identity, xi, p_set, kExact);
        CHECK(est.value * static_cast<double>(p_set.size()) ==
              doctest::Approx(h_xi).epsilon(1e-13));
    }
}

TEST_CASE("monotone refinement: finer arcs never lower exact h_j") {
    const RotationSystem rotation = RotationSystem::golden_mean();
    const std::vector<std::int64_t> p_set{2, 4, 6};
    double previous = -1.0;
    for (int depth = 1; depth <= 4; ++depth) {
        const ArcPartition arcs = ArcPartition::dyadic(depth);
        const auto est = h_j(rotation, arcs, p_set, kExact);
        CHECK(est.value >= previous - 1e-12);
        previous = est.value;
    }
}

TEST_CASE("h_p tail-max report on the identity") {
    const IdentitySystem identity;
    const MassPartition xi("fair", Partition::from_masses({0.5, 0.5}));
    const auto seq = ProgressionSequence::length_equals_j(10);
    const PEntropyReport report = h_p(identity, xi, seq, 0.5, kExact);

    REQUIRE(report.per_j.size() == 10);
    for (const auto& row : report.per_j)
        CHECK(row.h_value ==
              doctest::Approx(std::log(2.0) / static_cast<double>(row.j)).epsilon(1e-13));
    // Final row is ln2/10, trending to 0; the limsup stand-in is the max
    // over the last ceil(0.5 * 10) = 5 rows, attained at j = 6.
    CHECK(report.per_j.back().h_value == doctest::Approx(std::log(2.0) / 10).epsilon(1e-13));
    CHECK(report.tail_window == 5);
    CHECK(report.h_p_estimate == doctest::Approx(std::log(2.0) / 6).epsilon(1e-13));
    CHECK(report.partition_entropy == doctest::Approx(std::log(2.0)));

    CHECK_THROWS_AS(h_p(identity, xi, ProgressionSequence({{1, 1}}), 0.5, kExact),
                    InvalidArgumentError);
    CHECK_THROWS_AS(h_p(identity, xi, seq, 0.0, kExact), InvalidArgumentError);
}

TEST_CASE("h_p on a Bernoulli generator stays at ln 2") {
    const BernoulliSystem fair({0.5, 0.5});
    const SymbolPartition gen = fair.generating_partition();
    const auto seq = ProgressionSequence::length_equals_j(8);
    const PEntropyReport report = h_p(fair, gen, seq, 0.5, kExact);
    CHECK(report.h_p_estimate == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    for (const auto& row : report.per_j)
        CHECK(row.h_value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("per-j rows respect the estimator band (3 stderr)") {
    const BernoulliSystem fair({0.5, 0.5});
    const SymbolPartition gen = fair.generating_partition();
    const auto seq = ProgressionSequence::length_equals_j(6);
    const PEntropyReport report = h_p(fair, gen, seq, 0.5, sampled_mode(150000, 5));
    const double h_xi = report.partition_entropy;
    for (const auto& row : report.per_j) {
        CHECK(row.method == JoinMethod::sampled);
        CHECK(row.h_value <= h_xi + 3 * row.std_error + 2e-3);
    }
}

TEST_CASE("h_p_sup picks the maximizing witness") {
    const BernoulliSystem fair({0.5, 0.5});
    const SymbolPartition gen = fair.generating_partition();
    const SymbolPartition trivial_ish = fair.group_partition("merged", {0, 0});
    const std::vector<const SystemPartition*> family{&trivial_ish, &gen};
    const auto seq = ProgressionSequence::length_equals_j(6);
    const SupResult sup = h_p_sup(fair, family, seq, 0.5, kExact);
    CHECK(sup.lower_bound == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(sup.witness_id == "generator");
    CHECK_THROWS_AS(
        h_p_sup(fair, std::vector<const SystemPartition*>{}, seq, 0.5, kExact),
        InvalidArgumentError);
}

TEST_CASE("h_p_sup on the identity decays with growing L") {
    const IdentitySystem identity;
    const MassPartition a("a", Partition::from_masses({0.5, 0.5}));
    const MassPartition b("b", Partition::uniform(4));
    const std::vector<const SystemPartition*> family{&a, &b};
    const SupResult short_run =
        h_p_sup(identity, family, ProgressionSequence::length_equals_j(10), 0.5, kExact);
    const SupResult long_run =
        h_p_sup(identity, family, ProgressionSequence::length_equals_j(40), 0.5, kExact);
    CHECK(long_run.lower_bound < short_run.lower_bound);
    CHECK(long_run.lower_bound < 0.07);  // ln4 / 21
}

TEST_CASE("cpe probe separates the Bernoulli shift from the identity") {
    const auto seq = ProgressionSequence::length_equals_j(8);

    const BernoulliSystem fair({0.5, 0.5});
    const SymbolPartition gen = fair.generating_partition();
    const std::vector<const SystemPartition*> bern_family{&gen};
    const CpeReport positive = cpe_probe(fair, bern_family, seq, 0.1, 0.5, kExact);
    CHECK(positive.all_positive);
    CHECK(positive.min_h_p == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(positive.failing_partitions.empty());

    const IdentitySystem identity;
    const MassPartition xi("fair", Partition::from_masses({0.5, 0.5}));
    const std::vector<const SystemPartition*> id_family{&xi};
    // Tail window of L(j)=j, j<=14 starts at j=8, where ln2/8 < 0.1.
    const auto longer = ProgressionSequence::length_equals_j(14);
    const CpeReport negative = cpe_probe(identity, id_family, longer, 0.1, 0.5, kExact);
    CHECK_FALSE(negative.all_positive);
    CHECK(negative.min_h_p < 0.15);
    REQUIRE(negative.failing_partitions.size() == 1);
    CHECK(negative.failing_partitions[0] == "fair");
}

TEST_CASE("cpe probe rejects trivial partitions by name") {
    const IdentitySystem identity;
    const MassPartition trivial("lonely", Partition::from_masses({1.0, 0.0}));
    const std::vector<const SystemPartition*> family{&trivial};
    const auto seq = ProgressionSequence::length_equals_j(4);
    try {
        cpe_probe(identity, family, seq, 0.1, 0.5, kExact);
        FAIL("expected InvalidArgumentError");
    } catch (const InvalidArgumentError& e) {
        CHECK(std::string(e.what()).find("lonely") != std::string::npos);
    }
}

TEST_CASE("cpe probe: rotations fail for growing progressions (arc-count bound)") {
    const RotationSystem rotation = RotationSystem::golden_mean();
    const auto family = dyadic_arc_family(2);
    const auto view = family_view(family);
    // Tail window starts at j = 31 where the cap ln(4 L)/L is far below 0.2.
    const auto seq = ProgressionSequence::length_equals_j(40);
    const CpeReport probe = cpe_probe(rotation, view, seq, 0.2, 0.25, kExact);
    CHECK_FALSE(probe.all_positive);
    CHECK(probe.min_h_p < 0.2);
}

TEST_CASE("cpe default threshold is 3x the pooled stderr") {
    const BernoulliSystem fair({0.5, 0.5});
    const SymbolPartition gen = fair.generating_partition();
    const std::vector<const SystemPartition*> family{&gen};
    const auto seq = ProgressionSequence::length_equals_j(5);
    const CpeReport probe =
        cpe_probe(fair, family, seq, 0.0, 0.5, sampled_mode(50000, 9));
    CHECK(probe.threshold > 0.0);
    CHECK(probe.threshold ==
          doctest::Approx(3.0 * probe.reports[0].pooled_std_error).epsilon(1e-12));
    CHECK(probe.all_positive);
}

TEST_CASE("report serialization carries the CSV row schema") {
    const IdentitySystem identity;
    const MassPartition xi("fair", Partition::from_masses({0.5, 0.5}));
    const auto seq = ProgressionSequence::length_equals_j(4);
    const PEntropyReport report = h_p(identity, xi, seq, 0.5, kExact);
    const std::string csv = report.to_csv_rows();
    CHECK(csv.find("fair,1,1,") == 0);
    CHECK(csv.find(",exact\n") != std::string::npos);
    const auto doc = report.to_json();
    CHECK(doc.at("per_j").size() == 4);
    CHECK(doc.at("h_P_estimate").get<double>() == doctest::Approx(report.h_p_estimate));
}

TEST_CASE("skipped entries are tolerated only when requested") {
    const BernoulliSystem fair({0.5, 0.5});
    const SymbolPartition gen = fair.generating_partition();
    // L(j) = 2^j blows past the support cap at j >= 5 with cap 2^6.
    const auto seq = ProgressionSequence::length_powers_of_two(8);
    EstimationMode mode = sampled_mode(20000, 1);
    mode.plan.support_cap = 64;
    CHECK_THROWS_AS(h_p(fair, gen, seq, 0.5, mode, false), CombinatorialExplosionError);
    const PEntropyReport report = h_p(fair, gen, seq, 0.5, mode, true);
    int skipped = 0;
    for (const auto& row : report.per_j)
        if (row.method == JoinMethod::skipped) ++skipped;
    CHECK(skipped > 0);
}
