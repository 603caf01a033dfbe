#include "pentropy/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "pentropy/errors.hpp"
#include "pentropy/kernels.hpp"

namespace pentropy {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kMassTol = 1e-12;
constexpr std::size_t kMaxPieces = 4096;
constexpr std::size_t kMaxRieszFactors = 14;

double reflected(double x) {
    // Reflection x -> 1-x on the circle, fixing 0.
    return x == 0.0 ? 0.0 : 1.0 - x;
}

void check_symmetry(const std::vector<Atom>& atoms, const std::vector<DensityPiece>& pieces) {
    // Atoms must pair up under reflection with equal masses.
    std::vector<Atom> image;
    image.reserve(atoms.size());
    for (const auto& a : atoms) image.push_back({reflected(a.location), a.mass});
    auto by_loc = [](const Atom& x, const Atom& y) { return x.location < y.location; };
    std::vector<Atom> sorted = atoms;
    std::sort(sorted.begin(), sorted.end(), by_loc);
    std::sort(image.begin(), image.end(), by_loc);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (std::abs(sorted[i].location - image[i].location) > kMassTol ||
            std::abs(sorted[i].mass - image[i].mass) > kMassTol)
            throw InvalidMeasureError("SpectralMeasure: atoms not symmetric under x -> 1-x");
    }

    // Density pieces must map onto each other under reflection.
    std::vector<DensityPiece> mirror;
    mirror.reserve(pieces.size());
    for (const auto& p : pieces) mirror.push_back({1.0 - p.hi, 1.0 - p.lo, p.height});
    auto by_lo = [](const DensityPiece& x, const DensityPiece& y) { return x.lo < y.lo; };
    std::vector<DensityPiece> sorted_pieces = pieces;
    std::sort(sorted_pieces.begin(), sorted_pieces.end(), by_lo);
    std::sort(mirror.begin(), mirror.end(), by_lo);
    for (std::size_t i = 0; i < sorted_pieces.size(); ++i) {
        if (std::abs(sorted_pieces[i].lo - mirror[i].lo) > kMassTol ||
            std::abs(sorted_pieces[i].hi - mirror[i].hi) > kMassTol ||
            std::abs(sorted_pieces[i].height - mirror[i].height) > kMassTol)
            throw InvalidMeasureError("SpectralMeasure: density not symmetric under x -> 1-x");
    }
}

}  // namespace

SpectralMeasure::SpectralMeasure(std::vector<Atom> atoms, std::vector<DensityPiece> pieces,
                                 std::optional<RieszComponent> riesz)
    : atoms_(std::move(atoms)), pieces_(std::move(pieces)), riesz_(std::move(riesz)) {
    double mass = 0.0;
    for (const auto& a : atoms_) {
        if (a.location < 0.0 || a.location >= 1.0)
            throw InvalidMeasureError("SpectralMeasure: atom location outside [0,1)");
        if (a.mass < 0.0) throw InvalidMeasureError("SpectralMeasure: negative atom mass");
        mass += a.mass;
    }
    if (pieces_.size() > kMaxPieces)
        throw InvalidMeasureError("SpectralMeasure: too many density pieces");
    std::vector<DensityPiece> sorted = pieces_;
    std::sort(sorted.begin(), sorted.end(),
              [](const DensityPiece& x, const DensityPiece& y) { return x.lo < y.lo; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& p = sorted[i];
        if (!(p.lo >= 0.0 && p.lo < p.hi && p.hi <= 1.0))
            throw InvalidMeasureError("SpectralMeasure: bad density piece bounds");
        if (p.height < 0.0) throw InvalidMeasureError("SpectralMeasure: negative density");
        if (i > 0 && p.lo < sorted[i - 1].hi - kMassTol)
            throw InvalidMeasureError("SpectralMeasure: overlapping density pieces");
        mass += p.height * (p.hi - p.lo);
    }
    if (riesz_) {
        const auto& rz = *riesz_;
        if (rz.freqs.empty() || rz.freqs.size() != rz.coeffs.size())
            throw InvalidMeasureError("SpectralMeasure: Riesz factor list malformed");
        if (rz.freqs.size() > kMaxRieszFactors)
            throw InvalidMeasureError("SpectralMeasure: too many Riesz factors");
        if (rz.freqs.front() < 1)
            throw InvalidMeasureError("SpectralMeasure: Riesz frequencies must be positive");
        for (std::size_t k = 0; k + 1 < rz.freqs.size(); ++k)
            if (rz.freqs[k + 1] < 3 * rz.freqs[k])
                throw InvalidMeasureError(
                    "SpectralMeasure: Riesz frequencies must be lacunary (n_{k+1} >= 3 n_k)");
        for (const double a : rz.coeffs)
            if (a < -1.0 || a > 1.0)
                throw InvalidMeasureError("SpectralMeasure: Riesz coefficient outside [-1,1]");
        if (rz.weight < 0.0) throw InvalidMeasureError("SpectralMeasure: negative Riesz weight");
        mass += rz.weight;  // the product itself integrates to 1
    }
    if (std::abs(mass - 1.0) > kMassTol)
        throw InvalidMeasureError("SpectralMeasure: total mass " + std::to_string(mass) +
                                  ", outside 1e-12 of 1");
    check_symmetry(atoms_, pieces_);
}

SpectralMeasure SpectralMeasure::lebesgue() {
    return SpectralMeasure({}, {{0.0, 1.0, 1.0}}, std::nullopt);
}

SpectralMeasure SpectralMeasure::dirac_zero() {
    return SpectralMeasure({{0.0, 1.0}}, {}, std::nullopt);
}

std::vector<Atom> SpectralMeasure::atom_pair(double theta, double weight) {
    if (theta < 0.0 || theta >= 1.0)
        throw InvalidMeasureError("atom_pair: theta outside [0,1)");
    if (theta == 0.0 || theta == 0.5) return {{theta, weight}};
    return {{theta, weight / 2}, {1.0 - theta, weight / 2}};
}

SpectralMeasure SpectralMeasure::riesz_product(std::vector<std::int64_t> freqs,
                                               std::vector<double> coeffs) {
    return SpectralMeasure({}, {}, RieszComponent{std::move(freqs), std::move(coeffs), 1.0});
}

double SpectralMeasure::atom_mass_squared() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.mass * a.mass;
    return s;
}

std::vector<double> SpectralMeasure::fourier(std::int64_t n_max) const {
    if (n_max < 0) throw InvalidArgumentError("fourier: n_max must be >= 0");
    std::vector<double> r(static_cast<std::size_t>(n_max) + 1, 0.0);

    for (const auto& a : atoms_)
        for (std::int64_t n = 0; n <= n_max; ++n)
            r[n] += a.mass * std::cos(kTwoPi * static_cast<double>(n) * a.location);

    for (const auto& p : pieces_) {
        r[0] += p.height * (p.hi - p.lo);
        for (std::int64_t n = 1; n <= n_max; ++n) {
            const double w = kTwoPi * static_cast<double>(n);
            r[n] += p.height * (std::sin(w * p.hi) - std::sin(w * p.lo)) / w;
        }
    }

    if (riesz_) {
        // Exact expansion of prod_k (1 + a_k cos(2 pi n_k x)): frequencies
        // are signed sums of the n_k; lacunarity keeps them all distinct.
        std::unordered_map<std::int64_t, double> expansion;
        expansion.emplace(0, 1.0);
        for (std::size_t k = 0; k < riesz_->freqs.size(); ++k) {
            const std::int64_t f = riesz_->freqs[k];
            const double half_a = riesz_->coeffs[k] / 2;
            std::unordered_map<std::int64_t, double> next;
            next.reserve(expansion.size() * 3);
            for (const auto& [freq, coef] : expansion) {
                next[freq] += coef;
                if (half_a != 0.0) {
                    next[freq + f] += coef * half_a;
                    next[freq - f] += coef * half_a;
                }
            }
            expansion = std::move(next);
        }
        // r(n) picks the coefficient of e^{2 pi i n x} alone; the mirrored
        // negative frequency belongs to r(-n) = r(n) and must not be added
        // twice.
        for (const auto& [freq, coef] : expansion)
            if (freq >= 0 && freq <= n_max)
                r[static_cast<std::size_t>(freq)] += riesz_->weight * coef;
    }
    return r;
}

nlohmann::json SpectralMeasure::to_json() const {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : atoms_) atoms.push_back({a.location, a.mass});
    nlohmann::json pieces = nlohmann::json::array();
    for (const auto& p : pieces_) pieces.push_back({p.lo, p.hi, p.height});
    nlohmann::json doc{{"atoms", atoms}, {"density_pieces", pieces}};
    if (riesz_)
        doc["riesz"] = {{"freqs", riesz_->freqs},
                        {"coeffs", riesz_->coeffs},
                        {"weight", riesz_->weight}};
    return doc;
}

SpectralMeasure SpectralMeasure::from_json(const nlohmann::json& doc) {
    std::vector<Atom> atoms;
    if (doc.contains("atoms"))
        for (const auto& a : doc["atoms"])
            atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
    std::vector<DensityPiece> pieces;
    if (doc.contains("density_pieces"))
        for (const auto& p : doc["density_pieces"])
            pieces.push_back(
                {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    std::optional<RieszComponent> riesz;
    if (doc.contains("riesz")) {
        RieszComponent rz;
        rz.freqs = doc["riesz"].at("freqs").get<std::vector<std::int64_t>>();
        rz.coeffs = doc["riesz"].at("coeffs").get<std::vector<double>>();
        rz.weight = doc["riesz"].value("weight", 1.0);
        riesz = std::move(rz);
    }
    return SpectralMeasure(std::move(atoms), std::move(pieces), std::move(riesz));
}

double covariance(const SpectralMeasure& sigma, std::int64_t n) {
    if (n < 0) n = -n;
    return sigma.fourier(n)[static_cast<std::size_t>(n)];
}

std::vector<double> convolution_power_coeffs(std::span<const double> coeffs, int m) {
    if (m < 1) throw InvalidArgumentError("convolution_power_coeffs: power must be >= 1");
    std::vector<double> out(coeffs.begin(), coeffs.end());
    for (auto& v : out) {
        double p = v;
        for (int k = 1; k < m; ++k) p *= v;
        v = p;
    }
    return out;
}

WienerReport wiener_continuity_test(std::span<const double> coeffs, std::int64_t n_limit) {
    if (n_limit < 1) throw InvalidArgumentError("wiener_continuity_test: N must be >= 1");
    if (static_cast<std::size_t>(n_limit) >= coeffs.size())
        throw InvalidArgumentError("wiener_continuity_test: coefficients shorter than N");
    WienerReport report;
    for (std::int64_t n = 2; n <= n_limit; n *= 2) {
        const double mean =
            kernels::sum_squares(coeffs.subspan(1, static_cast<std::size_t>(n))) /
            static_cast<double>(n);
        report.dyadic_means.emplace_back(n, mean);
    }
    if (report.dyadic_means.empty() || report.dyadic_means.back().first != n_limit) {
        const double mean =
            kernels::sum_squares(coeffs.subspan(1, static_cast<std::size_t>(n_limit))) /
            static_cast<double>(n_limit);
        report.dyadic_means.emplace_back(n_limit, mean);
    }
    report.mean_square = report.dyadic_means.back().second;
    report.atom_mass_sq_estimate = report.mean_square;
    return report;
}

const char* ac_verdict_name(AcReport::Verdict v) {
    switch (v) {
        case AcReport::Verdict::converging: return "converging";
        case AcReport::Verdict::diverging: return "diverging";
        case AcReport::Verdict::inconclusive: return "inconclusive";
    }
    return "unknown";
}

AcReport ac_diagnostic(std::span<const double> coeffs, int m, std::int64_t n_limit,
                       double converging_ratio, double diverging_ratio) {
    if (m < 1) throw InvalidArgumentError("ac_diagnostic: power must be >= 1");
    if (n_limit < 4) throw InvalidArgumentError("ac_diagnostic: N must be >= 4");
    if (static_cast<std::size_t>(n_limit) >= coeffs.size())
        throw InvalidArgumentError("ac_diagnostic: coefficients shorter than N");

    AcReport report;
    for (std::int64_t n = 2; n <= n_limit; n *= 2) {
        const double sum =
            kernels::sum_squares_intpow(coeffs.subspan(1, static_cast<std::size_t>(n)), m);
        report.l2_partial_sums.emplace_back(n, sum);
    }
    if (report.l2_partial_sums.back().first != n_limit)
        report.l2_partial_sums.emplace_back(
            n_limit,
            kernels::sum_squares_intpow(coeffs.subspan(1, static_cast<std::size_t>(n_limit)), m));

    // Trend of the dyadic increments decides the verdict.
    const auto& sums = report.l2_partial_sums;
    std::vector<double> increments;
    for (std::size_t i = 1; i < sums.size(); ++i)
        increments.push_back(sums[i].second - sums[i - 1].second);

    const double total = sums.back().second;
    const double tiny = 1e-15 * std::max(1.0, total) + 1e-300;
    double ratio = 0.0;
    bool have_ratio = false;
    for (std::size_t i = 1; i < increments.size(); ++i) {
        if (increments[i - 1] > tiny) {
            ratio = increments[i] / increments[i - 1];
            have_ratio = true;
        }
    }
    report.tail_increment_ratio = ratio;

    if (total < 1e-12 || !have_ratio || ratio < converging_ratio) {
        report.verdict = AcReport::Verdict::converging;
        report.interpretation = "certified a.c. (L2 density for the m-fold convolution power)";
    } else if (ratio > diverging_ratio) {
        report.verdict = AcReport::Verdict::diverging;
        report.interpretation = "no L2 density; singularity NOT certified";
    } else {
        report.verdict = AcReport::Verdict::inconclusive;
        report.interpretation = "trend between thresholds; inconclusive";
    }
    return report;
}

std::vector<double> power_decay_coeffs(double alpha, std::int64_t n_max) {
    if (n_max < 0) throw InvalidArgumentError("power_decay_coeffs: n_max must be >= 0");
    std::vector<double> r(static_cast<std::size_t>(n_max) + 1);
    r[0] = 1.0;
    for (std::int64_t n = 1; n <= n_max; ++n)
        r[n] = std::pow(static_cast<double>(n), -alpha);
    return r;
}

}  // namespace pentropy
