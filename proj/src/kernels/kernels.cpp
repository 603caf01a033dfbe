// Arithmetic kernel dispatch and scalar reference lane.
//
// The scalar lane is the semantic reference: every SIMD lane must agree
// with it up to summation-order rounding, which the kernel equivalence
// tests enforce.

#include "pentropy/kernels.hpp"

#include <cstddef>

#include "pentropy/errors.hpp"

namespace pentropy::kernels {

namespace {

double scalar_dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double scalar_sum_squares(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

double scalar_sum_squares_intpow(const double* a, std::size_t n, int m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double p = a[i];
        for (int k = 1; k < m; ++k) p *= a[i];
        acc += p * p;
    }
    return acc;
}

double scalar_l1_distance(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d < 0.0 ? -d : d;
    }
    return acc;
}

void scalar_matvec(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

void scalar_accumulate_outer_lower(double* c, const double* x, std::size_t d) {
    for (std::size_t i = 0; i < d; ++i) {
        double* row = c + i * d;
        const double xi = x[i];
        for (std::size_t j = 0; j <= i; ++j) row[j] += xi * x[j];
    }
}

constexpr detail::Table kScalarTable = {
    scalar_dot,          scalar_sum_squares, scalar_sum_squares_intpow,
    scalar_l1_distance,  scalar_matvec,      scalar_accumulate_outer_lower,
};

bool cpu_has_avx2() {
#if defined(PENTROPY_HAVE_AVX2_BUILD) && (defined(__x86_64__) || defined(_M_X64))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

struct State {
    Isa isa;
    const detail::Table* table;
};

State detect_best() {
#if defined(PENTROPY_HAVE_AVX2_BUILD)
    if (cpu_has_avx2()) return {Isa::avx2, &detail::avx2_table()};
#endif
    return {Isa::scalar, &detail::scalar_table()};
}

State& state() {
    static State s = detect_best();
    return s;
}

}  // namespace

namespace detail {
const Table& scalar_table() { return kScalarTable; }
}  // namespace detail

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    if (isa == Isa::scalar) return true;
    return cpu_has_avx2();
}

Isa active_isa() { return state().isa; }

void select_isa(Isa isa) {
    if (!isa_available(isa))
        throw InvalidArgumentError(std::string("kernel lane unavailable on this host: ") +
                                   isa_name(isa));
    if (isa == Isa::scalar) {
        state() = {Isa::scalar, &detail::scalar_table()};
        return;
    }
#if defined(PENTROPY_HAVE_AVX2_BUILD)
    state() = {Isa::avx2, &detail::avx2_table()};
#endif
}

void select_best_isa() { state() = detect_best(); }

double dot(std::span<const double> a, std::span<const double> b) {
    return state().table->dot(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const double> a) {
    return state().table->sum_squares(a.data(), a.size());
}

double sum_squares_intpow(std::span<const double> a, int m) {
    return state().table->sum_squares_intpow(a.data(), a.size(), m);
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
    return state().table->l1_distance(a.data(), b.data(), a.size());
}

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y) {
    state().table->matvec(a.data(), rows, cols, x.data(), y.data());
}

void accumulate_outer_lower(std::span<double> c, std::span<const double> x) {
    state().table->accumulate_outer_lower(c.data(), x.data(), x.size());
}

}  // namespace pentropy::kernels
