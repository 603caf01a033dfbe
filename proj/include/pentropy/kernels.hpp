#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace pentropy::kernels {

/// Instruction-set lane for the arithmetic kernels.  `scalar` is the
/// portable reference; `avx2` is selected at runtime on capable x86-64
/// hosts.  Both lanes compute the same quantities; they may differ in the
/// last bits because of summation order.
enum class Isa { scalar, avx2 };

const char* isa_name(Isa isa);

/// True when the host can execute the given lane.
bool isa_available(Isa isa);

/// Currently selected lane (auto-detected on first use).
Isa active_isa();

/// Pin a lane (throws InvalidArgumentError when unavailable).  Used by the
/// CLI `--kernels` flag and by the equivalence tests.
void select_isa(Isa isa);

/// Re-run detection and pick the best available lane.
void select_best_isa();

/// Inner product a.b.
double dot(std::span<const double> a, std::span<const double> b);

/// Sum of squares of a.
double sum_squares(std::span<const double> a);

/// Sum of (a_i^m)^2 with the integer power formed by repeated
/// multiplication; m >= 1.
double sum_squares_intpow(std::span<const double> a, int m);

/// Sum of |a_i - b_i|.
double l1_distance(std::span<const double> a, std::span<const double> b);

/// y = A x with A row-major rows x cols.
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);

/// Lower-triangular (inclusive of the diagonal) rank-1 update
/// C[i,j] += x_i * x_j for j <= i; C row-major d x d.
void accumulate_outer_lower(std::span<double> c, std::span<const double> x);

namespace detail {

struct Table {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum_squares)(const double*, std::size_t);
    double (*sum_squares_intpow)(const double*, std::size_t, int);
    double (*l1_distance)(const double*, const double*, std::size_t);
    void (*matvec)(const double*, std::size_t, std::size_t, const double*, double*);
    void (*accumulate_outer_lower)(double*, const double*, std::size_t);
};

const Table& scalar_table();
#if defined(PENTROPY_HAVE_AVX2_BUILD)
const Table& avx2_table();
#endif

}  // namespace detail

}  // namespace pentropy::kernels
