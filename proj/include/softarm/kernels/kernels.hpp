#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-precision kernels behind the QP solver's inner loops. Every
// kernel has a portable scalar reference; an AVX2+FMA variant is selected at
// runtime when the CPU supports it. Matrices are row-major.
namespace softarm::kernels {

struct KernelTable {
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// y = A x for a rows x cols matrix.
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols,
               const double* x, double* y);
  /// In-place lower Cholesky factor of an n x n SPD matrix; the strict upper
  /// triangle is left untouched. Returns false when a pivot is not positive.
  bool (*cholesky_factor)(double* a, std::size_t n);
  /// Solves L L^T x = b in place given the factor from cholesky_factor.
  void (*cholesky_solve)(const double* l, std::size_t n, double* b);
};

const KernelTable& scalar_table();
/// nullptr when the build has no AVX2 variant.
const KernelTable* avx2_table();
bool cpu_has_avx2();

/// Table chosen once per process: AVX2 when available unless the environment
/// variable SOFTARM_SIMD=scalar forces the reference path.
const KernelTable& active();

// Span front ends over the active table.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);
bool cholesky_factor(std::span<double> a, std::size_t n);
void cholesky_solve(std::span<const double> l, std::size_t n,
                    std::span<double> b);

}  // namespace softarm::kernels
