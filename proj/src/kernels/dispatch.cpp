#include <cstdlib>
#include <string_view>

#include <spdlog/spdlog.h>

#include "softarm/kernels/kernels.hpp"

namespace softarm::kernels {

#if !defined(SOFTARM_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable& select() {
  const char* forced = std::getenv("SOFTARM_SIMD");
  const std::string_view choice = forced ? forced : "";
  if (choice == "scalar") return scalar_table();
  if (avx2_table() != nullptr && cpu_has_avx2()) return *avx2_table();
  if (choice == "avx2") {
    spdlog::warn("SOFTARM_SIMD=avx2 requested but unavailable, using scalar");
  }
  return scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y) {
  active().gemv(a.data(), rows, cols, x.data(), y.data());
}

bool cholesky_factor(std::span<double> a, std::size_t n) {
  return active().cholesky_factor(a.data(), n);
}

void cholesky_solve(std::span<const double> l, std::size_t n,
                    std::span<double> b) {
  active().cholesky_solve(l.data(), n, b.data());
}

}  // namespace softarm::kernels
