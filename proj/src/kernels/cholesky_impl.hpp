#pragma once

// Factor and solve routines shared by the kernel variants. Included inside an
// anonymous namespace of each variant's translation unit so every variant gets
// its own instantiation compiled with its own target flags. Callers include
// <cmath> and <cstddef> first.

template <typename Dot>
bool cholesky_factor_with(double* a, std::size_t n, Dot dot) {
  for (std::size_t j = 0; j < n; ++j) {
    double* row_j = a + j * n;
    const double pivot = row_j[j] - dot(row_j, row_j, j);
    if (!(pivot > 0.0)) return false;
    const double l_jj = std::sqrt(pivot);
    row_j[j] = l_jj;
    const double inv = 1.0 / l_jj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double* row_i = a + i * n;
      row_i[j] = (row_i[j] - dot(row_i, row_j, j)) * inv;
    }
  }
  return true;
}

template <typename Dot, typename Axpy>
void cholesky_solve_with(const double* l, std::size_t n, double* b, Dot dot,
                         Axpy axpy) {
  // L y = b
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = l + i * n;
    b[i] = (b[i] - dot(row, b, i)) / row[i];
  }
  // L^T x = y, column sweep over contiguous rows of L
  for (std::size_t j = n; j-- > 0;) {
    const double* row = l + j * n;
    b[j] /= row[j];
    axpy(-b[j], row, b, j);
  }
}
