#pragma once

// Per-bin measurement vectors |xi> with Pi = |xi><xi| the binned POVM
// element, i.e. the bin measure is folded in as sqrt(measure).

#include <cmath>
#include <numbers>

#include "cvtomo/fock.hpp"
#include "cvtomo/types.hpp"

namespace cvtomo {

/// psi_n(x_i), one row per bin center.
inline MatrixXd hermite_table(const GridSpec& grid, Index d) {
  MatrixXd table(static_cast<Index>(grid.n_bins), d);
  for (std::size_t i = 0; i < grid.n_bins; ++i) {
    table.row(static_cast<Index>(i)) = hermite_functions(grid.x(i), d - 1).transpose();
  }
  return table;
}

/// sqrt(dx) <n|(x_i)_theta> from a row of `hermite_table`.
inline VectorXcd homodyne_bin_vector(const Eigen::Ref<const Eigen::RowVectorXd>& psi_row, double theta,
                                     double dx) {
  const Index d = psi_row.size();
  const double scale = std::sqrt(dx);
  VectorXcd v(d);
  for (Index n = 0; n < d; ++n) v[n] = std::polar(scale * psi_row[n], static_cast<double>(n) * theta);
  return v;
}

/// sqrt(dx dp / pi) <n|x_a + i p_b>.
inline VectorXcd heterodyne_bin_vector(const GridSpec& grid, std::size_t a, std::size_t b, Index d) {
  return coherent_state(Complex(grid.x(a), grid.p(b)), d) *
         std::sqrt(grid.dx * grid.dp / std::numbers::pi);
}

}  // namespace cvtomo
