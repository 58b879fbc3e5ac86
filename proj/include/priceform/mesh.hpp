#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace priceform {

/// Uniform 1-d mesh on [x_lo, x_hi] with n_cells cells and n_cells + 1 nodes.
struct Grid {
  double x_lo = 0.0;
  double x_hi = 1.0;
  int n_cells = 1;

  double h() const { return (x_hi - x_lo) / n_cells; }
  int n_nodes() const { return n_cells + 1; }
  double half_width() const { return 0.5 * (x_hi - x_lo); }

  double node(int i) const {
    if (i <= 0) return x_lo;
    if (i >= n_cells) return x_hi;
    return x_lo + i * h();
  }

  /// Index of the cell containing x, clamped to [0, n_cells - 1].
  int cell_of(double x) const;

  std::vector<double> nodes() const;

  bool same_as(const Grid& other) const;
};

/// Grid centered on the origin: [-half_width, +half_width].
Grid build_uniform_grid(double half_width, int n_cells);

/// Grid on an arbitrary interval; used for the unit reference domain [0, 1].
Grid build_interval_grid(double x_lo, double x_hi, int n_cells);

/// Piecewise-linear function given by nodal values on a grid.
struct NodalField {
  Grid grid;
  std::vector<double> values;
};

NodalField make_field(const Grid& grid, std::vector<double> values);

/// Field sampled from a callable at every node.
template <class F>
NodalField sample_field(const Grid& grid, F&& f) {
  std::vector<double> v(static_cast<std::size_t>(grid.n_nodes()));
  for (int i = 0; i < grid.n_nodes(); ++i) v[static_cast<std::size_t>(i)] = f(grid.node(i));
  return NodalField{grid, std::move(v)};
}

/// Linear interpolation at x. Throws out_of_domain when x lies outside the grid
/// (beyond a relative slack of 1e-12 of the interval length).
double interpolate(const NodalField& field, double x);

/// Interpolation extended by zero outside the grid interval.
double eval_extended(const NodalField& field, double x);

/// Location where the field changes sign from positive to negative.
///
/// The field must have exactly one such change with increasing x. Exact zeros
/// at nodes are permitted; a run of zero nodes between the positive and the
/// negative region yields the midpoint of the run. Throws no_price when the
/// field never crosses downward and ambiguous_price when the sign changes more
/// than once.
double zero_crossing(const NodalField& field);

/// Tridiagonal matrix stored by diagonals: sub[i] = A(i+1, i), diag[i] = A(i, i),
/// super[i] = A(i, i+1).
struct TridiagonalSystem {
  std::vector<double> sub;
  std::vector<double> diag;
  std::vector<double> super;

  std::size_t size() const { return diag.size(); }

  /// y = A x.
  std::vector<double> apply(std::span<const double> x) const;
};

/// Thomas factorization for repeated solves with one matrix.
class TridiagonalFactorization {
public:
  explicit TridiagonalFactorization(const TridiagonalSystem& system);

  void solve(std::span<const double> rhs, std::span<double> out) const;
  std::vector<double> solve(std::span<const double> rhs) const;

  std::size_t size() const { return pivot_.size(); }

private:
  std::vector<double> sub_;
  std::vector<double> pivot_;
  std::vector<double> super_;
};

/// Solves A x = rhs by the Thomas algorithm. Throws singular_system when a
/// pivot degenerates.
std::vector<double> solve_tridiagonal(const TridiagonalSystem& system,
                                      std::span<const double> rhs);

/// P1 mass matrix with every cell integral clipped to [clip_lo, clip_hi]:
/// M(i, j) = integral of phi_i phi_j over the intersection of the grid with the
/// clip interval. The full grid interval reproduces the classical h/6, 2h/3
/// pattern; an empty intersection gives a zero matrix.
TridiagonalSystem assemble_mass_matrix(const Grid& grid, double clip_lo,
                                       double clip_hi);

/// Same clipped assembly over an arbitrary ordered node set; the reconstruction
/// uses it for coarse hat bases whose nodes subsample a finer grid.
TridiagonalSystem assemble_p1_mass(std::span<const double> nodes, double clip_lo,
                                   double clip_hi);

}  // namespace priceform
