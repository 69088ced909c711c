#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace mobflow {

/// Regular cell-centred grid on the box [0,L0] (x [0,L1] in 2D).
///
/// Cells are stored x-fastest: index = i + nx * j. Faces normal to axis 0
/// are indexed i + (nx+1) * j (face i separates cells i-1 and i), faces
/// normal to axis 1 are indexed i + nx * j (face j separates rows j-1, j).
class Grid {
public:
  Grid() = default;

  static Grid line(double length, std::size_t cells);
  static Grid box(double lx, double ly, std::size_t nx, std::size_t ny);

  int dim() const { return dim_; }
  double extent(int axis) const { return extents_[axis]; }
  std::size_t cells(int axis) const { return cells_[axis]; }
  double h(int axis) const { return extents_[axis] / double(cells_[axis]); }
  double min_h() const;

  std::size_t num_cells() const { return cells_[0] * cells_[1]; }
  std::size_t num_faces(int axis) const;
  double cell_volume() const;
  /// Faces carry the volume of the dual cell, which equals the cell volume
  /// on a uniform grid. This makes grad/div exact negative adjoints.
  double face_volume() const { return cell_volume(); }
  double domain_volume() const;

  std::size_t cell_index(std::size_t i, std::size_t j = 0) const { return i + cells_[0] * j; }
  /// Cell centre coordinate along `axis`.
  double center(int axis, std::size_t k) const { return (double(k) + 0.5) * h(axis); }
  /// Position of face k along `axis` (k = 0 .. cells).
  double face_position(int axis, std::size_t k) const { return double(k) * h(axis); }

  /// Indices of the two cells adjacent to a face; false for boundary faces.
  bool face_neighbors(int axis, std::size_t face, std::size_t &left, std::size_t &right) const;

  bool operator==(const Grid &o) const {
    return dim_ == o.dim_ && extents_ == o.extents_ && cells_ == o.cells_;
  }
  bool operator!=(const Grid &o) const { return !(*this == o); }

private:
  int dim_ = 1;
  std::array<double, 2> extents_{1.0, 1.0};
  std::array<std::size_t, 2> cells_{2, 1};
};

/// Per-cell scalar field (a density, a potential, a chemical concentration).
struct DensityField {
  Grid grid;
  std::vector<double> values;

  DensityField() = default;
  explicit DensityField(const Grid &g, double fill = 0.0) : grid(g), values(g.num_cells(), fill) {}
  DensityField(const Grid &g, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double &operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  /// Sum of values times cell volume.
  double mass() const;
  double mean() const;
  double min() const;
  double max() const;
  bool finite() const;

  DensityField &operator+=(const DensityField &o);
  DensityField &operator-=(const DensityField &o);
  DensityField &operator*=(double s);
};

DensityField operator+(DensityField a, const DensityField &b);
DensityField operator-(DensityField a, const DensityField &b);
DensityField operator*(double s, DensityField a);

/// Samples `f(x, y)` at cell centres (y = 0 on 1D grids).
template <class F> DensityField sample(const Grid &g, F &&f) {
  DensityField out(g);
  const std::size_t ny = g.dim() == 2 ? g.cells(1) : 1;
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < g.cells(0); ++i)
      out[g.cell_index(i, j)] = f(g.center(0, i), g.dim() == 2 ? g.center(1, j) : 0.0);
  return out;
}

/// Staggered face field: one normal component per face. Boundary faces hold
/// zero (no-flux).
struct FaceField {
  Grid grid;
  std::array<std::vector<double>, 2> comp;

  FaceField() = default;
  explicit FaceField(const Grid &g);

  std::vector<double> &operator[](int axis) { return comp[axis]; }
  const std::vector<double> &operator[](int axis) const { return comp[axis]; }

  bool boundary_is_zero() const;
  bool finite() const;
  void zero_boundary();

  FaceField &operator+=(const FaceField &o);
  FaceField &operator*=(double s);
};

/// Two-point face differences; boundary faces are zero.
FaceField discrete_gradient(const DensityField &f);

/// Net outflow per cell divided by width. Exact negative adjoint of
/// discrete_gradient under the volume-weighted inner products.
DensityField discrete_divergence(const FaceField &w);

/// Face-wise product a * w with a given per face.
FaceField multiply(const FaceField &a, const FaceField &w);

/// Arithmetic mean of adjacent cell values on interior faces, 0 on the boundary.
FaceField face_average(const DensityField &f);

/// Volume-weighted inner products.
double inner(const DensityField &a, const DensityField &b);
double inner(const FaceField &a, const FaceField &b);

/// Discrete Neumann Laplacian div(grad f).
DensityField laplacian(const DensityField &f);

} // namespace mobflow
