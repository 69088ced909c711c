#include "mobflow/grid.hpp"

#include "mobflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mobflow {

Grid Grid::line(double length, std::size_t cells) {
  if (!(length > 0.0) || !std::isfinite(length))
    throw InvalidArgument("grid extent must be positive");
  if (cells < 2)
    throw InvalidArgument("grid needs at least 2 cells per axis");
  Grid g;
  g.dim_ = 1;
  g.extents_ = {length, 1.0};
  g.cells_ = {cells, 1};
  return g;
}

Grid Grid::box(double lx, double ly, std::size_t nx, std::size_t ny) {
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
    throw InvalidArgument("grid extents must be positive");
  if (nx < 2 || ny < 2)
    throw InvalidArgument("grid needs at least 2 cells per axis");
  Grid g;
  g.dim_ = 2;
  g.extents_ = {lx, ly};
  g.cells_ = {nx, ny};
  return g;
}

double Grid::min_h() const { return dim_ == 2 ? std::min(h(0), h(1)) : h(0); }

std::size_t Grid::num_faces(int axis) const {
  if (axis == 0)
    return (cells_[0] + 1) * cells_[1];
  if (dim_ < 2)
    return 0;
  return cells_[0] * (cells_[1] + 1);
}

double Grid::cell_volume() const { return dim_ == 2 ? h(0) * h(1) : h(0); }

double Grid::domain_volume() const { return dim_ == 2 ? extents_[0] * extents_[1] : extents_[0]; }

bool Grid::face_neighbors(int axis, std::size_t face, std::size_t &left, std::size_t &right) const {
  const std::size_t nx = cells_[0];
  if (axis == 0) {
    const std::size_t i = face % (nx + 1), j = face / (nx + 1);
    if (i == 0 || i == nx)
      return false;
    left = cell_index(i - 1, j);
    right = cell_index(i, j);
    return true;
  }
  const std::size_t i = face % nx, j = face / nx;
  if (j == 0 || j == cells_[1])
    return false;
  left = cell_index(i, j - 1);
  right = cell_index(i, j);
  return true;
}

DensityField::DensityField(const Grid &g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != g.num_cells())
    throw InvalidArgument("field size " + std::to_string(values.size()) + " does not match grid");
}

double DensityField::mass() const {
  double s = 0.0;
  for (double v : values)
    s += v;
  return s * grid.cell_volume();
}

double DensityField::mean() const { return mass() / grid.domain_volume(); }

double DensityField::min() const { return *std::min_element(values.begin(), values.end()); }

double DensityField::max() const { return *std::max_element(values.begin(), values.end()); }

bool DensityField::finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

DensityField &DensityField::operator+=(const DensityField &o) {
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] += o.values[i];
  return *this;
}

DensityField &DensityField::operator-=(const DensityField &o) {
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] -= o.values[i];
  return *this;
}

DensityField &DensityField::operator*=(double s) {
  for (double &v : values)
    v *= s;
  return *this;
}

DensityField operator+(DensityField a, const DensityField &b) { return a += b; }
DensityField operator-(DensityField a, const DensityField &b) { return a -= b; }
DensityField operator*(double s, DensityField a) { return a *= s; }

FaceField::FaceField(const Grid &g) : grid(g) {
  comp[0].assign(g.num_faces(0), 0.0);
  comp[1].assign(g.num_faces(1), 0.0);
}

bool FaceField::boundary_is_zero() const {
  for (int a = 0; a < grid.dim(); ++a) {
    std::size_t l, r;
    for (std::size_t f = 0; f < comp[a].size(); ++f)
      if (!grid.face_neighbors(a, f, l, r) && comp[a][f] != 0.0)
        return false;
  }
  return true;
}

bool FaceField::finite() const {
  for (int a = 0; a < 2; ++a)
    for (double v : comp[a])
      if (!std::isfinite(v))
        return false;
  return true;
}

void FaceField::zero_boundary() {
  for (int a = 0; a < grid.dim(); ++a) {
    std::size_t l, r;
    for (std::size_t f = 0; f < comp[a].size(); ++f)
      if (!grid.face_neighbors(a, f, l, r))
        comp[a][f] = 0.0;
  }
}

FaceField &FaceField::operator+=(const FaceField &o) {
  for (int a = 0; a < 2; ++a)
    for (std::size_t f = 0; f < comp[a].size(); ++f)
      comp[a][f] += o.comp[a][f];
  return *this;
}

FaceField &FaceField::operator*=(double s) {
  for (int a = 0; a < 2; ++a)
    for (double &v : comp[a])
      v *= s;
  return *this;
}

FaceField discrete_gradient(const DensityField &f) {
  const Grid &g = f.grid;
  FaceField out(g);
  for (int a = 0; a < g.dim(); ++a) {
    const double inv_h = 1.0 / g.h(a);
    std::size_t l, r;
    for (std::size_t k = 0; k < out[a].size(); ++k)
      if (g.face_neighbors(a, k, l, r))
        out[a][k] = (f[r] - f[l]) * inv_h;
  }
  return out;
}

DensityField discrete_divergence(const FaceField &w) {
  const Grid &g = w.grid;
  DensityField out(g);
  const std::size_t nx = g.cells(0);
  const std::size_t ny = g.dim() == 2 ? g.cells(1) : 1;
  const double ihx = 1.0 / g.h(0);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t c = g.cell_index(i, j);
      double v = (w[0][i + 1 + (nx + 1) * j] - w[0][i + (nx + 1) * j]) * ihx;
      if (g.dim() == 2)
        v += (w[1][i + nx * (j + 1)] - w[1][i + nx * j]) / g.h(1);
      out[c] = v;
    }
  return out;
}

FaceField multiply(const FaceField &a, const FaceField &w) {
  FaceField out(w.grid);
  for (int ax = 0; ax < 2; ++ax)
    for (std::size_t f = 0; f < out[ax].size(); ++f)
      out[ax][f] = a[ax][f] * w[ax][f];
  return out;
}

FaceField face_average(const DensityField &f) {
  const Grid &g = f.grid;
  FaceField out(g);
  for (int a = 0; a < g.dim(); ++a) {
    std::size_t l, r;
    for (std::size_t k = 0; k < out[a].size(); ++k)
      if (g.face_neighbors(a, k, l, r))
        out[a][k] = 0.5 * (f[l] + f[r]);
  }
  return out;
}

double inner(const DensityField &a, const DensityField &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s * a.grid.cell_volume();
}

double inner(const FaceField &a, const FaceField &b) {
  double s = 0.0;
  for (int ax = 0; ax < 2; ++ax)
    for (std::size_t f = 0; f < a[ax].size(); ++f)
      s += a[ax][f] * b[ax][f];
  return s * a.grid.face_volume();
}

DensityField laplacian(const DensityField &f) { return discrete_divergence(discrete_gradient(f)); }

} // namespace mobflow
