#include "mobflow/spacetime.hpp"

#include "mobflow/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace mobflow {

namespace {
// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace

struct ContinuityProjector::Plans {
  double *buf = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  double norm = 1.0;

  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward)
      fftw_destroy_plan(forward);
    if (inverse)
      fftw_destroy_plan(inverse);
    if (buf)
      fftw_free(buf);
  }
};

ContinuityProjector::ContinuityProjector(const Grid &grid, int nt, bool free_end, double mom_scale)
    : grid_(grid), nt_(nt), free_end_(free_end), scale_(mom_scale), plans_(std::make_unique<Plans>()) {
  if (nt < 1)
    throw InvalidArgument("continuity projector needs nt >= 1");
  if (!(mom_scale > 0.0))
    throw InvalidArgument("momentum scale must be positive");
  const std::size_t nx = grid.cells(0);
  const std::size_t ny = grid.dim() == 2 ? grid.cells(1) : 1;

  // Eigenvalues of -div grad with zero-flux walls, cosine modes.
  eig_.assign(grid.num_cells(), 0.0);
  auto axis_eig = [&](int axis, std::size_t k) {
    const double h = grid.h(axis);
    const double s = std::sin(M_PI * double(k) / (2.0 * double(grid.cells(axis))));
    return 4.0 * s * s / (h * h);
  };
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i)
      eig_[grid.cell_index(i, j)] = axis_eig(0, i) + (grid.dim() == 2 ? axis_eig(1, j) : 0.0);

  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->buf = fftw_alloc_real(grid.num_cells());
  if (grid.dim() == 1) {
    plans_->forward = fftw_plan_r2r_1d(int(nx), plans_->buf, plans_->buf, FFTW_REDFT10, FFTW_ESTIMATE);
    plans_->inverse = fftw_plan_r2r_1d(int(nx), plans_->buf, plans_->buf, FFTW_REDFT01, FFTW_ESTIMATE);
    plans_->norm = 1.0 / (2.0 * double(nx));
  } else {
    // Row-major (ny, nx) matches the x-fastest cell layout.
    plans_->forward = fftw_plan_r2r_2d(int(ny), int(nx), plans_->buf, plans_->buf, FFTW_REDFT10, FFTW_REDFT10,
                                       FFTW_ESTIMATE);
    plans_->inverse = fftw_plan_r2r_2d(int(ny), int(nx), plans_->buf, plans_->buf, FFTW_REDFT01, FFTW_REDFT01,
                                       FFTW_ESTIMATE);
    plans_->norm = 1.0 / (4.0 * double(nx) * double(ny));
  }
}

ContinuityProjector::~ContinuityProjector() = default;

namespace {

void residuals(const Grid &g, int nt, bool free_end, double s, bool homogeneous, const std::vector<DensityField> &rho,
               const std::vector<FaceField> &mom, std::vector<std::vector<double>> &r) {
  const double inv_dt = double(nt);
  r.assign(nt, std::vector<double>(g.num_cells(), 0.0));
  for (int k = 0; k < nt; ++k) {
    const DensityField div = discrete_divergence(mom[k]);
    const bool lo_fixed = (k == 0);
    const bool hi_fixed = (k + 1 == nt) && !free_end;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      const double hi = (homogeneous && hi_fixed) ? 0.0 : rho[k + 1][c];
      const double lo = (homogeneous && lo_fixed) ? 0.0 : rho[k][c];
      r[k][c] = (hi - lo) * inv_dt + s * div[c];
    }
  }
}

} // namespace

void ContinuityProjector::solve_multiplier(std::vector<std::vector<double>> &r) {
  const std::size_t n = grid_.num_cells();
  double *buf = plans_->buf;
  for (int k = 0; k < nt_; ++k) {
    std::copy(r[k].begin(), r[k].end(), buf);
    fftw_execute(plans_->forward);
    std::copy(buf, buf + n, r[k].begin());
  }

  const double idt2 = double(nt_) * double(nt_);
  const double s2 = scale_ * scale_;
  std::vector<double> diag(nt_), rhs(nt_), cprime(nt_);
  for (std::size_t m = 0; m < n; ++m) {
    const double mu = s2 * eig_[m];
    for (int k = 0; k < nt_; ++k) {
      int count = (k >= 1 ? 1 : 0);
      if (k + 1 <= nt_ - 1 || (k + 1 == nt_ && free_end_))
        ++count;
      diag[k] = count * idt2 + mu;
      rhs[k] = r[k][m];
    }
    if (mu == 0.0 && !free_end_) {
      // Pure time-Neumann chain: compatible by mass balance, gauge lambda_0 = 0.
      std::vector<double> lam(nt_, 0.0);
      if (nt_ >= 2) {
        lam[1] = lam[0] - rhs[0] / idt2;
        for (int k = 1; k + 1 < nt_; ++k)
          lam[k + 1] = 2.0 * lam[k] - lam[k - 1] - rhs[k] / idt2;
      }
      for (int k = 0; k < nt_; ++k)
        r[k][m] = lam[k];
      continue;
    }
    // Thomas algorithm, off-diagonals -idt2.
    const double off = -idt2;
    cprime[0] = off / diag[0];
    rhs[0] /= diag[0];
    for (int k = 1; k < nt_; ++k) {
      const double denom = diag[k] - off * cprime[k - 1];
      cprime[k] = off / denom;
      rhs[k] = (rhs[k] - off * rhs[k - 1]) / denom;
    }
    for (int k = nt_ - 2; k >= 0; --k)
      rhs[k] -= cprime[k] * rhs[k + 1];
    for (int k = 0; k < nt_; ++k)
      r[k][m] = rhs[k];
  }

  for (int k = 0; k < nt_; ++k) {
    std::copy(r[k].begin(), r[k].end(), buf);
    fftw_execute(plans_->inverse);
    for (std::size_t c = 0; c < n; ++c)
      r[k][c] = buf[c] * plans_->norm;
  }
}

void ContinuityProjector::apply_correction(const std::vector<std::vector<double>> &lambda,
                                           std::vector<DensityField> &rho, std::vector<FaceField> &mom) const {
  const double inv_dt = double(nt_);
  const int last_free = free_end_ ? nt_ : nt_ - 1;
  for (int j = 1; j <= last_free; ++j)
    for (std::size_t c = 0; c < grid_.num_cells(); ++c) {
      const double before = lambda[j - 1][c];
      const double after = j < nt_ ? lambda[j][c] : 0.0;
      rho[j][c] -= (before - after) * inv_dt;
    }
  for (int k = 0; k < nt_; ++k)
    for (int a = 0; a < grid_.dim(); ++a) {
      const double f = scale_ / grid_.h(a);
      std::size_t l, r;
      for (std::size_t face = 0; face < mom[k][a].size(); ++face)
        if (grid_.face_neighbors(a, face, l, r))
          mom[k][a][face] -= f * (lambda[k][l] - lambda[k][r]);
    }
}

void ContinuityProjector::project(std::vector<DensityField> &rho, std::vector<FaceField> &mom) {
  std::vector<std::vector<double>> r;
  residuals(grid_, nt_, free_end_, scale_, false, rho, mom, r);
  solve_multiplier(r);
  apply_correction(r, rho, mom);
}

void ContinuityProjector::project_tangent(std::vector<DensityField> &rho, std::vector<FaceField> &mom) {
  std::fill(rho[0].values.begin(), rho[0].values.end(), 0.0);
  if (!free_end_)
    std::fill(rho[nt_].values.begin(), rho[nt_].values.end(), 0.0);
  std::vector<std::vector<double>> r;
  residuals(grid_, nt_, free_end_, scale_, true, rho, mom, r);
  solve_multiplier(r);
  apply_correction(r, rho, mom);
}

double ContinuityProjector::residual_norm(const std::vector<DensityField> &rho,
                                          const std::vector<FaceField> &mom) const {
  std::vector<std::vector<double>> r;
  residuals(grid_, nt_, free_end_, scale_, false, rho, mom, r);
  double s = 0.0;
  for (const auto &slice : r)
    for (double v : slice)
      s += v * v;
  return std::sqrt(s);
}

} // namespace mobflow
