#pragma once

#include "mobflow/grid.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace mobflow::test {

inline DensityField random_field(const Grid &g, std::mt19937_64 &rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> U(lo, hi);
  DensityField f(g);
  for (double &x : f.values)
    x = U(rng);
  return f;
}

/// Smooth positive density of unit mass with a few random cosine modes.
inline DensityField random_density(const Grid &g, std::mt19937_64 &rng, double floor = 0.3) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double a1 = U(rng), a2 = U(rng), a3 = U(rng);
  const double l = g.extent(0);
  DensityField f = sample(g, [&](double x, double) {
    return 1.0 + (1.0 - floor) * (a1 * std::cos(M_PI * x / l) + a2 * std::cos(2 * M_PI * x / l) +
                                  a3 * std::cos(3 * M_PI * x / l)) /
                     3.0;
  });
  f *= 1.0 / f.mass();
  return f;
}

inline FaceField random_faces(const Grid &g, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  FaceField w(g);
  for (int a = 0; a < g.dim(); ++a)
    for (double &x : w[a])
      x = U(rng);
  w.zero_boundary();
  return w;
}

inline double max_abs_diff(const DensityField &a, const DensityField &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Fresh directory under the system temp dir, removed by the destructor.
class TempDir {
public:
  explicit TempDir(const std::string &tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mobflow-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path &path() const { return path_; }

private:
  std::filesystem::path path_;
};

} // namespace mobflow::test
