#pragma once

#include "mobflow/errors.hpp"
#include "mobflow/grid.hpp"
#include "mobflow/model.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mobflow::cli {

enum class Command { Wdist, Jko, Reference, Compare, Diagnose, Sweep };

std::string to_string(Command c);
std::optional<Command> parse_command(std::string_view name);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitDiagnostic = 4;

/// Invalid configuration; carries every violation found, each prefixed by
/// its field path.
class ConfigError : public Error {
public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string> &violations() const { return violations_; }

private:
  std::vector<std::string> violations_;
};

struct DomainSpec {
  int dim = 1;
  std::array<double, 2> extent{1.0, 1.0};
  std::array<std::size_t, 2> cells{128, 128};
  Grid grid() const;
};

/// Named initial densities, normalised to unit mass:
///   uniform, cosine-perturbed (1 + amplitude cos(mode pi x / L)),
///   gaussian-bump (center, width), two-bumps (cosine bumps of support
///   `width` at `centers`). `floor` is added before normalising; `noise`
///   multiplies by 1 + noise * U(-1, 1) drawn from the run seed.
struct DensitySpec {
  std::string preset = "uniform";
  double amplitude = 0.5;
  int mode = 1;
  std::array<double, 2> center{0.5, 0.5};
  double width = 0.1;
  std::vector<double> centers{0.3, 0.6};
  double floor = 0.0;
  double noise = 0.0;
};

struct DiscretizationSpec {
  double tau = 1e-3;
  double t_end = 0.05;
  /// Reference step; unset steps at the CFL bound.
  std::optional<double> dt;
  /// Time slices for distance paths.
  int nt = 16;
  /// Time slices of the transport path inside a JKO step.
  int jko_nt = 1;
  /// Reference snapshot spacing; unset uses tau.
  std::optional<double> snapshot_interval;
};

struct SolverSpec {
  std::size_t max_iter = 20000;
  double tol = 1e-5;
  std::size_t jko_max_iter = 50000;
  double jko_tol = 1e-7;
  int max_sweeps = 5;
  double sweep_tol = 1e-7;
  double step_ratio = 1.0;
  double mom_scale = 0.0;
  bool regularized = false;
  double min_dt = 1e-10;
  std::size_t equicontinuity_pairs = 0;
};

struct OutputSpec {
  std::string dir = "mobflow-out";
  std::size_t field_stride = 1;
  bool plots = true;
};

struct SweepSpec {
  Command base = Command::Jko;
  std::string parameter = "tau";
  std::vector<double> values;
};

struct RunSpec {
  Command command = Command::Jko;
  DomainSpec domain;
  ModelParams model;
  DiscretizationSpec disc;
  DensitySpec initial;
  /// Second density of the wdist command.
  DensitySpec target;
  /// "uniform" (v = v_value) or "steady" ((I - Laplacian) v = u0).
  std::string v_init = "uniform";
  double v_value = 1.0;
  SolverSpec solver;
  OutputSpec output;
  /// Snapshot directories read by compare (two) and diagnose (one).
  std::vector<std::string> inputs;
  SweepSpec sweep;
  std::uint64_t seed = 0;
  bool allow_uncovered = false;
  /// Config text as read, echoed into manifests.
  std::string source;
};

struct Overrides {
  std::optional<Command> command;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool allow_uncovered = false;
};

/// Reads and validates a TOML run configuration. Throws ConfigError listing
/// every violation.
RunSpec parse_config(const std::filesystem::path &path, const Overrides &over = {});
RunSpec parse_config_string(std::string_view text, const Overrides &over = {});

/// Checks a spec built in code; same messages as parse_config.
void validate(const RunSpec &spec);

nlohmann::json spec_json(const RunSpec &spec);
DensityField make_density(const DensitySpec &d, const Grid &g, std::uint64_t seed);

struct RunOutcome {
  int exit_code = kExitOk;
  /// Stage that failed, empty on success.
  std::string stage;
  std::string message;
  std::filesystem::path dir;
};

/// Executes the command and writes its artifacts into spec.output.dir.
/// Solver errors yield kExitSolver, failed checks kExitDiagnostic.
RunOutcome run_command(const RunSpec &spec);

/// Worker cap for sweeps: MOBFLOW_THREADS if set and positive, else the
/// hardware concurrency.
unsigned worker_count();

} // namespace mobflow::cli
