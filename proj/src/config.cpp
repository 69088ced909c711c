#include "mobflow/cli.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace mobflow::cli {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string> &v) {
  std::string out;
  for (const auto &s : v)
    out += "\n  " + s;
  return out;
}

const char *const kPresets[] = {"uniform", "cosine-perturbed", "gaussian-bump", "two-bumps"};
const char *const kSweepParameters[] = {"tau", "dt", "cells", "eps", "chi", "p", "alpha", "nt"};

// Typed access to one TOML table; records type errors and unknown keys.
class Section {
public:
  Section(const toml::table *t, std::string path, std::vector<std::string> &errs)
      : t_(t), path_(std::move(path)), errs_(errs) {}

  bool present() const { return t_ != nullptr; }

  void number(const char *key, double &out) {
    const toml::node *n = node(key);
    if (!n)
      return;
    if (auto v = n->value<double>())
      out = *v;
    else
      bad(key, "expected a number");
  }

  void number(const char *key, std::optional<double> &out) {
    double v = 0.0;
    if (node(key)) {
      number(key, v);
      out = v;
    }
  }

  template <class Int> void integer(const char *key, Int &out) {
    const toml::node *n = node(key);
    if (!n)
      return;
    auto v = n->value<std::int64_t>();
    if (!v || !n->is_integer())
      bad(key, "expected an integer");
    else if (std::is_unsigned_v<Int> && *v < 0)
      bad(key, "must not be negative");
    else
      out = static_cast<Int>(*v);
  }

  void boolean(const char *key, bool &out) {
    const toml::node *n = node(key);
    if (!n)
      return;
    if (auto v = n->value<bool>())
      out = *v;
    else
      bad(key, "expected true or false");
  }

  void string(const char *key, std::string &out) {
    const toml::node *n = node(key);
    if (!n)
      return;
    if (auto v = n->value<std::string>())
      out = *v;
    else
      bad(key, "expected a string");
  }

  /// Accepts a number or an array of numbers.
  void numbers(const char *key, std::vector<double> &out) {
    const toml::node *n = node(key);
    if (!n)
      return;
    if (auto v = n->value<double>()) {
      out = {*v};
      return;
    }
    const toml::array *arr = n->as_array();
    if (!arr) {
      bad(key, "expected a number or an array of numbers");
      return;
    }
    out.clear();
    for (const toml::node &e : *arr) {
      auto v = e.value<double>();
      if (!v) {
        bad(key, "expected an array of numbers");
        return;
      }
      out.push_back(*v);
    }
  }

  const toml::table *sub(const char *key) {
    const toml::node *n = node(key);
    if (!n)
      return nullptr;
    if (!n->is_table()) {
      bad(key, "expected a table");
      return nullptr;
    }
    return n->as_table();
  }

  std::string field(const char *key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Reports keys that were never asked for.
  void finish() {
    if (!t_)
      return;
    for (const auto &[k, v] : *t_) {
      const std::string key(k.str());
      if (!seen_.count(key))
        errs_.push_back(field(key.c_str()) + ": unknown key");
    }
  }

private:
  const toml::node *node(const char *key) {
    seen_.insert(key);
    return t_ ? t_->get(key) : nullptr;
  }
  void bad(const char *key, const std::string &msg) { errs_.push_back(field(key) + ": " + msg); }

  const toml::table *t_;
  std::string path_;
  std::vector<std::string> &errs_;
  std::set<std::string> seen_;
};

void read_density(Section &s, DensitySpec &d) {
  s.string("preset", d.preset);
  s.number("amplitude", d.amplitude);
  s.integer("mode", d.mode);
  std::vector<double> c;
  s.numbers("center", c);
  for (std::size_t i = 0; i < std::min<std::size_t>(c.size(), 2); ++i)
    d.center[i] = c[i];
  s.number("width", d.width);
  s.numbers("centers", d.centers);
  s.number("floor", d.floor);
  s.number("noise", d.noise);
}

void check_density(const DensitySpec &d, const std::string &path, std::vector<std::string> &errs) {
  bool known = false;
  for (const char *p : kPresets)
    known = known || d.preset == p;
  if (!known)
    errs.push_back(path + ".preset: unknown preset '" + d.preset +
                   "' (expected uniform, cosine-perturbed, gaussian-bump or two-bumps)");
  if (d.preset == "cosine-perturbed") {
    if (!(std::abs(d.amplitude) < 1.0 + d.floor))
      errs.push_back(path + ".amplitude: |amplitude| must stay below 1 + floor to keep the density positive");
    if (d.mode < 0)
      errs.push_back(path + ".mode: must be nonnegative");
  }
  if ((d.preset == "gaussian-bump" || d.preset == "two-bumps") && !(d.width > 0.0))
    errs.push_back(path + ".width: must be positive");
  if (d.preset == "two-bumps" && d.centers.empty())
    errs.push_back(path + ".centers: needs at least one centre");
  if (!(d.floor >= 0.0))
    errs.push_back(path + ".floor: must be nonnegative");
  if (!(d.noise >= 0.0 && d.noise < 1.0))
    errs.push_back(path + ".noise: must lie in [0, 1)");
}

std::vector<std::string> check_spec(const RunSpec &s) {
  std::vector<std::string> errs;
  const DomainSpec &d = s.domain;
  if (d.dim != 1 && d.dim != 2)
    errs.push_back("domain.dim: must be 1 or 2");
  for (int a = 0; a < std::clamp(d.dim, 1, 2); ++a) {
    if (!(d.extent[a] > 0.0))
      errs.push_back("domain.extent: lengths must be positive");
    if (d.cells[a] < 2)
      errs.push_back("domain.cells: need at least 2 cells per axis");
  }

  const ModelParams &m = s.model;
  if (!(m.alpha > 0.0 && m.alpha < 1.0))
    errs.push_back("model.alpha: alpha must lie in (0,1)");
  if (!(m.p >= 1.0))
    errs.push_back("model.p: p must be at least 1");
  if (!(m.chi > 0.0))
    errs.push_back("model.chi: chi must be positive");
  if (!(m.eps >= 0.0))
    errs.push_back("model.eps: eps must be nonnegative");
  if (!(m.delta > 0.0))
    errs.push_back("model.delta: delta must be positive");
  if (m.dim < 1)
    errs.push_back("model.dim: must be at least 1");

  const DiscretizationSpec &x = s.disc;
  if (!(x.tau > 0.0))
    errs.push_back("discretization.tau: must be positive");
  if (!(x.t_end > 0.0))
    errs.push_back("discretization.t_end: must be positive");
  if (x.dt && !(*x.dt > 0.0))
    errs.push_back("discretization.dt: must be positive (omit it to step at the CFL bound)");
  if (x.snapshot_interval && !(*x.snapshot_interval > 0.0))
    errs.push_back("discretization.snapshot_interval: must be positive");
  if (x.nt < 1)
    errs.push_back("discretization.nt: must be at least 1");
  if (x.jko_nt < 1)
    errs.push_back("discretization.jko_nt: must be at least 1");

  const SolverSpec &v = s.solver;
  if (!(v.tol > 0.0) || !(v.jko_tol > 0.0) || !(v.sweep_tol > 0.0))
    errs.push_back("solver: tolerances must be positive");
  if (v.max_iter == 0 || v.jko_max_iter == 0)
    errs.push_back("solver: iteration caps must be positive");
  if (v.max_sweeps < 1)
    errs.push_back("solver.max_sweeps: must be at least 1");
  if (!(v.step_ratio > 0.0))
    errs.push_back("solver.step_ratio: must be positive");
  if (!(v.mom_scale >= 0.0))
    errs.push_back("solver.mom_scale: must be nonnegative");
  if (v.equicontinuity_pairs != 0 && v.equicontinuity_pairs < 5)
    errs.push_back("solver.equicontinuity_pairs: use 0 (off) or at least 5");

  if (s.output.field_stride == 0)
    errs.push_back("output.field_stride: must be positive");

  const Command cmd = s.command == Command::Sweep ? s.sweep.base : s.command;
  if (cmd == Command::Wdist || cmd == Command::Jko || cmd == Command::Reference) {
    check_density(s.initial, "initial", errs);
    if (s.v_init != "uniform" && s.v_init != "steady")
      errs.push_back("initial.v: expected \"uniform\" or \"steady\"");
    if (!(s.v_value >= 0.0))
      errs.push_back("initial.v_value: must be nonnegative");
  }
  if (cmd == Command::Wdist)
    check_density(s.target, "initial.target", errs);
  if (cmd == Command::Jko && !(m.eps > 0.0))
    errs.push_back("model.eps: the jko command needs eps > 0");
  if (cmd == Command::Reference && v.regularized && !(m.eps > 0.0))
    errs.push_back("model.eps: the regularized reference solver needs eps > 0");

  if ((cmd == Command::Jko || cmd == Command::Reference) && !s.allow_uncovered && m.alpha > 0.0 && m.alpha < 1.0 &&
      m.p >= 1.0 && m.dim >= 1) {
    const RegimeLabel r = classify_regime(m);
    if (r.regime == Regime::Uncovered) {
      std::ostringstream msg;
      msg << "model.p: (p, alpha, d) = (" << m.p << ", " << m.alpha << ", " << m.dim
          << ") lies outside the covered regimes (p = 1 + alpha; 1 + alpha - 2/d < p < 1 + alpha with "
             "alpha >= (1 + p)/3; p = 1 + alpha - 2/d for d >= 3 and small chi); critical exponent "
             "1 + alpha - 2/d = "
          << r.critical_p << "; pass --allow-uncovered to run anyway";
      errs.push_back(msg.str());
    }
  }

  if (s.command == Command::Compare && s.inputs.size() != 2)
    errs.push_back("compare: needs both a and b snapshot directories");
  if (s.command == Command::Diagnose && s.inputs.size() != 1)
    errs.push_back("diagnose.input: needs a snapshot directory");
  std::error_code same;
  for (const std::string &in : s.inputs) {
    if (!fs::exists(fs::path(in) / "manifest.json"))
      errs.push_back("input '" + in + "': no manifest.json found");
    else if (fs::equivalent(in, s.output.dir, same))
      errs.push_back("output.dir: must differ from the input directory '" + in + "'");
  }

  if (s.command == Command::Sweep) {
    bool known = false;
    for (const char *p : kSweepParameters)
      known = known || s.sweep.parameter == p;
    if (!known)
      errs.push_back("sweep.parameter: unknown parameter '" + s.sweep.parameter +
                     "' (expected tau, dt, cells, eps, chi, p, alpha or nt)");
    if (s.sweep.values.empty())
      errs.push_back("sweep.values: needs at least one value");
    if (s.sweep.parameter == "cells" || s.sweep.parameter == "nt")
      for (double v : s.sweep.values)
        if (v != std::floor(v) || v < 1.0) {
          errs.push_back("sweep.values: " + s.sweep.parameter + " needs positive integers");
          break;
        }
    if (s.sweep.base != Command::Jko && s.sweep.base != Command::Reference && s.sweep.base != Command::Wdist)
      errs.push_back("sweep.command: expected jko, reference or wdist");
  }

  std::error_code ec;
  const fs::path out(s.output.dir);
  fs::create_directories(out, ec);
  const fs::path probe = out / ".write-probe";
  std::ofstream test(probe);
  if (ec || !test)
    errs.push_back("output.dir: '" + s.output.dir + "' is not writable");
  test.close();
  fs::remove(probe, ec);
  return errs;
}

RunSpec parse_table(const toml::table &root, std::string source, const Overrides &over) {
  std::vector<std::string> errs;
  RunSpec s;
  s.source = std::move(source);
  Section top(&root, "", errs);
  std::string command;
  top.string("command", command);
  if (over.command)
    s.command = *over.command;
  else if (!command.empty()) {
    if (auto c = parse_command(command))
      s.command = *c;
    else
      errs.push_back("command: unknown command '" + command + "'");
  } else {
    errs.push_back("command: missing (give it on the command line or in the file)");
  }
  std::int64_t seed = 0;
  top.integer("seed", seed);
  s.seed = static_cast<std::uint64_t>(seed);
  top.boolean("allow_uncovered", s.allow_uncovered);

  Section dom(top.sub("domain"), "domain", errs);
  dom.integer("dim", s.domain.dim);
  std::vector<double> ext, cells;
  dom.numbers("extent", ext);
  dom.numbers("cells", cells);
  for (std::size_t a = 0; a < 2; ++a) {
    if (!ext.empty())
      s.domain.extent[a] = ext[std::min(a, ext.size() - 1)];
    if (!cells.empty()) {
      const double c = cells[std::min(a, cells.size() - 1)];
      if (c != std::floor(c) || c < 0)
        errs.push_back("domain.cells: expected nonnegative integers");
      else
        s.domain.cells[a] = static_cast<std::size_t>(c);
    }
  }
  dom.finish();

  Section mod(top.sub("model"), "model", errs);
  s.model.dim = s.domain.dim;
  mod.number("p", s.model.p);
  mod.number("alpha", s.model.alpha);
  mod.number("chi", s.model.chi);
  mod.number("eps", s.model.eps);
  mod.number("delta", s.model.delta);
  mod.integer("dim", s.model.dim);
  mod.finish();

  Section dis(top.sub("discretization"), "discretization", errs);
  dis.number("tau", s.disc.tau);
  dis.number("t_end", s.disc.t_end);
  dis.number("dt", s.disc.dt);
  dis.integer("nt", s.disc.nt);
  dis.integer("jko_nt", s.disc.jko_nt);
  dis.number("snapshot_interval", s.disc.snapshot_interval);
  dis.finish();

  Section sol(top.sub("solver"), "solver", errs);
  sol.integer("max_iter", s.solver.max_iter);
  sol.number("tol", s.solver.tol);
  sol.integer("jko_max_iter", s.solver.jko_max_iter);
  sol.number("jko_tol", s.solver.jko_tol);
  sol.integer("max_sweeps", s.solver.max_sweeps);
  sol.number("sweep_tol", s.solver.sweep_tol);
  sol.number("step_ratio", s.solver.step_ratio);
  sol.number("mom_scale", s.solver.mom_scale);
  sol.boolean("regularized", s.solver.regularized);
  sol.number("min_dt", s.solver.min_dt);
  sol.integer("equicontinuity_pairs", s.solver.equicontinuity_pairs);
  sol.finish();

  Section ini(top.sub("initial"), "initial", errs);
  read_density(ini, s.initial);
  ini.string("v", s.v_init);
  ini.number("v_value", s.v_value);
  Section tgt(ini.sub("target"), "initial.target", errs);
  s.target = s.initial;
  read_density(tgt, s.target);
  tgt.finish();
  ini.finish();

  Section out(top.sub("output"), "output", errs);
  out.string("dir", s.output.dir);
  out.integer("field_stride", s.output.field_stride);
  out.boolean("plots", s.output.plots);
  out.finish();

  Section cmp(top.sub("compare"), "compare", errs);
  std::string a, b;
  cmp.string("a", a);
  cmp.string("b", b);
  cmp.finish();
  Section dia(top.sub("diagnose"), "diagnose", errs);
  std::string input;
  dia.string("input", input);
  dia.finish();
  if (s.command == Command::Compare) {
    if (!a.empty())
      s.inputs.push_back(a);
    if (!b.empty())
      s.inputs.push_back(b);
  } else if (s.command == Command::Diagnose && !input.empty()) {
    s.inputs.push_back(input);
  }

  Section swp(top.sub("sweep"), "sweep", errs);
  std::string base;
  swp.string("command", base);
  if (!base.empty()) {
    if (auto c = parse_command(base))
      s.sweep.base = *c;
    else
      errs.push_back("sweep.command: unknown command '" + base + "'");
  }
  swp.string("parameter", s.sweep.parameter);
  swp.numbers("values", s.sweep.values);
  swp.finish();
  top.finish();

  if (over.out)
    s.output.dir = *over.out;
  if (over.seed)
    s.seed = *over.seed;
  if (over.allow_uncovered)
    s.allow_uncovered = true;

  auto more = check_spec(s);
  errs.insert(errs.end(), more.begin(), more.end());
  if (!errs.empty())
    throw ConfigError(errs);
  return s;
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error("ConfigError: invalid configuration:" + join(violations)), violations_(std::move(violations)) {}

std::string to_string(Command c) {
  switch (c) {
  case Command::Wdist: return "wdist";
  case Command::Jko: return "jko";
  case Command::Reference: return "reference";
  case Command::Compare: return "compare";
  case Command::Diagnose: return "diagnose";
  case Command::Sweep: return "sweep";
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view name) {
  for (Command c : {Command::Wdist, Command::Jko, Command::Reference, Command::Compare, Command::Diagnose,
                    Command::Sweep})
    if (to_string(c) == name)
      return c;
  return std::nullopt;
}

Grid DomainSpec::grid() const {
  if (dim == 1)
    return Grid::line(extent[0], cells[0]);
  return Grid::box(extent[0], extent[1], cells[0], cells[1]);
}

RunSpec parse_config_string(std::string_view text, const Overrides &over) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error &e) {
    std::ostringstream msg;
    msg << "line " << e.source().begin.line << ": " << e.description();
    throw ConfigError({msg.str()});
  }
  return parse_table(root, std::string(text), over);
}

RunSpec parse_config(const fs::path &path, const Overrides &over) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError({"config: cannot read '" + path.string() + "'"});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_string(buf.str(), over);
}

void validate(const RunSpec &spec) {
  auto errs = check_spec(spec);
  if (!errs.empty())
    throw ConfigError(errs);
}

nlohmann::json spec_json(const RunSpec &s) {
  using nlohmann::json;
  auto density = [](const DensitySpec &d) {
    return json{{"preset", d.preset}, {"amplitude", d.amplitude}, {"mode", d.mode},
                {"center", d.center}, {"width", d.width},         {"centers", d.centers},
                {"floor", d.floor},   {"noise", d.noise}};
  };
  json j;
  j["command"] = to_string(s.command);
  j["seed"] = s.seed;
  j["allow_uncovered"] = s.allow_uncovered;
  j["domain"] = {{"dim", s.domain.dim}, {"extent", s.domain.extent}, {"cells", s.domain.cells}};
  j["model"] = {{"p", s.model.p},     {"alpha", s.model.alpha}, {"chi", s.model.chi},
                {"eps", s.model.eps}, {"delta", s.model.delta}, {"dim", s.model.dim}};
  j["discretization"] = {{"tau", s.disc.tau},
                         {"t_end", s.disc.t_end},
                         {"dt", s.disc.dt ? json(*s.disc.dt) : json()},
                         {"nt", s.disc.nt},
                         {"jko_nt", s.disc.jko_nt},
                         {"snapshot_interval", s.disc.snapshot_interval ? json(*s.disc.snapshot_interval) : json()}};
  j["solver"] = {{"max_iter", s.solver.max_iter},
                 {"tol", s.solver.tol},
                 {"jko_max_iter", s.solver.jko_max_iter},
                 {"jko_tol", s.solver.jko_tol},
                 {"max_sweeps", s.solver.max_sweeps},
                 {"sweep_tol", s.solver.sweep_tol},
                 {"step_ratio", s.solver.step_ratio},
                 {"mom_scale", s.solver.mom_scale},
                 {"regularized", s.solver.regularized},
                 {"min_dt", s.solver.min_dt},
                 {"equicontinuity_pairs", s.solver.equicontinuity_pairs}};
  j["initial"] = density(s.initial);
  j["initial"]["v"] = s.v_init;
  j["initial"]["v_value"] = s.v_value;
  j["initial"]["target"] = density(s.target);
  j["output"] = {{"dir", s.output.dir}, {"field_stride", s.output.field_stride}, {"plots", s.output.plots}};
  j["inputs"] = s.inputs;
  j["sweep"] = {{"command", to_string(s.sweep.base)}, {"parameter", s.sweep.parameter}, {"values", s.sweep.values}};
  return j;
}

DensityField make_density(const DensitySpec &d, const Grid &g, std::uint64_t seed) {
  const bool two = g.dim() == 2;
  const double lx = g.extent(0), ly = two ? g.extent(1) : 1.0;
  DensityField f(g);
  if (d.preset == "uniform") {
    f = DensityField(g, 1.0);
  } else if (d.preset == "cosine-perturbed") {
    f = sample(g, [&](double x, double y) {
      const double c = std::cos(d.mode * M_PI * x / lx) * (two ? std::cos(d.mode * M_PI * y / ly) : 1.0);
      return 1.0 + d.amplitude * c;
    });
  } else if (d.preset == "gaussian-bump") {
    f = sample(g, [&](double x, double y) {
      double r2 = (x - d.center[0]) * (x - d.center[0]);
      if (two)
        r2 += (y - d.center[1]) * (y - d.center[1]);
      return std::exp(-r2 / (2.0 * d.width * d.width));
    });
  } else if (d.preset == "two-bumps") {
    f = sample(g, [&](double x, double y) {
      double s = 0.0;
      for (double c : d.centers) {
        double r2 = (x - c) * (x - c);
        if (two)
          r2 += (y - d.center[1]) * (y - d.center[1]);
        const double r = std::sqrt(r2);
        if (r < 0.5 * d.width)
          s += 0.5 * (1.0 + std::cos(2.0 * M_PI * r / d.width));
      }
      return s;
    });
  } else {
    throw InvalidArgument("unknown density preset '" + d.preset + "'");
  }
  for (double &x : f.values)
    x += d.floor;
  if (d.noise > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (double &x : f.values)
      x *= 1.0 + d.noise * U(rng);
  }
  const double m = f.mass();
  if (!(m > 0.0))
    throw InvalidArgument("density preset '" + d.preset + "' has no mass on this grid");
  f *= 1.0 / m;
  return f;
}

} // namespace mobflow::cli
