#include "mobflow/io.hpp"

#include "mobflow/errors.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mobflow {

namespace fs = std::filesystem;
using nlohmann::json;

json grid_json(const Grid &g) {
  json j;
  j["dim"] = g.dim();
  if (g.dim() == 1) {
    j["extent"] = {g.extent(0)};
    j["cells"] = {g.cells(0)};
  } else {
    j["extent"] = {g.extent(0), g.extent(1)};
    j["cells"] = {g.cells(0), g.cells(1)};
  }
  return j;
}

Grid grid_from_json(const json &j) {
  try {
    const int dim = j.at("dim").get<int>();
    const auto &e = j.at("extent");
    const auto &c = j.at("cells");
    if (dim == 1)
      return Grid::line(e.at(0).get<double>(), c.at(0).get<std::size_t>());
    return Grid::box(e.at(0).get<double>(), e.at(1).get<double>(), c.at(0).get<std::size_t>(),
                     c.at(1).get<std::size_t>());
  } catch (const json::exception &ex) {
    throw IoError(std::string("bad grid description: ") + ex.what());
  }
}

json params_json(const ModelParams &p) {
  return {{"p", p.p}, {"alpha", p.alpha}, {"chi", p.chi}, {"dim", p.dim}, {"eps", p.eps}, {"delta", p.delta}};
}

ModelParams params_from_json(const json &j) {
  ModelParams p;
  p.p = j.value("p", p.p);
  p.alpha = j.value("alpha", p.alpha);
  p.chi = j.value("chi", p.chi);
  p.dim = j.value("dim", p.dim);
  p.eps = j.value("eps", p.eps);
  p.delta = j.value("delta", p.delta);
  return p;
}

void write_json(const fs::path &path, const json &j) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << std::setw(2) << j << '\n';
  if (!out)
    throw IoError("write failed for " + path.string());
}

json read_json(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception &ex) {
    throw IoError(path.string() + ": " + ex.what());
  }
}

void write_field_csv(const fs::path &path, const DensityField &f, const std::string &name) {
  const Grid &g = f.grid;
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  char buf[128];
  if (g.dim() == 1) {
    out << "i,x," << name << '\n';
    for (std::size_t i = 0; i < g.cells(0); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, g.center(0, i), f[i]);
      out << buf;
    }
  } else {
    out << "i,j,x,y," << name << '\n';
    for (std::size_t j = 0; j < g.cells(1); ++j)
      for (std::size_t i = 0; i < g.cells(0); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g\n", i, j, g.center(0, i), g.center(1, j),
                      f[g.cell_index(i, j)]);
        out << buf;
      }
  }
  if (!out)
    throw IoError("write failed for " + path.string());
  json side;
  side["name"] = name;
  side["grid"] = grid_json(g);
  side["columns"] = g.dim() == 1 ? json{"i", "x", name} : json{"i", "j", "x", "y", name};
  side["mass"] = f.mass();
  write_json(fs::path(path.string() + ".json"), side);
}

DensityField read_field_csv(const fs::path &path) {
  const json side = read_json(fs::path(path.string() + ".json"));
  const Grid g = grid_from_json(side.at("grid"));
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot read " + path.string());
  DensityField f(g);
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cols;
    while (std::getline(ss, cell, ','))
      cols.push_back(cell);
    const std::size_t expect = g.dim() == 1 ? 3 : 5;
    if (cols.size() != expect)
      throw IoError(path.string() + ": malformed row '" + line + "'");
    const std::size_t i = std::stoul(cols[0]);
    const std::size_t j = g.dim() == 1 ? 0 : std::stoul(cols[1]);
    if (i >= g.cells(0) || (g.dim() == 2 && j >= g.cells(1)))
      throw IoError(path.string() + ": index out of range");
    f[g.cell_index(i, j)] = std::stod(cols.back());
    ++rows;
  }
  if (rows != g.num_cells())
    throw IoError(path.string() + ": expected " + std::to_string(g.num_cells()) + " rows, got " +
                  std::to_string(rows));
  return f;
}

json distance_json(const DistanceResult &r) {
  return {{"value", r.value},
          {"gap", r.primal_dual_gap},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"action_increases", r.action_increases},
          {"n_t", r.path.nt},
          {"grid", grid_json(r.path.grid)}};
}

json report_json(const DiagnosticsReport &r) {
  json j;
  j["regime"] = {{"label", to_string(r.regime.regime)}, {"critical_p", r.regime.critical_p}};
  json table = json::array();
  for (const StepRow &row : r.table)
    table.push_back({{"k", row.k},
                     {"t", row.t},
                     {"energy", row.energy},
                     {"f_tau", row.f_tau},
                     {"mass", row.mass},
                     {"min_u", row.min_u},
                     {"u_norm", row.u_norm},
                     {"v_h1", row.v_h1},
                     {"v_h2", row.v_h2},
                     {"step_w", row.step_w}});
  j["table"] = table;
  j["energy"] = {{"pass", r.energy.pass},
                 {"worst_increase", std::isfinite(r.energy.worst_increase) ? json(r.energy.worst_increase) : json()},
                 {"worst_step", r.energy.worst_step}};
  j["conservation"] = {{"pass", r.conservation.pass},
                       {"mass_error", r.conservation.mass_error},
                       {"min_u", r.conservation.min_u},
                       {"min_v", r.conservation.min_v}};
  const AprioriTable &a = r.apriori;
  j["apriori"] = {{"q", a.q},
                  {"int_grad_power_sq", a.int_grad_power_sq},
                  {"int_ks_residual_sq", a.int_ks_residual_sq},
                  {"int_v_h2_sq", a.int_v_h2_sq},
                  {"int_grad_mobility_q", a.int_grad_mobility_q},
                  {"u_norm_bounded", a.u_norm_bounded},
                  {"v_h1_bounded", a.v_h1_bounded}};
  json res = json::array();
  for (const WeakResidual &w : r.residuals.entries)
    res.push_back({{"kx", w.fn.kx}, {"ky", w.fn.ky}, {"u", w.u_residual}, {"v", w.v_residual}});
  j["weak_residuals"] = {{"entries", res}, {"max_u", r.residuals.max_u}, {"max_v", r.residuals.max_v}};
  j["fitted"] = {{"c1", r.c1}, {"c4", r.c4 >= 0.0 ? json(r.c4) : json()}};
  j["pass"] = {{"energy", r.pass_energy}, {"conservation", r.pass_conservation}, {"v_residual", r.pass_v_residual}};
  return j;
}

json discrepancy_json(const Discrepancy &d) {
  return {{"max_u_l1", d.max_u_l1}, {"max_u_l2", d.max_u_l2}, {"max_v_l1", d.max_v_l1}, {"max_v_l2", d.max_v_l2},
          {"points", d.t.size()}};
}

namespace {
std::string field_name(const char *what, std::size_t k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu.csv", what, k);
  return buf;
}
} // namespace

void write_snapshots(const fs::path &dir, const Snapshots &s, std::size_t stride, const json &extra) {
  std::error_code ec;
  fs::create_directories(dir / "fields", ec);
  if (ec)
    throw IoError("cannot create " + (dir / "fields").string() + ": " + ec.message());
  stride = std::max<std::size_t>(stride, 1);
  json steps = json::array();
  for (std::size_t k = 0; k < s.size(); ++k) {
    json row = {{"k", k}, {"t", s.t[k]}, {"mass", s.u[k].mass()}, {"min_u", s.u[k].min()},
                {"energy", energy(s.u[k], s.v[k], s.params)}};
    if (k < s.f_tau.size())
      row["f_tau"] = s.f_tau[k];
    if (k < s.w_step.size())
      row["step_w"] = s.w_step[k];
    if (k % stride == 0 || k + 1 == s.size()) {
      const std::string un = field_name("u", k), vn = field_name("v", k);
      write_field_csv(dir / "fields" / un, s.u[k], "u");
      write_field_csv(dir / "fields" / vn, s.v[k], "v");
      row["u_file"] = "fields/" + un;
      row["v_file"] = "fields/" + vn;
    }
    steps.push_back(row);
  }
  json manifest = extra;
  manifest["params"] = params_json(s.params);
  manifest["tau"] = s.tau;
  manifest["grid"] = s.size() ? grid_json(s.u[0].grid) : json();
  manifest["steps"] = steps;
  write_json(dir / "manifest.json", manifest);
}

Snapshots read_snapshots(const fs::path &dir) {
  const json m = read_json(dir / "manifest.json");
  Snapshots s;
  try {
    s.params = params_from_json(m.at("params"));
    s.tau = m.value("tau", 0.0);
    for (const json &row : m.at("steps")) {
      if (!row.contains("u_file"))
        continue;
      s.t.push_back(row.at("t").get<double>());
      s.u.push_back(read_field_csv(dir / row.at("u_file").get<std::string>()));
      s.v.push_back(read_field_csv(dir / row.at("v_file").get<std::string>()));
      if (row.contains("f_tau"))
        s.f_tau.push_back(row["f_tau"].get<double>());
      if (row.contains("step_w"))
        s.w_step.push_back(row["step_w"].get<double>());
    }
  } catch (const json::exception &ex) {
    throw IoError(dir.string() + "/manifest.json: " + ex.what());
  }
  if (s.f_tau.size() != s.t.size())
    s.f_tau.clear();
  if (s.w_step.size() != s.t.size())
    s.w_step.clear();
  return s;
}

} // namespace mobflow
