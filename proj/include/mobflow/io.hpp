#pragma once

#include "mobflow/diagnostics.hpp"
#include "mobflow/grid.hpp"
#include "mobflow/transport.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace mobflow {

nlohmann::json grid_json(const Grid &g);
Grid grid_from_json(const nlohmann::json &j);
nlohmann::json params_json(const ModelParams &p);
ModelParams params_from_json(const nlohmann::json &j);

/// Writes columns i[,j],x[,y],<name> and a sidecar <path>.json with the grid.
void write_field_csv(const std::filesystem::path &path, const DensityField &f, const std::string &name = "value");
/// Reads a field written by write_field_csv (the sidecar supplies the grid).
DensityField read_field_csv(const std::filesystem::path &path);

nlohmann::json distance_json(const DistanceResult &r);
nlohmann::json report_json(const DiagnosticsReport &r);
nlohmann::json discrepancy_json(const Discrepancy &d);

/// Snapshot directory: manifest.json (params, times, per-step scalars, field
/// file names) and fields/{u,v}_NNNNN.csv for every `stride`-th snapshot and
/// the last one. `extra` is merged into the manifest.
void write_snapshots(const std::filesystem::path &dir, const Snapshots &s, std::size_t stride = 1,
                     const nlohmann::json &extra = nlohmann::json::object());
/// Loads the snapshots whose fields were written.
Snapshots read_snapshots(const std::filesystem::path &dir);

void write_json(const std::filesystem::path &path, const nlohmann::json &j);
nlohmann::json read_json(const std::filesystem::path &path);

} // namespace mobflow
