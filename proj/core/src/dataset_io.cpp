// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include "binary_io.hpp"
#include "crash/datagen.hpp"
#include "json_codec.hpp"

namespace crash::datagen {

namespace fs = std::filesystem;
using detail::json;

namespace {

struct ArrayFile {
  std::string name;
  std::string dtype;
  std::vector<std::size_t> shape;
  std::vector<char> bytes;
};

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (auto d : shape) p *= d;
  return p;
}

std::vector<std::int32_t> cells_to_int(const Mesh& mesh, std::size_t& width) {
  width = 0;
  for (const auto& c : mesh.cells) width = std::max(width, c.size());
  std::vector<std::int32_t> out(mesh.cells.size() * width, -1);
  for (std::size_t i = 0; i < mesh.cells.size(); ++i) {
    for (std::size_t k = 0; k < mesh.cells[i].size(); ++k) out[i * width + k] = std::int32_t(mesh.cells[i][k]);
  }
  return out;
}

}  // namespace

std::uint32_t mesh_fingerprint(const Mesh& mesh) {
  std::vector<float> pos;
  for (const auto& p : mesh.positions) {
    for (double c : p) pos.push_back(float(c));
  }
  std::size_t width = 0;
  auto bytes = detail::to_bytes(pos);
  auto cells = detail::to_bytes(cells_to_int(mesh, width));
  bytes.insert(bytes.end(), cells.begin(), cells.end());
  return detail::crc32_bytes(bytes);
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  const std::size_t n = ds.num_nodes();
  const std::size_t s = ds.samples.size();
  const std::size_t t = ds.num_frames();
  std::vector<ArrayFile> files;

  std::vector<float> pos;
  for (const auto& p : ds.mesh.positions) {
    for (double c : p) pos.push_back(float(c));
  }
  files.push_back({"mesh_positions.f32", "float32", {n, 3}, detail::to_bytes(pos)});
  std::size_t width = 0;
  auto cells = cells_to_int(ds.mesh, width);
  files.push_back({"mesh_cells.i32", "int32", {ds.mesh.cells.size(), width}, detail::to_bytes(cells)});
  std::vector<std::int32_t> comp(ds.mesh.component_id.begin(), ds.mesh.component_id.end());
  files.push_back({"component_id.i32", "int32", {n}, detail::to_bytes(comp)});

  std::vector<float> thick, traj, v0, design;
  thick.reserve(s * n);
  traj.reserve(s * t * n * 3);
  for (const auto& sample : ds.samples) {
    if (sample.frames.size() != t || sample.thickness.size() != n) {
      throw DataError("write_dataset: sample shape does not match the dataset");
    }
    for (double v : sample.thickness) thick.push_back(float(v));
    for (const auto& frame : sample.frames) {
      for (double v : frame.values()) traj.push_back(float(v));
    }
    for (double c : sample.v0) v0.push_back(float(c));
  }
  const std::size_t comps = ds.scenario.num_components;
  for (const auto& d : ds.designs) {
    for (double v : d.component_thickness) design.push_back(float(v));
  }
  files.push_back({"thickness.f32", "float32", {s, n}, detail::to_bytes(thick)});
  files.push_back({"trajectories.f32", "float32", {s, t, n, 3}, detail::to_bytes(traj)});
  files.push_back({"initial_velocity.f32", "float32", {s, 3}, detail::to_bytes(v0)});
  files.push_back({"design_thickness.f32", "float32", {ds.designs.size(), comps}, detail::to_bytes(design)});

  json manifest;
  manifest["schema_version"] = kDatasetSchemaVersion;
  manifest["num_samples"] = s;
  manifest["num_nodes"] = n;
  manifest["num_frames"] = t;
  manifest["dt"] = ds.dt();
  manifest["t_max"] = ds.scenario.t_max();
  manifest["v0"] = ds.scenario.v0;
  manifest["wall_x"] = ds.wall_x;
  manifest["seed"] = ds.seed;
  manifest["doe"] = json{{"num_samples", s}, {"num_components", comps}, {"seed", ds.seed}, {"range", {0.8, 1.2}}};
  manifest["scenario"] = detail::scenario_to_json(ds.scenario);
  manifest["splits"] = json{{"seed", ds.seed}, {"train", ds.splits.train}, {"val", ds.splits.val}, {"test", ds.splits.test}};
  manifest["normalization"] = detail::normalization_to_json(ds.stats);
  manifest["energy_error"] = ds.energy_error;
  json jf = json::object();
  for (const auto& f : files) {
    detail::write_file(dir / f.name, f.bytes);
    jf[f.name] = json{{"dtype", f.dtype}, {"shape", f.shape}, {"bytes", f.bytes.size()},
                      {"crc32", detail::crc32_bytes(f.bytes)}};
  }
  manifest["files"] = jf;
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw DataError("dataset manifest not found: " + mpath.string());
  json manifest;
  try {
    std::ifstream in(mpath);
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + mpath.string() + ": " + e.what());
  }
  const std::string w = "manifest";
  const int version = detail::get_field<int>(manifest, "schema_version", w);
  if (version != kDatasetSchemaVersion) {
    throw DataError("dataset schema version " + std::to_string(version) + " not supported (expected " +
                    std::to_string(kDatasetSchemaVersion) + ")");
  }
  Dataset ds;
  ds.scenario = detail::scenario_from_json(detail::get_field<json>(manifest, "scenario", w));
  ds.seed = detail::get_field<std::uint64_t>(manifest, "seed", w);
  ds.wall_x = detail::get_field<double>(manifest, "wall_x", w);
  const auto s = detail::get_field<std::size_t>(manifest, "num_samples", w);
  const auto n = detail::get_field<std::size_t>(manifest, "num_nodes", w);
  const auto t = detail::get_field<std::size_t>(manifest, "num_frames", w);
  if (t != ds.scenario.frames) throw DataError("manifest: num_frames disagrees with scenario.frames");
  const json splits = detail::get_field<json>(manifest, "splits", w);
  ds.splits.train = detail::get_field<std::vector<std::size_t>>(splits, "train", "splits");
  ds.splits.val = detail::get_field<std::vector<std::size_t>>(splits, "val", "splits");
  ds.splits.test = detail::get_field<std::vector<std::size_t>>(splits, "test", "splits");
  ds.stats = detail::normalization_from_json(detail::get_field<json>(manifest, "normalization", w));
  ds.energy_error = detail::get_field<std::vector<double>>(manifest, "energy_error", w);
  const json files = detail::get_field<json>(manifest, "files", w);

  auto load = [&](const std::string& name, const std::string& dtype,
                  const std::vector<std::size_t>& expect_shape) -> std::vector<char> {
    const json f = detail::get_field<json>(files, name.c_str(), "files");
    const auto shape = detail::get_field<std::vector<std::size_t>>(f, "shape", name);
    if (detail::get_field<std::string>(f, "dtype", name) != dtype) throw DataError(name + ": unexpected dtype");
    if (!expect_shape.empty() && shape != expect_shape) throw DataError(name + ": shape disagrees with manifest");
    const std::size_t bytes = product(shape) * 4;
    if (detail::get_field<std::size_t>(f, "bytes", name) != bytes) throw DataError(name + ": byte count mismatch");
    return detail::read_checked(dir / name, bytes, detail::get_field<std::uint32_t>(f, "crc32", name));
  };

  const auto pos = detail::from_bytes<float>(load("mesh_positions.f32", "float32", {n, 3}));
  for (std::size_t i = 0; i < n; ++i) ds.mesh.positions.push_back({pos[3 * i], pos[3 * i + 1], pos[3 * i + 2]});
  const json cells_meta = detail::get_field<json>(files, "mesh_cells.i32", "files");
  const auto cell_shape = detail::get_field<std::vector<std::size_t>>(cells_meta, "shape", "mesh_cells.i32");
  if (cell_shape.size() != 2) throw DataError("mesh_cells.i32: expected rank 2");
  const auto cells = detail::from_bytes<std::int32_t>(load("mesh_cells.i32", "int32", {}));
  for (std::size_t c = 0; c < cell_shape[0]; ++c) {
    std::vector<std::size_t> cell;
    for (std::size_t k = 0; k < cell_shape[1]; ++k) {
      const std::int32_t v = cells[c * cell_shape[1] + k];
      if (v >= 0) cell.push_back(std::size_t(v));
    }
    ds.mesh.cells.push_back(std::move(cell));
  }
  const auto comp = detail::from_bytes<std::int32_t>(load("component_id.i32", "int32", {n}));
  ds.mesh.component_id.assign(comp.begin(), comp.end());
  ds.mesh.validate();

  const auto thick = detail::from_bytes<float>(load("thickness.f32", "float32", {s, n}));
  const auto traj = detail::from_bytes<float>(load("trajectories.f32", "float32", {s, t, n, 3}));
  const auto v0 = detail::from_bytes<float>(load("initial_velocity.f32", "float32", {s, 3}));
  const std::size_t comps = ds.scenario.num_components;
  const auto design = detail::from_bytes<float>(load("design_thickness.f32", "float32", {s, comps}));
  for (std::size_t k = 0; k < s; ++k) {
    Trajectory tr;
    tr.thickness.assign(thick.begin() + std::ptrdiff_t(k * n), thick.begin() + std::ptrdiff_t((k + 1) * n));
    for (std::size_t f = 0; f < t; ++f) {
      Tensor frame({n, 3});
      const float* src = traj.data() + (k * t + f) * n * 3;
      for (std::size_t i = 0; i < n * 3; ++i) frame[i] = src[i];
      tr.frames.push_back(std::move(frame));
    }
    tr.v0 = {v0[3 * k], v0[3 * k + 1], v0[3 * k + 2]};
    ds.samples.push_back(std::move(tr));
    DesignSample d;
    d.id = k;
    for (std::size_t c = 0; c < comps; ++c) d.component_thickness.push_back(design[k * comps + c]);
    ds.designs.push_back(std::move(d));
  }
  for (const auto* split : {&ds.splits.train, &ds.splits.val, &ds.splits.test}) {
    for (auto i : *split) {
      if (i >= s) throw DataError("manifest: split index out of range");
    }
  }
  return ds;
}

}  // namespace crash::datagen
