// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "crash/datagen.hpp"
#include "crash/errors.hpp"
#include "json.hpp"

namespace crash::detail {

using nlohmann::json;

inline json scenario_to_json(const datagen::CrashScenario& s) {
  return json{{"nx", s.nx},
              {"ny", s.ny},
              {"spacing", s.spacing},
              {"num_components", s.num_components},
              {"node_mass", s.node_mass},
              {"stiffness", s.stiffness},
              {"yield_strain", s.yield_strain},
              {"post_yield_ratio", s.post_yield_ratio},
              {"damping", s.damping},
              {"wall_gap", s.wall_gap},
              {"wall_stiffness", s.wall_stiffness},
              {"v0", s.v0},
              {"nominal_thickness", s.nominal_thickness},
              {"dt_fine", s.dt_fine},
              {"substeps", s.substeps},
              {"frames", s.frames}};
}

template <class T>
T get_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw DataError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(where + ": bad field '" + key + "': " + e.what());
  }
}

inline datagen::CrashScenario scenario_from_json(const json& j) {
  const std::string w = "scenario";
  datagen::CrashScenario s;
  s.nx = get_field<std::size_t>(j, "nx", w);
  s.ny = get_field<std::size_t>(j, "ny", w);
  s.spacing = get_field<double>(j, "spacing", w);
  s.num_components = get_field<std::size_t>(j, "num_components", w);
  s.node_mass = get_field<double>(j, "node_mass", w);
  s.stiffness = get_field<double>(j, "stiffness", w);
  s.yield_strain = get_field<double>(j, "yield_strain", w);
  s.post_yield_ratio = get_field<double>(j, "post_yield_ratio", w);
  s.damping = get_field<double>(j, "damping", w);
  s.wall_gap = get_field<double>(j, "wall_gap", w);
  s.wall_stiffness = get_field<double>(j, "wall_stiffness", w);
  s.v0 = get_field<double>(j, "v0", w);
  s.nominal_thickness = get_field<double>(j, "nominal_thickness", w);
  s.dt_fine = get_field<double>(j, "dt_fine", w);
  s.substeps = get_field<std::size_t>(j, "substeps", w);
  s.frames = get_field<std::size_t>(j, "frames", w);
  return s;
}

inline json stats_to_json(const datagen::ChannelStats& s) { return json{{"mean", s.mean}, {"std", s.std}}; }

inline datagen::ChannelStats stats_from_json(const json& j, const std::string& where) {
  datagen::ChannelStats s;
  s.mean = get_field<std::vector<double>>(j, "mean", where);
  s.std = get_field<std::vector<double>>(j, "std", where);
  if (s.mean.size() != s.std.size()) throw DataError(where + ": mean/std length mismatch");
  return s;
}

inline json normalization_to_json(const datagen::Normalization& n) {
  return json{{"position", stats_to_json(n.position)},
              {"velocity", stats_to_json(n.velocity)},
              {"acceleration", stats_to_json(n.acceleration)},
              {"thickness", stats_to_json(n.thickness)},
              {"wall_distance", stats_to_json(n.wall_distance)},
              {"position_scale", n.position_scale}};
}

inline datagen::Normalization normalization_from_json(const json& j) {
  datagen::Normalization n;
  const std::string w = "normalization";
  n.position = stats_from_json(get_field<json>(j, "position", w), w + ".position");
  n.velocity = stats_from_json(get_field<json>(j, "velocity", w), w + ".velocity");
  n.acceleration = stats_from_json(get_field<json>(j, "acceleration", w), w + ".acceleration");
  n.thickness = stats_from_json(get_field<json>(j, "thickness", w), w + ".thickness");
  n.wall_distance = stats_from_json(get_field<json>(j, "wall_distance", w), w + ".wall_distance");
  n.position_scale = get_field<double>(j, "position_scale", w);
  return n;
}

}  // namespace crash::detail
