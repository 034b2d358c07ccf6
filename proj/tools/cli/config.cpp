// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli/config.hpp"

#include <fstream>

#include "crash/errors.hpp"
#include "crash/experiment.hpp"

namespace crash::cli {

namespace {

const char* activation_name(diff::Activation a) { return a == diff::Activation::gelu ? "gelu" : "relu"; }

diff::Activation parse_activation(const std::string& s) {
  if (s == "gelu") return diff::Activation::gelu;
  if (s == "relu") return diff::Activation::relu;
  throw ConfigError("unknown activation '" + s + "' (expected relu, gelu)");
}

bool compatible(const Json& def, const Json& v) {
  if (def.is_null()) return v.is_null() || v.is_number();
  if (def.is_number_float()) return v.is_number();
  if (def.is_number_integer()) return v.is_number_integer() && !(def.is_number_unsigned() && v.get<long long>() < 0);
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  if (def.is_object()) return v.is_object();
  return false;
}

template <class T>
T field(const Json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

}  // namespace

Json default_config() {
  const datagen::CrashScenario s;
  const transient::ModelSpec m = experiment::desk_model_spec(transient::ModelKind::transolver,
                                                             transient::Scheme::ar_rt);
  const transient::SchemeConfig t = experiment::desk_scheme_config(transient::Scheme::ar_rt);
  Json c;
  c["seed"] = 0;
  c["workers"] = 1;
  c["scenario"] = {{"nx", s.nx},
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
  c["doe"] = {{"num_samples", 80}};
  c["model"] = {{"kind", "transolver"},
                {"k_interp", m.k_interp},
                {"transolver",
                 {{"num_slices", m.transolver.num_slices},
                  {"num_layers", m.transolver.num_layers},
                  {"hidden_dim", m.transolver.hidden_dim},
                  {"num_heads", m.transolver.num_heads},
                  {"mlp_ratio", m.transolver.mlp_ratio},
                  {"activation", activation_name(m.transolver.activation)}}},
                {"mgn",
                 {{"num_mp_layers", m.mgn.num_mp_layers},
                  {"hidden_dim", m.mgn.hidden_dim},
                  {"mlp_layers", m.mgn.mlp_layers},
                  {"activation", activation_name(m.mgn.activation)}}},
                {"multiscale",
                 {{"sample_ratio", m.multiscale.sample_ratio},
                  {"k_local", m.multiscale.k_local},
                  {"longrange_ratio", m.multiscale.longrange_ratio},
                  {"k_long", m.multiscale.k_long}}}};
  c["training"] = {{"scheme", "ar-rt"},
                   {"rollout_len", t.rollout_len},
                   {"epochs", t.epochs},
                   {"lr_start", nullptr},
                   {"lr_end", nullptr},
                   {"grad_clip", nullptr},
                   {"batch_size", t.batch_size},
                   {"checkpoint_every_step", t.checkpoint_every_step},
                   {"noise_std", t.noise_std}};
  c["eval"] = {{"split", "test"},
               {"horizon", experiment::kDefaultHorizon},
               {"probes", Json::array()},
               {"dump_sample", 0}};
  c["bench"] = {{"epochs", 3},
                {"scheme", "ar-rt"},
                {"transolver_nodes", {10000, 20000}},
                {"transolver_slices", 128},
                {"transolver_hidden", 64},
                {"transolver_heads", 8},
                {"repeats", 5}};
  return c;
}

void merge_checked(Json& base, const Json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("config" + (path.empty() ? "" : " '" + path + "'") + " must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    Json& slot = base[it.key()];
    if (!compatible(slot, it.value())) {
      throw ConfigError("config key '" + key + "' expects " + std::string(slot.is_null() ? "number" : slot.type_name()) +
                        ", got " + it.value().type_name());
    }
    if (slot.is_object()) {
      merge_checked(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

void apply_assignment(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json patch = value;
  std::size_t end = key.size();
  while (true) {
    const auto dot = key.rfind('.', end - 1);
    const std::size_t begin = dot == std::string::npos ? 0 : dot + 1;
    const std::string part = key.substr(begin, end - begin);
    if (part.empty()) throw ConfigError("--set: malformed key '" + key + "'");
    patch = Json{{part, std::move(patch)}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  merge_checked(config, patch);
}

Json load_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& assignments) {
  Json config = default_config();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot read config file " + file->string());
    Json user = Json::parse(in, nullptr, false);
    if (user.is_discarded()) throw ConfigError("config file " + file->string() + " is not valid JSON");
    merge_checked(config, user);
  }
  for (const auto& a : assignments) apply_assignment(config, a);
  resolve(config);
  return config;
}

void resolve(Json& config) {
  const auto scheme = transient::parse_scheme(field<std::string>(config["training"], "scheme"));
  const auto preset = experiment::desk_scheme_config(scheme);
  Json& t = config["training"];
  if (t["lr_start"].is_null()) t["lr_start"] = preset.lr_start;
  if (t["lr_end"].is_null()) t["lr_end"] = t["lr_start"].get<double>() * 0.01;
  if (t["grad_clip"].is_null()) t["grad_clip"] = preset.grad_clip;
  transient::parse_model_kind(field<std::string>(config["model"], "kind"));
  transient::parse_scheme(field<std::string>(config["bench"], "scheme"));
  const std::string split = field<std::string>(config["eval"], "split");
  if (split != "train" && split != "val" && split != "test") {
    throw ConfigError("eval.split must be train, val or test");
  }
  for (const auto& p : config["eval"]["probes"]) {
    if (!p.is_number_integer() || p.get<long long>() < 0) throw ConfigError("eval.probes must list node indices");
  }
  for (const auto& n : config["bench"]["transolver_nodes"]) {
    if (!n.is_number_integer() || n.get<long long>() <= 0) throw ConfigError("bench.transolver_nodes must be positive");
  }
  if (field<long long>(config, "workers") < 1) throw ConfigError("workers must be >= 1");
  scenario_from(config).validate();
  model_spec_from(config);
  scheme_config_from(config).validate();
}

datagen::CrashScenario scenario_from(const Json& config) {
  const Json& j = config.at("scenario");
  datagen::CrashScenario s;
  s.nx = field<std::size_t>(j, "nx");
  s.ny = field<std::size_t>(j, "ny");
  s.spacing = field<double>(j, "spacing");
  s.num_components = field<std::size_t>(j, "num_components");
  s.node_mass = field<double>(j, "node_mass");
  s.stiffness = field<double>(j, "stiffness");
  s.yield_strain = field<double>(j, "yield_strain");
  s.post_yield_ratio = field<double>(j, "post_yield_ratio");
  s.damping = field<double>(j, "damping");
  s.wall_gap = field<double>(j, "wall_gap");
  s.wall_stiffness = field<double>(j, "wall_stiffness");
  s.v0 = field<double>(j, "v0");
  s.nominal_thickness = field<double>(j, "nominal_thickness");
  s.dt_fine = field<double>(j, "dt_fine");
  s.substeps = field<std::size_t>(j, "substeps");
  s.frames = field<std::size_t>(j, "frames");
  return s;
}

transient::ModelSpec model_spec_from(const Json& config) {
  const Json& m = config.at("model");
  transient::ModelSpec spec;
  spec.kind = transient::parse_model_kind(field<std::string>(m, "kind"));
  spec.scheme = transient::parse_scheme(field<std::string>(config.at("training"), "scheme"));
  spec.seed = field<std::uint64_t>(config, "seed");
  spec.k_interp = field<std::size_t>(m, "k_interp");
  const Json& t = m.at("transolver");
  spec.transolver.num_slices = field<std::size_t>(t, "num_slices");
  spec.transolver.num_layers = field<std::size_t>(t, "num_layers");
  spec.transolver.hidden_dim = field<std::size_t>(t, "hidden_dim");
  spec.transolver.num_heads = field<std::size_t>(t, "num_heads");
  spec.transolver.mlp_ratio = field<double>(t, "mlp_ratio");
  spec.transolver.activation = parse_activation(field<std::string>(t, "activation"));
  spec.transolver.validate();
  const Json& g = m.at("mgn");
  spec.mgn.num_mp_layers = field<std::size_t>(g, "num_mp_layers");
  spec.mgn.hidden_dim = field<std::size_t>(g, "hidden_dim");
  spec.mgn.mlp_layers = field<std::size_t>(g, "mlp_layers");
  spec.mgn.activation = parse_activation(field<std::string>(g, "activation"));
  spec.mgn.validate();
  const Json& s = m.at("multiscale");
  spec.multiscale.sample_ratio = field<double>(s, "sample_ratio");
  spec.multiscale.k_local = field<std::size_t>(s, "k_local");
  spec.multiscale.longrange_ratio = field<double>(s, "longrange_ratio");
  spec.multiscale.k_long = field<std::size_t>(s, "k_long");
  return spec;
}

transient::SchemeConfig scheme_config_from(const Json& config) {
  const Json& t = config.at("training");
  transient::SchemeConfig c;
  c.scheme = transient::parse_scheme(field<std::string>(t, "scheme"));
  c.seed = field<std::uint64_t>(config, "seed");
  c.workers = field<std::size_t>(config, "workers");
  c.rollout_len = field<std::size_t>(t, "rollout_len");
  c.epochs = field<std::size_t>(t, "epochs");
  c.lr_start = field<double>(t, "lr_start");
  c.lr_end = field<double>(t, "lr_end");
  c.grad_clip = field<double>(t, "grad_clip");
  c.batch_size = field<std::size_t>(t, "batch_size");
  c.checkpoint_every_step = field<bool>(t, "checkpoint_every_step");
  c.noise_std = field<double>(t, "noise_std");
  return c;
}

void write_config(const Json& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << config.dump(2) << "\n";
  if (!out) throw DataError("cannot write " + path.string());
}

}  // namespace crash::cli
