// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/checkpoint.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "json_codec.hpp"

namespace crash::transient {

namespace fs = std::filesystem;
using detail::json;

namespace {

std::string activation_name(diff::Activation a) { return a == diff::Activation::gelu ? "gelu" : "relu"; }

diff::Activation activation_from(const std::string& s) {
  if (s == "gelu") return diff::Activation::gelu;
  if (s == "relu") return diff::Activation::relu;
  throw DataError("checkpoint: unknown activation '" + s + "'");
}

json spec_to_json(const ModelSpec& s) {
  const auto& t = s.transolver;
  const auto& m = s.mgn;
  const auto& ms = s.multiscale;
  return json{{"kind", to_string(s.kind)},
              {"scheme", to_string(s.scheme)},
              {"seed", s.seed},
              {"k_interp", s.k_interp},
              {"transolver", {{"num_slices", t.num_slices},
                              {"num_layers", t.num_layers},
                              {"hidden_dim", t.hidden_dim},
                              {"num_heads", t.num_heads},
                              {"mlp_ratio", t.mlp_ratio},
                              {"activation", activation_name(t.activation)}}},
              {"mgn", {{"num_mp_layers", m.num_mp_layers},
                       {"hidden_dim", m.hidden_dim},
                       {"mlp_layers", m.mlp_layers},
                       {"activation", activation_name(m.activation)}}},
              {"multiscale", {{"sample_ratio", ms.sample_ratio},
                              {"k_local", ms.k_local},
                              {"longrange_ratio", ms.longrange_ratio},
                              {"k_long", ms.k_long}}}};
}

ModelSpec spec_from_json(const json& j) {
  using detail::get_field;
  ModelSpec s;
  try {
    s.kind = parse_model_kind(get_field<std::string>(j, "kind", "spec"));
    s.scheme = parse_scheme(get_field<std::string>(j, "scheme", "spec"));
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  s.seed = get_field<std::uint64_t>(j, "seed", "spec");
  s.k_interp = get_field<std::size_t>(j, "k_interp", "spec");
  const json t = get_field<json>(j, "transolver", "spec");
  s.transolver.num_slices = get_field<std::size_t>(t, "num_slices", "transolver");
  s.transolver.num_layers = get_field<std::size_t>(t, "num_layers", "transolver");
  s.transolver.hidden_dim = get_field<std::size_t>(t, "hidden_dim", "transolver");
  s.transolver.num_heads = get_field<std::size_t>(t, "num_heads", "transolver");
  s.transolver.mlp_ratio = get_field<double>(t, "mlp_ratio", "transolver");
  s.transolver.activation = activation_from(get_field<std::string>(t, "activation", "transolver"));
  const json m = get_field<json>(j, "mgn", "spec");
  s.mgn.num_mp_layers = get_field<std::size_t>(m, "num_mp_layers", "mgn");
  s.mgn.hidden_dim = get_field<std::size_t>(m, "hidden_dim", "mgn");
  s.mgn.mlp_layers = get_field<std::size_t>(m, "mlp_layers", "mgn");
  s.mgn.activation = activation_from(get_field<std::string>(m, "activation", "mgn"));
  const json ms = get_field<json>(j, "multiscale", "spec");
  s.multiscale.sample_ratio = get_field<double>(ms, "sample_ratio", "multiscale");
  s.multiscale.k_local = get_field<std::size_t>(ms, "k_local", "multiscale");
  s.multiscale.longrange_ratio = get_field<double>(ms, "longrange_ratio", "multiscale");
  s.multiscale.k_long = get_field<std::size_t>(ms, "k_long", "multiscale");
  return s;
}

}  // namespace

void save_checkpoint(const Surrogate& model, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<double> blob;
  json table = json::array();
  for (const auto& p : model.params()) {
    table.push_back(json{{"name", p.name}, {"shape", p.value.shape()}});
    blob.insert(blob.end(), p.value.values().begin(), p.value.values().end());
  }
  const auto bytes = detail::to_bytes(blob);
  detail::write_file(dir / "params.bin", bytes);
  const auto& ctx = model.context();
  json manifest{{"schema_version", kCheckpointSchemaVersion},
                {"spec", spec_to_json(model.spec())},
                {"context", {{"dt", ctx.dt}, {"t_max", ctx.t_max}, {"wall_x", ctx.wall_x},
                             {"normalization", detail::normalization_to_json(ctx.stats)}}},
                {"num_nodes", model.num_full_nodes()},
                {"parameters", table},
                {"params_file", {{"name", "params.bin"}, {"bytes", bytes.size()},
                                 {"crc32", detail::crc32_bytes(bytes)}}}};
  manifest["mesh_crc32"] = model.mesh_fingerprint();
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

std::unique_ptr<Surrogate> load_checkpoint(const fs::path& dir, const geometry::Mesh& mesh) {
  using detail::get_field;
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw DataError("checkpoint not found: " + mpath.string());
  json manifest;
  try {
    std::ifstream in(mpath);
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint manifest " + mpath.string() + ": " + e.what());
  }
  const int version = get_field<int>(manifest, "schema_version", "checkpoint");
  if (version != kCheckpointSchemaVersion) {
    throw DataError("checkpoint schema version " + std::to_string(version) + " not supported");
  }
  if (get_field<std::size_t>(manifest, "num_nodes", "checkpoint") != mesh.num_nodes()) {
    throw DataError("checkpoint/dataset mesh mismatch: node counts differ");
  }
  if (get_field<std::uint32_t>(manifest, "mesh_crc32", "checkpoint") != datagen::mesh_fingerprint(mesh)) {
    throw DataError("checkpoint/dataset mesh mismatch: mesh fingerprints differ");
  }
  ModelSpec spec = spec_from_json(get_field<json>(manifest, "spec", "checkpoint"));
  const json c = get_field<json>(manifest, "context", "checkpoint");
  PhysicalContext ctx;
  ctx.dt = get_field<double>(c, "dt", "context");
  ctx.t_max = get_field<double>(c, "t_max", "context");
  ctx.wall_x = get_field<double>(c, "wall_x", "context");
  ctx.stats = detail::normalization_from_json(get_field<json>(c, "normalization", "context"));
  auto model = std::make_unique<Surrogate>(spec, mesh, ctx);

  const json pf = get_field<json>(manifest, "params_file", "checkpoint");
  const auto bytes = detail::read_checked(dir / get_field<std::string>(pf, "name", "params_file"),
                                          get_field<std::size_t>(pf, "bytes", "params_file"),
                                          get_field<std::uint32_t>(pf, "crc32", "params_file"));
  const auto blob = detail::from_bytes<double>(bytes);
  const json table = get_field<json>(manifest, "parameters", "checkpoint");
  auto& params = model->params();
  if (table.size() != params.size()) throw DataError("checkpoint: parameter count does not match the model");
  std::size_t off = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (get_field<std::string>(table[i], "name", "parameter") != p.name ||
        get_field<diff::Shape>(table[i], "shape", "parameter") != p.value.shape()) {
      throw DataError("checkpoint: parameter " + std::to_string(i) + " (" + p.name + ") does not match the model");
    }
    if (off + p.value.size() > blob.size()) throw DataError("checkpoint: parameter blob too short");
    std::copy(blob.begin() + std::ptrdiff_t(off), blob.begin() + std::ptrdiff_t(off + p.value.size()),
              p.value.data());
    off += p.value.size();
  }
  if (off != blob.size()) throw DataError("checkpoint: parameter blob has trailing data");
  return model;
}

}  // namespace crash::transient
