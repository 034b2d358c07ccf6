// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>

#include "crash/surrogate.hpp"

// Model checkpoint: manifest.json (model spec, seed, physical context,
// mesh fingerprint, parameter table) plus params.bin, the parameters in
// declaration order as little-endian float64.
namespace crash::transient {

inline constexpr int kCheckpointSchemaVersion = 1;

void save_checkpoint(const Surrogate& model, const std::filesystem::path& dir);

// Rebuilds the model on `mesh`. DataError if the directory is missing, the
// schema or checksum is wrong, or the mesh differs from the one trained on.
std::unique_ptr<Surrogate> load_checkpoint(const std::filesystem::path& dir, const geometry::Mesh& mesh);

}  // namespace crash::transient
