// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crash/datagen.hpp"
#include "crash/transient.hpp"
#include "json.hpp"

namespace crash::cli {

using Json = nlohmann::json;

// Every recognised key with its default. Keys whose default is null are
// filled in by resolve() from the scheme-dependent presets.
Json default_config();

// Overlays `patch` onto `base`. ConfigError on a key absent from `base` or
// on a value whose type differs from the default's.
void merge_checked(Json& base, const Json& patch, const std::string& path = "");

// "a.b.c=value"; the value is read as JSON when it parses, else as a string.
void apply_assignment(Json& config, const std::string& assignment);

// Defaults <- config file <- assignments, then resolve().
Json load_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& assignments);

// Replaces null preset keys with concrete values and validates the tree.
void resolve(Json& config);

datagen::CrashScenario scenario_from(const Json& config);
transient::ModelSpec model_spec_from(const Json& config);
transient::SchemeConfig scheme_config_from(const Json& config);

void write_config(const Json& config, const std::filesystem::path& path);

}  // namespace crash::cli
