/* Copyright 2026 The vaealign Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef VAEALIGN_CLI_HPP_
#define VAEALIGN_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "vaealign/vae.hpp"

namespace vaealign {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Resolved "key = value" settings of one subcommand. Typed getters throw
// ConfigError on malformed values.
class Settings {
 public:
  Settings() = default;
  explicit Settings(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.contains(key); }
  const std::string& str(const std::string& key) const;
  std::size_t size(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  double real(const std::string& key) const;
  bool flag(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// "key = value" lines ('#' comments). Keys outside `valid` are a ConfigError
// that lists the valid keys.
std::map<std::string, std::string> read_settings_file(const std::filesystem::path& path,
                                                      const std::vector<std::string>& valid);
void write_settings_file(const std::filesystem::path& path, const Settings& settings);

enum class ModelFamily { kIbm1Count, kHmmCount, kIbm1Nn, kHmmNn, kIbm1Vae, kHmmVae };

ModelFamily parse_family(const std::string& name);
const char* family_string(ModelFamily family);

// Everything `train` needs, validated.
struct RunConfig {
  ModelFamily family = ModelFamily::kIbm1Count;
  bool sp = false;
  bool ac = false;
  bool mono = false;
  bool noise = false;
  ObjectiveWeights weights;
  double learning_rate = 1e-3;
  std::size_t batch_size = 100;
  std::size_t epochs = 10;
  std::size_t m_steps = 1;
  std::size_t max_len = 50;  // 0 keeps every pair
  std::uint64_t seed = 1;
  bool reverse = false;  // single-direction models: align target words to source
  EncoderConfig encoder;
  std::size_t nn_embed = 128;
  std::size_t nn_hidden = 64;
  NoiseConfig noise_config;
  AlignFamily noise_family = AlignFamily::kIbm1;
  bool kl_includes_dummy = true;
  std::string mono_source;
  std::string mono_target;

  bool is_vae() const;
  bool is_neural() const;
  bool is_hmm() const;
};

// Throws ConfigError on invalid combinations (+ac without +sp, +noise
// without monolingual data, feature flags on non-VAE families, ...).
RunConfig make_run_config(const Settings& settings);

std::string sha256_file(const std::filesystem::path& path);

// Entry point for the command-line tool; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vaealign

#endif  // VAEALIGN_CLI_HPP_
