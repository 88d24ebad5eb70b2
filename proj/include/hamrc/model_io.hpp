#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hamrc/training.hpp"

namespace hamrc {

inline constexpr int kModelFormatVersion = 1;

/// A trained model together with the experiment description it came from.
struct ModelDocument {
  TrainedModel model;
  /// Canonical experiment config JSON; empty when unknown.
  std::string experiment;
};

/// Versioned JSON document: reservoir config, A as (row, col, value)
/// triplets, dense W_in, b, W_out, final state, manifest and a SHA-256
/// content hash of everything else. Doubles are written round-trip exact.
std::string model_to_json(const ModelDocument& doc);
/// Throws ConfigError on version mismatch, hash mismatch or malformed input.
ModelDocument model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const ModelDocument& doc);
ModelDocument load_model(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Run record written next to every command's outputs: the command, the
/// config echo, seeds, free-form results and a hash of each output file.
class RunManifest {
 public:
  RunManifest(std::string command, const std::string& config_json);

  void add_output(const std::filesystem::path& path);
  nlohmann::json& results() { return results_; }

  /// Writes manifest.json into `dir`. The timestamp is the only field that
  /// differs between identical runs.
  void write(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  nlohmann::json config_;
  nlohmann::json results_ = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> outputs_;
};

}  // namespace hamrc
