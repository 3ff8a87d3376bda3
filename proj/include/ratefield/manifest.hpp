#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace ratefield {

// FNV-1a 64-bit digest of a file's bytes; stable across platforms.
std::uint64_t file_digest(const std::string& filename);
std::string file_digest_hex(const std::string& filename);

// Reproducibility record written next to every CLI output set: the command,
// its full parameter set, seeds, digests of inputs and outputs, wall clock,
// and the tool version. Re-running the recorded command reproduces the
// outputs byte for byte.
class RunManifest {
public:
  RunManifest(std::string command, std::vector<std::string> argv);

  void set_param(const std::string& key, const nlohmann::json& value);
  void set_seed(std::uint64_t seed);
  void add_input(const std::string& path);
  void add_output(const std::string& path);
  void write(const std::string& filename) const;

  const nlohmann::json& data() const { return doc_; }

private:
  nlohmann::json doc_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ratefield
