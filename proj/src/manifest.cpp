#include "ratefield/manifest.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ratefield/errors.hpp"

namespace ratefield {

std::uint64_t file_digest(const std::string& filename) {
  std::ifstream in(filename, std::ios::binary);
  if (!in) throw InvalidArgument("file_digest: cannot open " + filename);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string file_digest_hex(const std::string& filename) {
  std::ostringstream out;
  out << std::hex << std::setfill('0') << std::setw(16) << file_digest(filename);
  return out.str();
}

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : start_(std::chrono::steady_clock::now()) {
  doc_["version"] = "ratefield 0.1.0";
  doc_["command"] = std::move(command);
  doc_["argv"] = std::move(argv);
  doc_["params"] = nlohmann::json::object();
  doc_["inputs"] = nlohmann::json::object();
  doc_["outputs"] = nlohmann::json::object();
}

void RunManifest::set_param(const std::string& key, const nlohmann::json& value) {
  doc_["params"][key] = value;
}

void RunManifest::set_seed(std::uint64_t seed) { doc_["seed"] = seed; }

void RunManifest::add_input(const std::string& path) {
  doc_["inputs"][path] = file_digest_hex(path);
}

void RunManifest::add_output(const std::string& path) {
  doc_["outputs"][path] = file_digest_hex(path);
}

void RunManifest::write(const std::string& filename) const {
  nlohmann::json doc = doc_;
  doc["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  std::ofstream out(filename);
  if (!out) throw InvalidArgument("RunManifest: cannot write " + filename);
  out << doc.dump(2) << "\n";
}

}  // namespace ratefield
