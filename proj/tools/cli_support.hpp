#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace pmmd_cli {

// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_hash(const std::string& content);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Shortest text that reads back to the same double.
std::string fmt(double value);

// Accumulates one command's manifest. The hash covers the command, its
// resolved parameters and the content hashes of its inputs; output locations,
// thread counts and timing are recorded but not hashed.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  void parameter(const std::string& key, const std::string& value) { params_[key] = value; }
  void input(const std::string& role, const std::string& path);
  void set_argv(std::vector<std::string> argv) { argv_ = std::move(argv); }
  void set_config_path(std::string path) { config_path_ = std::move(path); }

  std::string hash() const;

  // Writes `content` with the given path and records it as an output.
  void write_output(const std::string& path, const std::string& content);
  // Records a file some other component already wrote.
  void record_output(const std::string& path);

  // manifest.json text, including wall time and output hashes.
  std::string render(double wall_ms) const;

 private:
  nlohmann::json hashed_part() const;

  std::string command_;
  std::string config_path_;
  std::vector<std::string> argv_;
  std::map<std::string, std::string> params_;
  std::map<std::string, std::pair<std::string, std::string>> inputs_;  // role -> (path, hash)
  std::vector<std::pair<std::string, std::string>> outputs_;           // (path, hash)
};

// Builds CSV text: a '#' line with the manifest hash, the header, then rows.
class Csv {
 public:
  Csv(const std::string& manifest_hash, const std::vector<std::string>& header,
      const std::vector<std::string>& comments = {});
  void row(const std::vector<std::string>& cells);
  const std::string& text() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

}  // namespace pmmd_cli
