#include "cli_support.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pmmd_cli {

std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &length) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string fmt(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void Manifest::input(const std::string& role, const std::string& path) {
  inputs_[role] = {path, git_blob_hash(read_file(path))};
}

nlohmann::json Manifest::hashed_part() const {
  nlohmann::json j;
  j["command"] = command_;
  j["parameters"] = params_;
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [role, entry] : inputs_) inputs[role] = entry.second;
  j["inputs"] = inputs;
  return j;
}

std::string Manifest::hash() const { return git_blob_hash(hashed_part().dump()); }

void Manifest::write_output(const std::string& path, const std::string& content) {
  write_file(path, content);
  outputs_.emplace_back(path, git_blob_hash(content));
}

void Manifest::record_output(const std::string& path) {
  outputs_.emplace_back(path, git_blob_hash(read_file(path)));
}

std::string Manifest::render(double wall_ms) const {
  nlohmann::json j = hashed_part();
  j["manifest_hash"] = hash();
  j["argv"] = argv_;
  j["config_path"] = config_path_;
  if (auto it = params_.find("seed"); it != params_.end()) j["seed"] = it->second;
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [role, entry] : inputs_)
    inputs[role] = {{"path", entry.first}, {"hash", entry.second}};
  j["inputs"] = inputs;
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& [path, hash] : outputs_) outputs.push_back({{"path", path}, {"hash", hash}});
  j["outputs"] = outputs;
  j["wall_ms"] = wall_ms;
  return j.dump(2) + "\n";
}

Csv::Csv(const std::string& manifest_hash, const std::vector<std::string>& header,
         const std::vector<std::string>& comments)
    : columns_(header.size()) {
  text_ = "# manifest " + manifest_hash + "\n";
  for (const auto& c : comments) text_ += "# " + c + "\n";
  row(header);
}

void Csv::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("CSV row has the wrong number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
}

}  // namespace pmmd_cli
