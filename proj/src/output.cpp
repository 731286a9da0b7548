#include "cavsync/output.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "cavsync/errors.hpp"
#include "cavsync/version.hpp"
#include "json.hpp"

namespace cavsync {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) value = 0.0;  // drop the sign of negative zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::scientific, 8);
  return std::string(buf, res.ptr);
}

CsvTable::Row& CsvTable::Row::operator<<(double v) {
  cells_.push_back(format_number(v));
  return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(int v) {
  cells_.push_back(std::to_string(v));
  return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(std::size_t v) {
  cells_.push_back(std::to_string(v));
  return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(const std::string& v) {
  cells_.push_back(v);
  return *this;
}

CsvTable::Row CsvTable::row() {
  rows_.emplace_back();
  return Row(rows_.back());
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  char hash[17];
  const auto res = std::to_chars(hash, hash + 16, fnv1a(config_text), 16);
  std::string hex(hash, res.ptr);
  hex.insert(0, 16 - hex.size(), '0');
  j["subcommand"] = subcommand;
  j["tool_version"] = kVersion;
  j["config_hash"] = "fnv1a64:" + hex;
  j["seed"] = seed;
  j["threads"] = threads;
  j["wall_clock_seconds"] = wall_seconds;
  j["resolved_config"] = config_text;
  for (const auto& [k, v] : extra) j["options"][k] = v;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

}  // namespace cavsync
