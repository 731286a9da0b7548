#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cavsync {

// Scientific notation, 9 significant digits, locale independent.
std::string format_number(double value);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(double v);
    Row& operator<<(int v);
    Row& operator<<(std::size_t v);
    Row& operator<<(const std::string& v);
    Row& operator<<(const char* v) { return *this << std::string(v); }

   private:
    friend class CsvTable;
    explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
    std::vector<std::string>& cells_;
  };

  Row row();
  std::string str() const;
  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Write via a temporary file in the same directory and rename into place.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::uint64_t fnv1a(std::string_view data);

struct RunManifest {
  std::string subcommand;
  std::string config_text;  // canonical config echo
  std::uint64_t seed = 0;
  int threads = 1;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, std::string>> extra;

  std::string to_json() const;
};

}  // namespace cavsync
