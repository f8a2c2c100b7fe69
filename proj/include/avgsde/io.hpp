#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace avgsde::io {

std::uint64_t fnv1a64(std::string_view data);

// Round-trip exact float rendering, 17 significant digits.
std::string format_double(double v);

// Provenance line embedded in every artifact: config hash, seed, format
// version. Deliberately free of wall-clock data so reruns are byte-stable.
std::string provenance(std::uint64_t config_hash, std::uint64_t seed);

// Small numeric table rendered deterministically as CSV (one header row,
// comma separator, leading '#' provenance comment) or JSON.
class Table {
 public:
  explicit Table(std::vector<std::string> columns);

  void add_row(std::span<const double> row);
  std::size_t rows() const { return data_.size(); }

  std::string to_csv(const std::string& provenance_line) const;
  std::string to_json(const std::string& provenance_line) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> data_;
};

void write_file(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

// Creates the directory (and parents) if missing; throws on failure.
void ensure_directory(const std::string& path);

}  // namespace avgsde::io
