#include "avgsde/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "avgsde/errors.hpp"

namespace avgsde::io {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string provenance(std::uint64_t config_hash, std::uint64_t seed) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "avgsde artifact v1 config=%016llx seed=%llu",
                static_cast<unsigned long long>(config_hash),
                static_cast<unsigned long long>(seed));
  return buf;
}

Table::Table(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw std::invalid_argument("Table: no columns");
}

void Table::add_row(std::span<const double> row) {
  if (row.size() != columns_.size())
    throw std::invalid_argument("Table: row width mismatch");
  data_.emplace_back(row.begin(), row.end());
}

std::string Table::to_csv(const std::string& provenance_line) const {
  std::string out = "# " + provenance_line + "\n";
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c) out += ',';
    out += columns_[c];
  }
  out += '\n';
  for (const auto& row : data_) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

std::string Table::to_json(const std::string& provenance_line) const {
  nlohmann::json doc;
  doc["provenance"] = provenance_line;
  doc["columns"] = columns_;
  auto& rows = doc["rows"] = nlohmann::json::array();
  for (const auto& row : data_) rows.push_back(row);
  return doc.dump(2) + "\n";
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw NumericError("cannot open '" + path + "' for writing");
  file.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!file) throw NumericError("write failed for '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw NumericError("cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(file)),
                     std::istreambuf_iterator<char>());
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw NumericError("cannot create directory '" + path + "': " + ec.message());
}

}  // namespace avgsde::io
