#ifndef BMID_CSV_HPP
#define BMID_CSV_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmid {

/// Doubles in CSV output carry 17 significant digits so they round-trip.
inline std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Minimal CSV emitter: comma separators, one header row, LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) {
    if (const auto dir = path.parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
    out_.open(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out_) throw std::runtime_error("cannot open CSV file: " + path.string());
    write_row(header);
  }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace bmid

#endif  // BMID_CSV_HPP
