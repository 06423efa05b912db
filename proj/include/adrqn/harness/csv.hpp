#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace adrqn::harness {

namespace fs = std::filesystem;

inline const std::vector<std::string> kEpisodeColumns{"seed",   "episode",   "iteration",   "raw_return",
                                                      "clipped_return", "length", "epsilon", "mean_loss",
                                                      "updates", "trailing_return"};
inline const std::vector<std::string> kEvalColumns{"seed", "iteration", "mean_return", "std_return", "episodes",
                                                   "flicker_p"};
inline const std::vector<std::string> kTraceColumns{"episode", "step", "action", "reward", "done", "obscured"};
inline const std::vector<std::string> kSweepColumns{"seed",       "obs_prob",   "flicker_p",
                                                    "mean_return", "std_return", "episodes"};
inline const std::vector<std::string> kRunColumns{"variant", "seed",       "mean_return",   "std_return",
                                                  "episodes", "iterations", "train_episodes"};
inline const std::vector<std::string> kSummaryColumns{"variant",    "seeds",      "mean_return",
                                                      "std_return", "min_return", "max_return"};

inline std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
inline std::string fmt(std::size_t v) { return std::to_string(v); }

/// Line-buffered CSV file; every row is flushed.
class CsvWriter {
 public:
  CsvWriter() = default;
  CsvWriter(const fs::path& path, const std::vector<std::string>& header, bool append = false) : path_(path) {
    const bool exists = append && fs::exists(path);
    out_.open(path, append ? std::ios::app : std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    if (!exists) write_row(header);
  }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("write failed on " + path_.string());
  }

  bool is_open() const { return out_.is_open(); }

 private:
  fs::path path_;
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw std::out_of_range("csv: no column " + name);
  }

  std::vector<double> numbers(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(std::stod(r.at(c)));
    return out;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (std::getline(in, line)) t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (!line.empty()) t.rows.push_back(split_csv_line(line));
  }
  return t;
}

/// Keeps the header and the first `rows` data rows.
inline void truncate_csv(const fs::path& path, std::size_t rows) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string kept, line;
  for (std::size_t i = 0; i <= rows && std::getline(in, line); ++i) kept += line + '\n';
  in.close();
  std::ofstream out(path, std::ios::trunc);
  out << kept;
  if (!out) throw std::runtime_error("cannot rewrite " + path.string());
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace adrqn::harness
