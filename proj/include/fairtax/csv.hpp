#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

// Deterministic CSV emission: fixed %.10g formatting so identical runs
// produce byte-identical artifacts.

namespace fairtax {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : path_(path) {
    std::filesystem::create_directories(
        std::filesystem::path(path).parent_path());
    out_.open(path);
    if (!out_) throw std::runtime_error("cannot write " + path);
    write_row(header);
  }

  void write_row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  const std::string& path() const { return path_; }

private:
  std::string path_;
  std::ofstream out_;
};

/// Prints a table in the layout of the reference baselines: one column per
/// firm plus an Avg column, rows f / phi / swf.
inline void print_welfare_table(std::ostream& os, const std::string& title,
                                const std::vector<std::string>& firm_ids,
                                const std::vector<double>& f,
                                const std::vector<double>& phi) {
  os << title << '\n';
  os << "firm ";
  for (const std::string& id : firm_ids) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%7s", id.c_str());
    os << buf;
  }
  os << "     Avg\n";
  auto row = [&](const char* name, const std::vector<double>& vals,
                 double avg) {
    os << name;
    char buf[16];
    for (double v : vals) {
      std::snprintf(buf, sizeof(buf), "%7.2f", v);
      os << buf;
    }
    std::snprintf(buf, sizeof(buf), "%8.2f", avg);
    os << buf << '\n';
  };
  double f_avg = 0.0, phi_avg = 0.0;
  std::vector<double> swf(f.size());
  for (size_t i = 0; i < f.size(); ++i) {
    f_avg += f[i] / f.size();
    phi_avg += phi[i] / phi.size();
    swf[i] = f[i] * phi[i];
  }
  row("f    ", f, f_avg);
  row("phi  ", phi, phi_avg);
  row("swf  ", swf, f_avg * phi_avg);
}

} // namespace fairtax
