#include "dsl/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace dsl {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& cell, std::size_t line_no,
                    const std::string& col) {
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw invalid_input("CSV line " + std::to_string(line_no) +
                        ": cannot parse column '" + col + "' value '" + cell + "'");
  }
}

int parse_binary(const std::string& cell, std::size_t line_no, const std::string& col) {
  if (cell == "0") return 0;
  if (cell == "1") return 1;
  throw invalid_input("CSV line " + std::to_string(line_no) + ": column '" + col +
                      "' must be 0 or 1, got '" + cell + "'");
}

}  // namespace

RawCsvData read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw io_error("empty CSV file: " + path);
  auto header = split_line(line);
  for (auto& h : header) h = trim(h);
  if (header.size() < 4 || header[0] != "time" || header[1] != "event" ||
      header[2] != "treatment") {
    throw invalid_input(
        "CSV header must start with time,event,treatment,x1,...: " + path);
  }
  const int d = static_cast<int>(header.size()) - 3;
  for (int c = 0; c < d; ++c) {
    if (header[static_cast<std::size_t>(c) + 3] != "x" + std::to_string(c + 1)) {
      throw invalid_input("CSV covariate columns must be named x1..x" +
                          std::to_string(d));
    }
  }

  std::vector<double> u;
  std::vector<int> delta, w;
  std::vector<double> xflat;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw invalid_input("CSV line " + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " cells, got " +
                          std::to_string(cells.size()));
    }
    u.push_back(parse_double(trim(cells[0]), line_no, "time"));
    delta.push_back(parse_binary(trim(cells[1]), line_no, "event"));
    w.push_back(parse_binary(trim(cells[2]), line_no, "treatment"));
    for (int c = 0; c < d; ++c) {
      const std::string cell = trim(cells[static_cast<std::size_t>(c) + 3]);
      if (cell.empty()) {
        xflat.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        xflat.push_back(parse_double(cell, line_no, "x" + std::to_string(c + 1)));
      }
    }
  }
  if (u.empty()) throw invalid_input("CSV has no data rows: " + path);

  RawCsvData raw;
  raw.d = d;
  const Eigen::Index n = static_cast<Eigen::Index>(u.size());
  raw.u = Eigen::Map<VectorXd>(u.data(), n);
  raw.delta = Eigen::Map<VectorXi>(delta.data(), n);
  raw.w = Eigen::Map<VectorXi>(w.data(), n);
  raw.x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>(xflat.data(), n, d);
  return raw;
}

void mean_impute(RawCsvData& raw) {
  for (int c = 0; c < raw.d; ++c) {
    double sum = 0.0;
    Eigen::Index cnt = 0;
    for (Eigen::Index i = 0; i < raw.x.rows(); ++i) {
      if (std::isfinite(raw.x(i, c))) {
        sum += raw.x(i, c);
        ++cnt;
      }
    }
    if (cnt == 0) {
      throw invalid_input("mean_impute: covariate x" + std::to_string(c + 1) +
                          " has no observed values");
    }
    const double mean = sum / static_cast<double>(cnt);
    for (Eigen::Index i = 0; i < raw.x.rows(); ++i) {
      if (!std::isfinite(raw.x(i, c))) raw.x(i, c) = mean;
    }
  }
}

Dataset dataset_from_raw(const RawCsvData& raw) {
  std::vector<SubjectRecord> records;
  records.reserve(static_cast<std::size_t>(raw.u.size()));
  for (Eigen::Index i = 0; i < raw.u.size(); ++i) {
    records.push_back(SubjectRecord{raw.u[i], raw.delta[i],
                                    raw.x.row(i).transpose(), raw.w[i]});
  }
  return validate_dataset(records, raw.d);
}

Dataset read_dataset(const std::string& path, bool impute_missing) {
  RawCsvData raw = read_dataset_csv(path);
  if (impute_missing) {
    mean_impute(raw);
  } else if (raw.has_missing()) {
    throw invalid_input("CSV contains missing covariate cells: " + path);
  }
  return dataset_from_raw(raw);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write CSV file: " + path);
  out << "time,event,treatment";
  for (Eigen::Index c = 0; c < dataset.dim(); ++c) out << ",x" << (c + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < dataset.n(); ++i) {
    out << format_double(dataset.u()[i]) << "," << dataset.delta()[i] << ","
        << dataset.w()[i];
    for (Eigen::Index c = 0; c < dataset.dim(); ++c) {
      out << "," << format_double(dataset.x()(i, c));
    }
    out << "\n";
  }
  if (!out) throw io_error("write failed: " + path);
}

void write_table_csv(const std::string& path,
                     const std::vector<std::string>& header,
                     const MatrixXd& values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw invalid_input("write_table_csv: header does not match column count");
  }
  std::ofstream out(path);
  if (!out) throw io_error("cannot write CSV file: " + path);
  for (std::size_t c = 0; c < header.size(); ++c) {
    out << (c ? "," : "") << header[c];
  }
  out << "\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out << (c ? "," : "") << format_double(values(i, c));
    }
    out << "\n";
  }
  if (!out) throw io_error("write failed: " + path);
}

}  // namespace dsl
