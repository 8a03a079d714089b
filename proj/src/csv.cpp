#include "robust_debias/csv.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "robust_debias/errors.hpp"

namespace robust_debias {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    std::size_t b = 0, e = field.size();
    while (b < e && std::isspace(static_cast<unsigned char>(field[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(field[e - 1]))) --e;
    fields.push_back(field.substr(b, e - b));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& s, long line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected a number, got '" + s + "'", line_no);
  }
}

}  // namespace

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: " + path, 1);
  const std::vector<std::string> header = split_csv_line(line);

  long y_col = -1;
  std::vector<long> x_cols;  // x_cols[k] = column index of x{k+1}
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == "y") {
      if (y_col >= 0) throw ParseError("duplicate column 'y'", 1);
      y_col = static_cast<long>(c);
    } else if (name.size() > 1 && name[0] == 'x') {
      long k = 0;
      try {
        k = std::stol(name.substr(1));
      } catch (const std::exception&) {
        throw ParseError("unrecognized column '" + name + "'", 1);
      }
      if (k < 1) throw ParseError("feature index must start at x1, got '" + name + "'", 1);
      if (static_cast<std::size_t>(k) > x_cols.size()) x_cols.resize(static_cast<std::size_t>(k), -1);
      if (x_cols[static_cast<std::size_t>(k - 1)] >= 0) throw ParseError("duplicate column '" + name + "'", 1);
      x_cols[static_cast<std::size_t>(k - 1)] = static_cast<long>(c);
    } else {
      throw ParseError("unrecognized column '" + name + "' (expected y, x1..xp)", 1);
    }
  }
  if (y_col < 0) throw ParseError("missing column 'y'", 1);
  if (x_cols.empty()) throw ParseError("no feature columns x1..xp", 1);
  for (std::size_t k = 0; k < x_cols.size(); ++k) {
    if (x_cols[k] < 0) throw ParseError("missing column 'x" + std::to_string(k + 1) + "'", 1);
  }

  std::vector<std::vector<double>> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) row[c] = parse_double(fields[c], line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows in " + path, line_no);

  Dataset ds;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(x_cols.size());
  ds.X.resize(n, p);
  ds.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.y[i] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(y_col)];
    for (Eigen::Index j = 0; j < p; ++j) {
      ds.X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(x_cols[static_cast<std::size_t>(j)])];
    }
  }
  return ds;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) row[c] = parse_double(fields[c], line_no);
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("ragged row", line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty matrix file: " + path, line_no);
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return M;
}

void write_ci_csv(const std::string& path, const std::vector<InferenceRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_ci_csv: cannot open " + path);
  out << "j,beta_hat,debiased,lo,hi,omega_jj,v_hat,flags\n";
  char buf[256];
  for (const InferenceRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%s\n",
                  static_cast<long long>(r.j + 1), r.beta_hat, r.debiased, r.lo, r.hi, r.omega_jj,
                  r.v_hat, r.flags.c_str());
    out << buf;
  }
}

}  // namespace robust_debias
