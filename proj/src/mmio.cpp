#include "mfgs/mmio.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mfgs::mmio {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

MatX read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("mmio: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("mmio: empty file '" + path + "'");

  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix")
    throw std::runtime_error("mmio: '" + path + "' is not a MatrixMarket matrix file");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (field == "complex" || field == "pattern")
    throw std::runtime_error("mmio: unsupported field '" + field + "' in '" + path + "'");

  // skip comments
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream sizes(line);

  if (format == "array") {
    long rows = 0, cols = 0;
    sizes >> rows >> cols;
    if (rows <= 0 || cols <= 0)
      throw std::runtime_error("mmio: bad size line in '" + path + "'");
    MatX m(rows, cols);
    for (long j = 0; j < cols; ++j) {
      long i0 = (symmetry == "general") ? 0 : j;
      for (long i = i0; i < rows; ++i) {
        double v;
        if (!(in >> v)) throw std::runtime_error("mmio: truncated data in '" + path + "'");
        m(i, j) = v;
        if (symmetry == "symmetric" && i != j) m(j, i) = v;
        if (symmetry == "skew-symmetric" && i != j) m(j, i) = -v;
      }
    }
    return m;
  }

  if (format == "coordinate") {
    long rows = 0, cols = 0, nnz = 0;
    sizes >> rows >> cols >> nnz;
    if (rows <= 0 || cols <= 0 || nnz < 0)
      throw std::runtime_error("mmio: bad size line in '" + path + "'");
    MatX m = MatX::Zero(rows, cols);
    for (long e = 0; e < nnz; ++e) {
      long i, j;
      double v;
      if (!(in >> i >> j >> v)) throw std::runtime_error("mmio: truncated data in '" + path + "'");
      if (i < 1 || i > rows || j < 1 || j > cols)
        throw std::runtime_error("mmio: index out of range in '" + path + "'");
      m(i - 1, j - 1) = v;
      if (symmetry == "symmetric" && i != j) m(j - 1, i - 1) = v;
      if (symmetry == "skew-symmetric" && i != j) m(j - 1, i - 1) = -v;
    }
    return m;
  }

  throw std::runtime_error("mmio: unsupported format '" + format + "' in '" + path + "'");
}

void write_matrix(const std::string& path, const MatX& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("mmio: cannot write '" + path + "'");
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << " " << m.cols() << "\n";
  char buf[64];
  for (long j = 0; j < m.cols(); ++j) {
    for (long i = 0; i < m.rows(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g\n", m(i, j));
      out << buf;
    }
  }
  if (!out) throw std::runtime_error("mmio: write failed for '" + path + "'");
}

}  // namespace mfgs::mmio
