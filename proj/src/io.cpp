#include "gsm/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gsm/errors.hpp"

namespace gsm {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path dir = target.parent_path();
  if (!dir.empty() && !fs::exists(dir)) fs::create_directories(dir);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw DomainError("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string matrix_to_csv(const Eigen::MatrixXd& data,
                          const std::vector<std::string>& colnames) {
  const auto m = data.cols();
  std::string out;
  out.reserve(static_cast<size_t>(data.size()) * 20 + 64);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (j) out += ',';
    if (static_cast<Eigen::Index>(colnames.size()) > j)
      out += colnames[static_cast<size_t>(j)];
    else
      out += "x" + std::to_string(j + 1);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j) out += ',';
      out += format_double(data(i, j));
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

Eigen::MatrixXd csv_to_matrix(const std::string& content,
                              const std::string& origin) {
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line))
    throw DomainError("empty CSV: " + origin);
  const auto header = split_line(line);
  const auto m = static_cast<Eigen::Index>(header.size());

  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != m)
      throw DomainError("ragged CSV row " + std::to_string(rows + 2) + " in " +
                        origin);
    for (const auto& f : fields) {
      double v;
      auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw DomainError("non-numeric CSV field '" + f + "' in " + origin);
      values.push_back(v);
    }
    ++rows;
  }
  Eigen::MatrixXd out(rows, m);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      out(i, j) = values[static_cast<size_t>(i * m + j)];
  return out;
}

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& data,
                      const std::vector<std::string>& colnames) {
  atomic_write_file(path, matrix_to_csv(data, colnames));
}

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  return csv_to_matrix(read_file(path), path);
}

}  // namespace gsm
