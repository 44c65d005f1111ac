#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gsm {

// Shortest round-trip decimal representation of a double ("1", "0.25",
// "3.141592653589793"). Used everywhere a number is printed so that rerunning
// a command yields byte-identical files.
std::string format_double(double v);

// Write `content` to `path` atomically (temp file in the same directory,
// then rename).
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Sample matrices travel as CSV with a header row x1..xm and one observation
// per row.
std::string matrix_to_csv(const Eigen::MatrixXd& data,
                          const std::vector<std::string>& colnames = {});
Eigen::MatrixXd csv_to_matrix(const std::string& content,
                              const std::string& origin = "<string>");
void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& data,
                      const std::vector<std::string>& colnames = {});
Eigen::MatrixXd read_csv_matrix(const std::string& path);

}  // namespace gsm
