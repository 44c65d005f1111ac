#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "gsm/errors.hpp"
#include "gsm/io.hpp"

using gsm::csv_to_matrix;
using gsm::DomainError;
using gsm::format_double;
using gsm::matrix_to_csv;

TEST_CASE("format_double is shortest and round trips") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.25) == "0.25");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(0.0) == "0");
  for (double v : {0.1, 1.0 / 3.0, 3.141592653589793, 1e-300, 1e300,
                   -7.25e-12, 123456.789}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("csv matrix round trip") {
  Eigen::MatrixXd d(2, 3);
  d << 1.0, 0.5, 0.25,
       2.0, 0.1, 1.0 / 3.0;
  const std::string csv = matrix_to_csv(d);
  CHECK(csv.rfind("x1,x2,x3\n", 0) == 0);
  Eigen::MatrixXd back = csv_to_matrix(csv, "<test>");
  CHECK(back.rows() == 2);
  CHECK(back.cols() == 3);
  CHECK((back - d).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("csv parser rejects malformed input") {
  CHECK_THROWS_AS(csv_to_matrix("", "<t>"), DomainError);
  CHECK_THROWS_AS(csv_to_matrix("x1,x2\n1,2\n3\n", "<t>"), DomainError);
  CHECK_THROWS_AS(csv_to_matrix("x1,x2\n1,2\n3,4,5\n", "<t>"), DomainError);
  CHECK_THROWS_AS(csv_to_matrix("x1,x2\n1,abc\n", "<t>"), DomainError);
  // header-only content parses as zero rows
  Eigen::MatrixXd empty = csv_to_matrix("x1,x2\n", "<t>");
  CHECK(empty.rows() == 0);
  CHECK(empty.cols() == 2);
}

TEST_CASE("error messages carry the origin and row") {
  try {
    csv_to_matrix("x1,x2\n1,2\n3\n", "data.csv");
    CHECK(false);
  } catch (const DomainError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("data.csv") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
}

TEST_CASE("atomic file write and read back") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "gsm_io_test";
  fs::create_directories(dir);
  const auto path = (dir / "out.txt").string();
  gsm::atomic_write_file(path, "hello\n");
  CHECK(gsm::read_file(path) == "hello\n");
  gsm::atomic_write_file(path, "replaced\n");
  CHECK(gsm::read_file(path) == "replaced\n");
  // no temp litter left behind
  int entries = 0;
  for (const auto& it : fs::directory_iterator(dir)) {
    (void)it;
    ++entries;
  }
  CHECK(entries == 1);
  fs::remove_all(dir);
  CHECK_THROWS_AS(gsm::read_file(path), DomainError);
}

TEST_CASE("csv file io") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "gsm_io_test2";
  fs::create_directories(dir);
  const auto path = (dir / "m.csv").string();
  Eigen::MatrixXd d(3, 2);
  d << 0.0, 1.5,
       2.25, 3.0,
       0.125, 9.0;
  gsm::write_csv_matrix(path, d);
  Eigen::MatrixXd back = gsm::read_csv_matrix(path);
  CHECK((back - d).lpNorm<Eigen::Infinity>() == 0.0);
  fs::remove_all(dir);
}
