#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mfgs/mmio.hpp"
#include "test_helpers.hpp"

using namespace mfgs;

TEST_SUITE("mmio") {
  TEST_CASE("write/read round trip is exact") {
    std::mt19937_64 rng(11);
    MatX m = testing::random_matrix(rng, 7, 3);
    m(0, 0) = 1e-17;
    m(6, 2) = -3.141592653589793e100;
    const std::string path = (std::filesystem::temp_directory_path() / "mfgs_rt.mtx").string();
    mmio::write_matrix(path, m);
    MatX back = mmio::read_matrix(path);
    CHECK(back.rows() == 7);
    CHECK(back.cols() == 3);
    CHECK((back - m).norm() == 0.0);
    std::remove(path.c_str());
  }

  TEST_CASE("coordinate and symmetric storage") {
    const std::string path = (std::filesystem::temp_directory_path() / "mfgs_coord.mtx").string();
    {
      std::ofstream out(path);
      out << "%%MatrixMarket matrix coordinate real symmetric\n";
      out << "% comment line\n";
      out << "3 3 4\n";
      out << "1 1 2.0\n2 1 -1.0\n2 2 2.0\n3 3 5.5\n";
    }
    MatX m = mmio::read_matrix(path);
    CHECK(m(0, 1) == -1.0);
    CHECK(m(1, 0) == -1.0);
    CHECK(m(2, 2) == 5.5);
    CHECK(m(0, 2) == 0.0);
    std::remove(path.c_str());
  }

  TEST_CASE("rejects junk") {
    const std::string path = (std::filesystem::temp_directory_path() / "mfgs_bad.mtx").string();
    {
      std::ofstream out(path);
      out << "not a header\n1 1\n0\n";
    }
    CHECK_THROWS(mmio::read_matrix(path));
    CHECK_THROWS(mmio::read_matrix("/nonexistent/file.mtx"));
    std::remove(path.c_str());
  }
}
