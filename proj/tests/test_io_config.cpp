#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "copr/config.hpp"
#include "copr/io.hpp"
#include "oracles.hpp"

using namespace copr;
namespace fs = std::filesystem;

namespace {

fs::path tmpdir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("copr_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("io_config") {

TEST_CASE("binary round trip") {
  std::mt19937_64 rng(1);
  const CVec a = oracle::random_cvec(rng, 5);
  std::stringstream ss;
  io::write_array(ss, io::from_coefficients(a));
  const std::string bytes = ss.str();
  CHECK(bytes.size() == 8 + 4 + 4 + 8 + 8 + 8 + 5 * 16);
  CHECK(bytes.compare(0, 8, std::string("COPRARR\0", 8)) == 0);
  const CVec b = io::to_coefficients(io::read_array(ss));
  CHECK(a == b);

  Measurements m;
  m.y = RVec::LinSpaced(6, 0.0, 1.0);
  m.normalization = 2.5;
  std::stringstream s2;
  io::write_array(s2, io::from_measurements(m));
  const Measurements m2 = io::to_measurements(io::read_array(s2));
  CHECK(m2.y == m.y);
  CHECK(m2.normalization == 2.5);
}

TEST_CASE("binary parse errors") {
  std::stringstream ss;
  io::write_array(ss, io::from_coefficients(CVec::Ones(3)));
  const std::string good = ss.str();

  auto fails = [](std::string s) {
    std::stringstream in(s);
    CHECK_THROWS_AS(io::read_array(in), ParseError);
  };
  std::string bad = good;
  bad[0] = 'X';
  fails(bad);
  bad = good;
  bad[8] = 9;
  fails(bad);
  bad = good;
  bad[12] = 7;
  fails(bad);
  fails(good.substr(0, good.size() - 3));
  fails(good.substr(0, 20));
  fails(good + "x");
}

TEST_CASE("files and csv") {
  const fs::path d = tmpdir("io");
  const CVec a = CVec::LinSpaced(4, cplx(0, 1), cplx(3, -2));
  io::save(d / "a.bin", io::from_coefficients(a));
  CHECK(io::to_coefficients(io::load(d / "a.bin")) == a);

  io::write_text(d / "y.csv", "0.5\n1.5\n2\n");
  const Measurements m = io::to_measurements(io::load(d / "y.csv"));
  CHECK(m.y.size() == 3);
  CHECK(m.y(1) == 1.5);
  io::write_text(d / "c.csv", "1,2\n3,-4\n");
  const CVec c = io::to_coefficients(io::load(d / "c.csv"));
  CHECK(c(1) == cplx(3, -4));
  io::write_text(d / "bad.csv", "1\nfoo\n");
  CHECK_THROWS_AS(io::load(d / "bad.csv"), ParseError);
  CHECK_THROWS_AS(io::load(d / "missing.bin"), IoError);

  std::ostringstream os;
  RMat r(2, 2);
  r << 1, 2, 3, 4.5;
  io::write_matrix_csv(os, r);
  CHECK(os.str() == "1,2\n3,4.5\n");
}

TEST_CASE("config parse, dump and hash") {
  const ExperimentConfig d;
  CHECK_NOTHROW(d.validate());
  const ExperimentConfig p = parse_config(d.dump());
  CHECK(p.dump() == d.dump());
  CHECK(p.hash() == d.hash());
  CHECK(d.hash().size() == 16);

  ExperimentConfig t = d;
  t.threads = 8;
  CHECK(t.hash() == d.hash());
  t.seed = 2;
  CHECK(t.hash() != d.hash());

  const ExperimentConfig c = parse_config(
      "seed: 9\nm: 16\ncrop: 8\ndefocus: [0.1, -0.2]\nsolver:\n  tau: 1.0e-6\n  lambdas: [0, 2]\n");
  CHECK(c.seed == 9);
  CHECK(c.m == 16);
  CHECK(c.defocus == std::vector<double>{0.1, -0.2});
  CHECK(c.solver.tau == 1e-6);
  CHECK(c.solver.lambdas == std::vector<double>{0.0, 2.0});
  CHECK(c.trials == d.trials);

  CHECK_THROWS_AS(parse_config("m: [1, 2\n"), ParseError);
  CHECK_THROWS_AS(parse_config("m: abc\n"), ParseError);
  CHECK_THROWS_AS(parse_config("m: 16\ncrop: 32\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("form: hexagonal\n"), InvalidArgument);
  CHECK_THROWS_AS(load_config("/nonexistent/x.yaml"), IoError);
}

}  // TEST_SUITE
