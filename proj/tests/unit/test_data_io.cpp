#include "fmpre/data_io.hpp"
#include "fmpre/errors.hpp"

#include <doctest.h>

#include <sstream>

using namespace fmpre;

namespace {

const char* kHeart =
    "63.0,1.0,1.0,145.0,233.0,1.0,2.0,150.0,0.0,2.3,3.0,0.0,6.0,0\n"
    "67.0,1.0,4.0,160.0,286.0,0.0,2.0,108.0,1.0,1.5,2.0,3.0,3.0,2\n"
    "67.0,1.0,4.0,120.0,229.0,0.0,2.0,129.0,1.0,2.6,2.0,2.0,7.0,1\n"
    "37.0,1.0,3.0,130.0,250.0,0.0,0.0,187.0,0.0,3.5,3.0,0.0,3.0,0\n"
    "53.0,0.0,3.0,128.0,216.0,0.0,2.0,115.0,0.0,0.0,1.0,0.0,?,0\n"
    "41.0,0.0,2.0,130.0,204.0,0.0,2.0,172.0,0.0,1.4,1.0,0.0,3.0,4\n";

}  // namespace

TEST_CASE("heart parser") {
  std::istringstream in(kHeart);
  const HeartData h = parse_heart(in);
  CHECK(h.rows_read == 6);
  CHECK(h.rows_dropped == 1);
  CHECK(h.data.n() == 5);
  CHECK(h.data.p() == 3);
  CHECK(h.data.X() == h.data.Omega());
  CHECK(h.data.y()[1] == 2.0);
  CHECK(h.data.y()[4] == 4.0);
  CHECK(h.data.X()(0, 1) == 2.3);
  CHECK(h.data.X()(0, 2) == 3.0);
  CHECK(h.st_depression[3] == 3.5);

  SUBCASE("only selected fields checked when asked") {
    std::istringstream again(kHeart);
    HeartOptions o;
    o.drop_any_missing = false;
    CHECK(parse_heart(again, o).data.n() == 6);
  }
  SUBCASE("missing selected field drops the row") {
    std::istringstream m("63,1,1,145,233,1,2,150,0,?,3,0,6,0\n67,1,4,160,286,0,2,108,1,1.5,2,3,3,2\n");
    HeartOptions o;
    o.drop_any_missing = false;
    const HeartData d = parse_heart(m, o);
    CHECK(d.data.n() == 1);
    CHECK(d.rows_dropped == 1);
  }
  SUBCASE("dummy slope encoding") {
    std::istringstream again(kHeart);
    HeartOptions o;
    o.slope = SlopeEncoding::Dummy;
    const HeartData d = parse_heart(again, o);
    CHECK(d.data.p() == 4);
    CHECK(d.data.X().row(0) == (Eigen::RowVectorXd(4) << 1, 2.3, 0, 1).finished());
    CHECK(d.data.X().row(1) == (Eigen::RowVectorXd(4) << 1, 1.5, 1, 0).finished());
  }
  SUBCASE("errors carry line numbers") {
    std::istringstream cols("63,1,1,145,233,1,2,150,0,2.3,3,0,6,0\n1,2,3\n");
    try {
      parse_heart(cols);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.line() == 2);
    }
    std::istringstream word("63,1,1,145,233,1,2,150,0,abc,3,0,6,0\n");
    try {
      parse_heart(word);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.line() == 1);
    }
    std::istringstream stage("63,1,1,145,233,1,2,150,0,2.3,3,0,6,7\n");
    CHECK_THROWS_AS(parse_heart(stage), FormatError);
  }
  CHECK_THROWS_AS(load_heart_dataset("/nonexistent/heart.data"), FormatError);
}

TEST_CASE("generic CSV") {
  std::istringstream in("y,a,b\n1,0.5,2\n0,1.5,-1\n3,2.5,0\n");
  const CsvTable t = parse_csv(in);
  CHECK(t.header == std::vector<std::string>{"y", "a", "b"});
  CHECK(t.values.rows() == 3);
  const Dataset d = dataset_from_table(t, "y", {"a"}, {"a", "b"});
  CHECK(d.p() == 2);
  CHECK(d.q() == 3);
  CHECK(d.X()(1, 0) == 1.0);
  CHECK(d.X()(1, 1) == 1.5);
  CHECK(d.Omega()(2, 2) == 0.0);
  CHECK_THROWS_AS(dataset_from_table(t, "z", {"a"}, {"a"}), ContractViolation);

  std::istringstream ragged("y,a\n1,2\n3\n");
  try {
    parse_csv(ragged);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream text("y,a\n1,2\n3,x\n");
  CHECK_THROWS_AS(parse_csv(text), FormatError);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_csv(empty), FormatError);
  std::istringstream neg("y,a\n1.5,2\n");
  const CsvTable nt = parse_csv(neg);
  CHECK_THROWS_AS(dataset_from_table(nt, "y", {"a"}, {"a"}), ContractViolation);
}

TEST_CASE("correlation") {
  VectorXd a(4), b(4);
  a << 1, 2, 3, 4;
  b << 2, 4, 6, 8;
  CHECK(correlation(a, b) == doctest::Approx(1.0));
  CHECK(correlation(a, -b) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(correlation(a, VectorXd::Ones(4)), NumericalFailure);
}
