#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "interlace/green.hpp"
#include "interlace/planar.hpp"

using namespace interlace;

TEST_SUITE("green") {

TEST_CASE("value at the origin in d = 3") {
  const auto t = cached_green_table(3, 12, GreenMethod::Quadrature);
  CHECK(t->origin() == doctest::Approx(1.516386059151978).epsilon(1e-13));
  CHECK(std::abs(t->at(Point::unit(3, 0)) - (t->origin() - 1.0)) < 1e-12);
  CHECK(t->error_estimate() < 1e-12);
}

TEST_CASE("symmetry and harmonicity") {
  for (int d : {3, 4, 5}) {
    const auto t = build_green_table(d, 6, GreenMethod::Quadrature);
    CHECK(t.max_harmonicity_residual() < 1e-12);
    Point p(d), q(d);
    p[0] = 3;
    p[1] = -1;
    q[0] = -1;
    q[d - 1] = 3;
    CHECK(t.at(p) == t.at(q));
    Point far(d);
    far[0] = 6;
    CHECK(t.at(far) < t.at(p));
    CHECK(t.at(p) > 0);
  }
}

TEST_CASE("fixed rule against adaptive integration") {
  const auto t = cached_green_table(3, 12, GreenMethod::Quadrature);
  for (auto c : {std::array<std::int32_t, 3>{0, 0, 0}, {1, 0, 0}, {2, 1, 0}, {5, 3, 1}, {12, 0, 7}}) {
    double err = 0;
    const double a = green_adaptive(c, &err);
    CHECK(std::abs(a - t->at(Point(3, {c[0], c[1], c[2]}))) < 1e-11);
  }
  const std::array<std::int32_t, 4> c4{2, 1, 1, 0};
  CHECK(std::abs(green_adaptive(c4) - build_green_table(4, 3, GreenMethod::Quadrature).at(Point(4, {2, 1, 1, 0}))) <
        1e-11);
}

TEST_CASE("truncated solve and Monte Carlo agree with quadrature") {
  const auto q = build_green_table(3, 4, GreenMethod::Quadrature);
  const auto t = build_green_table(3, 4, GreenMethod::TruncatedSolve);
  for (auto p : {Point(3, {0, 0, 0}), Point(3, {1, 1, 0}), Point(3, {4, 2, 3})})
    CHECK(std::abs(q.at(p) - t.at(p)) < 1e-4);
  GreenOptions o;
  o.mc_walks = 20000;
  o.mc_seed = 5;
  const auto m = build_green_table(3, 2, GreenMethod::MonteCarlo, o);
  CHECK(std::abs(m.origin() - q.origin()) < 4 * m.error_estimate() + 0.01);
}

TEST_CASE("save and load round trip") {
  const auto t = build_green_table(3, 5, GreenMethod::Quadrature);
  std::stringstream ss;
  t.save(ss);
  const auto back = GreenTable::load(ss);
  CHECK(back.dim() == 3);
  CHECK(back.range() == 5);
  CHECK(back.method() == GreenMethod::Quadrature);
  CHECK(back.at(Point(3, {5, 4, 1})) == t.at(Point(3, {5, 4, 1})));
  const auto path = (std::filesystem::temp_directory_path() / "interlace_green_test.bin").string();
  t.save_file(path);
  CHECK(GreenTable::load_file(path).at(Point(3, {2, 2, 2})) == t.at(Point(3, {2, 2, 2})));
  std::filesystem::remove(path);
  std::stringstream junk("not a table");
  CHECK_THROWS(GreenTable::load(junk));
}

TEST_CASE("out of range lookups") {
  const auto t = build_green_table(3, 3, GreenMethod::Quadrature);
  CHECK_THROWS_AS(t.at(Point(3, {4, 0, 0})), GreenOutOfRange);
  const GreenFunction g(std::make_shared<const GreenTable>(t));
  const auto big = cached_green_table(3, 12, GreenMethod::Quadrature);
  for (auto p : {Point(3, {7, 3, 1}), Point(3, {-12, 0, 5})}) CHECK(std::abs(g(p) - big->at(p)) < 1e-13);
  const Point far(3, {60, 0, 0});
  CHECK(std::abs(g(far) - green_asymptotic(far)) < 1e-9);
  CHECK(green_asymptotic(far) == doctest::Approx(green_leading_coefficient(3) / 60).epsilon(1e-3));
}

TEST_CASE("plane kernel and d = 3 bounds") {
  const auto kernel = PlaneKernel::build(3, 20);
  const auto t = cached_green_table(3, 12, GreenMethod::Quadrature);
  CHECK(std::abs(kernel.at(3, -7) - t->at(Point(3, {3, 7, 0}))) < 1e-13);
  CHECK(std::abs(plane_green(kernel, 100, 40) - green_asymptotic(Point(3, {100, 40, 0}))) < 1e-12);
  const GreenFunction g(cached_green_table(3, 12, GreenMethod::Quadrature));
  for (auto p : {Point(3, {10, 0, 0}), Point(3, {7, 7, 2}), Point(3, {20, 11, 3}), Point(3, {25, 25, 25})}) {
    const double r = p.norm2();
    if (r < 10) continue;
    CHECK(green3_lower(r) <= g(p));
    CHECK(g(p) <= green3_upper(r));
  }
}

}
