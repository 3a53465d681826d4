#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "interlace/sampler.hpp"
#include "interlace/stats.hpp"

using namespace interlace;

namespace {

double occupied_fraction(const InterlacementSampler& s, const Point& p, double u, int n, std::uint64_t seed) {
  const auto slot = static_cast<std::size_t>(s.window().slot(p));
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    hits += s.sample(u, rng).occupancy_mask(u)[slot];
  }
  return static_cast<double>(hits) / n;
}

SamplerConfig with_mode(Propagation mode) {
  SamplerConfig c;
  c.propagation = mode;
  return c;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("level zero is empty") {
  const InterlacementSampler s(Window(BoxRegion::cube(Point::origin(3), 1)));
  RngStream rng(41, 0);
  const auto sample = s.sample(0.0, rng);
  CHECK(sample.trajectories.empty());
  CHECK(sample.occupancy_at(0.0).empty());
  CHECK(sample.vacant_view(0.0).count() == 27);
}

TEST_CASE("occupation probability of the origin") {
  const InterlacementSampler s(Window(3, {Point::origin(3)}));
  const int n = 100000;
  const double p = occupied_fraction(s, Point::origin(3), 1.0, n, 42);
  const double expect = 1 - std::exp(-0.659462670449);
  CHECK(expect == doctest::Approx(0.4828).epsilon(1e-3));
  CHECK(std::abs(p - expect) < 3 * std::sqrt(expect * (1 - expect) / n));
}

TEST_CASE("vacancy of a box") {
  const InterlacementSampler s(Window(BoxRegion::cube(Point::origin(3), 3)));
  const double u = 0.5, expect = std::exp(-u * s.capacity());
  const int n = 20000;
  int vacant = 0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(43, static_cast<std::uint64_t>(i));
    vacant += s.sample(u, rng).trajectories.empty();
  }
  CHECK(std::abs(binomial_z(static_cast<std::uint64_t>(vacant), n, expect)) < 3);
}

TEST_CASE("coupling across levels") {
  const InterlacementSampler s(Window(BoxRegion::cube(Point::origin(3), 2)));
  const std::vector<double> levels = {0.1, 0.3, 0.7, 1.2, 2.0};
  for (int i = 0; i < 500; ++i) {
    RngStream rng(44, static_cast<std::uint64_t>(i));
    const auto sample = s.sample(2.0, rng);
    std::vector<std::uint8_t> prev(s.window().size(), 0);
    for (double u : levels) {
      const auto m = sample.occupancy_mask(u);
      for (std::size_t k = 0; k < m.size(); ++k) REQUIRE(m[k] >= prev[k]);
      prev = m;
    }
    const auto cover = sample.cover_levels();
    for (std::size_t k = 0; k < cover.size(); ++k) CHECK((cover[k] <= 1.2) == (sample.occupancy_mask(1.2)[k] == 1));
    for (const auto& t : sample.trajectories) {
      CHECK(t.label > 0);
      CHECK(t.label <= 2.0);
    }
  }
}

TEST_CASE("trajectory count and start points") {
  const InterlacementSampler s(Window(BoxRegion::cube(Point::origin(3), 1)));
  const double u = 1.0, mean = u * s.capacity();
  const int n = 10000;
  double sum = 0, sum2 = 0;
  std::vector<double> starts(s.window().size(), 0);
  std::size_t total = 0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(45, static_cast<std::uint64_t>(i));
    const auto sample = s.sample(u, rng);
    const double c = static_cast<double>(sample.trajectories.size());
    sum += c;
    sum2 += c * c;
    for (const auto& t : sample.trajectories) {
      starts[t.sites.front()] += 1;
      ++total;
    }
  }
  const double m = sum / n, var = sum2 / n - m * m;
  CHECK(std::abs(m - mean) < 3 * std::sqrt(mean / n));
  CHECK(var == doctest::Approx(mean).epsilon(0.05));
  double chi2 = 0;
  int cells = 0;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const double expect = s.equilibrium().normalized[k] * static_cast<double>(total);
    if (expect == 0) {
      CHECK(starts[k] == 0);
      continue;
    }
    chi2 += (starts[k] - expect) * (starts[k] - expect) / expect;
    ++cells;
  }
  CHECK(chi_square_sf(chi2, cells - 1) > 0.001);
}

TEST_CASE("save and load keep the sample") {
  const InterlacementSampler s(Window(3, {Point::origin(3), Point(3, {2, 0, 0}), Point(3, {0, 1, 1})}));
  RngStream rng(46, 0);
  const auto sample = s.sample(3.0, rng);
  std::stringstream ss;
  sample.save(ss);
  const auto back = InterlacementSample::load(ss);
  CHECK(back.u_max == sample.u_max);
  REQUIRE(back.trajectories.size() == sample.trajectories.size());
  for (std::size_t i = 0; i < sample.trajectories.size(); ++i) {
    CHECK(back.trajectories[i].label == sample.trajectories[i].label);
    CHECK(back.trajectories[i].sites == sample.trajectories[i].sites);
  }
  CHECK(back.occupancy_at(1.5) == sample.occupancy_at(1.5));
}

TEST_CASE("samples are reproducible") {
  const InterlacementSampler s(Window(BoxRegion::plane_rect(3, -5, 5, -5, 5)));
  RngStream a(47, 3), b(47, 3);
  const auto x = s.sample(1.0, a), y = s.sample(1.0, b);
  CHECK(x.cover_levels() == y.cover_levels());
}

TEST_CASE("continuation from far away") {
  const InterlacementSampler s(Window(3, {Point::origin(3)}), with_mode(Propagation::Stepwise));
  RngStream rng(48, 0);
  int escaped = 0;
  for (int i = 0; i < 1000; ++i) escaped += s.continue_or_escape(Point(3, {10000, 0, 0}), rng).escaped;
  CHECK(escaped >= 990);
  CHECK_THROWS_AS(s.continue_or_escape(Point(3, {2, 0, 0}), rng), std::invalid_argument);
}

TEST_CASE("continuation after leaving a ball of radius 32") {
  const InterlacementSampler s(Window(3, {Point::origin(3)}), with_mode(Propagation::Stepwise));
  auto inside = [](const Point& p) { return p.norm2() <= 32.0; };
  const int n = 20000;
  double mean_h = 0;
  int returned = 0;
  RngStream walk(49, 0), cont(49, 1);
  for (int i = 0; i < n; ++i) {
    const auto exit = run_walk_until(Point::origin(3), StopCondition::Exit, inside, 100000000, walk, false);
    REQUIRE(!exit.budget_exhausted());
    mean_h += s.h(exit.final) / n;
    returned += !s.continue_or_escape(exit.final, cont).escaped;
  }
  const double se = std::sqrt(mean_h * (1 - mean_h) / n);
  CHECK(mean_h == doctest::Approx(0.659462670449 * 3 / (2 * M_PI * 32)).epsilon(0.05));
  CHECK(std::abs(returned / static_cast<double>(n) - mean_h) < 3 * se);
}

TEST_CASE("conditioned path lands by the entrance law") {
  SamplerConfig cfg;
  cfg.propagation = Propagation::Stepwise;
  cfg.escape_factor = 1.0;
  const Window k(5, {Point::origin(5), Point(5, {2, 0, 0, 0, 0}), Point(5, {0, 2, 0, 0, 0})});
  const InterlacementSampler s(k, cfg);
  const Point x(5, {6, 1, 0, 1, 0});
  REQUIRE(static_cast<double>(k.dist_inf(x)) > s.escape_radius());
  const auto nu = s.entrance_law(x);
  const double hx = s.h(x);
  CHECK(std::accumulate(nu.begin(), nu.end(), 0.0) == doctest::Approx(hx).epsilon(1e-10));
  const int n = 40000;
  std::vector<double> land(k.size(), 0);
  int returned = 0;
  RngStream rng(50, 0);
  for (int i = 0; i < n; ++i) {
    const auto c = s.continue_or_escape(x, rng, true);
    if (c.escaped) continue;
    ++returned;
    REQUIRE(c.path.front() == x);
    REQUIRE(c.path.back() == c.entrance);
    for (std::size_t j = 0; j + 1 < c.path.size(); ++j) REQUIRE(!k.contains(c.path[j]));
    land[static_cast<std::size_t>(k.slot(c.entrance))] += 1;
  }
  CHECK(std::abs(binomial_z(static_cast<std::uint64_t>(returned), n, hx)) < 3);
  double chi2 = 0;
  for (std::size_t z = 0; z < k.size(); ++z) {
    const double expect = nu[z] / hx * returned;
    chi2 += (land[z] - expect) * (land[z] - expect) / expect;
  }
  CHECK(chi_square_sf(chi2, 2) > 0.001);
}

TEST_CASE("far-field entrance law matches the dense one") {
  const Window w(BoxRegion::plane_rect(3, -12, 12, -12, 12));
  SamplerConfig far_cfg;
  far_cfg.entrance_law_limit = 10;
  const InterlacementSampler dense(w), far(w, far_cfg);
  REQUIRE(dense.propagation() == Propagation::PlaneExcursion);
  CHECK(far.capacity() == doctest::Approx(dense.capacity()).epsilon(1e-12));
  for (auto x : {Point::plane(3, 230, 0), Point::plane(3, -240, 140), Point::plane(3, 5, -400)}) {
    const auto a = dense.entrance_law(x), b = far.entrance_law(x);
    double worst = 0, mass = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      worst = std::max(worst, std::abs(a[i] - b[i]));
      mass += a[i];
    }
    CHECK(worst < 1e-10 * std::max(1.0, mass));
    CHECK(mass == doctest::Approx(dense.h(x)).epsilon(1e-9));
  }
}

TEST_CASE("truncated sampler bias bound") {
  const InterlacementSampler s(Window(3, {Point::origin(3), Point(3, {2, 0, 0})}));
  CHECK(s.truncation_bias(64) < s.truncation_bias(16));
  CHECK(s.truncation_bias(512) < 2e-3);
  RngStream rng(51, 0);
  const auto t = s.sample_truncated(1.0, 64, rng);
  for (const auto& traj : t.trajectories) CHECK(!traj.sites.empty());
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(InterlacementSampler(Window(3, {Point::origin(3), Point(3, {0, 0, 1})}),
                                       with_mode(Propagation::PlaneExcursion)),
                  std::invalid_argument);
  CHECK(parse_propagation("plane") == Propagation::PlaneExcursion);
  CHECK_THROWS(parse_propagation("teleport"));
}

}
