#include "interlace/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "interlace/green.hpp"
#include "interlace/parallel.hpp"
#include "interlace/percolation.hpp"
#include "interlace/potential.hpp"
#include "interlace/renorm.hpp"
#include "interlace/sampler.hpp"
#include "interlace/stats.hpp"

#ifndef INTERLACE_VERSION
#define INTERLACE_VERSION "0.0.0+unknown"
#endif

namespace interlace {

const char* version() { return INTERLACE_VERSION; }

namespace {

using json = nlohmann::ordered_json;

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
std::string num(std::uint64_t v) { return std::to_string(v); }
std::string num(std::int64_t v) { return std::to_string(v); }
std::string flag(bool b) { return b ? "true" : "false"; }

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ResultRecord start_record(const ExperimentConfig& config, std::vector<std::string> columns) {
  ResultRecord r;
  r.config = config;
  r.columns = std::move(columns);
  return r;
}

void add_tag(ResultRecord& r, const std::string& tag) {
  if (std::find(r.method_tags.begin(), r.method_tags.end(), tag) == r.method_tags.end()) r.method_tags.push_back(tag);
}

std::vector<double> sorted_levels(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

std::uint64_t stream_id(std::size_t block, std::uint64_t rep) { return (static_cast<std::uint64_t>(block) << 40) | rep; }

std::int32_t parse_int(const std::string& text, const std::string& spec) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used != text.size() || v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max())
      throw std::invalid_argument("");
    return static_cast<std::int32_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("bad integer '" + text + "' in window spec '" + spec + "'");
  }
}

std::int32_t plane_half_side(const ExperimentConfig& config, std::int32_t fallback) {
  if (!config.window.empty()) {
    const auto w = parse_window(config.window, config.dim);
    const auto& b = w.bbox();
    if (!w.is_box() || !b.is_planar() || b.lo()[0] != -b.hi()[0] || b.lo()[1] != -b.hi()[1] || b.hi()[0] != b.hi()[1])
      throw ConfigError("this command needs a window of the form plane:M");
    return b.hi()[0];
  }
  if (!config.L_grid.empty()) return static_cast<std::int32_t>(config.L_grid.front());
  return fallback;
}

}  // namespace

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  const auto& names = experiment_commands();
  if (std::find(names.begin(), names.end(), command) == names.end())
    throw ConfigError("unknown command '" + command + "'");
  if (dim < 3 || dim > kMaxDim) throw ConfigError("dim must be in [3, " + std::to_string(kMaxDim) + "]");
  for (double u : u_grid)
    if (!(u >= 0) || !std::isfinite(u)) throw ConfigError("levels u must be finite and >= 0");
  for (auto L : L_grid)
    if (L < 1 || L > (std::int64_t{1} << 30)) throw ConfigError("L values must be in [1, 2^30]");
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(c1 > 0) || !(c2 > 0) || !std::isfinite(c1) || !std::isfinite(c2)) throw ConfigError("c1 and c2 must be positive");
  if (levels < 0 || levels > 16) throw ConfigError("levels must be in [0, 16]");
  if (!window.empty())
    for (const auto& w : split_window_list(window)) parse_window(w, dim);
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["command"] = command;
  j["dim"] = dim;
  j["u_grid"] = u_grid;
  j["L_grid"] = L_grid;
  j["window"] = window;
  j["reps"] = reps;
  j["seed"] = seed;
  j["workers"] = workers;
  j["c1"] = c1;
  j["c2"] = c2;
  j["levels"] = levels;
  j["out"] = out;
  return j.dump();
}

void ExperimentConfig::merge_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const auto& v = it.value();
      if (key == "command") command = v.get<std::string>();
      else if (key == "dim") dim = v.get<int>();
      else if (key == "u" || key == "u_grid" || key == "u-grid")
        u_grid = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
      else if (key == "L" || key == "L_grid" || key == "L-grid")
        L_grid = v.is_array() ? v.get<std::vector<std::int64_t>>() : std::vector<std::int64_t>{v.get<std::int64_t>()};
      else if (key == "window") window = v.get<std::string>();
      else if (key == "reps") reps = v.get<std::uint64_t>();
      else if (key == "seed") seed = v.get<std::uint64_t>();
      else if (key == "workers") workers = v.get<unsigned>();
      else if (key == "c1") c1 = v.get<double>();
      else if (key == "c2") c2 = v.get<double>();
      else if (key == "levels") levels = v.get<int>();
      else if (key == "out") out = v.get<std::string>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  }
}

std::vector<std::string> split_window_list(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ';'))
    if (!item.empty()) out.push_back(item);
  if (out.empty()) throw ConfigError("empty window list");
  return out;
}

Window parse_window(const std::string& spec, int dim) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "point") {
    if (!arg.empty()) throw ConfigError("window 'point' takes no argument");
    return Window(dim, {Point::origin(dim)});
  }
  if (arg.empty()) throw ConfigError("window spec '" + spec + "' needs an argument");
  if (kind == "pair") {
    const auto r = parse_int(arg, spec);
    if (r < 1) throw ConfigError("pair distance must be >= 1");
    return Window(dim, {Point::origin(dim), Point::plane(dim, r, 0)});
  }
  if (kind == "ball") {
    const auto r = parse_int(arg, spec);
    if (r < 0 || r > 4096) throw ConfigError("ball radius must be in [0, 4096]");
    return Window(BoxRegion::cube(Point::origin(dim), r));
  }
  if (kind == "plane") {
    const auto m = parse_int(arg, spec);
    if (m < 0 || m > 4096) throw ConfigError("plane half-side must be in [0, 4096]");
    return Window(BoxRegion::plane_rect(dim, -m, m, -m, m));
  }
  if (kind == "rect") {
    std::vector<std::int32_t> v;
    std::stringstream ss(arg);
    std::string part;
    while (std::getline(ss, part, ',')) v.push_back(parse_int(part, spec));
    if (v.size() != 4 || v[0] > v[1] || v[2] > v[3]) throw ConfigError("rect needs x0,x1,y0,y1 with x0<=x1, y0<=y1");
    return Window(BoxRegion::plane_rect(dim, v[0], v[1], v[2], v[3]));
  }
  throw ConfigError("unknown window kind '" + kind + "'");
}

// ---------------------------------------------------------------------------

const std::string& ResultRecord::summary_value(const std::string& key) const {
  for (const auto& [k, v] : summary)
    if (k == key) return v;
  throw std::out_of_range("no summary entry '" + key + "'");
}

std::string ResultRecord::csv() const {
  std::ostringstream os;
  os << "# interlace " << config.command << "\n";
  os << "# version: " << version() << "\n";
  os << "# config: " << config.to_json() << "\n";
  os << "# seed: " << config.seed << "\n";
  os << "# method:";
  for (std::size_t i = 0; i < method_tags.size(); ++i) os << (i ? " | " : " ") << method_tags[i];
  os << "\n";
  os << "# wall_seconds: " << num(wall_seconds) << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  for (const auto& [k, v] : summary) os << "# summary " << k << ": " << v << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

ResultRecord cmd_vacancy_law(const ExperimentConfig& config) {
  Stopwatch clock;
  auto rec = start_record(config, {"window", "sites", "capacity", "u", "predicted", "estimate", "vacant", "reps",
                                   "ci_low", "ci_high", "z"});
  const auto specs = split_window_list(config.window.empty() ? "point;pair:3;ball:2" : config.window);
  const auto us = sorted_levels(config.u_grid.empty() ? std::vector<double>{0.5, 1.0, 2.0} : config.u_grid);
  const double u_max = us.back();
  double max_z = 0;
  for (std::size_t w = 0; w < specs.size(); ++w) {
    const InterlacementSampler sampler(parse_window(specs[w], config.dim));
    add_tag(rec, specs[w] + ": " + sampler.method_tags());
    std::vector<std::uint8_t> vacant(config.reps * us.size());
    parallel_for(config.reps, config.workers, [&](std::size_t rep) {
      RngStream rng(config.seed, stream_id(w, rep));
      const auto labels = [&] {
        std::vector<double> out;
        for (const auto& t : sampler.sample(u_max, rng).trajectories) out.push_back(t.label);
        return out;
      }();
      for (std::size_t k = 0; k < us.size(); ++k)
        vacant[rep * us.size() + k] =
            std::none_of(labels.begin(), labels.end(), [&](double l) { return l <= us[k]; }) ? 1 : 0;
    });
    for (std::size_t k = 0; k < us.size(); ++k) {
      std::uint64_t succ = 0;
      for (std::uint64_t rep = 0; rep < config.reps; ++rep) succ += vacant[rep * us.size() + k];
      const double p = std::exp(-us[k] * sampler.capacity());
      const auto ci = wilson_interval(succ, config.reps);
      const double z = binomial_z(succ, config.reps, p);
      max_z = std::max(max_z, std::abs(z));
      rec.rows.push_back({specs[w], num(sampler.window().size()), num(sampler.capacity()), num(us[k]), num(p),
                          num(static_cast<double>(succ) / static_cast<double>(config.reps)), num(succ),
                          num(config.reps), num(ci.low), num(ci.high), num(z)});
    }
  }
  rec.summary.push_back({"max_abs_z", num(max_z)});
  rec.summary.push_back({"within_3_se", flag(max_z < 3.0)});
  rec.wall_seconds = clock.seconds();
  return rec;
}

ResultRecord cmd_capacity_scaling(const ExperimentConfig& config) {
  Stopwatch clock;
  auto rec = start_record(config, {"L", "sites", "support", "capacity", "capacity_over_L_pow", "solver", "residual"});
  std::vector<std::int64_t> Ls = config.L_grid;
  if (Ls.empty()) Ls = config.dim == 3 ? std::vector<std::int64_t>{2, 4, 8, 16} : std::vector<std::int64_t>{2, 4, 8};
  std::sort(Ls.begin(), Ls.end());
  const double p = config.dim - 2.0;
  std::vector<double> lx, ly;
  for (auto L : Ls) {
    const Window K(BoxRegion::cube(Point::origin(config.dim), static_cast<std::int32_t>(L)));
    if (K.size() > (std::size_t{1} << 26)) throw ConfigError("ball too large for the capacity solver");
    const GreenFunction green(cached_green_table(config.dim, static_cast<int>(2 * L + 1), GreenMethod::Quadrature));
    const auto eq = equilibrium_measure(K, green);
    add_tag(rec, "green=quadrature-table");
    add_tag(rec, "equilibrium=" + to_string(eq.solver));
    rec.rows.push_back({num(L), num(K.size()), num(eq.support().size()), num(eq.capacity),
                        num(eq.capacity / std::pow(static_cast<double>(L), p)), to_string(eq.solver), num(eq.residual)});
    lx.push_back(std::log(static_cast<double>(L)));
    ly.push_back(std::log(eq.capacity));
  }
  {
    const GreenFunction green(cached_green_table(config.dim, 3, GreenMethod::Quadrature));
    const double box1 = capacity(Window(BoxRegion::cube(Point::origin(config.dim), 1)), green);
    rec.summary.push_back({"box1_capacity", num(box1)});
    rec.summary.push_back({"box1_exceeds_singleton", flag(box1 > 1.0 / green.origin())});
  }
  if (lx.size() >= 2) {
    const auto fit = fit_line(lx, ly);
    rec.summary.push_back({"loglog_slope", num(fit.slope)});
    rec.summary.push_back({"expected_slope", num(p)});
    rec.summary.push_back({"fit_r2", num(fit.r2)});
  } else {
    rec.summary.push_back({"loglog_slope", "n/a"});
  }
  rec.wall_seconds = clock.seconds();
  return rec;
}

ResultRecord cmd_correlation(const ExperimentConfig& config) {
  Stopwatch clock;
  auto rec = start_record(config, {"u", "r", "g_r", "p_both_analytic", "p_both_mc", "z", "cov_analytic", "cov_mc",
                                   "reps"});
  std::vector<std::int64_t> rs = config.L_grid;
  if (rs.empty()) rs = {1, 2, 4, 8, 16};
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
  const auto us = sorted_levels(config.u_grid.empty() ? std::vector<double>{1.0} : config.u_grid);
  const GreenFunction green(cached_green_table(config.dim, static_cast<int>(rs.back()) + 1, GreenMethod::Quadrature));
  const double g0 = green.origin();
  add_tag(rec, "analytic=exp(-2u/(g0+g(r)))-exp(-2u/g0)");
  double max_z = 0;
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> fit_an, fit_mc, fit_wide;
  for (std::size_t ri = 0; ri < rs.size(); ++ri) {
    const auto r = static_cast<std::int32_t>(rs[ri]);
    const InterlacementSampler sampler(parse_window("pair:" + std::to_string(r), config.dim));
    add_tag(rec, "mc: " + sampler.method_tags());
    const double gr = green(Point::plane(config.dim, r, 0));
    std::vector<std::uint8_t> state(config.reps * us.size());  // bit0: x vacant, bit1: y vacant
    parallel_for(config.reps, config.workers, [&](std::size_t rep) {
      RngStream rng(config.seed, stream_id(ri, rep));
      const auto cover = sampler.sample(us.back(), rng).cover_levels();
      for (std::size_t k = 0; k < us.size(); ++k)
        state[rep * us.size() + k] = static_cast<std::uint8_t>((cover[0] > us[k] ? 1 : 0) | (cover[1] > us[k] ? 2 : 0));
    });
    for (std::size_t k = 0; k < us.size(); ++k) {
      const double u = us[k];
      std::uint64_t both = 0, x = 0, y = 0;
      for (std::uint64_t rep = 0; rep < config.reps; ++rep) {
        const auto s = state[rep * us.size() + k];
        both += s == 3;
        x += (s & 1) != 0;
        y += (s & 2) != 0;
      }
      const double n = static_cast<double>(config.reps);
      const double p_both = std::exp(-2.0 * u / (g0 + gr));
      const double cov = p_both - std::exp(-2.0 * u / g0);
      const double cov_mc = static_cast<double>(both) / n - (static_cast<double>(x) / n) * (static_cast<double>(y) / n);
      const double z = binomial_z(both, config.reps, p_both);
      max_z = std::max(max_z, std::abs(z));
      rec.rows.push_back({num(u), num(static_cast<std::int64_t>(r)), num(gr), num(p_both),
                          num(static_cast<double>(both) / n), num(z), num(cov), num(cov_mc), num(config.reps)});
      if (r >= 2 && r <= 16) {
        fit_wide[u].first.push_back(std::log(static_cast<double>(r)));
        fit_wide[u].second.push_back(std::log(cov));
      }
      if (r >= 4 && r <= 16) {
        fit_an[u].first.push_back(std::log(static_cast<double>(r)));
        fit_an[u].second.push_back(std::log(cov));
        if (cov_mc > 0) {
          fit_mc[u].first.push_back(std::log(static_cast<double>(r)));
          fit_mc[u].second.push_back(std::log(cov_mc));
        }
      }
    }
  }
  for (double u : us) {
    const auto& a = fit_an[u];
    rec.summary.push_back({"analytic_exponent_r4_16 u=" + num(u),
                           a.first.size() >= 2 ? num(fit_line(a.first, a.second).slope) : "n/a"});
    const auto& w = fit_wide[u];
    rec.summary.push_back({"analytic_exponent_r2_16 u=" + num(u),
                           w.first.size() >= 2 ? num(fit_line(w.first, w.second).slope) : "n/a"});
    const auto& m = fit_mc[u];
    rec.summary.push_back({"mc_exponent_r4_16 u=" + num(u),
                           m.first.size() >= 2 ? num(fit_line(m.first, m.second).slope) : "n/a"});
  }
  rec.summary.push_back({"expected_exponent", num(-(config.dim - 2.0))});
  rec.summary.push_back({"max_abs_z", num(max_z)});
  rec.wall_seconds = clock.seconds();
  return rec;
}

ResultRecord cmd_qn_sweep(const ExperimentConfig& config) {
  Stopwatch clock;
  auto rec = start_record(config, {"L0", "u", "seed_level", "q_hat", "ci_low", "ci_high", "L0_q", "L0_ci_low",
                                   "L0_ci_high", "successes", "reps", "p_no_hit", "window"});
  std::vector<std::int64_t> Ls = config.L_grid;
  if (Ls.empty()) Ls = {8, 16, 32};
  std::sort(Ls.begin(), Ls.end());
  Ls.erase(std::unique(Ls.begin(), Ls.end()), Ls.end());
  struct Seed {
    double L, q, low, high;
  };
  std::vector<Seed> seeds;
  for (std::size_t i = 0; i < Ls.size(); ++i) {
    const auto L = static_cast<std::uint64_t>(Ls[i]);
    const double u0 = seed_level(static_cast<double>(L), config.c2, config.dim);
    std::vector<double> us = config.u_grid;
    us.push_back(u0);
    us = sorted_levels(us);
    const auto cascade = build_cascade(L, 0);
    const auto est = estimate_qn(0, us, cascade, config.dim, config.reps, config.seed + i, config.workers);
    const auto trace = boxes({0, 0, 0}, cascade, config.dim).enlarged;
    const double cap = solve_equilibrium(trace.window(config.dim),
                                         GreenFunction(cached_green_table(config.dim, 40, GreenMethod::Quadrature)))
                           .capacity;
    for (const auto& e : est) {
      const auto& r = e.report;
      const double Ld = static_cast<double>(L);
      const bool is_seed = e.u == u0;
      rec.rows.push_back({num(Ls[i]), num(e.u), flag(is_seed), num(r.estimate), num(r.ci_low), num(r.ci_high),
                          num(Ld * r.estimate), num(Ld * r.ci_low), num(Ld * r.ci_high), num(r.successes),
                          num(r.trials), num(std::exp(-e.u * cap)), r.window});
      const auto semi = r.note.find(';');
      add_tag(rec, semi == std::string::npos ? r.note : r.note.substr(semi + 1));
      if (is_seed) seeds.push_back({Ld, r.estimate, r.ci_low, r.ci_high});
    }
  }
  add_tag(rec, "seed level u0=(4/c2)(log L0)^2 L0^-(d-2)");
  bool trend = true, point_trend = true;
  for (std::size_t i = 1; i < seeds.size(); ++i) {
    if (seeds[i].L * seeds[i].low > seeds[i - 1].L * seeds[i - 1].high) trend = false;
    if (seeds[i].L * seeds[i].q > seeds[i - 1].L * seeds[i - 1].q) point_trend = false;
  }
  rec.summary.push_back({"nonincreasing_95ci", flag(trend)});
  rec.summary.push_back({"nonincreasing_point_estimates", flag(point_trend)});
  rec.summary.push_back({"trend_rule", "L_k+1 * ci_low_k+1 <= L_k * ci_high_k for consecutive grid points"});
  rec.wall_seconds = clock.seconds();
  return rec;
}

namespace {

struct EtaData {
  std::int32_t M = 0;
  std::vector<double> us;
  std::uint64_t reps = 0;
  std::vector<std::uint64_t> reach, circuit, origin_vacant;
  std::uint64_t violations = 0;
  std::uint64_t duality_mismatches = 0;
  std::string tags;
};

EtaData eta_data(const ExperimentConfig& config) {
  EtaData d;
  d.M = plane_half_side(config, 100);
  d.us = sorted_levels(config.u_grid.empty() ? std::vector<double>{0.0, 0.05, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0}
                                             : config.u_grid);
  d.reps = config.reps;
  const InterlacementSampler sampler(Window(BoxRegion::plane_rect(config.dim, -d.M, d.M, -d.M, d.M)));
  d.tags = sampler.method_tags();
  const PlaneSlicer slicer(sampler.window());
  const std::size_t nu = d.us.size();
  std::vector<std::uint8_t> out(config.reps * nu, 0);  // bit0 reach, bit1 circuit, bit2 origin vacant
  parallel_for(config.reps, config.workers, [&](std::size_t rep) {
    RngStream rng(config.seed, rep);
    const auto cover = sampler.sample(d.us.back(), rng).cover_levels();
    for (std::size_t k = 0; k < nu; ++k) {
      const auto p = origin_percolation_proxy(slicer.slice(cover, d.us[k]));
      out[rep * nu + k] =
          static_cast<std::uint8_t>((p.reaches_boundary ? 1 : 0) | (p.circuit ? 2 : 0) | (p.origin_occupied ? 0 : 4));
    }
  });
  d.reach.assign(nu, 0);
  d.circuit.assign(nu, 0);
  d.origin_vacant.assign(nu, 0);
  for (std::uint64_t rep = 0; rep < config.reps; ++rep) {
    for (std::size_t k = 0; k < nu; ++k) {
      const auto s = out[rep * nu + k];
      d.reach[k] += s & 1;
      d.circuit[k] += (s >> 1) & 1;
      d.origin_vacant[k] += (s >> 2) & 1;
      if (((s & 1) != 0) == ((s & 2) != 0)) ++d.duality_mismatches;
      if (k > 0 && (s & 1) && !(out[rep * nu + k - 1] & 1)) ++d.violations;
    }
  }
  return d;
}

void eta_rows(ResultRecord& rec, const EtaData& d) {
  add_tag(rec, d.tags);
  add_tag(rec, "eta proxy: vacant nn-cluster of 0 reaches the border of [-M,M]^2");
  const double n = static_cast<double>(d.reps);
  for (std::size_t k = 0; k < d.us.size(); ++k) {
    const auto ci = wilson_interval(d.reach[k], d.reps);
    rec.rows.push_back({num(static_cast<std::int64_t>(d.M)), num(d.us[k]), num(d.reps), num(d.reach[k]),
                        num(static_cast<double>(d.reach[k]) / n), num(ci.low), num(ci.high),
                        num(static_cast<double>(d.origin_vacant[k]) / n), num(static_cast<double>(d.circuit[k]) / n)});
  }
  rec.summary.push_back({"monotonicity_violations", num(d.violations)});
  rec.summary.push_back({"duality_mismatches", num(d.duality_mismatches)});
  rec.summary.push_back({"eta_drop", num((static_cast<double>(d.reach.front()) - static_cast<double>(d.reach.back())) / n)});
}

const std::vector<std::string> kEtaColumns = {"M", "u", "reps", "reach", "eta_hat", "ci_low", "ci_high",
                                              "origin_vacant", "circuit"};

}  // namespace

ResultRecord cmd_eta_curve(const ExperimentConfig& config) {
  Stopwatch clock;
  auto rec = start_record(config, kEtaColumns);
  eta_rows(rec, eta_data(config));
  rec.wall_seconds = clock.seconds();
  return rec;
}

ResultRecord cmd_ustar_bracket(const ExperimentConfig& config) {
  Stopwatch clock;
  auto rec = start_record(config, kEtaColumns);
  const auto d = eta_data(config);
  eta_rows(rec, d);
  constexpr double kEps = 0.01;
  std::optional<double> lower, upper;
  for (std::size_t k = 0; k < d.us.size(); ++k)
    if (wilson_interval(d.reach[k], d.reps).low > kEps) lower = d.us[k];
  for (std::size_t k = 0; k < d.us.size(); ++k)
    if ((!lower || d.us[k] > *lower) && wilson_interval(d.reach[k], d.reps).high < kEps) {
      upper = d.us[k];
      break;
    }
  rec.summary.push_back({"bracket_rule", "lower: largest u with ci_low > 0.01; upper: smallest larger u with ci_high < 0.01"});
  rec.summary.push_back({"u_star_lower", lower ? num(*lower) : "n/a"});
  rec.summary.push_back({"u_star_upper", upper ? num(*upper) : "n/a"});
  rec.wall_seconds = clock.seconds();
  return rec;
}

namespace {

struct CascadeSetup {
  ScaleCascade cascade;
  LevelSequence levels;
  std::uint64_t L0 = 0;
};

CascadeSetup cascade_setup(const ExperimentConfig& config, std::uint64_t default_L0) {
  CascadeSetup s;
  s.L0 = config.L_grid.empty() ? default_L0 : static_cast<std::uint64_t>(config.L_grid.front());
  if (s.L0 < 2) throw ConfigError("L0 must be >= 2");
  s.cascade = build_cascade(s.L0, config.levels);
  const double u0 =
      config.u_grid.empty() ? seed_level(static_cast<double>(s.L0), config.c2, config.dim) : config.u_grid.front();
  if (!(u0 > 0)) throw ConfigError("u0 must be positive");
  s.levels = level_sequence(u0, s.cascade, config.levels);
  return s;
}

}  // namespace

ResultRecord cmd_cascade_dump(const ExperimentConfig& config) {
  Stopwatch clock;
  auto rec = start_record(config, {});
  const auto s = cascade_setup(config, 10);
  json j;
  j["program"] = "interlace cascade-dump";
  j["version"] = version();
  j["config"] = json::parse(config.to_json());
  j["cascade"] = json::parse(cascade_dump(s.cascade, &s.levels));
  rec.text = j.dump(2) + "\n";
  add_tag(rec, "exact integer cascade; interval-arithmetic u_inf bound");
  rec.summary.push_back({"u_inf_lower", num(s.levels.u_inf_lower)});
  rec.wall_seconds = clock.seconds();
  return rec;
}

ResultRecord cmd_induction_report(const ExperimentConfig& config) {
  Stopwatch clock;
  auto rec = start_record(config, {});
  const auto s = cascade_setup(config, 8);
  std::map<int, CrossingReport> q;
  const int top = std::min(s.cascade.levels(), static_cast<int>(s.levels.u.size()) - 1);
  for (int n = 0; n < top; ++n) {
    try {
      const auto est = estimate_qn(n, {s.levels.u[static_cast<std::size_t>(n)]}, s.cascade, config.dim, config.reps,
                                   config.seed + static_cast<std::uint64_t>(n), config.workers);
      q[n] = est.front().report;
      const auto semi = q[n].note.find(';');
      add_tag(rec, semi == std::string::npos ? q[n].note : q[n].note.substr(semi + 1));
    } catch (const WindowTooLarge& e) {
      rec.summary.push_back({"q_" + std::to_string(n), std::string("not measured: ") + e.what()});
    }
  }
  const auto report = induction_report(s.cascade, s.levels, q, config.c1, config.c2, config.dim);
  std::istringstream csv(report.csv());
  std::string line;
  bool first = true;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    if (first) {
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, ',')) rec.columns.push_back(col);
      first = false;
    } else {
      rec.rows.push_back({line});
    }
  }
  rec.text = report.text_table();
  add_tag(rec, "q_n measured on the plane trace of C~_(n,0) at u_n");
  rec.summary.push_back({"u_inf_lower", num(s.levels.u_inf_lower)});
  rec.summary.push_back({"in_regime", flag(s.levels.in_regime)});
  rec.wall_seconds = clock.seconds();
  return rec;
}

ResultRecord run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::string& c = config.command;
  if (c == "vacancy-law") return cmd_vacancy_law(config);
  if (c == "capacity-scaling") return cmd_capacity_scaling(config);
  if (c == "correlation") return cmd_correlation(config);
  if (c == "qn-sweep") return cmd_qn_sweep(config);
  if (c == "eta-curve") return cmd_eta_curve(config);
  if (c == "ustar-bracket") return cmd_ustar_bracket(config);
  if (c == "cascade-dump") return cmd_cascade_dump(config);
  return cmd_induction_report(config);
}

void write_record(const ResultRecord& record) {
  const bool is_dump = record.config.command == "cascade-dump";
  const std::string body = is_dump ? record.text : record.csv();
  const bool table = record.config.command == "induction-report";
  if (record.config.out.empty()) {
    std::cout << body;
    if (table) std::cout << "\n" << record.text;
    std::cout.flush();
    if (!std::cout) throw OutputError("writing to stdout failed");
    return;
  }
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw OutputError("cannot open '" + path + "' for writing");
    os << text;
    os.close();
    if (!os) throw OutputError("writing '" + path + "' failed");
  };
  write(record.config.out, body);
  if (table) write(record.config.out + ".txt", record.text);
}

}  // namespace interlace
