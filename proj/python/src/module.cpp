#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <memory>

#include "interlace/experiments.hpp"
#include "interlace/green.hpp"
#include "interlace/percolation.hpp"
#include "interlace/potential.hpp"
#include "interlace/renorm.hpp"
#include "interlace/sampler.hpp"

namespace py = pybind11;
using namespace interlace;

namespace {

Point to_point(const std::vector<std::int32_t>& c) {
  if (c.size() < 3 || c.size() > static_cast<std::size_t>(kMaxDim))
    throw std::invalid_argument("points need between 3 and 8 coordinates");
  Point p(static_cast<int>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) p.x[i] = c[i];
  return p;
}

std::vector<std::int32_t> from_point(const Point& p) { return {p.x.begin(), p.x.begin() + p.dim}; }

Window to_window(const std::vector<std::vector<std::int32_t>>& sites) {
  if (sites.empty()) throw std::invalid_argument("empty site list");
  std::vector<Point> pts;
  for (const auto& s : sites) pts.push_back(to_point(s));
  const int d = pts.front().dim;
  return Window(d, std::move(pts));
}

const GreenFunction& green_for(int d) {
  static std::map<int, std::unique_ptr<GreenFunction>> cache;
  auto& g = cache[d];
  if (!g) g = std::make_unique<GreenFunction>(cached_green_table(d, d == 3 ? 24 : 12, GreenMethod::Quadrature));
  return *g;
}

py::dict record_to_dict(const ResultRecord& r) {
  py::dict out;
  out["columns"] = r.columns;
  out["rows"] = r.rows;
  py::dict summary;
  for (const auto& [k, v] : r.summary) summary[py::str(k)] = v;
  out["summary"] = summary;
  out["method"] = r.method_tags;
  out["csv"] = r.csv();
  out["text"] = r.text;
  out["wall_seconds"] = r.wall_seconds;
  return out;
}

}  // namespace

PYBIND11_MODULE(_interlace, m) {
  m.doc() = "Random interlacements: Green function, capacities, coupled samples and the planar cascade.";
  m.attr("__version__") = version();

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<PotentialError>(m, "PotentialError", PyExc_ArithmeticError);
  py::register_exception<WindowTooLarge>(m, "WindowTooLarge", PyExc_MemoryError);
  py::register_exception<CascadeOverflow>(m, "CascadeOverflow", PyExc_OverflowError);

  m.def("green", [](const std::vector<std::int32_t>& y) { return green_for(static_cast<int>(y.size()))(to_point(y)); },
        py::arg("displacement"), "g(y) for simple random walk on Z^d, d = len(y).");

  m.def(
      "equilibrium_measure",
      [](const std::vector<std::vector<std::int32_t>>& sites) {
        const auto w = to_window(sites);
        const auto eq = equilibrium_measure(w, green_for(w.dim()));
        py::dict out;
        out["capacity"] = eq.capacity;
        out["weights"] = eq.weights;
        out["residual"] = eq.residual;
        out["solver"] = to_string(eq.solver);
        return out;
      },
      py::arg("sites"));
  m.def(
      "capacity", [](const std::vector<std::vector<std::int32_t>>& sites) {
        const auto w = to_window(sites);
        return capacity(w, green_for(w.dim()));
      },
      py::arg("sites"));

  py::class_<InterlacementSampler>(m, "Sampler")
      .def(py::init([](const std::vector<std::vector<std::int32_t>>& sites) {
             return std::make_unique<InterlacementSampler>(to_window(sites));
           }),
           py::arg("sites"))
      .def_static(
          "box", [](int dim, std::int32_t radius) {
            return std::make_unique<InterlacementSampler>(Window(BoxRegion::cube(Point::origin(dim), radius)));
          },
          py::arg("dim"), py::arg("radius"))
      .def_static(
          "plane", [](std::int32_t half_side) {
            return std::make_unique<InterlacementSampler>(
                Window(BoxRegion::plane_rect(3, -half_side, half_side, -half_side, half_side)));
          },
          py::arg("half_side"))
      .def_property_readonly("capacity", &InterlacementSampler::capacity)
      .def_property_readonly("sites",
                             [](const InterlacementSampler& s) {
                               std::vector<std::vector<std::int32_t>> out;
                               for (const auto& p : s.window().sites()) out.push_back(from_point(p));
                               return out;
                             })
      .def("method", &InterlacementSampler::method_tags)
      .def(
          "cover_levels",
          [](const InterlacementSampler& s, double u_max, std::uint64_t seed, std::uint64_t stream) {
            RngStream rng(seed, stream);
            py::gil_scoped_release release;
            return s.sample(u_max, rng).cover_levels();
          },
          py::arg("u_max"), py::arg("seed"), py::arg("stream") = 0,
          "Smallest level covering each window site (inf when never visited).")
      .def(
          "occupied",
          [](const InterlacementSampler& s, double u, std::uint64_t seed, std::uint64_t stream) {
            RngStream rng(seed, stream);
            std::vector<std::vector<std::int32_t>> out;
            for (const auto& p : s.sample(u, rng).occupancy_at(u)) out.push_back(from_point(p));
            return out;
          },
          py::arg("u"), py::arg("seed"), py::arg("stream") = 0);

  m.def("floor_root", &floor_root, py::arg("value"), py::arg("k"));
  m.def(
      "cascade",
      [](std::uint64_t L0, int n_max) {
        const auto c = build_cascade(L0, n_max);
        return py::make_tuple(c.L, c.ell);
      },
      py::arg("L0"), py::arg("n_max"), "(L_n, l_n) for n = 0..n_max.");
  m.def("seed_level", &seed_level, py::arg("L0"), py::arg("c2") = 1.0, py::arg("d") = 3);
  m.def(
      "level_sequence",
      [](double u0, std::uint64_t L0, int n_max) {
        const auto s = level_sequence(u0, build_cascade(L0, n_max), n_max);
        py::dict out;
        out["u"] = s.u;
        out["u_inf_lower"] = s.u_inf_lower;
        out["in_regime"] = s.in_regime;
        return out;
      },
      py::arg("u0"), py::arg("L0"), py::arg("n_max"));
  m.def(
      "cascade_dump", [](std::uint64_t L0, int n_max) { return cascade_dump(build_cascade(L0, n_max)); },
      py::arg("L0"), py::arg("n_max"));

  m.def(
      "origin_proxy",
      [](std::int64_t half_side, const std::vector<std::uint8_t>& occupied) {
        PlaneConfig c = PlaneConfig::filled(PlaneRect{-half_side, half_side, -half_side, half_side}, false);
        if (occupied.size() != c.occupied.size()) throw std::invalid_argument("occupancy size does not match the window");
        c.occupied = occupied;
        const auto p = origin_percolation_proxy(c);
        return py::make_tuple(p.origin_occupied, p.reaches_boundary, p.circuit);
      },
      py::arg("half_side"), py::arg("occupied"),
      "Row-major occupancy of [-M, M]^2 -> (origin occupied, vacant cluster reaches border, circuit).");

  m.def(
      "run_experiment",
      [](const std::string& command, const std::string& config_json) {
        ExperimentConfig c;
        if (!config_json.empty()) c.merge_json(config_json);
        c.command = command;
        ResultRecord r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
        }
        return record_to_dict(r);
      },
      py::arg("command"), py::arg("config_json") = "",
      "Runs one experiment command; config keys as in the CLI config file.");
  m.attr("commands") = experiment_commands();
}
