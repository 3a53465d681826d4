#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "interlace/experiments.hpp"
#include "interlace/green.hpp"
#include "interlace/potential.hpp"
#include "interlace/renorm.hpp"

namespace {

int fail(const char* category, int code, const std::string& message) {
  std::cerr << "interlace: " << category << " error: " << message << "\n";
  return code;
}

std::string join_commands() {
  std::string s;
  for (const auto& c : interlace::experiment_commands()) s += (s.empty() ? "" : ", ") + c;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace interlace;

  CLI::App app{"Random interlacements: samplers, capacities and the planar renormalization cascade"};
  app.set_version_flag("--version", std::string(version()));

  std::string command, config_path;
  ExperimentConfig flags;
  std::vector<double> u_one;
  std::vector<std::int64_t> L_one;
  app.add_option("command", command, "one of: " + join_commands())->required();
  app.add_option("--config", config_path, "JSON file with default values; flags override it");
  app.add_option("--dim", flags.dim, "lattice dimension d >= 3");
  app.add_option("--u", u_one, "single level u")->expected(1);
  app.add_option("--u-grid", flags.u_grid, "comma-separated levels")->delimiter(',');
  app.add_option("--L", L_one, "single scale L")->expected(1);
  app.add_option("--L-grid", flags.L_grid, "comma-separated scales")->delimiter(',');
  app.add_option("--window", flags.window, "point | pair:R | ball:R | plane:M | rect:x0,x1,y0,y1, ';'-separated");
  app.add_option("--reps", flags.reps, "replicates per cell");
  app.add_option("--seed", flags.seed, "master seed");
  app.add_option("--workers", flags.workers, "worker threads");
  app.add_option("--c1", flags.c1, "constant c1 of the induction criteria");
  app.add_option("--c2", flags.c2, "constant c2 of the seed level");
  app.add_option("--levels", flags.levels, "cascade levels");
  app.add_option("--out", flags.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("config", 2, e.what());
  }

  try {
    ExperimentConfig config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) return fail("io", 4, "cannot read config file '" + config_path + "'");
      std::stringstream text;
      text << in.rdbuf();
      config.merge_json(text.str());
    }
    config.command = command;
    auto given = [&](const char* name) { return app.count(name) > 0; };
    if (given("--dim")) config.dim = flags.dim;
    if (given("--u") && given("--u-grid")) return fail("config", 2, "--u and --u-grid are exclusive");
    if (given("--L") && given("--L-grid")) return fail("config", 2, "--L and --L-grid are exclusive");
    if (given("--u")) config.u_grid = u_one;
    if (given("--u-grid")) config.u_grid = flags.u_grid;
    if (given("--L")) config.L_grid = L_one;
    if (given("--L-grid")) config.L_grid = flags.L_grid;
    if (given("--window")) config.window = flags.window;
    if (given("--reps")) config.reps = flags.reps;
    if (given("--seed")) config.seed = flags.seed;
    if (given("--workers")) config.workers = flags.workers;
    if (given("--c1")) config.c1 = flags.c1;
    if (given("--c2")) config.c2 = flags.c2;
    if (given("--levels")) config.levels = flags.levels;
    if (given("--out")) config.out = flags.out;

    const auto record = run_experiment(config);
    write_record(record);
  } catch (const ConfigError& e) {
    return fail("config", 2, e.what());
  } catch (const OutputError& e) {
    return fail("io", 4, e.what());
  } catch (const WindowTooLarge& e) {
    return fail("limit", 5, e.what());
  } catch (const CascadeOverflow& e) {
    return fail("limit", 5, std::string(e.what()) + " (largest representable level " +
                                std::to_string(e.largest_level) + ")");
  } catch (const PotentialError& e) {
    return fail("numerical", 3, e.what());
  } catch (const QuadratureError& e) {
    return fail("numerical", 3, e.what());
  } catch (const std::invalid_argument& e) {
    return fail("domain", 2, e.what());
  } catch (const std::exception& e) {
    return fail("internal", 1, e.what());
  }
  return 0;
}
