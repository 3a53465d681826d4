#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "interlace/lattice.hpp"
#include "interlace/percolation.hpp"
#include "interlace/sampler.hpp"

namespace interlace {

inline constexpr double kScaleExponent = 0.01;  // a
inline constexpr std::size_t kPlanarWindowLimit = std::size_t{1} << 20;

class CascadeOverflow : public std::overflow_error {
 public:
  CascadeOverflow(const std::string& what, int largest) : std::overflow_error(what), largest_level(largest) {}
  int largest_level;
};

class WindowTooLarge : public std::runtime_error {
 public:
  WindowTooLarge(const std::string& what, std::size_t sites) : std::runtime_error(what), sites(sites) {}
  std::size_t sites;
};

/// floor(value^(1/k)), exact.
std::uint64_t floor_root(std::uint64_t value, unsigned k);

// L_n and l_n = 100 floor(L_n^a) + 1, L_{n+1} = l_n L_n.
struct ScaleCascade {
  std::uint64_t L0 = 0;
  std::vector<std::uint64_t> L;    // L_0 .. L_nmax
  std::vector<std::uint64_t> ell;  // l_0 .. l_nmax
  bool toy = false;                // l_n fixed by hand instead of the formula

  int levels() const { return static_cast<int>(L.size()); }
  /// l_k^100 >= L_k for all k < n, checked in exact integer arithmetic. This
  /// gives L_{k+1} >= L_k^(1+a) at every step, hence L_n >= L_0^((1+a)^n).
  bool growth_certified(int n) const;
  /// Direct exact comparison L_n^(100^n) >= L_0^(101^n); only for n <= 2.
  bool growth_direct(int n) const;
};

/// Throws CascadeOverflow (carrying the largest representable level) when
/// L_nmax does not fit in 64 bits.
ScaleCascade build_cascade(std::uint64_t L0, int n_max);
/// Hierarchy with a fixed odd l, for checks at small scale.
ScaleCascade toy_cascade(std::uint64_t L0, std::uint64_t ell, int n_max);

struct BoxLabel {
  int n = 0;
  std::int64_t i1 = 0, i2 = 0;
  auto operator<=>(const BoxLabel&) const = default;
};

struct BoxGeometry {
  BoxLabel label;
  PlaneRect core;       // C_m on the plane
  PlaneRect enlarged;   // C~_m on the plane
  PlaneRect half_open;  // [-L_n, L_n)^2 + 2 L_n i, as inclusive bounds
  /// Full d-dimensional boxes when the coordinates fit in 32 bits.
  std::optional<BoxRegion> core_box, enlarged_box;
};

BoxGeometry boxes(const BoxLabel& m, const ScaleCascade& cascade, int d = 3);

/// Level-n labels m' with C_m' inside C_m, for m at level n + 1.
std::vector<BoxLabel> sub_boxes(const BoxLabel& m, const ScaleCascade& cascade);

struct PartitionCheck {
  bool union_exact = false;          // closed traces cover C_m's trace, nothing more
  bool half_open_partition = false;  // half-open traces tile the half-open trace once
  std::size_t sub_boxes = 0;
};
PartitionCheck check_partition(const BoxLabel& m, const ScaleCascade& cascade);

/// K_1 and K_2 for m = (n + 1, 0), from the index formulas.
std::vector<BoxLabel> label_set_K1(const ScaleCascade& cascade, int n);
std::vector<BoxLabel> label_set_K2(const ScaleCascade& cascade, int n);
/// The same sets from their geometric descriptions, by enumeration.
std::vector<BoxLabel> label_set_K1_geometric(const ScaleCascade& cascade, int n);
std::vector<BoxLabel> label_set_K2_geometric(const ScaleCascade& cascade, int n);

/// u_0 = (4 / c2) (log L0)^2 L0^-(d-2).
double seed_level(double L0, double c2, int d);

struct LevelSequence {
  double u0 = 0;
  std::vector<double> u;         // u_0 .. u_{nmax+1}
  double log_sum_upper = 0;      // certified upper bound on sum_n 1/log L_n
  double u_inf_lower = 0;        // certified: u0 * exp(-log_sum_upper), rounded down
  bool in_regime = true;         // u0 <= 1
};

LevelSequence level_sequence(double u0, const ScaleCascade& cascade, int n_max);

struct QnEstimate {
  int n = 0;
  double u = 0;
  CrossingReport report;
};

/// q_n(u) for m = (n, 0): one sample on the plane trace of C~_m per replicate
/// at the largest level, sliced at every u of the grid.
std::vector<QnEstimate> estimate_qn(int n, const std::vector<double>& u_grid, const ScaleCascade& cascade, int d,
                                    std::uint64_t reps, std::uint64_t master_seed, unsigned workers = 1,
                                    const SamplerConfig& config = {});

struct InductionRow {
  int n = 0;
  std::uint64_t L = 0, ell = 0;
  double u_n = 0, u_next = 0;
  double i_lhs = 0, i_rhs = 0;
  bool i_holds = false;
  bool measured = false;
  double q = 0, q_low = 0, q_high = 0;
  double a_n = 0, a_n_high = 0, ii_rhs = 0;
  bool ii_holds = false, ii_holds_ci = false;
  std::optional<double> ratio;
  std::string note;
};

struct InductionReport {
  int d = 3;
  double c1 = 1, c2 = 1;
  std::vector<InductionRow> rows;

  std::string csv() const;
  std::string text_table() const;
};

InductionReport induction_report(const ScaleCascade& cascade, const LevelSequence& levels,
                                 const std::map<int, CrossingReport>& q_at_un, double c1, double c2, int d);

/// JSON text with the cascade, label-set sizes and (optionally) levels.
std::string cascade_dump(const ScaleCascade& cascade, const LevelSequence* levels = nullptr);

}  // namespace interlace
