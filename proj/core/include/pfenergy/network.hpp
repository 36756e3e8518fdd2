#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pfenergy/linalg.hpp"

namespace pfenergy {

enum class BusKind { Slack, PV, PQ };

std::string_view to_string(BusKind kind) noexcept;

/// Per-unit bus data. Injections are positive for generation, negative for load.
struct Bus {
  int id = 0;
  BusKind kind = BusKind::PQ;
  double p_inj = 0.0;
  double q_inj = 0.0;  // meaningful at PQ buses
  double v_set = 1.0;  // meaningful at PV and slack buses
};

/// A line with negated susceptance b > 0 and conductance g >= 0 (per-unit).
struct Line {
  int from = 0;
  int to = 0;
  double b = 0.0;
  double g = 0.0;
};

/// Immutable, validated network. Parallel lines are merged by summing b and g;
/// the merged line keeps the orientation of its first occurrence.
///
/// Buses are addressed by position (0-based index into buses()) internally;
/// `id` is only the external label. The free-variable layout used by every
/// numerical module is (rho over pq_buses(), theta over angle_buses()).
class Network {
 public:
  struct Edge {
    std::size_t from;
    std::size_t to;
    double b;
    double g;
  };
  struct Adjacency {
    std::size_t neighbor;
    std::size_t edge;
  };

  /// Throws Error(InvalidArgument) on any invariant violation: duplicate ids,
  /// not exactly one slack, nonpositive set-point, non-finite injection,
  /// self-loop, unknown endpoint, b <= 0, g < 0, or a disconnected graph.
  Network(std::vector<Bus> buses, std::vector<Line> lines);

  const std::vector<Bus>& buses() const noexcept { return buses_; }
  const std::vector<Line>& lines() const noexcept { return lines_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<Adjacency>& adjacent(std::size_t bus) const { return adjacency_[bus]; }

  std::size_t bus_count() const noexcept { return buses_.size(); }
  std::size_t line_count() const noexcept { return lines_.size(); }
  std::size_t slack() const noexcept { return slack_; }
  std::size_t index_of(int id) const;

  bool is_pq(std::size_t bus) const { return buses_[bus].kind == BusKind::PQ; }

  /// B_i = sum of b over lines incident to bus i.
  double susceptance_sum(std::size_t bus) const { return b_sum_[bus]; }

  /// Uniform ratio kappa = g/b when every line agrees to 1e-9 (0 for a
  /// lossless network); nullopt otherwise.
  std::optional<double> lossy_ratio() const noexcept { return lossy_ratio_; }
  bool is_lossless() const noexcept;
  bool has_unit_setpoints() const noexcept;
  bool all_non_slack_pq() const noexcept;

  const std::vector<std::size_t>& pq_buses() const noexcept { return pq_; }
  const std::vector<std::size_t>& angle_buses() const noexcept { return angle_; }
  /// Position of rho_i / theta_i in the packed variable vector, or -1 if pinned.
  std::ptrdiff_t rho_slot(std::size_t bus) const { return rho_slot_[bus]; }
  std::ptrdiff_t theta_slot(std::size_t bus) const { return theta_slot_[bus]; }
  /// Position of bus i among pq_buses(), or -1.
  std::ptrdiff_t pq_position(std::size_t bus) const { return rho_slot_[bus]; }
  std::size_t dimension() const noexcept { return pq_.size() + angle_.size(); }

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Adjacency>> adjacency_;
  std::vector<double> b_sum_;
  std::vector<std::size_t> pq_;
  std::vector<std::size_t> angle_;
  std::vector<std::ptrdiff_t> rho_slot_;
  std::vector<std::ptrdiff_t> theta_slot_;
  std::size_t slack_ = 0;
  std::optional<double> lossy_ratio_;
};

/// Native JSON case:
///   {"buses":[{"id":1,"kind":"slack"|"pv"|"pq","p":0,"q":0,"v":1}],
///    "lines":[{"from":1,"to":2,"b":1,"g":0}]}
/// `g` and `v` are optional (default 0 and 1). Throws Error(ParseError).
Network parse_native(std::string_view text);
std::string serialize_native(const Network& net);

/// MATPOWER m-file subset (mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch).
/// Shunts, taps, phase shifters and line charging are dropped; each dropped
/// feature adds one message to `warnings`. Throws Error(ParseError).
Network parse_matpower(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Dispatches on extension: ".m" is MATPOWER, anything else native JSON.
Network load_case(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// Sets every conductance to zero.
Network losslessify(const Network& net);

/// Rescales b_ij by the set-points of fixed-voltage endpoints (1 for PQ
/// endpoints) and sets every set-point to 1. Exact for the active-power
/// equations; at a PQ bus next to an off-nominal set-point the reactive
/// equation picks up a b_ij (v_j - 1) V_i^2 term (see README).
Network absorb_setpoints(const Network& net);

/// g = kappa * b on every line.
Network with_uniform_ratio(const Network& net, double kappa);

/// Scales P at every non-slack bus by p_scale and Q at every PQ bus by q_scale.
Network scale_injections(const Network& net, double p_scale, double q_scale);

/// Edge-incidence matrix: rows are buses, column k has +1 at the stored
/// `from` bus and -1 at the `to` bus.
linalg::Matrix incidence(const Network& net);

bool is_tree(const Network& net);

}  // namespace pfenergy
