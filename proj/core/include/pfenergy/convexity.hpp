#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "pfenergy/energy.hpp"
#include "pfenergy/linalg.hpp"
#include "pfenergy/network.hpp"

namespace pfenergy {

/// Angular margin below pi/2 for strict-interior queries.
inline constexpr double kInteriorPhaseTol = 1e-6;

struct ConvexityCertificate {
  bool in_C = false;
  bool phase_ok = false;
  /// Smallest eigenvalue of the convexity matrix; -inf when phases are out
  /// of range; +inf when there are no PQ buses.
  double lmi_min_eig = 0.0;
  /// tol * (1 + max|diag|) of the convexity matrix; lmi_min_eig is compared
  /// against -lmi_tol.
  double lmi_tol = 0.0;
  std::optional<bool> in_D_sampled;
  std::size_t d_samples = 0;
};

/// pq x pq matrix whose positive semidefiniteness (together with
/// |theta_i - theta_j| < pi/2 on every line) defines the convexity domain:
///   diag:  2 B_i - sum over fixed-voltage neighbors j of b_ij e^{rho_j - rho_i} / cos theta_ij
///   minus, for each pq-pq line, (b_ij / cos theta_ij) [[e^{rho_j-rho_i}, 1], [1, e^{rho_i-rho_j}]].
/// Throws PhaseOutOfRange if a line has |theta_ij| >= pi/2.
linalg::SymMatrix convexity_matrix(const Network& net, const PFState& s);

/// True iff every line has |theta_ij| < pi/2.
bool phases_in_range(const Network& net, const PFState& s, double margin = 0.0);

ConvexityCertificate in_domain_C(const Network& net, const PFState& s, double tol = linalg::kDefaultPsdTol);

/// Strict interior: lmi_min_eig > tol (relative) and every |theta_ij| < pi/2 - kInteriorPhaseTol.
bool in_interior_C(const Network& net, const PFState& s, double tol = linalg::kDefaultPsdTol);

struct DomainSampleResult {
  bool in_D = true;
  /// Smallest Hessian eigenvalue at each alpha = k / samples, k = 0..samples,
  /// up to and including the first failure.
  std::vector<double> min_eig;
  std::optional<double> first_failure_alpha;
};

/// Checks the Hessian on the segment alpha * s, alpha in {k/samples}. This is
/// a sampled necessary condition, not a certificate.
DomainSampleResult in_domain_D_sampled(const Network& net, const PFState& s, std::size_t samples = 64,
                                       double tol = linalg::kDefaultPsdTol);

/// Constant-ratio lossy networks: same matrix as the lossless case. Throws
/// UnsupportedTopology / NotConstantRatio like the lossy energy.
ConvexityCertificate lossy_in_domain(const Network& net, const PFState& s, double tol = linalg::kDefaultPsdTol);

/// lambda f(x1,y1) + (1-lambda) f(x2,y2) - f(lambda x1 + (1-lambda) x2, lambda y1 + (1-lambda) y2)
/// with f(x, y) = (1/cos y) [[e^x, 1], [1, e^-x]].
linalg::SymMatrix matrix_convexity_gap(double x1, double y1, double x2, double y2, double lambda);

/// Operational box: e^{|rho_i - rho_j|} <= b_rho and |theta_i - theta_j| <= b_theta on every line.
struct PhaseVoltageBox {
  double b_rho = 1.0;
  double b_theta = 0.0;
};

enum class BoundMode { Auto, ExactVertices, Sampled };
std::string_view to_string(BoundMode mode) noexcept;

struct PhaseBound {
  double b_theta = 0.0;  // radians
  BoundMode mode = BoundMode::ExactVertices;
  bool certified = false;
  std::size_t pq_buses = 0;
  /// Grid points of the voltage box that were checked (exact mode: all of them).
  std::size_t points_checked = 0;
};

/// Largest b_theta (bisection to 0.1 degree, lower end of the bracket) such
/// that the convexity matrix is PSD over the operational box
/// {|rho_i - rho_j| <= log b_rho, |theta_i - theta_j| <= b_theta per line}.
/// The quadratic form is concave in the bus log-voltages and decreasing in
/// |theta|, so it suffices to check the vertices of the rho polytope at
/// |theta| = b_theta. Those vertices are integer multiples of log b_rho, so
/// exact mode checks every such grid point in the polytope (when there are at
/// most kMaxExactPoints of them); sampled mode checks a random walk over the
/// grid plus a local search and is not a certificate.
/// Throws InvalidArgument for b_rho < 1 and DomainError when even b_theta = 0
/// fails.
inline constexpr std::size_t kMaxExactPoints = std::size_t{1} << 17;
PhaseBound max_phase_bound(const Network& net, double b_rho, BoundMode mode = BoundMode::Auto,
                           std::uint64_t seed = 0);

}  // namespace pfenergy
