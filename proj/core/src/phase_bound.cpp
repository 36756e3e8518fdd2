#include <cmath>
#include <functional>
#include <optional>
#include <numbers>
#include <random>

#include "pfenergy/convexity.hpp"
#include "pfenergy/error.hpp"

namespace pfenergy {
namespace {

using linalg::SymMatrix;

constexpr std::size_t kRandomPoints = 10000;
constexpr double kResolution = 0.1 * std::numbers::pi / 180.0;

using Point = std::vector<int>;

// Convexity matrix with rho = k * log(b_rho) over pq buses and |theta| = b_theta
// on every line.
class BoxModel {
 public:
  BoxModel(const Network& net, double b_rho) : n_(net.pq_buses().size()), step_(std::log(b_rho)) {
    base_.assign(n_, 0.0);
    fixed_.assign(n_, 0.0);
    neighbors_.resize(n_);
    for (std::size_t a = 0; a < n_; ++a) base_[a] = 2.0 * net.susceptance_sum(net.pq_buses()[a]);
    for (const auto& e : net.edges()) {
      const auto pi = net.pq_position(e.from), pj = net.pq_position(e.to);
      if (pi >= 0 && pj >= 0) {
        pairs_.push_back({static_cast<std::size_t>(pi), static_cast<std::size_t>(pj), e.b});
        neighbors_[pi].push_back(static_cast<std::size_t>(pj));
        neighbors_[pj].push_back(static_cast<std::size_t>(pi));
      } else if (pi >= 0) {
        fixed_[pi] += e.b;
      } else if (pj >= 0) {
        fixed_[pj] += e.b;
      }
    }
    // Hop distance to a fixed-voltage bus bounds |k_i|.
    depth_.assign(n_, -1);
    std::vector<std::size_t> queue;
    for (std::size_t a = 0; a < n_; ++a)
      if (fixed_[a] > 0.0) {
        depth_[a] = 1;
        queue.push_back(a);
      }
    for (std::size_t q = 0; q < queue.size(); ++q)
      for (std::size_t nb : neighbors_[queue[q]])
        if (depth_[nb] < 0) {
          depth_[nb] = depth_[queue[q]] + 1;
          queue.push_back(nb);
        }
    order_ = queue;
    if (step_ == 0.0) depth_.assign(n_, 0);
  }

  std::size_t order() const { return n_; }
  int depth(std::size_t a) const { return depth_[a]; }

  SymMatrix matrix(const Point& k, double b_theta) const {
    const double sec = 1.0 / std::cos(b_theta);
    SymMatrix m(n_);
    for (std::size_t a = 0; a < n_; ++a) m.set(a, a, base_[a] - sec * fixed_[a] * std::exp(-step_ * k[a]));
    for (const auto& p : pairs_) {
      const double x = step_ * (k[p.j] - k[p.i]);
      m.add(p.i, p.i, -sec * p.b * std::exp(x));
      m.add(p.j, p.j, -sec * p.b * std::exp(-x));
      m.add(p.i, p.j, -sec * p.b);
    }
    return m;
  }

  bool psd(const Point& k, double b_theta) const { return linalg::cholesky_psd(matrix(k, b_theta)).psd; }

  bool feasible_move(const Point& k, std::size_t a, int value) const {
    if (std::abs(value) > depth_[a]) return false;
    for (std::size_t nb : neighbors_[a])
      if (std::abs(value - k[nb]) > 1) return false;
    return true;
  }

  // Every grid point of the polytope, or nullopt once there are more than `limit`.
  std::optional<std::vector<Point>> enumerate(std::size_t limit) const {
    std::vector<Point> out;
    Point k(n_, 0);
    std::vector<bool> set(n_, false);
    bool overflow = false;
    std::function<void(std::size_t)> visit = [&](std::size_t pos) {
      if (overflow) return;
      if (pos == order_.size()) {
        if (out.size() >= limit) {
          overflow = true;
          return;
        }
        out.push_back(k);
        return;
      }
      const std::size_t a = order_[pos];
      int lo = -depth_[a], hi = depth_[a];
      for (std::size_t nb : neighbors_[a])
        if (set[nb]) {
          lo = std::max(lo, k[nb] - 1);
          hi = std::min(hi, k[nb] + 1);
        }
      set[a] = true;
      for (int v = lo; v <= hi; ++v) {
        k[a] = v;
        visit(pos + 1);
      }
      set[a] = false;
      k[a] = 0;
    };
    visit(0);
    if (overflow) return std::nullopt;
    return out;
  }

  // Random walk with single-coordinate moves; one sample every n moves.
  std::vector<Point> sample(std::size_t count, std::uint64_t seed) const {
    std::vector<Point> out;
    Point lowest(n_), highest(n_);
    for (std::size_t a = 0; a < n_; ++a) {
      lowest[a] = -depth_[a];
      highest[a] = depth_[a];
    }
    out.push_back(Point(n_, 0));
    out.push_back(lowest);
    out.push_back(highest);
    if (n_ == 0) return out;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
    std::bernoulli_distribution up(0.5);
    Point k(n_, 0);
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t m = 0; m < n_; ++m) {
        const std::size_t a = pick(rng);
        const int v = k[a] + (up(rng) ? 1 : -1);
        if (feasible_move(k, a, v)) k[a] = v;
      }
      out.push_back(k);
    }
    return out;
  }

  // Alternating search: with u the minimizing eigenvector, take single-bus
  // moves that lower u' M u, then recompute u.
  Point descend(Point k, double b_theta) const {
    for (int iter = 0; iter < 25; ++iter) {
      const auto eig = linalg::sym_eigen(matrix(k, b_theta));
      Vector u(n_);
      for (std::size_t a = 0; a < n_; ++a) u[a] = eig.vectors(a, 0);
      bool changed = false;
      for (std::size_t a = 0; a < n_; ++a) {
        double best = quadratic(k, b_theta, u);
        for (int d : {-1, 1}) {
          const int v = k[a] + d;
          if (!feasible_move(k, a, v)) continue;
          const int old = k[a];
          k[a] = v;
          const double q = quadratic(k, b_theta, u);
          if (q < best - 1e-15) {
            best = q;
            changed = true;
          } else {
            k[a] = old;
          }
        }
      }
      if (!changed) break;
    }
    return k;
  }

 private:
  using Vector = linalg::Vector;

  double quadratic(const Point& k, double b_theta, const Vector& u) const {
    const SymMatrix m = matrix(k, b_theta);
    double q = 0.0;
    for (std::size_t a = 0; a < n_; ++a)
      for (std::size_t b = 0; b < n_; ++b) q += u[a] * m(a, b) * u[b];
    return q;
  }

  struct Pair {
    std::size_t i, j;
    double b;
  };
  std::size_t n_;
  double step_;
  std::vector<double> base_;
  std::vector<double> fixed_;
  std::vector<Pair> pairs_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::vector<int> depth_;
  std::vector<std::size_t> order_;
};

}  // namespace

PhaseBound max_phase_bound(const Network& net, double b_rho, BoundMode mode, std::uint64_t seed) {
  if (!(b_rho >= 1.0) || !std::isfinite(b_rho)) throw Error(ErrorCode::InvalidArgument, "b_rho must be >= 1");
  const BoxModel model(net, b_rho);

  PhaseBound out;
  out.pq_buses = model.order();
  std::optional<std::vector<Point>> points;
  if (mode != BoundMode::Sampled) points = model.enumerate(kMaxExactPoints);
  if (mode == BoundMode::ExactVertices && !points)
    throw Error(ErrorCode::InvalidArgument, "too many voltage grid points for exact mode");
  const bool exact = points.has_value();
  out.mode = exact ? BoundMode::ExactVertices : BoundMode::Sampled;
  out.certified = exact;
  if (!exact) points = model.sample(kRandomPoints, seed);
  out.points_checked = points->size();

  std::vector<Point> starts;
  if (!exact) starts.assign(points->begin(), points->begin() + std::min<std::size_t>(points->size(), 4));

  // The last failing point tends to fail again at the next bisection step.
  std::optional<Point> witness;
  auto inside = [&](double b_theta) {
    if (model.order() == 0) return true;
    if (witness && !model.psd(*witness, b_theta)) return false;
    for (const auto& s : starts) {
      Point k = model.descend(s, b_theta);
      if (!model.psd(k, b_theta)) {
        witness = std::move(k);
        return false;
      }
    }
    for (const auto& k : *points)
      if (!model.psd(k, b_theta)) {
        witness = k;
        return false;
      }
    return true;
  };

  if (!inside(0.0))
    throw Error(ErrorCode::DomainError, "the voltage-ratio box leaves the convexity domain even at zero phase");
  double lo = 0.0, hi = std::numbers::pi / 2;
  while (hi - lo > kResolution) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  out.b_theta = lo;
  return out;
}

}  // namespace pfenergy
