#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace oracle {

Dense dense(const pfenergy::linalg::SymMatrix& m) {
  Dense d(m.order(), Vec(m.order()));
  for (std::size_t i = 0; i < m.order(); ++i)
    for (std::size_t j = 0; j < m.order(); ++j) d[i][j] = m(i, j);
  return d;
}

Dense dense(const pfenergy::linalg::Matrix& m) {
  Dense d(m.rows(), Vec(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) d[i][j] = m(i, j);
  return d;
}

Vec gauss_solve(Dense a, Vec b) {
  const std::size_t n = a.size();
  std::vector<std::size_t> col(n);
  for (std::size_t i = 0; i < n; ++i) col[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pr = k, pc = k;
    for (std::size_t i = k; i < n; ++i)
      for (std::size_t j = k; j < n; ++j)
        if (std::abs(a[i][j]) > std::abs(a[pr][pc])) {
          pr = i;
          pc = j;
        }
    if (a[pr][pc] == 0.0) throw std::runtime_error("singular");
    std::swap(a[k], a[pr]);
    std::swap(b[k], b[pr]);
    for (auto& row : a) std::swap(row[k], row[pc]);
    std::swap(col[k], col[pc]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  Vec y(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * y[j];
    y[i] = s / a[i][i];
  }
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) x[col[i]] = y[i];
  return x;
}

Dense inverse(const Dense& a) {
  const std::size_t n = a.size();
  Dense inv(n, Vec(n));
  for (std::size_t j = 0; j < n; ++j) {
    Vec e(n, 0.0);
    e[j] = 1.0;
    const Vec c = gauss_solve(a, e);
    for (std::size_t i = 0; i < n; ++i) inv[i][j] = c[i];
  }
  return inv;
}

std::size_t count_below(const Dense& a, double sigma) {
  const std::size_t n = a.size();
  Dense m = a;
  for (std::size_t i = 0; i < n; ++i) m[i][i] -= sigma;
  // Symmetric elimination; a zero pivot is nudged, which only matters when
  // sigma is exactly an eigenvalue.
  std::size_t negatives = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double d = m[k][k];
    if (d == 0.0) d = 1e-300;
    if (d < 0.0) ++negatives;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = m[i][k] / d;
      for (std::size_t j = k + 1; j < n; ++j) m[i][j] -= f * m[k][j];
    }
  }
  return negatives;
}

namespace {

double gershgorin_radius(const Dense& a) {
  double r = 0.0;
  for (const auto& row : a) {
    double s = 0.0;
    for (double v : row) s += std::abs(v);
    r = std::max(r, s);
  }
  return r + 1.0;
}

}  // namespace

Vec eigenvalues(const Dense& a, double tol) {
  const std::size_t n = a.size();
  const double r = gershgorin_radius(a);
  Vec out(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k-th smallest: the smallest sigma with count_below(sigma) > k.
    double lo = -r, hi = r;
    while (hi - lo > tol * std::max(1.0, std::abs(lo) + std::abs(hi))) {
      const double mid = 0.5 * (lo + hi);
      (count_below(a, mid) > k ? hi : lo) = mid;
    }
    out[k] = 0.5 * (lo + hi);
  }
  return out;
}

double min_eigenvalue(const Dense& a, double tol) { return eigenvalues(a, tol).front(); }

Vec characteristic_roots(const Dense& a) {
  const std::size_t n = a.size();
  // Faddeev-LeVerrier: p(x) = x^n + c[1] x^{n-1} + ... + c[n], with
  // M_1 = I, c_k = -tr(A M_k) / k, M_{k+1} = A M_k + c_k I.
  Vec c(n + 1, 0.0);
  c[0] = 1.0;
  Dense m(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    Dense am(n, Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < n; ++l) am[i][j] += a[i][l] * m[l][j];
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) tr += am[i][i];
    c[k] = -tr / static_cast<double>(k);
    for (std::size_t i = 0; i < n; ++i) am[i][i] += c[k];
    m = std::move(am);
  }
  auto p = [&](double x) {
    double v = 0.0;
    for (double ck : c) v = v * x + ck;
    return v;
  };
  double bound = 0.0;
  for (std::size_t k = 1; k <= n; ++k) bound = std::max(bound, std::abs(c[k]));
  bound += 1.0;
  Vec roots;
  const std::size_t grid = 200000;
  double x0 = -bound, p0 = p(x0);
  for (std::size_t k = 1; k <= grid; ++k) {
    const double x1 = -bound + 2.0 * bound * static_cast<double>(k) / grid;
    const double p1 = p(x1);
    if (p0 == 0.0) roots.push_back(x0);
    else if ((p0 < 0.0) != (p1 < 0.0)) {
      double lo = x0, hi = x1, plo = p0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double pm = p(mid);
        if ((pm < 0.0) == (plo < 0.0)) {
          lo = mid;
          plo = pm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    p0 = p1;
  }
  return roots;
}

TwoBusRoot two_bus_high_root(double s) {
  const double disc = (2.0 * s - 1.0) * (2.0 * s - 1.0) - 8.0 * s * s;
  if (disc < 0.0) throw std::domain_error("no real root");
  const double u = ((1.0 - 2.0 * s) + std::sqrt(disc)) / 2.0;
  const double v = std::sqrt(u);
  return {v, std::atan2(-s, u + s)};
}

Vec complex_mismatch(const pfenergy::Network& net, const pfenergy::PFState& s) {
  using C = std::complex<double>;
  const std::size_t n = net.bus_count();
  std::vector<C> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = net.is_pq(i) ? std::exp(s.rho[i]) : net.buses()[i].v_set;
    v[i] = std::polar(mag, s.theta[i]);
  }
  std::vector<C> current(n, 0.0);
  for (const auto& line : net.lines()) {
    const std::size_t a = net.index_of(line.from), b = net.index_of(line.to);
    const C y(line.g, -line.b);
    current[a] += y * (v[a] - v[b]);
    current[b] += y * (v[b] - v[a]);
  }
  Vec r;
  for (std::size_t i = 0; i < n; ++i)
    if (i != net.slack()) r.push_back(net.buses()[i].p_inj - (v[i] * std::conj(current[i])).real());
  for (std::size_t i = 0; i < n; ++i)
    if (net.is_pq(i)) r.push_back(net.buses()[i].q_inj - (v[i] * std::conj(current[i])).imag());
  return r;
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

Dense fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  const std::size_t n = x.size();
  Dense hs(n, Vec(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      auto at = [&](double di, double dj) {
        Vec y = x;
        y[i] += di;
        y[j] += dj;
        return f(y);
      };
      const double v = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
      hs[i][j] = hs[j][i] = v;
    }
  return hs;
}

pfenergy::Network random_network(std::mt19937_64& rng, const NetworkSpec& spec) {
  std::uniform_real_distribution<double> ub(0.5, 3.0), inj(-0.3, 0.3), unit(0.0, 1.0);
  std::vector<pfenergy::Bus> buses;
  for (std::size_t i = 0; i < spec.buses; ++i) {
    pfenergy::Bus b;
    b.id = static_cast<int>(i + 1);
    b.kind = i == 0 ? pfenergy::BusKind::Slack
                    : (unit(rng) < spec.pv_prob ? pfenergy::BusKind::PV : pfenergy::BusKind::PQ);
    b.p_inj = i == 0 ? 0.0 : inj(rng);
    b.q_inj = b.kind == pfenergy::BusKind::PQ ? inj(rng) : 0.0;
    buses.push_back(b);
  }
  std::vector<pfenergy::Line> lines;
  for (std::size_t i = 1; i < spec.buses; ++i) {
    std::uniform_int_distribution<std::size_t> parent(0, i - 1);
    const double b = ub(rng);
    lines.push_back({static_cast<int>(parent(rng) + 1), static_cast<int>(i + 1), b, spec.kappa * b});
  }
  for (std::size_t i = 0; i < spec.buses; ++i)
    for (std::size_t j = i + 1; j < spec.buses; ++j)
      if (unit(rng) < spec.extra_edge_prob) {
        const double b = ub(rng);
        lines.push_back({static_cast<int>(i + 1), static_cast<int>(j + 1), b, spec.kappa * b});
      }
  return pfenergy::Network(std::move(buses), std::move(lines));
}

pfenergy::PFState random_state(std::mt19937_64& rng, const pfenergy::Network& net, double phase, double r) {
  std::uniform_real_distribution<double> th(-phase, phase), rh(-r, r);
  pfenergy::PFState s = pfenergy::PFState::flat(net);
  for (std::size_t i : net.angle_buses()) s.theta[i] = th(rng);
  for (std::size_t i : net.pq_buses()) s.rho[i] = rh(rng);
  return s;
}

}  // namespace oracle
