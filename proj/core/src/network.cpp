#include "pfenergy/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <utility>

#include <json.hpp>

#include "pfenergy/error.hpp"

namespace pfenergy {

std::string_view to_string(BusKind kind) noexcept {
  switch (kind) {
    case BusKind::Slack: return "slack";
    case BusKind::PV: return "pv";
    case BusKind::PQ: return "pq";
  }
  return "pq";
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

std::string bus_label(int id) { return "bus " + std::to_string(id); }

}  // namespace

Network::Network(std::vector<Bus> buses, std::vector<Line> lines) : buses_(std::move(buses)) {
  if (buses_.empty()) invalid("network has no buses");

  std::unordered_map<int, std::size_t> index;
  std::size_t slack_count = 0;
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    const Bus& b = buses_[i];
    if (!index.emplace(b.id, i).second) invalid("duplicate " + bus_label(b.id));
    if (!std::isfinite(b.p_inj) || !std::isfinite(b.q_inj))
      invalid("non-finite injection at " + bus_label(b.id));
    if (b.kind != BusKind::PQ && !(b.v_set > 0.0 && std::isfinite(b.v_set)))
      invalid("nonpositive voltage set-point at " + bus_label(b.id));
    if (b.kind == BusKind::Slack) {
      ++slack_count;
      slack_ = i;
    }
  }
  if (slack_count == 0) invalid("no slack bus");
  if (slack_count > 1) invalid("more than one slack bus");

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> merged;
  for (const Line& l : lines) {
    auto f = index.find(l.from);
    auto t = index.find(l.to);
    if (f == index.end() || t == index.end())
      invalid("line " + std::to_string(l.from) + "-" + std::to_string(l.to) + " references an unknown bus");
    if (f->second == t->second) invalid("self-loop at " + bus_label(l.from));
    if (!(l.b > 0.0) || !std::isfinite(l.b))
      invalid("line " + std::to_string(l.from) + "-" + std::to_string(l.to) + " has nonpositive b");
    if (!(l.g >= 0.0) || !std::isfinite(l.g))
      invalid("line " + std::to_string(l.from) + "-" + std::to_string(l.to) + " has negative g");
    const auto key = std::minmax(f->second, t->second);
    auto [it, fresh] = merged.emplace(key, lines_.size());
    if (fresh) {
      lines_.push_back(l);
      edges_.push_back({f->second, t->second, l.b, l.g});
    } else {
      lines_[it->second].b += l.b;
      lines_[it->second].g += l.g;
      edges_[it->second].b += l.b;
      edges_[it->second].g += l.g;
    }
  }

  const std::size_t n = buses_.size();
  adjacency_.assign(n, {});
  b_sum_.assign(n, 0.0);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    adjacency_[e.from].push_back({e.to, k});
    adjacency_[e.to].push_back({e.from, k});
    b_sum_[e.from] += e.b;
    b_sum_[e.to] += e.b;
  }

  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{slack_};
  seen[slack_] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (const Adjacency& a : adjacency_[u])
      if (!seen[a.neighbor]) {
        seen[a.neighbor] = true;
        ++reached;
        stack.push_back(a.neighbor);
      }
  }
  if (reached != n) invalid("network is not connected");

  rho_slot_.assign(n, -1);
  theta_slot_.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    if (buses_[i].kind == BusKind::PQ) {
      rho_slot_[i] = static_cast<std::ptrdiff_t>(pq_.size());
      pq_.push_back(i);
    }
  for (std::size_t i = 0; i < n; ++i)
    if (i != slack_) {
      theta_slot_[i] = static_cast<std::ptrdiff_t>(pq_.size() + angle_.size());
      angle_.push_back(i);
    }

  if (edges_.empty()) {
    lossy_ratio_ = 0.0;
  } else {
    const double kappa = edges_.front().g / edges_.front().b;
    const bool uniform = std::all_of(edges_.begin(), edges_.end(),
                                     [&](const Edge& e) { return std::abs(e.g / e.b - kappa) <= 1e-9; });
    if (uniform) lossy_ratio_ = kappa;
  }
}

std::size_t Network::index_of(int id) const {
  for (std::size_t i = 0; i < buses_.size(); ++i)
    if (buses_[i].id == id) return i;
  invalid("unknown " + bus_label(id));
}

bool Network::is_lossless() const noexcept {
  return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.g == 0.0; });
}

bool Network::has_unit_setpoints() const noexcept {
  return std::all_of(buses_.begin(), buses_.end(),
                     [](const Bus& b) { return b.kind == BusKind::PQ || b.v_set == 1.0; });
}

bool Network::all_non_slack_pq() const noexcept {
  return std::all_of(buses_.begin(), buses_.end(), [](const Bus& b) { return b.kind != BusKind::PV; });
}

// ---------------------------------------------------------------------------
// Native JSON

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ParseError, where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) parse_fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(where, std::string("missing \"") + key + "\"");
  return *it;
}

double number(const json& obj, const char* key, const std::string& where, std::optional<double> fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (fallback) return *fallback;
    parse_fail(where, std::string("missing \"") + key + "\"");
  }
  if (!it->is_number()) parse_fail(where + "." + key, "expected a number");
  return it->get<double>();
}

int integer(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number_integer()) parse_fail(where + "." + key, "expected an integer");
  return v.get<int>();
}

BusKind parse_kind(const json& v, const std::string& where) {
  if (!v.is_string()) parse_fail(where, "expected \"slack\", \"pv\" or \"pq\"");
  const std::string s = v.get<std::string>();
  if (s == "slack") return BusKind::Slack;
  if (s == "pv") return BusKind::PV;
  if (s == "pq") return BusKind::PQ;
  parse_fail(where, "unknown bus kind \"" + s + "\"");
}

}  // namespace

Network parse_native(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    parse_fail("byte " + std::to_string(e.byte), e.what());
  }
  const json& jbuses = require(doc, "buses", "document");
  const json& jlines = require(doc, "lines", "document");
  if (!jbuses.is_array()) parse_fail("buses", "expected an array");
  if (!jlines.is_array()) parse_fail("lines", "expected an array");

  std::vector<Bus> buses;
  for (std::size_t i = 0; i < jbuses.size(); ++i) {
    const std::string where = "buses[" + std::to_string(i) + "]";
    const json& jb = jbuses[i];
    Bus b;
    b.id = integer(jb, "id", where);
    b.kind = parse_kind(require(jb, "kind", where), where + ".kind");
    b.p_inj = number(jb, "p", where, 0.0);
    b.q_inj = number(jb, "q", where, 0.0);
    b.v_set = number(jb, "v", where, 1.0);
    buses.push_back(b);
  }
  std::vector<Line> lines;
  for (std::size_t i = 0; i < jlines.size(); ++i) {
    const std::string where = "lines[" + std::to_string(i) + "]";
    const json& jl = jlines[i];
    Line l;
    l.from = integer(jl, "from", where);
    l.to = integer(jl, "to", where);
    l.b = number(jl, "b", where, std::nullopt);
    l.g = number(jl, "g", where, 0.0);
    if (!(l.b > 0.0)) parse_fail(where + ".b", "must be positive");
    lines.push_back(l);
  }
  try {
    return Network(std::move(buses), std::move(lines));
  } catch (const Error& e) {
    parse_fail("network", e.what());
  }
}

std::string serialize_native(const Network& net) {
  nlohmann::ordered_json doc;
  doc["buses"] = nlohmann::ordered_json::array();
  for (const Bus& b : net.buses()) {
    nlohmann::ordered_json jb;
    jb["id"] = b.id;
    jb["kind"] = std::string(to_string(b.kind));
    jb["p"] = b.p_inj;
    jb["q"] = b.q_inj;
    jb["v"] = b.v_set;
    doc["buses"].push_back(jb);
  }
  doc["lines"] = nlohmann::ordered_json::array();
  for (const Line& l : net.lines()) {
    nlohmann::ordered_json jl;
    jl["from"] = l.from;
    jl["to"] = l.to;
    jl["b"] = l.b;
    jl["g"] = l.g;
    doc["lines"].push_back(jl);
  }
  return doc.dump(2) + "\n";
}

Network load_case(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (path.extension() == ".m") return parse_matpower(ss.str(), warnings);
  return parse_native(ss.str());
}

// ---------------------------------------------------------------------------
// Transformations

Network losslessify(const Network& net) {
  std::vector<Line> lines = net.lines();
  for (Line& l : lines) l.g = 0.0;
  return Network(net.buses(), std::move(lines));
}

Network absorb_setpoints(const Network& net) {
  std::vector<Bus> buses = net.buses();
  auto scale = [&](int id) {
    const Bus& b = net.buses()[net.index_of(id)];
    return b.kind == BusKind::PQ ? 1.0 : b.v_set;
  };
  std::vector<Line> lines = net.lines();
  for (Line& l : lines) {
    const double s = scale(l.from) * scale(l.to);
    l.b *= s;
    l.g *= s;
  }
  for (Bus& b : buses) b.v_set = 1.0;
  return Network(std::move(buses), std::move(lines));
}

Network with_uniform_ratio(const Network& net, double kappa) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) invalid("lossy ratio must be finite and nonnegative");
  std::vector<Line> lines = net.lines();
  for (Line& l : lines) l.g = kappa * l.b;
  return Network(net.buses(), std::move(lines));
}

Network scale_injections(const Network& net, double p_scale, double q_scale) {
  std::vector<Bus> buses = net.buses();
  for (Bus& b : buses) {
    if (b.kind == BusKind::Slack) continue;
    b.p_inj *= p_scale;
    if (b.kind == BusKind::PQ) b.q_inj *= q_scale;
  }
  return Network(std::move(buses), net.lines());
}

linalg::Matrix incidence(const Network& net) {
  linalg::Matrix a(net.bus_count(), net.edges().size());
  for (std::size_t k = 0; k < net.edges().size(); ++k) {
    a(net.edges()[k].from, k) = 1.0;
    a(net.edges()[k].to, k) = -1.0;
  }
  return a;
}

bool is_tree(const Network& net) { return net.edges().size() + 1 == net.bus_count(); }

}  // namespace pfenergy
