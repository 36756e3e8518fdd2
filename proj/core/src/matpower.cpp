#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pfenergy/error.hpp"
#include "pfenergy/network.hpp"

namespace pfenergy {
namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  bool in_string = false;
  for (char c : text) {
    if (c == '\n') {
      in_comment = false;
      in_string = false;
      out.push_back(c);
      continue;
    }
    if (in_comment) continue;
    if (c == '\'') in_string = !in_string;
    if (c == '%' && !in_string) {
      in_comment = true;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

std::size_t line_of(const std::string& text, std::size_t pos) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i)
    if (text[i] == '\n') ++n;
  return n;
}

// Finds `mpc.<name>` followed by `=`; returns the position just after '='.
std::optional<std::size_t> find_assignment(const std::string& text, const std::string& name) {
  const std::string key = "mpc." + name;
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    std::size_t p = pos + key.size();
    const bool boundary = p >= text.size() || !(std::isalnum(static_cast<unsigned char>(text[p])) || text[p] == '_');
    while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
    if (boundary && p < text.size() && text[p] == '=') return p + 1;
    pos += key.size();
  }
  return std::nullopt;
}

double scalar(const std::string& text, const std::string& name) {
  auto at = find_assignment(text, name);
  if (!at) fail("missing mpc." + name);
  const char* begin = text.c_str() + *at;
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) fail("line " + std::to_string(line_of(text, *at)) + ": mpc." + name + " is not a number");
  return v;
}

using Table = std::vector<std::vector<double>>;

Table matrix(const std::string& text, const std::string& name, std::size_t min_cols) {
  auto at = find_assignment(text, name);
  if (!at) fail("missing mpc." + name);
  const std::size_t open = text.find('[', *at);
  const std::size_t close = text.find(']', *at);
  if (open == std::string::npos || close == std::string::npos || close < open)
    fail("line " + std::to_string(line_of(text, *at)) + ": mpc." + name + " is not a bracketed matrix");

  Table rows;
  std::vector<double> row;
  auto flush = [&](std::size_t where) {
    if (row.empty()) return;
    if (row.size() < min_cols)
      fail("line " + std::to_string(line_of(text, where)) + ": mpc." + name + " row has " +
           std::to_string(row.size()) + " columns, need " + std::to_string(min_cols));
    rows.push_back(std::move(row));
    row.clear();
  };
  std::size_t i = open + 1;
  while (i < close) {
    const char c = text[i];
    if (c == ';' || c == '\n') {
      flush(i);
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
    } else {
      const char* begin = text.c_str() + i;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin)
        fail("line " + std::to_string(line_of(text, i)) + ": unexpected '" + std::string(1, c) + "' in mpc." + name);
      row.push_back(v);
      i += static_cast<std::size_t>(end - begin);
    }
  }
  flush(close);
  return rows;
}

int as_id(double v, const std::string& what) {
  if (v != std::floor(v)) fail(what + " is not an integer");
  return static_cast<int>(v);
}

}  // namespace

Network parse_matpower(std::string_view raw, std::vector<std::string>* warnings) {
  const std::string text = strip_comments(raw);
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };

  const double base = scalar(text, "baseMVA");
  if (!(base > 0.0)) fail("mpc.baseMVA must be positive");
  const Table bus = matrix(text, "bus", 13);
  const Table gen = matrix(text, "gen", 8);
  const Table branch = matrix(text, "branch", 11);

  struct Acc {
    Bus bus;
    double pd = 0.0, qd = 0.0, pg = 0.0, qg = 0.0;
    std::optional<double> vg;
    bool isolated = false;
  };
  std::map<int, Acc> acc;
  std::vector<int> order;
  bool shunt = false;
  for (std::size_t r = 0; r < bus.size(); ++r) {
    const auto& row = bus[r];
    const int id = as_id(row[0], "bus row " + std::to_string(r + 1) + " id");
    Acc a;
    a.bus.id = id;
    switch (as_id(row[1], "bus " + std::to_string(id) + " type")) {
      case 3: a.bus.kind = BusKind::Slack; break;
      case 2: a.bus.kind = BusKind::PV; break;
      case 1: a.bus.kind = BusKind::PQ; break;
      case 4: a.isolated = true; break;
      default: fail("bus " + std::to_string(id) + " has unknown type");
    }
    a.pd = row[2];
    a.qd = row[3];
    if (row[4] != 0.0 || row[5] != 0.0) shunt = true;
    a.bus.v_set = row[7];
    if (!acc.emplace(id, a).second) fail("duplicate bus " + std::to_string(id));
    order.push_back(id);
  }
  if (shunt) warn("bus shunts (Gs, Bs) dropped");

  for (std::size_t r = 0; r < gen.size(); ++r) {
    const auto& row = gen[r];
    const int id = as_id(row[0], "gen row " + std::to_string(r + 1) + " bus");
    if (row[7] <= 0.0) continue;
    auto it = acc.find(id);
    if (it == acc.end()) fail("generator at unknown bus " + std::to_string(id));
    Acc& a = it->second;
    a.pg += row[1];
    a.qg += row[2];
    if (a.vg && std::abs(*a.vg - row[5]) > 1e-12)
      fail("generators at bus " + std::to_string(id) + " disagree on the voltage set-point");
    a.vg = row[5];
  }

  std::vector<Bus> buses;
  std::size_t slack_count = 0;
  for (int id : order) {
    Acc& a = acc.at(id);
    if (a.isolated) {
      warn("isolated bus " + std::to_string(id) + " dropped");
      continue;
    }
    Bus b = a.bus;
    b.p_inj = (a.pg - a.pd) / base;
    b.q_inj = (a.qg - a.qd) / base;
    if (b.kind != BusKind::PQ) {
      if (a.vg) b.v_set = *a.vg;
      if (b.kind == BusKind::PV && !a.vg) {
        warn("PV bus " + std::to_string(id) + " has no in-service generator; treated as PQ");
        b.kind = BusKind::PQ;
      }
    }
    if (b.kind == BusKind::PQ) b.v_set = 1.0;
    if (b.kind == BusKind::Slack) ++slack_count;
    buses.push_back(b);
  }
  if (slack_count != 1) fail("expected exactly one reference bus, found " + std::to_string(slack_count));

  std::vector<Line> lines;
  bool charging = false, taps = false, shift = false;
  for (std::size_t r = 0; r < branch.size(); ++r) {
    const auto& row = branch[r];
    if (row[10] <= 0.0) continue;
    const int f = as_id(row[0], "branch row " + std::to_string(r + 1) + " from");
    const int t = as_id(row[1], "branch row " + std::to_string(r + 1) + " to");
    auto fi = acc.find(f);
    auto ti = acc.find(t);
    if (fi == acc.end() || ti == acc.end()) fail("branch row " + std::to_string(r + 1) + " references an unknown bus");
    if (fi->second.isolated || ti->second.isolated) continue;
    const double res = row[2], x = row[3];
    const double z2 = res * res + x * x;
    if (z2 == 0.0) fail("branch " + std::to_string(f) + "-" + std::to_string(t) + " has zero impedance");
    if (row[4] != 0.0) charging = true;
    if (row[8] != 0.0 && row[8] != 1.0) taps = true;
    if (row[9] != 0.0) shift = true;
    Line l;
    l.from = f;
    l.to = t;
    l.b = x / z2;
    l.g = res / z2;
    if (!(l.b > 0.0)) fail("branch " + std::to_string(f) + "-" + std::to_string(t) + " is not inductive");
    lines.push_back(l);
  }
  if (charging) warn("line charging dropped");
  if (taps) warn("transformer tap ratios dropped");
  if (shift) warn("phase shifts dropped");

  try {
    return Network(std::move(buses), std::move(lines));
  } catch (const Error& e) {
    fail(e.what());
  }
}

}  // namespace pfenergy
