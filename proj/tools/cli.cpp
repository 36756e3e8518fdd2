#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "output.hpp"
#include "pfenergy/convexity.hpp"
#include "pfenergy/error.hpp"
#include "pfenergy/network.hpp"
#include "pfenergy/reduced.hpp"
#include "pfenergy/solver.hpp"

namespace pfenergy::cli {
namespace {

namespace fs = std::filesystem;
using linalg::Vector;

constexpr double kDeg = 180.0 / std::numbers::pi;

struct Global {
  std::optional<double> tol;
  std::uint64_t seed = 0;
  std::string out;
  std::string format;
  double scale = 1.0;
};

struct Result {
  Json meta;
  Json body;
  CsvTable table;
  std::string default_format = "json";
  int exit_code = kExitOk;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Existing paths win; otherwise look in the bundled case directory, with the
// IEEE aliases and optional extensions.
fs::path resolve_case(const std::string& name) {
  if (fs::exists(name)) return name;
  std::string base = name;
  if (base == "ieee14") base = "case14";
  if (base == "ieee118") base = "case118";
  const fs::path dir = PFENERGY_DATA_DIR;
  for (const char* ext : {"", ".json", ".m"}) {
    const fs::path p = dir / (base + ext);
    if (fs::exists(p)) return p;
  }
  throw Error(ErrorCode::InvalidArgument, "case not found: " + name);
}

struct Case {
  std::string label;
  std::string hash;
  Network net;
};

// The numerical model: lossless (or constant-ratio when kappa is given), unit
// set-points, injections scaled by --scale.
Case load_model(const std::string& name, const Global& g, std::optional<double> kappa, std::ostream& err) {
  const fs::path path = resolve_case(name);
  const std::string bytes = read_file(path);
  std::vector<std::string> warnings;
  Network raw = path.extension() == ".m" ? parse_matpower(bytes, &warnings) : parse_native(bytes);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  if (!raw.is_lossless()) {
    err << "warning: line conductances dropped\n";
    raw = losslessify(raw);
  }
  if (!raw.has_unit_setpoints()) {
    err << "warning: voltage set-points absorbed into line susceptances\n";
    raw = absorb_setpoints(raw);
  }
  if (g.scale != 1.0) raw = scale_injections(raw, g.scale, g.scale);
  if (kappa) raw = with_uniform_ratio(raw, *kappa);
  return {path.filename().string(), fnv1a_hex(bytes), std::move(raw)};
}

Json base_meta(const std::string& command, const Case& c, const Global& g, double tol) {
  Json m;
  m["tool"] = "pfenergy";
  m["version"] = PFENERGY_VERSION;
  m["command"] = command;
  m["case"] = c.label;
  m["case_hash"] = "fnv1a64:" + c.hash;
  m["seed"] = g.seed;
  m["tol"] = tol;
  m["scale"] = g.scale;
  return m;
}

std::string str(double v) { return format_number(v); }
std::string str(bool v) { return v ? "true" : "false"; }

Json numbers(const Vector& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

Json certificate_json(const ConvexityCertificate& c) {
  Json j;
  j["in_C"] = c.in_C;
  j["phase_ok"] = c.phase_ok;
  j["lmi_min_eig"] = number(c.lmi_min_eig);
  j["lmi_tol"] = number(c.lmi_tol);
  if (c.in_D_sampled) {
    j["in_D_sampled"] = *c.in_D_sampled;
    j["d_samples"] = c.d_samples;
  }
  return j;
}

// Phases per bus from a JSON document holding "theta" at the top level or
// under "state"; shifted so the slack phase is zero.
Vector read_theta(const Json& doc, const Network& net) {
  const Json& obj = doc.contains("state") ? doc.at("state") : doc;
  if (!obj.contains("theta")) throw Error(ErrorCode::InvalidArgument, "state file has no theta array");
  Vector theta = obj.at("theta").get<Vector>();
  if (theta.size() != net.bus_count())
    throw Error(ErrorCode::InvalidArgument, "theta has " + std::to_string(theta.size()) + " entries, case has " +
                                                std::to_string(net.bus_count()) + " buses");
  if (obj.contains("bus")) {
    const auto ids = obj.at("bus").get<std::vector<int>>();
    if (ids.size() != net.bus_count()) throw Error(ErrorCode::InvalidArgument, "bus list does not match the case");
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] != net.buses()[i].id) throw Error(ErrorCode::InvalidArgument, "bus order does not match the case");
  }
  const double ref = theta[net.slack()];
  for (double& t : theta) t -= ref;
  return theta;
}

PFState read_state(const Json& doc, const Network& net) {
  PFState s = PFState::flat(net);
  s.theta = read_theta(doc, net);
  const Json& obj = doc.contains("state") ? doc.at("state") : doc;
  if (!obj.contains("V")) throw Error(ErrorCode::InvalidArgument, "state file has no V array");
  const Vector v = obj.at("V").get<Vector>();
  if (v.size() != net.bus_count())
    throw Error(ErrorCode::InvalidArgument, "V has " + std::to_string(v.size()) + " entries, case has " +
                                                std::to_string(net.bus_count()) + " buses");
  for (std::size_t i : net.pq_buses()) {
    if (!(v[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "V must be positive");
    s.rho[i] = std::log(v[i]);
  }
  return s;
}

Json parse_json_file(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string case_name;
  std::string method = "convex";
  std::optional<double> lossy_kappa;
};

Result cmd_solve(const SolveArgs& a, const Global& g, std::ostream& err) {
  const Case c = load_model(a.case_name, g, a.lossy_kappa, err);
  const Network& net = c.net;
  const bool newton = a.method == "newton";
  const double tol = g.tol.value_or(newton ? 1e-10 : 1e-8);

  SolveOutcome o;
  if (newton) {
    o = solve_newton(net, PFState::flat(net), tol);
  } else {
    BarrierOptions opts;
    opts.grad_tol = tol;
    o = a.lossy_kappa ? solve_convex_lossy(net, opts) : solve_convex(net, opts);
  }

  Result r;
  r.meta = base_meta("solve", c, g, tol);
  r.meta["method"] = a.method;
  r.meta["lossy_kappa"] = a.lossy_kappa ? Json(*a.lossy_kappa) : Json(nullptr);

  Json& b = r.body;
  b["status"] = to_string(o.status);
  if (!o.message.empty()) b["message"] = o.message;
  b["iterations"] = o.iterations;
  b["grad_norm"] = number(o.grad_norm);
  b["mismatch_norm"] = number(linalg::norm_inf(physical_mismatch(net, o.state)));
  b["boundary_active"] = o.boundary_active;
  b["energy"] = number(o.energy);
  b["certificate"] = certificate_json(o.certificate);
  Json state;
  std::vector<int> ids;
  for (const auto& bus : net.buses()) ids.push_back(bus.id);
  state["bus"] = ids;
  state["V"] = numbers(o.state.voltages());
  state["theta"] = numbers(o.state.theta);
  b["state"] = state;

  r.table.columns = {"bus", "kind", "V", "theta"};
  const Vector v = o.state.voltages();
  for (std::size_t i = 0; i < net.bus_count(); ++i)
    r.table.rows.push_back({std::to_string(net.buses()[i].id), std::string(to_string(net.buses()[i].kind)), str(v[i]),
                            str(o.state.theta[i])});

  switch (o.status) {
    case SolveStatus::SolutionFound: r.exit_code = kExitOk; break;
    case SolveStatus::NoSolutionInC: r.exit_code = kExitNoSolution; break;
    case SolveStatus::MaxIterations:
      err << "solver stopped without a verdict: " << (o.message.empty() ? "iteration limit" : o.message) << '\n';
      r.exit_code = kExitError;
      break;
  }
  return r;
}

struct CheckArgs {
  std::string case_name;
  std::string state_file;
  std::size_t samples = 0;
};

Result cmd_check(const CheckArgs& a, const Global& g, std::ostream& err) {
  const Case c = load_model(a.case_name, g, std::nullopt, err);
  const double tol = g.tol.value_or(linalg::kDefaultPsdTol);
  const PFState s = read_state(parse_json_file(a.state_file), c.net);
  ConvexityCertificate cert = in_domain_C(c.net, s, tol);
  if (a.samples > 0 && cert.phase_ok) {
    cert.in_D_sampled = in_domain_D_sampled(c.net, s, a.samples, tol).in_D;
    cert.d_samples = a.samples;
  }
  Result r;
  r.meta = base_meta("check", c, g, tol);
  r.meta["state_file"] = fs::path(a.state_file).filename().string();
  r.body = certificate_json(cert);
  r.table.columns = {"phase_ok", "lmi_min_eig", "lmi_tol", "in_C", "in_D_sampled"};
  r.table.rows.push_back({str(cert.phase_ok), str(cert.lmi_min_eig), str(cert.lmi_tol), str(cert.in_C),
                          cert.in_D_sampled ? str(*cert.in_D_sampled) : ""});
  return r;
}

struct SweepArgs {
  std::string case_name;
  double delta = 1.0;
  double kappa_min = 1.0;
  double kappa_max = 3.0;
  double kappa_step = 0.05;
};

Result cmd_sweep(const SweepArgs& a, const Global& g, std::ostream& err) {
  const Case c = load_model(a.case_name, g, std::nullopt, err);
  const double tol = g.tol.value_or(1e-8);
  BarrierOptions opts;
  opts.grad_tol = tol;
  const auto rows = sweep_load(c.net, a.delta, kappa_range(a.kappa_min, a.kappa_max, a.kappa_step), opts);

  Result r;
  r.default_format = "csv";
  r.meta = base_meta("sweep", c, g, tol);
  r.meta["delta"] = a.delta;
  r.meta["kappa_min"] = a.kappa_min;
  r.meta["kappa_max"] = a.kappa_max;
  r.meta["kappa_step"] = a.kappa_step;
  Json transition = nullptr;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k - 1].status == SolveStatus::SolutionFound && rows[k].status != SolveStatus::SolutionFound) {
      transition = rows[k].kappa;
      break;
    }
  r.meta["first_failure_kappa"] = transition;

  r.table.columns = {"kappa", "delta", "status", "grad_norm", "lmi_min_eig", "boundary_active", "iterations"};
  Json arr = Json::array();
  for (const auto& row : rows) {
    r.table.rows.push_back({str(row.kappa), str(row.delta), std::string(to_string(row.status)), str(row.grad_norm),
                            str(row.lmi_min_eig), str(row.boundary_active), std::to_string(row.iterations)});
    Json j;
    j["kappa"] = row.kappa;
    j["delta"] = row.delta;
    j["status"] = to_string(row.status);
    j["grad_norm"] = number(row.grad_norm);
    j["lmi_min_eig"] = number(row.lmi_min_eig);
    j["boundary_active"] = row.boundary_active;
    j["iterations"] = row.iterations;
    arr.push_back(j);
  }
  r.body["rows"] = arr;
  return r;
}

struct RegionArgs {
  std::string case_name;
  double step_deg = 2.0;
  double lo_deg = -60.0;
  double hi_deg = 60.0;
  double fd_step = 1e-4;
};

Result cmd_region(const RegionArgs& a, const Global& g, std::ostream& err) {
  const Case c = load_model(a.case_name, g, std::nullopt, err);
  const Network& net = c.net;
  const RegionGrid grid = region_grid(net, a.step_deg / kDeg, a.lo_deg / kDeg, a.hi_deg / kDeg, a.fd_step);
  const RegionSummary sum = summarize_region(grid);

  Result r;
  r.default_format = "csv";
  r.meta = base_meta("region", c, g, g.tol.value_or(linalg::kDefaultPsdTol));
  r.meta["angle_unit"] = "deg";
  r.meta["grid_step"] = a.step_deg;
  r.meta["lo"] = a.lo_deg;
  r.meta["hi"] = a.hi_deg;
  r.meta["fd_step"] = a.fd_step;
  Json s;
  s["solvable"] = sum.solvable;
  s["in_C"] = sum.in_C;
  s["reduced_psd"] = sum.reduced_psd;
  s["compared"] = sum.compared;
  s["agree"] = sum.agree;
  s["agreement"] = sum.agreement();
  r.meta["summary"] = s;

  const std::string c1 = "theta" + std::to_string(net.buses()[net.angle_buses()[0]].id);
  const std::string c2 = "theta" + std::to_string(net.buses()[net.angle_buses()[1]].id);
  r.table.columns = {c1, c2, "solvable", "in_C", "reduced_min_eig"};
  Json arr = Json::array();
  const std::size_t n = grid.axis.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const RegionCell& cell = grid.cells[i * n + j];
      const double t1 = a.lo_deg + static_cast<double>(i) * a.step_deg;
      const double t2 = a.lo_deg + static_cast<double>(j) * a.step_deg;
      r.table.rows.push_back({str(t1), str(t2), str(cell.solvable), str(cell.in_C), str(cell.reduced_min_eig)});
      Json row;
      row[c1] = t1;
      row[c2] = t2;
      row["solvable"] = cell.solvable;
      row["in_C"] = cell.in_C;
      row["reduced_min_eig"] = number(cell.reduced_min_eig);
      arr.push_back(row);
    }
  r.body["cells"] = arr;
  return r;
}

struct BoundsArgs {
  std::string case_name;
  double b_rho = 1.5;
  std::string mode = "auto";
};

Result cmd_bounds(const BoundsArgs& a, const Global& g, std::ostream& err) {
  const Case c = load_model(a.case_name, g, std::nullopt, err);
  const BoundMode mode = a.mode == "exact" ? BoundMode::ExactVertices
                         : a.mode == "sampled" ? BoundMode::Sampled
                                               : BoundMode::Auto;
  Result r;
  r.meta = base_meta("bounds", c, g, g.tol.value_or(linalg::kDefaultPsdTol));
  r.meta["b_rho"] = a.b_rho;
  r.meta["mode"] = a.mode;
  r.table.columns = {"b_rho", "b_theta_deg", "mode", "certified"};
  r.body["b_rho"] = a.b_rho;
  try {
    const PhaseBound pb = max_phase_bound(c.net, a.b_rho, mode, g.seed);
    r.body["b_theta_deg"] = pb.b_theta * kDeg;
    r.body["mode"] = to_string(pb.mode);
    r.body["certified"] = pb.certified;
    r.body["points_checked"] = pb.points_checked;
    r.table.rows.push_back({str(a.b_rho), str(pb.b_theta * kDeg), std::string(to_string(pb.mode)), str(pb.certified)});
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DomainError) throw;
    err << e.what() << '\n';
    r.body["b_theta_deg"] = nullptr;
    r.body["certified"] = false;
    r.body["error"] = e.what();
    r.table.rows.push_back({str(a.b_rho), "", "", "false"});
    r.exit_code = kExitNoSolution;
  }
  return r;
}

struct ReactiveArgs {
  std::string case_name;
  std::string theta_file;
  std::string weights;
};

Vector parse_weights(const std::string& text, std::size_t n) {
  if (text.empty()) return Vector(n, 1.0);
  Vector w;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      w.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad weight '" + item + "'");
    }
  }
  if (w.size() == 1 && n > 1) w.assign(n, w[0]);
  return w;
}

Result cmd_reactive(const ReactiveArgs& a, const Global& g, std::ostream& err) {
  const Case c = load_model(a.case_name, g, std::nullopt, err);
  const Network& net = c.net;
  const Vector theta = a.theta_file.empty() ? Vector(net.bus_count(), 0.0) : read_theta(parse_json_file(a.theta_file), net);
  const Vector w = parse_weights(a.weights, net.pq_buses().size());

  Result r;
  r.meta = base_meta("reactive", c, g, g.tol.value_or(1e-8));
  r.meta["weights"] = w;
  r.meta["theta_file"] = a.theta_file.empty() ? Json(nullptr) : Json(fs::path(a.theta_file).filename().string());
  r.table.columns = {"bus", "zeta", "V", "slack", "lower_bound_ok", "v_bar"};
  try {
    const ReducedState rs = convex_reactive_solve(net, theta, w);
    const VoltageBound vb = voltage_upper_bound(net);
    std::vector<int> ids;
    for (std::size_t i : net.pq_buses()) ids.push_back(net.buses()[i].id);
    r.body["status"] = "SolutionFound";
    r.body["bus"] = ids;
    r.body["zeta"] = numbers(rs.zeta);
    r.body["V"] = numbers(rs.V);
    r.body["slack"] = numbers(rs.slack);
    r.body["lower_bound_ok"] = rs.lower_bound_ok;
    r.body["v_bar"] = numbers(vb.v_bar);
    for (std::size_t k = 0; k < ids.size(); ++k)
      r.table.rows.push_back({std::to_string(ids[k]), str(rs.zeta[k]), str(rs.V[k]), str(rs.slack[k]),
                              str(static_cast<bool>(rs.lower_bound_ok[k])), str(vb.v_bar[k])});
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoReactiveSolution) throw;
    err << e.what() << '\n';
    r.body["status"] = "NoReactiveSolution";
    r.body["message"] = e.what();
    r.exit_code = kExitNoSolution;
  }
  return r;
}

void emit(const Result& r, const Global& g, std::ostream& out) {
  const std::string format = g.format.empty() ? r.default_format : g.format;
  const std::string text = format == "csv" ? render_csv(r.meta, r.table) : render_json(r.meta, r.body);
  if (g.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + g.out);
  f << text;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Energy-function power flow: convex solves, convexity checks and loadability sweeps", "pfenergy"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", PFENERGY_VERSION);

  Global g;
  app.add_option("--tol", g.tol, "Tolerance (meaning and default depend on the command)")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "RNG seed for sampled computations")->capture_default_str();
  app.add_option("--out", g.out, "Write the result to this file instead of stdout");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--scale", g.scale, "Multiply every P and Q injection by this factor")->capture_default_str();

  std::function<Result()> action;

  SolveArgs solve;
  auto* sc = app.add_subcommand("solve", "Solve the power flow");
  sc->add_option("case", solve.case_name, "Case file or bundled case name")->required();
  sc->add_option("--method", solve.method)->check(CLI::IsMember({"convex", "newton"}))->capture_default_str();
  sc->add_option("--lossy-kappa", solve.lossy_kappa, "Set g = kappa * b on every line and use the lossy energy");
  sc->callback([&] { action = [&] { return cmd_solve(solve, g, err); }; });

  CheckArgs check;
  auto* cc = app.add_subcommand("check", "Convexity certificate of a state");
  cc->add_option("case", check.case_name)->required();
  cc->add_option("state", check.state_file, "JSON with V and theta per bus (a solve result works)")->required();
  cc->add_option("--samples", check.samples, "Also sample the Hessian along the segment to the origin")
      ->capture_default_str();
  cc->callback([&] { action = [&] { return cmd_check(check, g, err); }; });

  SweepArgs sweep;
  auto* sw = app.add_subcommand("sweep", "Scale P by kappa and Q by delta*kappa and solve at each step");
  sw->add_option("case", sweep.case_name)->required();
  sw->add_option("--delta", sweep.delta)->capture_default_str();
  sw->add_option("--kappa-min", sweep.kappa_min)->capture_default_str();
  sw->add_option("--kappa-max", sweep.kappa_max)->capture_default_str();
  sw->add_option("--kappa-step", sweep.kappa_step)->check(CLI::PositiveNumber)->capture_default_str();
  sw->callback([&] { action = [&] { return cmd_sweep(sweep, g, err); }; });

  RegionArgs region;
  auto* rg = app.add_subcommand("region", "Convexity region over a grid of two phases");
  rg->add_option("case", region.case_name)->required();
  rg->add_option("--grid-step", region.step_deg, "Grid step in degrees")->check(CLI::PositiveNumber)
      ->capture_default_str();
  rg->add_option("--lo", region.lo_deg, "Lowest phase in degrees")->capture_default_str();
  rg->add_option("--hi", region.hi_deg, "Highest phase in degrees")->capture_default_str();
  rg->add_option("--fd-step", region.fd_step, "Finite-difference step in radians")->check(CLI::PositiveNumber)
      ->capture_default_str();
  rg->callback([&] { action = [&] { return cmd_region(region, g, err); }; });

  BoundsArgs bounds;
  auto* bd = app.add_subcommand("bounds", "Largest line phase bound for a voltage-ratio bound");
  bd->add_option("case", bounds.case_name)->required();
  bd->add_option("--b-rho", bounds.b_rho)->check(CLI::Range(1.0, 1e6))->capture_default_str();
  bd->add_option("--mode", bounds.mode)->check(CLI::IsMember({"auto", "exact", "sampled"}))->capture_default_str();
  bd->callback([&] { action = [&] { return cmd_bounds(bounds, g, err); }; });

  ReactiveArgs reactive;
  auto* rv = app.add_subcommand("reactive", "Voltage magnitudes for given phases via the convex program in V^2");
  rv->add_option("case", reactive.case_name)->required();
  rv->add_option("--theta", reactive.theta_file, "JSON with theta per bus (default: all zero)");
  rv->add_option("--weights", reactive.weights, "Comma-separated objective weights per PQ bus (default: 1)");
  rv->callback([&] { action = [&] { return cmd_reactive(reactive, g, err); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    const Result r = action();
    emit(r, g, out);
    return r.exit_code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitError;
}

}  // namespace pfenergy::cli
