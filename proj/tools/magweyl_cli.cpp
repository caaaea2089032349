// Command-line front end. Every command prints a machine-readable report;
// commands that produce samples can emit them as CSV columns. All numeric
// results are accompanied by the tolerance or certificate the computation
// actually achieved. Exit codes: 0 ok, 2 bad invocation, 3 numerical failure.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "magweyl/correction.hpp"
#include "magweyl/dynamics.hpp"
#include "magweyl/field_io.hpp"
#include "magweyl/weyl.hpp"

using json = nlohmann::ordered_json;
using namespace magweyl;

namespace {

// ----------------------------------------------------------------------------
// output plumbing
// ----------------------------------------------------------------------------

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  bool empty() const { return rows.empty(); }
};

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string render_csv(const json& report, const Table& table) {
  std::ostringstream out;
  out << "# " << report.dump() << "\n";
  if (!table.empty()) {
    for (size_t c = 0; c < table.columns.size(); ++c)
      out << (c ? "," : "") << table.columns[c];
    out << "\n";
    for (const auto& row : table.rows) {
      for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << fmt17(row[c]);
      out << "\n";
    }
  } else {
    // scalar report: one header/value pair per top-level numeric field
    std::string hdr, val;
    for (const auto& [k, v] : report.items()) {
      if (!v.is_number()) continue;
      hdr += (hdr.empty() ? "" : ",") + k;
      val += (val.empty() ? "" : ",") + fmt17(v.get<double>());
    }
    out << hdr << "\n" << val << "\n";
  }
  return out.str();
}

std::string render_json(const json& report, const Table& table) {
  json doc = report;
  if (!table.empty()) {
    doc["columns"] = table.columns;
    doc["rows"] = table.rows;
  }
  return doc.dump(2) + "\n";
}

// The formatted document goes to --out when given, else to stdout. With --out
// the summary report is still echoed to stdout so scripted runs keep both the
// sample file and the certificate in hand.
void emit(const std::string& out_path, const std::string& format, const json& report,
          const Table& table = {}) {
  const std::string doc = format == "csv" ? render_csv(report, table) : render_json(report, table);
  if (out_path.empty()) {
    std::cout << doc;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw Error(ErrorKind::usage, "cannot open output file: " + out_path);
  f << doc;
  std::cout << report.dump(2) << "\n";
}

// ----------------------------------------------------------------------------
// shared option block and config-file pre-pass
// ----------------------------------------------------------------------------

struct Common {
  std::string out;
  std::string format;  // resolved per command below
  std::string config;
  int jobs = 1;
  double tol = 0;  // 0 = command default
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_format) {
  c.format = default_format;
  cmd->add_option("--out", c.out, "write the formatted document to this file");
  cmd->add_option("--format", c.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--jobs", c.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", c.tol, "tolerance override where the command has a knob")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--config", c.config, "JSON file with default parameter values");
}

// A config file is a flat JSON object {"flag": value}. Values fill in flags
// the command line left out; explicit flags win. Unknown keys surface as
// unknown flags and are rejected by name.
std::vector<std::string> apply_config(const std::vector<std::string>& args) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::usage, "cannot read config file: " + path);
  json cfg;
  try {
    cfg = json::parse(f);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::usage, std::string("config file is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw Error(ErrorKind::usage, "config file must hold a JSON object");

  std::vector<std::string> full = args;
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    bool present = false;
    for (const auto& a : full)
      if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
    if (present) continue;  // explicit flags win
    if (value.is_boolean()) {
      if (value.get<bool>()) full.push_back(flag);
      continue;
    }
    full.push_back(flag);
    if (value.is_string()) {
      full.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value)
        joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      full.push_back(joined);
    } else {
      full.push_back(value.dump());
    }
  }
  return full;
}

// ----------------------------------------------------------------------------
// small parsers
// ----------------------------------------------------------------------------

Vec to_vec(const std::vector<double>& v) {
  Vec x(v.size());
  for (size_t i = 0; i < v.size(); ++i) x[(long)i] = v[i];
  return x;
}

// "a:b:step" (half-open) or a comma list
std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double a, b, s;
    char c1, c2;
    std::istringstream in(spec);
    if (!(in >> a >> c1 >> b >> c2 >> s) || c1 != ':' || c2 != ':' || !(s > 0) || !(b > a))
      throw Error(ErrorKind::usage, "grid must be start:stop:step with step > 0: " + spec);
    for (long i = 0;; ++i) {
      const double t = a + i * s;
      if (t >= b - 1e-12 * (b - a)) break;
      out.push_back(t);
    }
  } else {
    std::istringstream in(spec);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
  }
  if (out.empty()) throw Error(ErrorKind::usage, "grid is empty: " + spec);
  return out;
}

int parse_model_exponent(const std::string& spec) {
  std::string s = spec;
  if (s.rfind("nu=", 0) == 0) s = s.substr(3);
  try {
    size_t used = 0;
    const int nu = std::stoi(s, &used);
    if (used == s.size()) return nu;
  } catch (...) {
  }
  throw Error(ErrorKind::usage, "--model expects nu=<integer>, got: " + spec);
}

const char* census_name(WellCensus c) {
  switch (c) {
    case WellCensus::single: return "single";
    case WellCensus::merged: return "merged";
    case WellCensus::two_wells: return "two_wells";
    case WellCensus::degenerate: return "degenerate";
    case WellCensus::empty: return "empty";
  }
  return "unknown";
}

MagneticSystem system_from_flags(const std::string& field_path, const std::string& kind, int nu,
                                 const std::vector<double>& f, int dim, int rank) {
  if (!field_path.empty()) return load_system(field_path);
  json j{{"kind", kind}, {"params", json::object()}};
  if (kind == "model2d" || kind == "martinet2d") j["params"]["nu"] = nu;
  if (kind == "constant") j["params"]["f"] = f;
  if (kind == "darboux") {
    j["params"]["dim"] = dim;
    j["params"]["rank"] = rank;
  }
  return system_from_json(j);
}

json error_body(const Error& e) {
  json body{{"kind", to_string(e.kind())}, {"message", e.what()}};
  if (e.has_estimate()) body["estimate"] = e.estimate();
  if (e.has_counts()) {
    const auto [a, b] = e.counts();
    body["counts"] = {a, b};
  }
  return body;
}

// ----------------------------------------------------------------------------
// commands
// ----------------------------------------------------------------------------

int run(std::vector<std::string> args) {
  CLI::App app{"degenerate-field spectral toolkit"};
  app.require_subcommand(1);
  // the Planck parameter is spelled --h, so help lives on --help alone
  app.set_help_flag("--help", "print help and exit");
  const auto sub = [&app](const std::string& name, const std::string& desc) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->set_help_flag("--help", "print help and exit");
    return s;
  };

  // --- trajectory ---
  auto* traj = sub("trajectory", "integrate a Hamiltonian trajectory");
  Common traj_c;
  std::string traj_model, traj_field;
  double traj_k = 0, traj_mu = 0, traj_T = 3.0, traj_alpha = 0, traj_W = 1;
  double traj_sample_dt = 0, traj_radius = 0;
  std::vector<double> traj_x, traj_xi;
  traj->add_option("--model", traj_model, "planar degenerate model, nu=<int>");
  traj->add_option("--field", traj_field, "field description file (JSON)");
  traj->add_option("--k", traj_k, "model momentum xi2");
  traj->add_option("--mu", traj_mu, "coupling strength");
  traj->add_option("--T", traj_T, "time horizon");
  traj->add_option("--alpha", traj_alpha, "linear potential tilt V = W - alpha x1");
  traj->add_option("--W", traj_W, "potential level");
  traj->add_option("--x", traj_x, "initial position")->delimiter(',');
  traj->add_option("--xi", traj_xi, "initial momentum")->delimiter(',');
  traj->add_option("--sample-dt", traj_sample_dt, "uniform sampling step (0 = accepted steps)");
  traj->add_option("--radius", traj_radius, "stop when |x| leaves this radius (0 = never)");
  add_common(traj, traj_c, "csv");

  // --- drift-scan ---
  auto* scan = sub("drift-scan", "guiding-center deviation from the drift flow");
  Common scan_c;
  std::string scan_field;
  std::vector<double> scan_mu{25, 50, 100, 200}, scan_x{0.1, 0.05}, scan_xi{0, 1},
      scan_T{10, 20, 40, 80};
  scan->add_option("--field", scan_field,
                   "field description file (JSON); default: A = (0, x1 + 0.15 x1^2), V = 1");
  scan->add_option("--mu", scan_mu, "increasing coupling list")->delimiter(',');
  scan->add_option("--T", scan_T, "horizon (one value, or one per mu)")->delimiter(',');
  scan->add_option("--x", scan_x, "initial position")->delimiter(',');
  scan->add_option("--xi", scan_xi, "initial kinetic momentum")->delimiter(',');
  add_common(scan, scan_c, "json");

  // --- kstar ---
  auto* kst = sub("kstar", "drift-reversal momentum of the planar model");
  Common kst_c;
  int kst_nu = 2;
  double kst_W = 1;
  kst->add_option("--nu", kst_nu, "degeneracy exponent")->required();
  kst->add_option("--W", kst_W, "potential level");
  add_common(kst, kst_c, "json");

  // --- period ---
  auto* per = sub("period", "orbit period of the 1D effective well");
  Common per_c;
  int per_nu = 2;
  double per_k = 0, per_W = 1;
  bool per_left = false;
  per->add_option("--nu", per_nu, "degeneracy exponent")->required();
  per->add_option("--k", per_k, "momentum xi2")->required();
  per->add_option("--W", per_W, "potential level");
  per->add_flag("--left-well", per_left, "use the mirror well of a split pair");
  add_common(per, per_c, "json");

  // --- lines ---
  auto* lin = sub("lines", "characteristic line on the degeneracy set");
  Common lin_c;
  std::string lin_field, lin_kind = "roussarie4d";
  int lin_nu = 2, lin_dim = 4, lin_rank = 1;
  std::vector<double> lin_x0, lin_f{1};
  double lin_arc = 10, lin_ds = 1e-2;
  lin->add_option("--field", lin_field, "field description file (JSON)");
  lin->add_option("--kind", lin_kind, "builder when no --field is given")
      ->check(CLI::IsMember({"model2d", "martinet2d", "roussarie4d", "nondeg4d", "constant",
                             "darboux"}));
  lin->add_option("--nu", lin_nu, "exponent for model2d/martinet");
  lin->add_option("--f", lin_f, "intensities for a constant field")->delimiter(',');
  lin->add_option("--dim", lin_dim, "dimension for darboux");
  lin->add_option("--rank", lin_rank, "half-rank for darboux");
  lin->add_option("--x0", lin_x0, "starting point on the degeneracy stratum")
      ->delimiter(',')
      ->required();
  lin->add_option("--arc", lin_arc, "arc length to follow");
  lin->add_option("--ds", lin_ds, "output spacing in arc length");
  add_common(lin, lin_c, "csv");

  // --- weyl ---
  auto* wey = sub("weyl", "pointwise counting density");
  Common wey_c;
  WeylParams wp;
  wey->add_option("--d", wp.d, "space dimension")->required();
  wey->add_option("--r", wp.r, "half-rank of the magnetic form")->required();
  wey->add_option("--f", wp.f, "magnetic intensities")->delimiter(',');
  wey->add_option("--V", wp.V, "scalar potential value");
  wey->add_option("--E", wp.E, "spectral threshold");
  wey->add_option("--mu", wp.mu, "coupling strength");
  wey->add_option("--h", wp.h, "Planck parameter");
  wey->add_option("--g", wp.g, "metric determinant");
  add_common(wey, wey_c, "json");

  // --- landau ---
  auto* lan = sub("landau", "Landau jump size and thresholds");
  Common lan_c;
  double lan_f = 1, lan_V = 0, lan_mu = 1, lan_h = 0.1, lan_g = 1, lan_tau = 1;
  lan->add_option("--f", lan_f, "magnetic intensity")->required();
  lan->add_option("--V", lan_V, "scalar potential value");
  lan->add_option("--mu", lan_mu, "coupling strength")->required();
  lan->add_option("--h", lan_h, "Planck parameter")->required();
  lan->add_option("--g", lan_g, "metric determinant");
  lan->add_option("--tau-max", lan_tau, "list thresholds up to this energy");
  add_common(lan, lan_c, "json");

  // --- eigencount ---
  auto* eig = sub("eigencount", "levels of the reduced 1D well below a threshold");
  Common eig_c;
  int eig_nu = 2;
  double eig_hbar = 0.02, eig_xi2 = 0, eig_W = 1, eig_tau = 0;
  long eig_n0 = 400, eig_cap = 60000;
  std::string eig_method = "both";
  eig->add_option("--nu", eig_nu, "degeneracy exponent")->required();
  eig->add_option("--hbar", eig_hbar, "effective Planck constant")->required();
  eig->add_option("--xi2", eig_xi2, "dual momentum parameter");
  eig->add_option("--W", eig_W, "well value")->required();
  eig->add_option("--tau", eig_tau, "counting threshold");
  eig->add_option("--n0", eig_n0, "starting grid for the finite-difference route");
  eig->add_option("--n-cap", eig_cap, "grid-doubling cap");
  eig->add_option("--method", eig_method, "fd, bs, or both")
      ->check(CLI::IsMember({"fd", "bs", "both"}));
  add_common(eig, eig_c, "json");

  // --- correction ---
  auto* cor = sub("correction", "short-orbit correction term of one x2-slice");
  Common cor_c;
  int cor_nu = 2;
  double cor_W = 1, cor_hbar = 0.05, cor_h = 0.01, cor_tau = 0;
  bool cor_smooth = false;
  cor->add_option("--nu", cor_nu, "degeneracy exponent")->required();
  cor->add_option("--W", cor_W, "well value")->required();
  cor->add_option("--hbar", cor_hbar, "effective Planck constant")->required();
  cor->add_option("--h", cor_h, "semiclassical parameter")->required();
  cor->add_option("--tau", cor_tau, "spectral threshold");
  cor->add_flag("--smooth-check", cor_smooth,
                "also report the residual after smoothing both counts");
  add_common(cor, cor_c, "json");

  // --- gfunc ---
  auto* gfn = sub("gfunc", "universal oscillation profile on a grid");
  Common gfn_c;
  std::string gfn_grid = "0:1:0.001";
  int gfn_cutoff = 40, gfn_tail = 10;
  gfn->add_option("--t-grid", gfn_grid, "start:stop:step or a comma list");
  gfn->add_option("--cutoff", gfn_cutoff, "head/tail split of the profile integral");
  gfn->add_option("--tail-terms", gfn_tail, "Taylor order of the summed tail");
  add_common(gfn, gfn_c, "csv");

  // --- fit-correction ---
  auto* fit = sub("fit-correction", "fit the closed oscillation form to a sweep");
  Common fit_c;
  int fit_nu = 2, fit_samples = 121;
  double fit_hbar = 0.05, fit_periods = 4.0;
  fit->add_option("--nu", fit_nu, "degeneracy exponent")->required();
  fit->add_option("--hbar", fit_hbar, "effective Planck constant")->required();
  fit->add_option("--samples", fit_samples, "sweep samples");
  fit->add_option("--periods", fit_periods, "action periods covered by the sweep");
  add_common(fit, fit_c, "json");

  // parse (config file values fill unset flags first)
  args = apply_config(args);
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse((int)argv.size(), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  // --- dispatch ---
  if (traj->parsed()) {
    if (!traj_model.empty() && !traj_field.empty())
      throw Error(ErrorKind::usage, "--model and --field are mutually exclusive");
    if (traj_model.empty() && traj_field.empty())
      throw Error(ErrorKind::usage, "trajectory needs --model or --field");
    if (!traj_model.empty()) {
      const int nu = parse_model_exponent(traj_model);
      const double tol = traj_c.tol > 0 ? traj_c.tol : 1e-10;
      const ModelRun run = simulate_model(nu, traj_mu, traj_k, traj_T, traj_alpha, traj_W, tol);
      json report{{"command", "trajectory"},
                  {"mode", "model"},
                  {"nu", nu},
                  {"mu", traj_mu},
                  {"k", traj_k},
                  {"alpha", traj_alpha},
                  {"W", traj_W},
                  {"T", traj_T},
                  {"periods", run.periods},
                  {"dx2_per_period", run.dx2_per_period},
                  {"dx2_unitmu", run.dx2_unitmu},
                  {"x1_period", run.x1_period},
                  {"path_length", run.path_length},
                  {"certificate",
                   {{"integrator_rel_tol", tol}, {"energy_drift", run.energy_drift}}}};
      Table t;
      t.columns = {"t", "x1", "x2", "xi1"};
      for (size_t i = 0; i < run.t.size(); ++i)
        t.rows.push_back({run.t[i], run.y[i][0], run.y[i][1], run.y[i][2]});
      emit(traj_c.out, traj_c.format, report, t);
      return 0;
    }
    const MagneticSystem sys = load_system(traj_field);
    if ((int)traj_x.size() != sys.dim || (int)traj_xi.size() != sys.dim)
      throw Error(ErrorKind::usage, "--x and --xi must match the field dimension");
    const double tol = traj_c.tol > 0 ? traj_c.tol : 1e-10;
    const double radius =
        traj_radius > 0 ? traj_radius : std::numeric_limits<double>::infinity();
    const TrajectorySample s = integrate_trajectory(sys, {to_vec(traj_x), to_vec(traj_xi)},
                                                    traj_T, tol, traj_sample_dt, radius);
    json report{{"command", "trajectory"},
                {"mode", "field"},
                {"kind", sys.kind.empty() ? "custom" : sys.kind},
                {"T", traj_T},
                {"samples", s.t.size()},
                {"truncated", s.truncated},
                {"certificate",
                 {{"integrator_rel_tol", tol},
                  {"energy_tol", s.energy_tol},
                  {"energy_drift", s.energy_drift}}}};
    Table t;
    t.columns = {"t"};
    for (int j = 0; j < sys.dim; ++j) t.columns.push_back("x" + std::to_string(j + 1));
    for (int j = 0; j < sys.dim; ++j) t.columns.push_back("xi" + std::to_string(j + 1));
    t.columns.push_back("H");
    for (size_t i = 0; i < s.t.size(); ++i) {
      std::vector<double> row{s.t[i]};
      for (int j = 0; j < sys.dim; ++j) row.push_back(s.z[i].x[j]);
      for (int j = 0; j < sys.dim; ++j) row.push_back(s.z[i].xi[j]);
      row.push_back(s.H[i]);
      t.rows.push_back(std::move(row));
    }
    emit(traj_c.out, traj_c.format, report, t);
    return 0;
  }

  if (scan->parsed()) {
    // default scan field: uniformly nondegenerate with a genuine drift line
    const MagneticSystem sys =
        scan_field.empty()
            ? system_from_json(json{{"potential", {"0", "x1 + 0.15*x1^2"}}, {"scalar", "1"}})
            : load_system(scan_field);
    const double tol = scan_c.tol > 0 ? scan_c.tol : 1e-12;
    const DriftScan ds =
        guiding_center_error_scan(sys, {to_vec(scan_x), to_vec(scan_xi)}, scan_mu, scan_T, tol);
    json report{{"command", "drift-scan"},
                {"slope", ds.slope},
                {"certificate", {{"integrator_rel_tol", tol}, {"points", ds.rows.size()}}}};
    Table t;
    t.columns = {"mu", "T", "deviation"};
    for (const auto& r : ds.rows) t.rows.push_back({r.mu, r.T, r.deviation});
    emit(scan_c.out, scan_c.format, report, t);
    return 0;
  }

  if (kst->parsed()) {
    const KStar ks = find_kstar(kst_nu, kst_W);
    emit(kst_c.out, kst_c.format,
         json{{"command", "kstar"},
              {"nu", kst_nu},
              {"W", kst_W},
              {"kstar", ks.k},
              {"dIdk_at_kstar", ks.dIdk},
              {"certificate", {{"bisection_tol", 1e-10}}}});
    return 0;
  }

  if (per->parsed()) {
    const EffectiveModel m{per_nu, per_k, per_W};
    const TurningPoints tp = turning_points(m, per_left);
    const double T = period_T(m, per_left);
    emit(per_c.out, per_c.format,
         json{{"command", "period"},
              {"nu", per_nu},
              {"k", per_k},
              {"W", per_W},
              {"period", T},
              {"census", census_name(tp.census)},
              {"turning_points", {tp.lo, tp.hi}},
              {"certificate", {{"quadrature_rel_tol", 1e-9}}}});
    return 0;
  }

  if (lin->parsed()) {
    const MagneticSystem sys =
        system_from_flags(lin_field, lin_kind, lin_nu, lin_f, lin_dim, lin_rank);
    const LineResult lr = magnetic_line(sys, to_vec(lin_x0), lin_arc, lin_ds);
    json report{{"command", "lines"},
                {"arc", lin_arc},
                {"ds", lin_ds},
                {"points", lr.s.size()},
                {"truncated", lr.truncated},
                {"certificate", {{"unit_speed", "|dx/ds| = 1 by construction"}}}};
    Table t;
    t.columns = {"s"};
    for (int j = 0; j < sys.dim; ++j) t.columns.push_back("x" + std::to_string(j + 1));
    for (size_t i = 0; i < lr.s.size(); ++i) {
      std::vector<double> row{lr.s[i]};
      for (int j = 0; j < sys.dim; ++j) row.push_back(lr.x[i][j]);
      t.rows.push_back(std::move(row));
    }
    emit(lin_c.out, lin_c.format, report, t);
    return 0;
  }

  if (wey->parsed()) {
    const DensityValue dv = magnetic_weyl_density(wp);
    emit(wey_c.out, wey_c.format,
         json{{"command", "weyl"},
              {"d", wp.d},
              {"r", wp.r},
              {"f", wp.f},
              {"V", wp.V},
              {"E", wp.E},
              {"mu", wp.mu},
              {"h", wp.h},
              {"g", wp.g},
              {"density", dv.value},
              {"terms", dv.terms},
              {"certificate",
               {{"largest_discarded", dv.largest_discarded},
                {"truncation", "exact: every discarded level has nonpositive plus-part"}}}});
    return 0;
  }

  if (lan->parsed()) {
    const double jump = landau_jump_size(lan_f, lan_g, lan_mu, lan_h);
    const auto thresholds = landau_jump_thresholds(lan_f, lan_V, lan_mu, lan_h, lan_tau);
    emit(lan_c.out, lan_c.format,
         json{{"command", "landau"},
              {"f", lan_f},
              {"V", lan_V},
              {"mu", lan_mu},
              {"h", lan_h},
              {"g", lan_g},
              {"jump_size", jump},
              {"thresholds", thresholds},
              {"count", thresholds.size()},
              {"certificate", {{"closed_form", "one jump of this size per Landau level"}}}});
    return 0;
  }

  if (eig->parsed()) {
    const AuxOperator1D op = AuxOperator1D::with_walls(eig_nu, eig_hbar, eig_xi2, eig_W, eig_tau);
    json report{{"command", "eigencount"},
                {"nu", eig_nu},
                {"hbar", eig_hbar},
                {"xi2", eig_xi2},
                {"W", eig_W},
                {"tau", eig_tau},
                {"L", op.L},
                {"wall_certificate", op.potential(op.L) - eig_tau}};
    if (eig_method != "bs") {
      const EigenCount fd = fd_eigencount(op, eig_tau, eig_n0, eig_cap);
      report["fd"] = {{"count", fd.count},
                      {"grid_points", fd.grid_points},
                      {"grazing", fd.grazing}};
    }
    if (eig_method != "fd") {
      try {
        const BohrSommerfeld bs = bohr_sommerfeld_eigenvalues(op, eig_tau);
        report["bs"] = {{"count", bs.count},
                        {"action_at_tau", bs.action_at_tau},
                        {"energies", bs.energies}};
      } catch (const Error& e) {
        if (eig_method == "bs") throw;  // sole requested route failed
        report["bs"] = {{"error", error_body(e)}};
      }
    }
    if (report.contains("fd") && report.contains("bs") && !report["bs"].contains("error"))
      report["methods_agree_within_one"] =
          std::labs(report["fd"]["count"].get<long>() - report["bs"]["count"].get<long>()) <= 1;
    emit(eig_c.out, eig_c.format, report);
    return 0;
  }

  if (cor->parsed()) {
    const CorrectionTerm ct = correction_term(cor_nu, cor_W, cor_hbar, cor_h, cor_tau);
    json report{{"command", "correction"},
                {"nu", cor_nu},
                {"W", cor_W},
                {"hbar", cor_hbar},
                {"h", cor_h},
                {"tau", cor_tau},
                {"correction", ct.value},
                {"n0_integral", ct.n0_integral},
                {"strip_integral", ct.strip_integral},
                {"levels", ct.levels},
                {"window", {{"xi2_min", ct.xi2_min}, {"xi2_max", ct.xi2_max}}},
                {"certificate",
                 {{"strip_route_rel_diff",
                   std::abs(ct.strip_integral - ct.strip_closed_form) /
                       std::abs(ct.strip_closed_form)},
                  {"window_support", "n0 vanishes outside the reported window"}}}};
    if (cor_smooth)
      report["smooth_residual"] = correction_smooth_residual(cor_nu, cor_W, cor_hbar, cor_h,
                                                             cor_tau);
    emit(cor_c.out, cor_c.format, report);
    return 0;
  }

  if (gfn->parsed()) {
    const std::vector<double> grid = parse_grid(gfn_grid);
    const GKernelParams gp{gfn_cutoff, gfn_tail};
    std::vector<double> g(grid.size());
    const int jobs = std::max(1, std::min<int>(gfn_c.jobs, (int)grid.size()));
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1))
          g[i] = g_kernel(grid[i], gp);
      });
    for (auto& th : pool) th.join();
    double mean = 0, lo = g[0], hi = g[0];
    for (const double v : g) mean += v, lo = std::min(lo, v), hi = std::max(hi, v);
    mean /= (double)g.size();
    json report{{"command", "gfunc"},
                {"points", grid.size()},
                {"mean", mean},
                {"min", lo},
                {"max", hi},
                {"certificate",
                 {{"abs_tol", 1e-5}, {"cutoff", gfn_cutoff}, {"tail_terms", gfn_tail}}}};
    Table t;
    t.columns = {"t", "g"};
    for (size_t i = 0; i < grid.size(); ++i) t.rows.push_back({grid[i], g[i]});
    emit(gfn_c.out, gfn_c.format, report, t);
    return 0;
  }

  if (fit->parsed()) {
    const CorrectionFit cf = fit_correction(fit_nu, fit_hbar, fit_samples, fit_periods);
    json report{{"command", "fit-correction"},
                {"nu", fit_nu},
                {"hbar", fit_hbar},
                {"samples", fit_samples},
                {"periods", fit_periods},
                {"fit",
                 {{"kappa", cf.kappa},
                  {"S0", cf.S0},
                  {"classical_S0", cf.classical_S0},
                  {"S0_over_classical", cf.S0 / cf.classical_S0},
                  {"offset", cf.offset},
                  {"rms", cf.rms},
                  {"amplitude", cf.amplitude},
                  {"raw_amplitude", cf.raw_amplitude},
                  {"frequency", cf.frequency},
                  {"mean_delta", cf.mean_delta}}},
                {"certificate",
                 {{"rms_over_amplitude", cf.rms / std::max(cf.amplitude, 1e-300)},
                  {"frequency_grid_step", 0.001},
                  {"S0_scan_halfwidth_rel", 0.03}}}};
    Table t;
    t.columns = {"W", "delta"};
    for (size_t i = 0; i < cf.W.size(); ++i) t.rows.push_back({cf.W[i], cf.delta[i]});
    emit(fit_c.out, fit_c.format, report, t);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    return run(std::move(args));
  } catch (const Error& e) {
    std::cerr << json{{"error", error_body(e)}}.dump() << "\n";
    return (e.kind() == ErrorKind::usage || e.kind() == ErrorKind::domain) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    return 3;
  }
}
