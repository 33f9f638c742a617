// Command-line front end: steady-state solves, parameter sweeps, no-go
// verification, closure tables and Wigner fields, with CSV output carrying the
// resolved configuration for reproducibility.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <spinsteady/metrics.hpp>
#include <spinsteady/models.hpp>

using namespace spinsteady;
using nlohmann::json;

namespace {

// ---- configuration ----

struct SweepSpec {
  std::string param;
  double start = 0, stop = 0;
  int count = 1;
  std::string scale = "log";
  bool active = false;
};

struct RunConfig {
  std::string command;
  std::string preset_id = "d2_minimal";
  int n_spins = 0;      // 0 -> preset default
  int truncation = 0;   // 0 -> preset default
  std::string aux;      // "" -> preset default
  std::vector<std::string> aux_sweep;  // categorical outer axis for sweeps
  bool adaptive = false;
  std::map<std::string, double> params;
  SweepSpec sweep, sweep2;
  int n_theta = 48, n_phi = 96;
  std::vector<int> n_list = {2, 3, 4, 5, 6};
  int instances = 50;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;
};

const std::map<std::string, const char*>& recipes() {
  static const std::map<std::string, const char*> r = {
      {"fig2",
       R"({"preset":"d2_minimal","truncation":4,
           "aux_sweep":["fermion","boson","twolevel"],
           "sweep":{"param":"kappa","start":1.0,"stop":1000.0,"count":25,"scale":"log"}})"},
      {"fig3",
       R"({"preset":"u1z2",
           "sweep":{"param":"h","start":2.0,"stop":8.0,"count":4,"scale":"linear"},
           "sweep2":{"param":"kappa","start":0.2,"stop":1000.0,"count":6,"scale":"log"}})"},
      {"fig4a", R"({"preset":"tetra","wigner":{"n_theta":48,"n_phi":96}})"},
      {"fig4b",
       R"({"preset":"tetra",
           "sweep":{"param":"h","start":0.2,"stop":2.0,"count":10,"scale":"linear"}})"},
      {"fig4c",
       R"({"preset":"tetra","params":{"kappa":0.5},
           "sweep":{"param":"dkappa_rel","start":0.001,"stop":0.1,"count":9,"scale":"log"}})"},
      {"sm-fig-s1",
       R"({"preset":"tetra","n_spins":5,"wigner":{"n_theta":48,"n_phi":96}})"}};
  return r;
}

void fail_config(const std::string& msg) { throw std::invalid_argument(msg); }

SweepSpec sweep_from_json(const json& j, const std::string& where) {
  SweepSpec s;
  s.active = true;
  for (const auto& [k, v] : j.items()) {
    if (k == "param") s.param = v.get<std::string>();
    else if (k == "start") s.start = v.get<double>();
    else if (k == "stop") s.stop = v.get<double>();
    else if (k == "count") s.count = v.get<int>();
    else if (k == "scale") s.scale = v.get<std::string>();
    else fail_config("unknown key '" + k + "' in " + where);
  }
  if (s.param.empty()) fail_config(where + ": missing param");
  if (s.count < 1) fail_config(where + ": count must be >= 1");
  if (s.scale != "log" && s.scale != "linear")
    fail_config(where + ": scale must be log or linear");
  if (s.scale == "log" && (s.start <= 0 || s.stop <= 0))
    fail_config(where + ": log scale needs positive endpoints");
  return s;
}

void apply_json(RunConfig& cfg, const json& j) {
  for (const auto& [k, v] : j.items()) {
    if (k == "preset") cfg.preset_id = v.get<std::string>();
    else if (k == "n_spins") cfg.n_spins = v.get<int>();
    else if (k == "truncation") cfg.truncation = v.get<int>();
    else if (k == "aux") cfg.aux = v.get<std::string>();
    else if (k == "aux_sweep") cfg.aux_sweep = v.get<std::vector<std::string>>();
    else if (k == "adaptive") cfg.adaptive = v.get<bool>();
    else if (k == "params") {
      for (const auto& [pk, pv] : v.items()) cfg.params[pk] = pv.get<double>();
    } else if (k == "sweep") cfg.sweep = sweep_from_json(v, "sweep");
    else if (k == "sweep2") cfg.sweep2 = sweep_from_json(v, "sweep2");
    else if (k == "wigner") {
      for (const auto& [wk, wv] : v.items()) {
        if (wk == "n_theta") cfg.n_theta = wv.get<int>();
        else if (wk == "n_phi") cfg.n_phi = wv.get<int>();
        else fail_config("unknown key '" + wk + "' in wigner");
      }
    } else if (k == "nogo") {
      for (const auto& [nk, nv] : v.items()) {
        if (nk == "n_list") cfg.n_list = nv.get<std::vector<int>>();
        else if (nk == "instances") cfg.instances = nv.get<int>();
        else fail_config("unknown key '" + nk + "' in nogo");
      }
    } else if (k == "seed") cfg.seed = v.get<std::uint64_t>();
    else if (k == "jobs") cfg.jobs = v.get<int>();
    else if (k == "out") cfg.out = v.get<std::string>();
    else fail_config("unknown config key '" + k + "'");
  }
}

void load_config(RunConfig& cfg, const std::string& name) {
  const auto it = recipes().find(name);
  if (it != recipes().end()) {
    apply_json(cfg, json::parse(it->second));
    return;
  }
  std::ifstream in(name);
  if (!in) fail_config("cannot open config '" + name + "' (not a file or recipe)");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    fail_config("config '" + name + "': " + e.what());
  }
  apply_json(cfg, j);
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  fail_config("expected a boolean, got '" + v + "'");
  return false;
}

void apply_set(RunConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) fail_config("--set expects key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
  const auto as_double = [&] {
    try {
      std::size_t pos = 0;
      const double d = std::stod(val, &pos);
      if (pos != val.size()) throw std::invalid_argument(val);
      return d;
    } catch (const std::exception&) {
      fail_config("--set " + key + ": '" + val + "' is not a number");
      return 0.0;
    }
  };
  const auto as_int = [&] {
    const double d = as_double();
    if (d != std::floor(d)) fail_config("--set " + key + ": expected an integer");
    return static_cast<int>(d);
  };
  if (key == "omega" || key == "h" || key == "gamma" || key == "kappa" ||
      (key.rfind("kappa", 0) == 0 && key.size() == 6 && std::isdigit(key[5]))) {
    cfg.params[key] = as_double();
  } else if (key == "n_spins") cfg.n_spins = as_int();
  else if (key == "truncation") cfg.truncation = as_int();
  else if (key == "aux") cfg.aux = val, cfg.aux_sweep.clear();
  else if (key == "adaptive") cfg.adaptive = parse_bool(val);
  else if (key == "n_theta") cfg.n_theta = as_int();
  else if (key == "n_phi") cfg.n_phi = as_int();
  else if (key == "instances") cfg.instances = as_int();
  else if (key == "sweep.param") cfg.sweep.param = val, cfg.sweep.active = true;
  else if (key == "sweep.start") cfg.sweep.start = as_double(), cfg.sweep.active = true;
  else if (key == "sweep.stop") cfg.sweep.stop = as_double(), cfg.sweep.active = true;
  else if (key == "sweep.count") cfg.sweep.count = as_int(), cfg.sweep.active = true;
  else if (key == "sweep.scale") cfg.sweep.scale = val, cfg.sweep.active = true;
  else fail_config("--set: unknown key '" + key + "'");
}

AuxKind aux_kind_from_string(const std::string& s) {
  if (s == "boson") return AuxKind::boson;
  if (s == "fermion") return AuxKind::fermion;
  if (s == "twolevel") return AuxKind::twolevel;
  fail_config("unknown aux kind '" + s + "' (boson|fermion|twolevel)");
  return AuxKind::boson;
}

PresetOptions preset_options(const RunConfig& cfg,
                             const std::map<std::string, double>& params) {
  PresetOptions o;
  o.n_spins = cfg.n_spins;
  o.truncation = cfg.truncation;
  if (!cfg.aux.empty()) o.aux_kind = aux_kind_from_string(cfg.aux);
  o.params = params;
  return o;
}

// ---- output formatting ----

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

json resolved_config(const RunConfig& cfg, const PresetModel* pm) {
  json j;
  j["command"] = cfg.command;
  j["seed"] = cfg.seed;
  if (cfg.command == "verify-nogo") {
    j["nogo"] = {{"n_list", cfg.n_list}, {"instances", cfg.instances}};
    return j;
  }
  j["preset"] = cfg.preset_id;
  if (pm) {
    j["n_spins"] = pm->model.sys.n_spins;
    j["truncation"] = pm->truncation;
    if (cfg.aux_sweep.empty()) j["aux"] = to_string(pm->model.aux[0].kind);
    else j["aux_sweep"] = cfg.aux_sweep;
    j["adaptive"] = cfg.adaptive;
  }
  if (!cfg.params.empty()) j["params"] = cfg.params;
  const auto sweep_json = [](const SweepSpec& s) {
    return json{{"param", s.param}, {"start", s.start}, {"stop", s.stop},
                {"count", s.count}, {"scale", s.scale}};
  };
  if (cfg.sweep.active) j["sweep"] = sweep_json(cfg.sweep);
  if (cfg.sweep2.active) j["sweep2"] = sweep_json(cfg.sweep2);
  if (cfg.command == "wigner")
    j["wigner"] = {{"n_theta", cfg.n_theta}, {"n_phi", cfg.n_phi}};
  return j;
}

std::string header_block(const RunConfig& cfg, const PresetModel* pm) {
  std::ostringstream os;
  os << "# " << kVersion << "\n";
  os << "# command: " << cfg.command << "\n";
  os << "# seed: " << cfg.seed << "\n";
  os << "# config: " << resolved_config(cfg, pm).dump() << "\n";
  return os.str();
}

void write_output(const RunConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) fail_config("cannot open output file '" + cfg.out + "'");
  f << text;
}

// ---- sweep machinery ----

std::vector<double> grid_values(const SweepSpec& s) {
  std::vector<double> v;
  for (int i = 0; i < s.count; ++i) {
    const double t = s.count == 1 ? 0.0 : static_cast<double>(i) / (s.count - 1);
    v.push_back(s.scale == "log" ? s.start * std::pow(s.stop / s.start, t)
                                 : s.start + (s.stop - s.start) * t);
  }
  return v;
}

std::string sweep_column(const SweepSpec& s) {
  if (s.param == "omega" || s.param == "dkappa_rel") return s.param;
  return s.param + "_over_omega";
}

// apply one swept value to the per-point parameter map
void assign_sweep_value(std::map<std::string, double>& params, int n_couplings,
                        const std::string& param, double value) {
  if (param == "dkappa_rel") {
    if (n_couplings != 3)
      fail_config("dkappa_rel sweep needs a three-coupling preset");
    const auto it = params.find("kappa");
    if (it == params.end())
      fail_config("dkappa_rel sweep needs an explicit kappa in params");
    const double mean = it->second;
    params["kappa1"] = mean * (1.0 - value);
    params["kappa2"] = mean;
    params["kappa3"] = mean * (1.0 + value);
    return;
  }
  params[param] = value;
}

struct PointResult {
  std::string status = "ok";
  SteadyStateReport report;
  Matrix rho_spin;
  MetricBundle bundle;
  bool solved = false;
};

PointResult solve_point(const RunConfig& cfg,
                        const std::map<std::string, double>& params,
                        const std::string& aux_override = "") {
  PointResult r;
  PresetOptions popt = preset_options(cfg, params);
  if (!aux_override.empty()) popt.aux_kind = aux_kind_from_string(aux_override);
  const PresetModel pm = preset(cfg.preset_id, popt);
  SteadyOpts sopt;
  sopt.seed = cfg.seed == 0 ? SteadyOpts{}.seed : cfg.seed;
  if (cfg.adaptive) {
    const AdaptiveSteadyResult a = steady_state_adaptive(pm.model, sopt);
    r.report = a.report;
    r.rho_spin = a.rho_spin;
  } else {
    r.report = steady_state(build_embedding(pm.model), sopt);
    r.rho_spin = partial_trace_aux(r.report.rho_ss, pm.model);
  }
  const int n = pm.model.sys.n_spins;
  r.bundle = compute_metric_bundle(r.rho_spin, pm.model.sys, &pm.group,
                                   n >= 2 ? n / 2 : 0);
  r.solved = true;
  return r;
}

std::vector<std::string> metric_columns(int n_spins) {
  const int cut = n_spins >= 2 ? n_spins / 2 : 0;
  std::vector<std::string> cols = {"status",
                                   "nullity",
                                   "residual",
                                   "hs_dist_mms",
                                   "purity",
                                   "offdiag_mass",
                                   "qfi_z",
                                   "f_perp_over_n",
                                   "f_perp_spread_rel",
                                   "f_iso_over_n",
                                   "f_iso_spread_rel",
                                   "anticoherence"};
  if (cut >= 1)
    cols.push_back("negativity_" + std::to_string(cut) + "_" +
                   std::to_string(n_spins - cut));
  cols.push_back("delta_g");
  // populations in basis order m = +j .. -j
  for (int k = 0; k <= n_spins; ++k) cols.push_back("p" + std::to_string(k));
  return cols;
}

std::string metric_cells(const PointResult& r, int n_spins) {
  std::ostringstream os;
  if (!r.solved) {
    os << r.status;
    const int ncols = static_cast<int>(metric_columns(n_spins).size());
    for (int k = 1; k < ncols; ++k) os << ",nan";
    return os.str();
  }
  const MetricBundle& b = r.bundle;
  const double tiny = 1e-300;
  os << r.status;
  os << "," << r.report.nullity;
  os << "," << fmt(r.report.residual);
  os << "," << fmt(b.hs_dist_mms);
  os << "," << fmt(b.purity);
  os << "," << fmt(b.dicke_offdiag);
  os << "," << fmt(b.qfi_z);
  os << "," << fmt(b.qfi_equatorial.mean / n_spins);
  os << "," << fmt(b.qfi_equatorial.spread / std::max(b.qfi_equatorial.mean, tiny));
  os << "," << fmt(b.qfi_isotropy.mean / n_spins);
  os << "," << fmt(b.qfi_isotropy.spread / std::max(b.qfi_isotropy.mean, tiny));
  os << "," << b.anticoherence;
  if (b.neg.has_value()) os << "," << fmt(*b.neg);
  os << "," << fmt(b.symmetry_dev.value_or(0.0));
  for (int k = 0; k < b.dicke_p.size(); ++k) os << "," << fmt(b.dicke_p(k));
  return os.str();
}

// ---- commands ----

int cmd_steady(const RunConfig& cfg) {
  const PresetModel pm = preset(cfg.preset_id, preset_options(cfg, cfg.params));
  const PointResult r = solve_point(cfg, cfg.params);
  std::ostringstream os;
  os << header_block(cfg, &pm);
  const auto cols = metric_columns(pm.model.sys.n_spins);
  for (std::size_t k = 0; k < cols.size(); ++k)
    os << (k ? "," : "") << cols[k];
  os << "\n" << metric_cells(r, pm.model.sys.n_spins) << "\n";
  write_output(cfg, os.str());
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  if (!cfg.sweep.active) fail_config("sweep: no sweep specified");
  const PresetModel pm = preset(cfg.preset_id, preset_options(cfg, cfg.params));
  const int n_spins = pm.model.sys.n_spins;
  const int n_couplings = pm.model.n_aux();

  const std::vector<double> axis1 = grid_values(cfg.sweep);
  const std::vector<double> axis2 =
      cfg.sweep2.active ? grid_values(cfg.sweep2) : std::vector<double>{0.0};
  const std::vector<std::string> kinds =
      cfg.aux_sweep.empty() ? std::vector<std::string>{""} : cfg.aux_sweep;
  struct Point {
    std::string aux;
    double v1 = 0, v2 = 0;
    std::map<std::string, double> params;
  };
  std::vector<Point> points;
  for (const std::string& kind : kinds)
    for (double v1 : axis1)
      for (double v2 : axis2) {
        Point p;
        p.aux = kind;
        p.v1 = v1;
        p.v2 = v2;
        p.params = cfg.params;
        assign_sweep_value(p.params, n_couplings, cfg.sweep.param, v1);
        if (cfg.sweep2.active)
          assign_sweep_value(p.params, n_couplings, cfg.sweep2.param, v2);
        points.push_back(std::move(p));
      }

  // worker pool; rows are gathered and written in grid order
  std::vector<std::string> rows(points.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      PointResult r;
      try {
        r = solve_point(cfg, points[i].params, points[i].aux);
      } catch (const std::exception& e) {
        r.status = "error: " + sanitize(e.what());
      }
      std::ostringstream os;
      if (!cfg.aux_sweep.empty()) os << points[i].aux << ",";
      os << fmt(points[i].v1);
      if (cfg.sweep2.active) os << "," << fmt(points[i].v2);
      os << "," << metric_cells(r, n_spins);
      rows[i] = os.str();
    }
  };
  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  std::ostringstream os;
  os << header_block(cfg, &pm);
  if (!cfg.aux_sweep.empty()) os << "aux,";
  os << sweep_column(cfg.sweep);
  if (cfg.sweep2.active) os << "," << sweep_column(cfg.sweep2);
  for (const auto& c : metric_columns(n_spins)) os << "," << c;
  os << "\n";
  for (const auto& row : rows) os << row << "\n";

  // log-log slope footer for the rate-imbalance scaling runs
  if (cfg.sweep.param == "dkappa_rel" && !cfg.sweep2.active) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::size_t pos = rows[i].find(",ok,");
      if (pos == std::string::npos) continue;
      // delta_g is the column right before the populations block
      std::vector<std::string> cells;
      std::stringstream ss(rows[i]);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      const double dg = std::stod(cells[cells.size() - (n_spins + 2)]);
      if (dg > 0 && points[i].v1 > 0) {
        lx.push_back(std::log(points[i].v1));
        ly.push_back(std::log(dg));
      }
    }
    if (lx.size() >= 2) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t k = 0; k < lx.size(); ++k) {
        sx += lx[k];
        sy += ly[k];
        sxx += lx[k] * lx[k];
        sxy += lx[k] * ly[k];
      }
      const double m = static_cast<double>(lx.size());
      const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
      os << "# fit: log(delta_g) vs log(dkappa_rel) slope = " << fmt(slope) << "\n";
    }
  }
  write_output(cfg, os.str());
  return 0;
}

int cmd_wigner(const RunConfig& cfg) {
  const PresetModel pm = preset(cfg.preset_id, preset_options(cfg, cfg.params));
  const PointResult r = solve_point(cfg, cfg.params);
  const WignerField f = wigner_sphere(r.rho_spin, pm.model.sys, cfg.n_theta, cfg.n_phi);
  std::ostringstream os;
  os << header_block(cfg, &pm);
  os << "theta,phi,w\n";
  for (int i = 0; i < f.theta.size(); ++i)
    for (int k = 0; k < f.phi.size(); ++k)
      os << fmt(f.theta(i)) << "," << fmt(f.phi(k)) << "," << fmt(f.values(i, k))
         << "\n";
  write_output(cfg, os.str());
  return 0;
}

int cmd_verify_nogo(const RunConfig& cfg) {
  for (int n : cfg.n_list)
    if (n < 1) fail_config("verify-nogo: n_spins must be >= 1");
  if (cfg.instances < 1) fail_config("verify-nogo: instances must be >= 1");
  const NogoReport rep = verify_nogo(cfg.n_list, cfg.instances, cfg.seed);
  std::ostringstream os;
  os << header_block(cfg, nullptr);
  os << "instances: " << (rep.n_pass + rep.n_fail) << "\n";
  os << "pass: " << rep.n_pass << "\n";
  os << "fail: " << rep.n_fail << "\n";
  for (const auto& f : rep.failures) os << "failure: " << f << "\n";
  os << "verdict: " << (rep.n_fail == 0 ? "ok" : "FAIL") << "\n";
  write_output(cfg, os.str());
  return rep.n_fail == 0 ? 0 : 3;
}

struct AxisAngle {
  Vec3 axis = Vec3::UnitZ();
  double angle = 0;
};

AxisAngle axis_angle(const Mat3& r) {
  AxisAngle out;
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  out.angle = std::acos(c);
  Vec3 ax(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (ax.norm() > 1e-9) {
    out.axis = ax.normalized();
  } else if (out.angle > 1e-9) {  // angle = π: any unit column of R + I
    const Mat3 m = r + Mat3::Identity();
    int col = 0;
    m.colwise().norm().maxCoeff(&col);
    out.axis = m.col(col).normalized();
  }
  return out;
}

int cmd_closure_check(const RunConfig& cfg) {
  const PresetModel pm = preset(cfg.preset_id, preset_options(cfg, cfg.params));
  std::ostringstream os;
  os << header_block(cfg, &pm);
  bool ok = false;
  if (pm.closure_kind == ClosureKind::phased_permutation) {
    ok = pm.closure.ok;
    os << "element,axis_x,axis_y,axis_z,angle,mu,target,phase,error\n";
    for (std::size_t e = 0; e < pm.group.elements.size(); ++e) {
      const AxisAngle aa = axis_angle(pm.group.elements[e].so3);
      for (std::size_t mu = 0; mu < pm.closure.table[e].size(); ++mu) {
        const ClosureEntry& ent = pm.closure.table[e][mu];
        os << e << "," << fmt(aa.axis.x()) << "," << fmt(aa.axis.y()) << ","
           << fmt(aa.axis.z()) << "," << fmt(aa.angle) << "," << mu << ","
           << ent.target << "," << fmt(ent.phase) << "," << fmt(ent.error) << "\n";
      }
    }
    os << "# closure: " << (ok ? "ok" : "FAIL")
       << " (phased permutation, max_error = " << fmt(pm.closure.max_error) << ")\n";
  } else {
    ok = pm.span.ok;
    os << "element,axis_x,axis_y,axis_z,angle,span_error,unitarity_error\n";
    for (std::size_t e = 0; e < pm.group.elements.size(); ++e) {
      const AxisAngle aa = axis_angle(pm.group.elements[e].so3);
      const SpanClosureRow& row = pm.span.rows[e];
      os << e << "," << fmt(aa.axis.x()) << "," << fmt(aa.axis.y()) << ","
         << fmt(aa.axis.z()) << "," << fmt(aa.angle) << "," << fmt(row.span_error)
         << "," << fmt(row.unitarity_error) << "\n";
    }
    os << "# closure: " << (ok ? "ok" : "FAIL")
       << " (linear mixing, max_error = " << fmt(pm.span.max_error) << ")\n";
  }
  write_output(cfg, os.str());
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steady states of collective spins with damped auxiliary systems"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_name, preset_flag, out_flag;
  std::vector<std::string> sets;
  std::uint64_t seed_flag = 0;
  int jobs_flag = 0;
  bool have_seed = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_name, "config file or recipe name");
    sub->add_option("--preset", preset_flag, "preset id");
    sub->add_option("--set", sets, "override key=value (repeatable)");
    sub->add_option("--out", out_flag, "output path (default stdout)");
    sub->add_option("--seed", seed_flag, "seed for randomized checks")
        ->each([&](const std::string&) { have_seed = true; });
    sub->add_option("--jobs", jobs_flag, "worker threads for sweeps");
  };
  for (const char* name : {"steady", "sweep", "verify-nogo", "closure-check",
                           "wigner"})
    add_common(app.add_subcommand(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems are config errors
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    if (!config_name.empty()) load_config(cfg, config_name);
    if (!preset_flag.empty()) cfg.preset_id = preset_flag;
    for (const auto& kv : sets) apply_set(cfg, kv);
    if (have_seed) cfg.seed = seed_flag;
    if (jobs_flag > 0) cfg.jobs = jobs_flag;
    if (!out_flag.empty()) cfg.out = out_flag;

    if (cfg.command == "steady") return cmd_steady(cfg);
    if (cfg.command == "sweep") return cmd_sweep(cfg);
    if (cfg.command == "wigner") return cmd_wigner(cfg);
    if (cfg.command == "verify-nogo") return cmd_verify_nogo(cfg);
    return cmd_closure_check(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  }
}
