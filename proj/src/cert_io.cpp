#include "osearch/cert_io.hpp"

#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

namespace osearch {

namespace {

using nlohmann::json;

json tol_to_json(const Tolerances& t) {
  return json{{"eq_residual", t.eq_residual},
              {"delta_neg", t.delta_neg},
              {"delta_pos", t.delta_pos},
              {"dedup_theta", t.dedup_theta},
              {"root_residual", t.root_residual},
              {"circle_pair", t.circle_pair},
              {"phase_zero", t.phase_zero},
              {"lp_feas", t.lp_feas},
              {"lp_gap", t.lp_gap},
              {"max_refine_iters", t.max_refine_iters}};
}

Tolerances tol_from_json(const json& j) {
  Tolerances t;
  t.eq_residual = j.at("eq_residual").get<double>();
  t.delta_neg = j.at("delta_neg").get<double>();
  t.delta_pos = j.at("delta_pos").get<double>();
  t.dedup_theta = j.at("dedup_theta").get<double>();
  t.root_residual = j.at("root_residual").get<double>();
  t.circle_pair = j.at("circle_pair").get<double>();
  t.phase_zero = j.at("phase_zero").get<double>();
  t.lp_feas = j.at("lp_feas").get<double>();
  t.lp_gap = j.at("lp_gap").get<double>();
  t.max_refine_iters = j.at("max_refine_iters").get<int>();
  return t;
}

json log_to_json(const std::vector<IterationLog>& log) {
  json a = json::array();
  for (const IterationLog& e : log)
    a.push_back(json{{"iter", e.iter},
                     {"beta", e.beta},
                     {"grid_size", e.grid_size},
                     {"new_points", e.new_points}});
  return a;
}

std::vector<IterationLog> log_from_json(const json& a) {
  std::vector<IterationLog> log;
  for (const json& e : a) {
    IterationLog l;
    l.iter = e.at("iter").get<int>();
    l.beta = e.at("beta").get<double>();
    l.grid_size = e.at("grid_size").get<int>();
    l.new_points = e.at("new_points").get<int>();
    log.push_back(l);
  }
  return log;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Feasible: return "feasible";
    case Verdict::Infeasible: return "infeasible";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict verdict_from_name(const std::string& s) {
  if (s == "feasible") return Verdict::Feasible;
  if (s == "infeasible") return Verdict::Infeasible;
  if (s == "inconclusive") return Verdict::Inconclusive;
  throw Error(fmt::format("unknown verdict '{}'", s));
}

const char* kind_name(RowKind k) {
  switch (k) {
    case RowKind::Interior: return "interior";
    case RowKind::FixedCap: return "fixed_cap";
    case RowKind::BetaCap: return "beta_cap";
    case RowKind::BoxLo: return "box_lo";
    case RowKind::BoxHi: return "box_hi";
  }
  return "beta_cap";
}

RowKind kind_from_name(const std::string& s) {
  if (s == "interior") return RowKind::Interior;
  if (s == "fixed_cap") return RowKind::FixedCap;
  if (s == "beta_cap") return RowKind::BetaCap;
  if (s == "box_lo") return RowKind::BoxLo;
  if (s == "box_hi") return RowKind::BoxHi;
  throw Error(fmt::format("unknown row kind '{}'", s));
}

json complex_vec_to_json(const std::vector<cd>& v) {
  json a = json::array();
  for (const cd& z : v) a.push_back(json::array({z.real(), z.imag()}));
  return a;
}

std::vector<cd> complex_vec_from_json(const json& a) {
  std::vector<cd> v;
  for (const json& e : a) {
    require(e.is_array() && e.size() == 2, "complex entry must be [re, im]");
    v.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return v;
}

json load_json_file(const std::string& path, const char* expected_format) {
  std::ifstream in(path);
  require(in.good(), fmt::format("cannot open '{}'", path));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
  require(j.value("format", std::string()) == expected_format,
          fmt::format("'{}' is not a {} file", path, expected_format));
  require(j.value("version", 0) == 1,
          fmt::format("'{}' has an unsupported version", path));
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), fmt::format("cannot open '{}' for writing", path));
  out << j.dump(1, '\t') << "\n";
  out.close();
  require(out.good(), fmt::format("write to '{}' failed", path));
}

}  // namespace

void save_certificate(const CertificateFile& c, const std::string& path) {
  json feas{{"n", c.feas.n},
            {"k", c.feas.k},
            {"verdict", verdict_name(c.feas.verdict)},
            {"detail", c.feas.detail},
            {"beta", c.feas.beta},
            {"grid", c.feas.grid},
            {"margins", c.feas.margins},
            {"log", log_to_json(c.feas.log)},
            {"tol", tol_to_json(c.feas.tol)},
            {"lp_pivots_total", c.feas.lp_pivots_total},
            {"seconds", c.feas.seconds}};
  json qs = json::array();
  for (const SymLaurentPoly& q : c.feas.q) qs.push_back(q.c);
  feas["q"] = std::move(qs);

  json factors = json::array();
  for (const FactorRecord& f : c.factors)
    factors.push_back(json{{"t", f.t},
                           {"b", complex_vec_to_json(f.b)},
                           {"residual", f.residual}});

  json j{{"format", "osearch-certificate"},
         {"version", 1},
         {"feas", std::move(feas)},
         {"factors", std::move(factors)},
         {"gram_equality_residual", c.gram_equality_residual},
         {"gram_min_eigenvalue", c.gram_min_eigenvalue},
         {"final_entry", c.final_entry},
         {"epsilon", c.epsilon}};
  if (c.sim) {
    j["sim"] = json{{"success", c.sim->success},
                    {"min_success", c.sim->min_success},
                    {"max_norm_drift", c.sim->max_norm_drift}};
  } else {
    j["sim"] = nullptr;
  }
  write_json_file(j, path);
}

CertificateFile load_certificate(const std::string& path) {
  const json j = load_json_file(path, "osearch-certificate");
  CertificateFile c;
  const json& f = j.at("feas");
  c.feas.n = f.at("n").get<int>();
  c.feas.k = f.at("k").get<int>();
  c.feas.verdict = verdict_from_name(f.at("verdict").get<std::string>());
  c.feas.detail = f.at("detail").get<std::string>();
  c.feas.beta = f.at("beta").get<double>();
  c.feas.grid = f.at("grid").get<std::vector<double>>();
  c.feas.margins = f.at("margins").get<std::vector<double>>();
  c.feas.log = log_from_json(f.at("log"));
  c.feas.tol = tol_from_json(f.at("tol"));
  c.feas.lp_pivots_total = f.at("lp_pivots_total").get<int>();
  c.feas.seconds = f.at("seconds").get<double>();
  for (const json& qc : f.at("q")) {
    SymLaurentPoly q;
    q.c = qc.get<std::vector<double>>();
    c.feas.q.push_back(std::move(q));
  }
  for (const json& e : j.at("factors")) {
    FactorRecord r;
    r.t = e.at("t").get<int>();
    r.b = complex_vec_from_json(e.at("b"));
    r.residual = e.at("residual").get<double>();
    c.factors.push_back(std::move(r));
  }
  if (!j.at("sim").is_null()) {
    SimulationReport s;
    const json& js = j.at("sim");
    s.success = js.at("success").get<std::vector<double>>();
    s.min_success = js.at("min_success").get<double>();
    s.max_norm_drift = js.at("max_norm_drift").get<double>();
    c.sim = std::move(s);
  }
  c.gram_equality_residual = j.at("gram_equality_residual").get<double>();
  c.gram_min_eigenvalue = j.at("gram_min_eigenvalue").get<double>();
  c.final_entry = j.at("final_entry").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  json basis = json::array();
  for (const RowRef& r : c.basis)
    basis.push_back(json{{"kind", kind_name(r.kind)},
                         {"t", r.t},
                         {"theta", r.theta},
                         {"var", r.var}});
  json j{{"format", "osearch-checkpoint"},
         {"version", 1},
         {"n", c.n},
         {"k", c.k},
         {"grid", json{{"n", c.grid.n},
                       {"theta", c.grid.theta},
                       {"uniform_m", c.grid.uniform_m}}},
         {"basis", std::move(basis)},
         {"log", log_to_json(c.log)},
         {"seconds_so_far", c.seconds_so_far},
         {"tol", tol_to_json(c.tol)}};
  write_json_file(j, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  const json j = load_json_file(path, "osearch-checkpoint");
  Checkpoint c;
  c.n = j.at("n").get<int>();
  c.k = j.at("k").get<int>();
  const json& g = j.at("grid");
  c.grid.n = g.at("n").get<int>();
  c.grid.theta = g.at("theta").get<std::vector<double>>();
  c.grid.uniform_m = g.at("uniform_m").get<std::vector<int>>();
  require(c.grid.theta.size() == c.grid.uniform_m.size(),
          "checkpoint grid arrays disagree in length");
  for (const json& e : j.at("basis")) {
    RowRef r;
    r.kind = kind_from_name(e.at("kind").get<std::string>());
    r.t = e.at("t").get<int>();
    r.theta = e.at("theta").get<double>();
    r.var = e.at("var").get<int>();
    c.basis.push_back(r);
  }
  c.log = log_from_json(j.at("log"));
  c.seconds_so_far = j.at("seconds_so_far").get<double>();
  c.tol = tol_from_json(j.at("tol"));
  return c;
}

}  // namespace osearch
