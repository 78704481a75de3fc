#include "prodform/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace prodform {

namespace {

Json cjson(Complex z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

double as_number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw BadParams(what + " must be a number");
  return j.get<double>();
}

int as_int(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) throw BadParams(what + " must be an integer");
  return j.get<int>();
}

std::string as_string(const Json& j, const std::string& what) {
  if (!j.is_string()) throw BadParams(what + " must be a string");
  return j.get<std::string>();
}

/// Accept either a scalar (one entry) or an array of numbers.
std::vector<double> scalar_or_array(const Json& j, const std::string& what) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& el : j) out.push_back(as_number(el, what + " entry"));
  } else {
    throw BadParams(what + " must be a number or an array of numbers");
  }
  return out;
}

/// Accept a scalar (broadcast to c servers) or an array of length c.
std::vector<double> per_server(const Json& j, int c, const std::string& what) {
  std::vector<double> v = scalar_or_array(j, what);
  if (v.size() == 1) v.assign(static_cast<size_t>(c), v[0]);
  if (static_cast<int>(v.size()) != c)
    throw BadParams(what + " must have one entry or exactly c entries");
  return v;
}

const Json& require(const Json& doc, const std::string& key,
                    const std::string& ctx) {
  auto it = doc.find(key);
  if (it == doc.end()) throw BadParams(ctx + " is missing '" + key + "'");
  return *it;
}

RateKind kind_from(const std::string& s) {
  if (s == "a" || s == "A") return RateKind::A;
  if (s == "b" || s == "B") return RateKind::B;
  if (s == "c" || s == "C") return RateKind::C;
  if (s == "d" || s == "D") return RateKind::D;
  throw BadParams("unknown rate kind '" + s + "'");
}

int parse_jump(const std::string& key) {
  size_t pos = 0;
  int k = 0;
  try {
    k = std::stoi(key, &pos);
  } catch (const std::exception&) {
    throw BadParams("jump key '" + key + "' is not a decimal integer");
  }
  if (pos != key.size())
    throw BadParams("jump key '" + key + "' is not a decimal integer");
  return k;
}

ProcessSpec parse_raw(const Json& doc) {
  int c = as_int(require(doc, "c", "raw model"), "c");
  int K = as_int(require(doc, "K", "raw model"), "K");
  const Json& jplanes = require(doc, "planes", "raw model");
  if (!jplanes.is_array()) throw BadParams("'planes' must be an array");

  std::vector<RatePlane> planes;
  for (const Json& jp : jplanes) {
    if (!jp.is_object()) throw BadParams("each plane must be an object");
    int max_down = 0;
    for (const char* kind : {"a", "b", "c", "d"}) {
      auto it = jp.find(kind);
      if (it == jp.end()) continue;
      if (!it->is_object())
        throw BadParams(std::string("plane rates '") + kind +
                        "' must map jump keys to rates");
      for (const auto& [key, val] : it->items()) {
        (void)val;
        max_down = std::max(max_down, -parse_jump(key));
      }
    }
    RatePlane plane(max_down, K);
    for (const char* kind : {"a", "b", "c", "d"}) {
      auto it = jp.find(kind);
      if (it == jp.end()) continue;
      for (const auto& [key, val] : it->items())
        plane.set(kind_from(kind), parse_jump(key),
                  as_number(val, "rate at jump " + key));
    }
    planes.push_back(std::move(plane));
  }

  BoundarySpec boundary;
  auto itb = doc.find("boundary");
  if (itb != doc.end() && !itb->is_null()) {
    const Json& jb = *itb;
    if (!jb.is_object()) throw BadParams("'boundary' must be an object");
    if (auto it = jb.find("v_states"); it != jb.end())
      for (const auto& el : *it)
        boundary.v_states.push_back(as_string(el, "boundary state id"));
    if (auto it = jb.find("v_rates"); it != jb.end())
      for (const auto& el : *it)
        boundary.v_rates.push_back(
            {as_int(require(el, "from", "v_rate"), "from"),
             as_int(require(el, "to", "v_rate"), "to"),
             as_number(require(el, "rate", "v_rate"), "rate")});
    if (auto it = jb.find("entries"); it != jb.end())
      for (const auto& el : *it)
        boundary.entries.push_back(
            {as_int(require(el, "from", "entry"), "from"),
             WState{as_int(require(el, "n0", "entry"), "n0"),
                    static_cast<unsigned>(as_int(require(el, "mask", "entry"),
                                                 "mask"))},
             as_number(require(el, "rate", "entry"), "rate")});
    if (auto it = jb.find("routes"); it != jb.end())
      for (const auto& el : *it)
        boundary.routes.push_back(
            {as_int(require(el, "n0", "route"), "n0"),
             static_cast<unsigned>(as_int(require(el, "mask", "route"), "mask")),
             as_int(require(el, "plane", "route"), "plane"),
             kind_from(as_string(require(el, "kind", "route"), "kind")),
             as_int(require(el, "jump", "route"), "jump"),
             as_int(require(el, "to", "route"), "to")});
  }
  return build_spec(c, K, std::move(planes), std::move(boundary));
}

}  // namespace

ProcessSpec parse_model_document(const Json& doc) {
  if (!doc.is_object()) throw BadParams("model document must be an object");
  std::string family = as_string(require(doc, "family", "model document"),
                                 "family");
  if (family == "raw") return parse_raw(doc);

  const Json& P = require(doc, "params", "preset model");
  if (!P.is_object()) throw BadParams("'params' must be an object");
  int c = as_int(require(P, "c", "params"), "c");
  std::vector<double> lambda =
      scalar_or_array(require(P, "lambda", "params"), "lambda");
  std::vector<double> split;
  if (auto it = P.find("split"); it != P.end())
    split = scalar_or_array(*it, "split");

  if (family == "erlang2-hetero") {
    if (lambda.size() != 1)
      throw BadParams("erlang2-hetero takes a single arrival rate");
    std::vector<double> mu = per_server(require(P, "mu", "params"), c, "mu");
    return preset_erlang2_hetero(c, lambda[0], mu, split);
  }
  if (family == "hypo2-batch") {
    std::vector<double> mu1 = per_server(require(P, "mu1", "params"), c, "mu1");
    std::vector<double> mu2 = per_server(require(P, "mu2", "params"), c, "mu2");
    return preset_hypo2_batch(c, lambda, mu1, mu2, split);
  }
  if (family == "mxmc-breakdown") {
    double mu = as_number(require(P, "mu", "params"), "mu");
    double theta = as_number(require(P, "theta", "params"), "theta");
    double nu = as_number(require(P, "nu", "params"), "nu");
    return preset_mxmc_breakdown(c, lambda, mu, theta, nu);
  }
  throw BadParams("unknown model family '" + family + "'");
}

ProcessSpec load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadParams("cannot open model document '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const std::exception& e) {
    throw BadParams("model document '" + path + "' is not valid: " + e.what());
  }
  return parse_model_document(doc);
}

Json ergodicity_to_json(const ErgodicityReport& report) {
  Json j;
  j["drift"] = report.drift;
  j["ergodic"] = report.ergodic;
  j["at_boundary"] = report.at_boundary;
  Json planes = Json::array();
  for (const auto& p : report.per_plane)
    planes.push_back(Json{{"pi0", p.pi0},
                          {"pi1", p.pi1},
                          {"contribution", p.contribution}});
  j["per_plane"] = planes;
  if (report.symmetric_drift) j["symmetric_drift"] = *report.symmetric_drift;
  return j;
}

Json basis_to_json(const ProductBasis& basis) {
  Json j;
  j["expected_forms"] = basis.expected_forms;
  j["form_count"] = static_cast<int>(basis.forms.size());
  j["degenerate"] = basis.degenerate;
  j["best_effort"] = basis.best_effort;
  j["incomplete"] = basis.incomplete;
  j["independence_condition"] = basis.independence_condition;

  Json uniq = Json::array();
  for (const auto& u : basis.unique_beta0)
    uniq.push_back(Json{{"beta0", cjson(u.beta0)},
                        {"abs_eta", u.abs_eta},
                        {"multiplicity", u.multiplicity},
                        {"degenerate", u.degenerate},
                        {"d_vanishes", u.d_vanishes}});
  j["unique_beta0"] = uniq;

  Json forms = Json::array();
  for (const auto& f : basis.forms) {
    Json betas = Json::array();
    for (const auto& b : f.betas) betas.push_back(cjson(b));
    forms.push_back(Json{{"beta0", cjson(f.beta0)},
                         {"betas", betas},
                         {"signs", f.signs.x},
                         {"eta", f.eta},
                         {"root_class", f.root_class},
                         {"residual", f.residual}});
  }
  j["forms"] = forms;

  Json rows = Json::array();
  for (const auto& r : basis.rows) {
    Json betas = Json::array();
    for (const auto& b : r.betas) betas.push_back(cjson(b));
    rows.push_back(
        Json{{"signs", r.signs.x}, {"beta0", cjson(r.beta0)}, {"betas", betas}});
  }
  j["rows"] = rows;

  Json off = Json::array();
  for (const auto& z : basis.offending_roots) off.push_back(cjson(z));
  j["offending_roots"] = off;
  j["diagnostics"] = basis.diagnostics;
  return j;
}

Json solution_to_json(const EquilibriumSolution& sol, int n_dump) {
  Json j;
  j["c"] = sol.spec.c;
  j["K"] = sol.spec.K;
  j["symmetric"] = sol.spec.symmetric;
  j["condition"] = sol.condition;
  j["omitted_residual"] = sol.omitted_residual;
  j["normalization"] = sol.normalization;
  j["max_abs_beta0"] = sol.max_abs_beta0;

  Json vp = Json::array();
  for (size_t i = 0; i < sol.v_probs.size(); ++i)
    vp.push_back(Json{{"id", sol.spec.boundary.v_states[i]},
                      {"p", sol.v_probs[i]}});
  j["v_probs"] = vp;

  Json forms = Json::array();
  for (size_t f = 0; f < sol.basis.forms.size(); ++f) {
    const auto& form = sol.basis.forms[f];
    Json betas = Json::array();
    for (const auto& b : form.betas) betas.push_back(cjson(b));
    forms.push_back(Json{{"beta0", cjson(form.beta0)},
                         {"betas", betas},
                         {"signs", form.signs.x},
                         {"alpha", cjson(sol.alphas[f])}});
  }
  j["forms"] = forms;

  const unsigned n_masks = 1u << sol.spec.c;
  Json pw = Json::array();
  for (int n0 = 0; n0 <= n_dump; ++n0)
    for (unsigned mask = 0; mask < n_masks; ++mask)
      pw.push_back(Json{{"n0", n0},
                        {"mask", mask},
                        {"p", evaluate_p(sol, WState{n0, mask})}});
  j["p"] = pw;

  if (sol.aggregated) {
    Json agg = Json::array();
    for (size_t e = 0; e < sol.aggregated->entries.size(); ++e) {
      const auto& en = sol.aggregated->entries[e];
      Json omega = Json::array();
      for (const auto& w : en.omega) omega.push_back(cjson(w));
      agg.push_back(Json{{"beta0", cjson(en.beta0)},
                         {"omega", omega},
                         {"gamma", cjson(sol.gammas[e])}});
    }
    j["aggregated"] = agg;
  }
  return j;
}

Json mixture_to_json(const WaitingTimeMixture& mix) {
  Json terms = Json::array();
  for (const auto& t : mix.terms)
    terms.push_back(Json{{"weight", cjson(t.weight)}, {"rate", cjson(t.rate)}});
  return Json{{"strip_mass", mix.strip_mass},
              {"t_max", mix.t_max},
              {"terms", terms}};
}

namespace {

std::string fmt2(Complex z) {
  char buf[64];
  if (std::abs(z.imag()) < 0.005) {
    std::snprintf(buf, sizeof(buf), "%.2f", z.real());
  } else {
    std::snprintf(buf, sizeof(buf), "%.2f%+.2fi", z.real(), z.imag());
  }
  return buf;
}

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string pad_left(const std::string& s, size_t w) {
  if (s.size() >= w) return s;
  return std::string(w - s.size(), ' ') + s;
}

}  // namespace

std::string roots_table(const ProductBasis& basis) {
  const int c = basis.rows.empty()
                    ? 0
                    : static_cast<int>(basis.rows.front().signs.x.size());

  // Group rows by the minus-mask of their sign vector, ascending.
  std::vector<size_t> idx(basis.rows.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto minus_mask = [&](const SignVector& s) {
    unsigned m = 0;
    for (size_t i = 0; i < s.x.size(); ++i)
      if (s.x[i] < 0) m |= 1u << i;
    return m;
  };
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    unsigned ma = minus_mask(basis.rows[a].signs);
    unsigned mb = minus_mask(basis.rows[b].signs);
    if (ma != mb) return ma < mb;
    const Complex& za = basis.rows[a].beta0;
    const Complex& zb = basis.rows[b].beta0;
    if (za.real() != zb.real()) return za.real() > zb.real();
    return za.imag() < zb.imag();
  });

  // Assemble cell text first so columns can be sized to their content.
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header;
  for (int i = 1; i <= c; ++i) header.push_back("x" + std::to_string(i));
  header.push_back("beta0");
  for (int i = 1; i <= c; ++i) header.push_back("beta" + std::to_string(i));
  cells.push_back(header);

  unsigned prev_mask = 0;
  bool first = true;
  for (size_t pos = 0; pos < idx.size(); ++pos) {
    const BasisRow& r = basis.rows[idx[pos]];
    unsigned m = minus_mask(r.signs);
    std::vector<std::string> row;
    bool lead = first || m != prev_mask;
    for (int i = 0; i < c; ++i)
      row.push_back(lead ? std::to_string(r.signs.x[static_cast<size_t>(i)])
                         : "");
    row.push_back(fmt2(r.beta0));
    for (const auto& b : r.betas) row.push_back(fmt2(b));
    cells.push_back(row);
    prev_mask = m;
    first = false;
  }

  std::vector<size_t> width(cells[0].size(), 0);
  for (const auto& row : cells)
    for (size_t col = 0; col < row.size(); ++col)
      width[col] = std::max(width[col], row[col].size());

  std::ostringstream os;
  for (const auto& row : cells) {
    for (size_t col = 0; col < row.size(); ++col) {
      if (col) os << "  ";
      if (col == static_cast<size_t>(c)) os << "|  ";
      os << pad_left(row[col], width[col]);
    }
    os << "\n";
  }
  return os.str();
}

std::string p_table_csv(const EquilibriumSolution& sol, int n_max) {
  std::ostringstream os;
  os << "n0,m,p\n";
  const unsigned n_masks = 1u << sol.spec.c;
  for (int n0 = 0; n0 <= n_max; ++n0) {
    for (int m = 0; m <= sol.spec.c; ++m) {
      double p = 0;
      for (unsigned mask = 0; mask < n_masks; ++mask)
        if (__builtin_popcount(mask) == m)
          p += evaluate_p(sol, WState{n0, mask});
      os << n0 << "," << m << "," << fmt12(p) << "\n";
    }
  }
  return os.str();
}

std::string waiting_csv(const WaitingTimeMixture& mix,
                        const std::vector<double>& t_grid) {
  std::ostringstream os;
  os << "t,F\n";
  for (double t : t_grid)
    os << fmt12(t) << "," << fmt12(evaluate_F(mix, t)) << "\n";
  return os.str();
}

void assert_finite(const Json& j, const std::string& context) {
  if (j.is_number_float()) {
    double v = j.get<double>();
    if (!std::isfinite(v))
      throw SolverError("non-finite value in " + context);
  } else if (j.is_object() || j.is_array()) {
    for (const auto& el : j) assert_finite(el, context);
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::ios_base::failure("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw std::ios_base::failure("failed while writing '" + path + "'");
}

}  // namespace prodform
