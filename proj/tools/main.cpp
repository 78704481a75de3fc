#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "prodform/equilibrium.hpp"
#include "prodform/io.hpp"
#include "prodform/model.hpp"
#include "prodform/oracle.hpp"
#include "prodform/passage.hpp"
#include "prodform/spectral.hpp"

namespace {

using prodform::Json;

struct RunConfig {
  std::string model_path;
  std::string command;
  int N = 400;
  double tol = -1;
  std::string out_dir = ".";
  std::string format = "json";
  std::uint64_t seed = 1;
};

void emit(const RunConfig& cfg, const std::string& name,
          const std::string& content) {
  std::filesystem::path p = std::filesystem::path(cfg.out_dir) / name;
  prodform::write_file(p.string(), content);
}

void emit_json(const RunConfig& cfg, const std::string& name, Json j) {
  j["seed"] = cfg.seed;
  prodform::assert_finite(j, name);
  emit(cfg, name, j.dump(2) + "\n");
}

/// key,value flattening for the csv output format.
std::string kv_csv(const Json& j, const std::string& prefix = "") {
  std::string out;
  if (j.is_object()) {
    for (const auto& [key, val] : j.items())
      out += kv_csv(val, prefix.empty() ? key : prefix + "." + key);
  } else if (j.is_array()) {
    int i = 0;
    for (const auto& el : j)
      out += kv_csv(el, prefix + "[" + std::to_string(i++) + "]");
  } else {
    out += prefix + "," + j.dump() + "\n";
  }
  return out;
}

void emit_doc(const RunConfig& cfg, const std::string& stem, const Json& j) {
  if (cfg.format == "json") {
    emit_json(cfg, stem + ".json", j);
  } else {
    Json full = j;
    full["seed"] = cfg.seed;
    prodform::assert_finite(full, stem);
    emit(cfg, stem + ".csv", kv_csv(full));
  }
}

int run_check(const RunConfig& cfg, const prodform::ProcessSpec& spec) {
  auto gf = prodform::generating_functions(spec);
  auto rep = prodform::check_ergodicity(gf);
  std::cout << "drift " << rep.drift << ": "
            << (rep.ergodic ? "ergodic"
                            : (rep.at_boundary ? "at the ergodicity boundary"
                                               : "not ergodic"))
            << "\n";
  emit_doc(cfg, "check", prodform::ergodicity_to_json(rep));
  return 0;
}

int run_roots(const RunConfig& cfg, const prodform::ProcessSpec& spec,
              const prodform::SolverOptions& opts) {
  auto gf = prodform::generating_functions(spec);
  auto basis = prodform::build_basis(spec, gf, opts);
  std::cout << prodform::roots_table(basis);
  std::cout << "forms " << basis.forms.size() << " of " << basis.expected_forms
            << (basis.degenerate ? " (degenerate)" : "")
            << (basis.incomplete ? " (incomplete)" : "") << "\n";
  emit_doc(cfg, "roots", prodform::basis_to_json(basis));
  if (cfg.format == "json") emit(cfg, "roots.txt", prodform::roots_table(basis));
  return (basis.degenerate || basis.incomplete) ? 3 : 0;
}

int run_solve(const RunConfig& cfg, const prodform::ProcessSpec& spec,
              const prodform::SolverOptions& opts) {
  auto sol = prodform::solve_equilibrium(spec, opts);
  std::cout << "forms " << sol.basis.forms.size() << ", condition "
            << sol.condition << ", normalization " << sol.normalization
            << ", dominant decay " << sol.max_abs_beta0 << "\n";
  emit_doc(cfg, "solve", prodform::solution_to_json(sol));
  emit(cfg, "p_table.csv", prodform::p_table_csv(sol, 20));
  return 0;
}

int run_waiting(const RunConfig& cfg, const prodform::ProcessSpec& spec,
                const prodform::SolverOptions& opts) {
  auto sol = prodform::solve_equilibrium(spec, opts);
  auto lm = prodform::level_matrices(spec);
  auto mix = prodform::waiting_time_mixture(sol, lm, opts);
  std::cout << "strip mass " << mix.strip_mass << ", " << mix.terms.size()
            << " terms, horizon " << mix.t_max << "\n";
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(mix.t_max * i / 100.0);
  emit_doc(cfg, "waiting", prodform::mixture_to_json(mix));
  emit(cfg, "waiting.csv", prodform::waiting_csv(mix, grid));
  return 0;
}

int run_validate(const RunConfig& cfg, const prodform::ProcessSpec& spec,
                 const prodform::SolverOptions& opts) {
  auto sol = prodform::solve_equilibrium(spec, opts);
  auto oracle = prodform::truncated_steady_state(spec, cfg.N);

  double max_v = 0;
  for (size_t v = 0; v < sol.v_probs.size(); ++v)
    max_v = std::max(max_v, std::abs(sol.v_probs[v] -
                                     oracle.prob_v(static_cast<int>(v))));
  double max_w = 0;
  const int n_check = std::min(20, oracle.cap);
  const unsigned n_masks = 1u << spec.c;
  for (int n0 = 0; n0 <= n_check; ++n0)
    for (unsigned mask = 0; mask < n_masks; ++mask) {
      prodform::WState s{n0, mask};
      max_w = std::max(max_w,
                       std::abs(prodform::evaluate_p(sol, s, opts) -
                                oracle.prob(s)));
    }

  Json j;
  j["cap"] = oracle.cap;
  j["doubling_delta"] = oracle.max_doubling_delta;
  j["levels_checked"] = n_check;
  j["max_error_boundary"] = max_v;
  j["max_error_interior"] = max_w;
  j["normalization"] = sol.normalization;
  j["condition"] = sol.condition;
  std::cout << "max deviation: boundary " << max_v << ", interior " << max_w
            << " (levels 0.." << n_check << ", cap " << oracle.cap << ")\n";
  emit_doc(cfg, "validate", j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{
      "Analytic equilibrium and waiting-time solver for structured Markov "
      "models (one unbounded queue dimension plus binary server dimensions)"};
  app.add_option("--model", cfg.model_path, "model document (JSON)")
      ->required();
  app.add_option("--command", cfg.command,
                 "one of: check, roots, solve, waiting-time, validate")
      ->required()
      ->check(CLI::IsMember(
          {"check", "roots", "solve", "waiting-time", "validate"}));
  app.add_option("--N", cfg.N, "truncation cap for the validating oracle")
      ->check(CLI::PositiveNumber);
  app.add_option("--tol", cfg.tol, "override the form residual tolerance");
  app.add_option("--out", cfg.out_dir, "output directory (default .)");
  app.add_option("--format", cfg.format, "artifact format")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed", cfg.seed, "seed recorded in artifacts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    prodform::ProcessSpec spec = prodform::load_model_file(cfg.model_path);
    prodform::SolverOptions opts;
    if (cfg.tol > 0) opts.form_tol = cfg.tol;
    std::filesystem::create_directories(cfg.out_dir);

    if (cfg.command == "check") return run_check(cfg, spec);
    if (cfg.command == "roots") return run_roots(cfg, spec, opts);
    if (cfg.command == "solve") return run_solve(cfg, spec, opts);
    if (cfg.command == "waiting-time") return run_waiting(cfg, spec, opts);
    if (cfg.command == "validate") return run_validate(cfg, spec, opts);
    std::cerr << "unknown command '" << cfg.command << "'\n";
    return 1;
  } catch (const prodform::AssumptionViolation& e) {
    std::cerr << "assumption violation: " << e.what() << "\n";
    return 2;
  } catch (const prodform::InconsistentK& e) {
    std::cerr << "assumption violation: " << e.what() << "\n";
    return 2;
  } catch (const prodform::NotSymmetric& e) {
    std::cerr << "assumption violation: " << e.what() << "\n";
    return 2;
  } catch (const prodform::AssumptionFourViolated& e) {
    std::cerr << "assumption violation: " << e.what() << "\n";
    return 2;
  } catch (const prodform::DegenerateBasisInput& e) {
    std::cerr << "degenerate basis: " << e.what() << "\n";
    return 3;
  } catch (const prodform::BestEffortIncomplete& e) {
    std::cerr << "degenerate basis: " << e.what() << "\n";
    return 3;
  } catch (const prodform::BadParams& e) {
    std::cerr << "bad model document: " << e.what() << "\n";
    return 1;
  } catch (const prodform::SolverError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
