#include "prodform/equilibrium.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace prodform {

namespace {

bool conj_match(const ProductForm& a, const ProductForm& b, double tol) {
  if (std::abs(a.beta0 - std::conj(b.beta0)) > tol) return false;
  for (size_t i = 0; i < a.betas.size(); ++i)
    if (std::abs(a.betas[i] - std::conj(b.betas[i])) >
        tol * (1.0 + std::abs(a.betas[i])))
      return false;
  return true;
}

bool is_real_form(const ProductForm& f, double tol) {
  if (std::abs(f.beta0.imag()) > tol) return false;
  for (const Complex& b : f.betas)
    if (std::abs(b.imag()) > tol * (1.0 + std::abs(b))) return false;
  return true;
}

}  // namespace

BoundarySystem assemble_boundary(const ProcessSpec& spec, const ProductBasis& basis,
                                 const SolverOptions& opts) {
  if (basis.degenerate)
    throw DegenerateBasisInput(
        "the product-form basis is degenerate; the boundary system would be "
        "rank deficient");
  if (basis.incomplete)
    throw BestEffortIncomplete(
        "the best-effort basis has fewer forms than unknowns");

  BoundarySystem sys;
  sys.spec = spec;
  sys.basis = basis;

  const int c = spec.c;
  const int K = spec.K;
  const int n_v = spec.boundary.size();
  const int n_forms = static_cast<int>(basis.forms.size());
  sys.n_v = n_v;

  // Fold the complex weights into real columns: one column per real form,
  // an (Re, Im) pair per conjugate pair of forms.
  std::vector<int> owner(static_cast<size_t>(n_forms), -1);
  int col = n_v;
  for (int f = 0; f < n_forms; ++f) {
    if (owner[static_cast<size_t>(f)] >= 0) continue;
    const ProductForm& form = basis.forms[static_cast<size_t>(f)];
    BoundarySystem::FormColumn fc;
    fc.form = f;
    fc.col = col;
    if (is_real_form(form, opts.dedup_tol)) {
      fc.partner = f;
      fc.is_pair = false;
      owner[static_cast<size_t>(f)] = static_cast<int>(sys.form_columns.size());
      col += 1;
    } else {
      int partner = -1;
      for (int g = f + 1; g < n_forms; ++g) {
        if (owner[static_cast<size_t>(g)] >= 0) continue;
        if (conj_match(form, basis.forms[static_cast<size_t>(g)], opts.dedup_tol)) {
          partner = g;
          break;
        }
      }
      if (partner < 0) {
        std::ostringstream os;
        os << "complex form without a conjugate partner (root "
           << form.beta0.real() << (form.beta0.imag() >= 0 ? "+" : "")
           << form.beta0.imag() << "i)";
        throw SingularSystem(os.str());
      }
      fc.partner = partner;
      fc.is_pair = true;
      owner[static_cast<size_t>(f)] = static_cast<int>(sys.form_columns.size());
      owner[static_cast<size_t>(partner)] = static_cast<int>(sys.form_columns.size());
      col += 2;
    }
    sys.form_columns.push_back(fc);
  }
  const int n_unknown = col;
  const int n_eq = n_v + K * (1 << c);
  if (n_eq != n_unknown) {
    std::ostringstream os;
    os << "boundary system is not square: " << n_eq << " equations vs "
       << n_unknown << " unknowns";
    throw SingularSystem(os.str());
  }

  sys.unknown_labels.assign(static_cast<size_t>(n_unknown), "");
  for (int v = 0; v < n_v; ++v)
    sys.unknown_labels[static_cast<size_t>(v)] =
        "p(" + spec.boundary.v_states[static_cast<size_t>(v)] + ")";
  for (const auto& fc : sys.form_columns) {
    std::string tag = std::to_string(fc.form);
    if (fc.is_pair) {
      sys.unknown_labels[static_cast<size_t>(fc.col)] = "Re alpha_" + tag;
      sys.unknown_labels[static_cast<size_t>(fc.col) + 1] = "Im alpha_" + tag;
    } else {
      sys.unknown_labels[static_cast<size_t>(fc.col)] = "alpha_" + tag;
    }
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_eq, n_unknown);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_eq);

  auto w_row = [&](const WState& s) { return n_v + s.n0 * (1 << c) + static_cast<int>(s.mask); };

  // Add `scale * p(state)` to a row, expanding interior states through the
  // basis and folding complex weights into the (Re, Im) column pairs.
  auto add_w = [&](int row, const WState& s, double scale) {
    for (const auto& fc : sys.form_columns) {
      Complex v = basis.forms[static_cast<size_t>(fc.form)].value(s);
      if (fc.is_pair) {
        A(row, fc.col) += scale * 2.0 * v.real();
        A(row, fc.col + 1) += scale * (-2.0) * v.imag();
      } else {
        A(row, fc.col) += scale * v.real();
      }
    }
  };

  // Outflow terms.
  for (int v = 0; v < n_v; ++v) {
    double out = 0;
    for (const auto& t : spec.boundary.v_rates)
      if (t.from == v) out += t.rate;
    for (const auto& e : spec.boundary.entries)
      if (e.from_v == v) out += e.rate;
    A(v, v) += out;
  }
  for (int n0 = 0; n0 < K; ++n0)
    for (unsigned mask = 0; mask < (1u << c); ++mask) {
      WState s{n0, mask};
      add_w(w_row(s), s, total_outflow(spec, mask));
    }

  // Inflow terms, scattered from every source that can reach a balance state.
  for (const auto& t : spec.boundary.v_rates) A(t.to, t.from) -= t.rate;
  for (const auto& e : spec.boundary.entries) A(w_row(e.to), e.from_v) -= e.rate;

  const int L = spec.max_down();
  for (int n0 = 0; n0 < K + L; ++n0) {
    for (unsigned mask = 0; mask < (1u << c); ++mask) {
      WState s{n0, mask};
      for (const auto& t : transitions_from(spec, s)) {
        if (t.to_v) {
          add_w(t.v, s, -t.rate);
        } else if (t.w.n0 < K) {
          add_w(w_row(t.w), s, -t.rate);
        }
      }
    }
  }

  // Swap the balance equation of the lexicographically smallest interior
  // boundary state for the normalization row.
  sys.replaced_row = w_row(WState{0, 0});
  sys.replaced_equation = A.row(sys.replaced_row);
  A.row(sys.replaced_row).setZero();
  for (int v = 0; v < n_v; ++v) A(sys.replaced_row, v) = 1.0;
  for (const auto& fc : sys.form_columns) {
    const ProductForm& form = basis.forms[static_cast<size_t>(fc.form)];
    Complex total = 1.0 / (1.0 - form.beta0);
    for (const Complex& b : form.betas) total *= (1.0 + b);
    if (fc.is_pair) {
      A(sys.replaced_row, fc.col) = 2.0 * total.real();
      A(sys.replaced_row, fc.col + 1) = -2.0 * total.imag();
    } else {
      A(sys.replaced_row, fc.col) = total.real();
    }
  }
  rhs(sys.replaced_row) = 1.0;

  sys.matrix = std::move(A);
  sys.rhs = std::move(rhs);
  return sys;
}

EquilibriumSolution solve_boundary(const BoundarySystem& sys,
                                   const SolverOptions& opts) {
  const int n = static_cast<int>(sys.matrix.rows());

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.matrix,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  double smax = svd.singularValues()(0);
  double smin = svd.singularValues()(n - 1);
  double cond = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond < opts.cond_max)) {
    std::ostringstream os;
    os << "boundary system condition estimate " << cond << " exceeds "
       << opts.cond_max;
    throw SingularSystem(os.str());
  }
  Eigen::VectorXd x = svd.solve(sys.rhs);

  // The displaced balance equation must hold automatically.
  double row_scale = sys.replaced_equation.cwiseAbs().maxCoeff();
  double omitted = std::abs(sys.replaced_equation.dot(x)) / std::max(1.0, row_scale);
  if (omitted > opts.form_tol) {
    std::ostringstream os;
    os << "displaced balance equation has residual " << omitted
       << "; the basis does not close the boundary system";
    throw ResidualCheckFailed(os.str());
  }

  EquilibriumSolution sol;
  sol.spec = sys.spec;
  sol.basis = sys.basis;
  sol.condition = cond;
  sol.omitted_residual = omitted;

  sol.v_probs.resize(static_cast<size_t>(sys.n_v));
  for (int v = 0; v < sys.n_v; ++v) sol.v_probs[static_cast<size_t>(v)] = x(v);

  sol.alphas.assign(sys.basis.forms.size(), Complex(0, 0));
  for (const auto& fc : sys.form_columns) {
    if (fc.is_pair) {
      Complex a(x(fc.col), x(fc.col + 1));
      sol.alphas[static_cast<size_t>(fc.form)] = a;
      sol.alphas[static_cast<size_t>(fc.partner)] = std::conj(a);
    } else {
      sol.alphas[static_cast<size_t>(fc.form)] = Complex(x(fc.col), 0.0);
    }
  }

  // Total mass recomputed directly from the closed forms.
  Complex mass(0, 0);
  for (double vp : sol.v_probs) mass += vp;
  for (size_t f = 0; f < sys.basis.forms.size(); ++f) {
    const ProductForm& form = sys.basis.forms[f];
    Complex total = 1.0 / (1.0 - form.beta0);
    for (const Complex& b : form.betas) total *= (1.0 + b);
    mass += sol.alphas[f] * total;
  }
  sol.normalization = mass.real();

  sol.max_abs_beta0 = 0;
  for (const auto& form : sys.basis.forms)
    sol.max_abs_beta0 = std::max(sol.max_abs_beta0, std::abs(form.beta0));

  if (sys.spec.symmetric && !sys.basis.degenerate && !sys.basis.best_effort) {
    GeneratingFunctions gf = generating_functions(sys.spec);
    sol.aggregated = aggregate(sys.basis, gf, opts);
    sol.gammas.assign(sol.aggregated->entries.size(), Complex(0, 0));
    for (size_t f = 0; f < sys.basis.forms.size(); ++f) {
      int cls = sys.basis.forms[f].root_class;
      if (cls >= 0 && cls < static_cast<int>(sol.gammas.size()))
        sol.gammas[static_cast<size_t>(cls)] += sol.alphas[f];
    }
  }
  return sol;
}

EquilibriumSolution solve_equilibrium(const ProcessSpec& spec,
                                      const SolverOptions& opts) {
  GeneratingFunctions gf = generating_functions(spec);
  ErgodicityReport rep = check_ergodicity(gf);
  if (!rep.ergodic) {
    std::ostringstream os;
    os << "the process is not ergodic (drift " << rep.drift << ")";
    throw AssumptionViolation(os.str());
  }
  ProductBasis basis = build_basis(spec, gf, opts);
  BoundarySystem sys = assemble_boundary(spec, basis, opts);
  return solve_boundary(sys, opts);
}

double evaluate_p(const EquilibriumSolution& sol, const WState& s,
                  const SolverOptions& opts) {
  if (s.n0 < 0 || s.mask >= (1u << sol.spec.c))
    throw StateOutOfDomain("interior state outside the lattice");
  Complex p(0, 0);
  for (size_t f = 0; f < sol.basis.forms.size(); ++f)
    p += sol.alphas[f] * sol.basis.forms[f].value(s);
  if (std::abs(p.imag()) > opts.imag_tol * (1.0 + std::abs(p))) {
    std::ostringstream os;
    os << "probability at (" << s.n0 << ", mask " << s.mask
       << ") has imaginary part " << p.imag();
    throw ResidualCheckFailed(os.str());
  }
  return p.real();
}

double evaluate_p(const EquilibriumSolution& sol, const std::string& v_id) {
  int v = sol.spec.boundary.index_of(v_id);
  if (v < 0) throw StateOutOfDomain("unknown boundary state '" + v_id + "'");
  return sol.v_probs[static_cast<size_t>(v)];
}

double evaluate_p_aggregated(const EquilibriumSolution& sol, int n0, int m,
                             const SolverOptions& opts) {
  if (!sol.aggregated)
    throw NotSymmetric("aggregated evaluation requires a symmetric solution");
  if (n0 < 0 || m < 0 || m > sol.spec.c)
    throw StateOutOfDomain("aggregated state outside the strip");
  Complex p(0, 0);
  for (size_t j = 0; j < sol.aggregated->entries.size(); ++j) {
    const AggregatedEntry& e = sol.aggregated->entries[j];
    p += sol.gammas[j] * std::pow(e.beta0, n0) * e.omega[static_cast<size_t>(m)];
  }
  if (std::abs(p.imag()) > opts.imag_tol * (1.0 + std::abs(p))) {
    std::ostringstream os;
    os << "aggregated probability at (" << n0 << ", " << m
       << ") has imaginary part " << p.imag();
    throw ResidualCheckFailed(os.str());
  }
  return p.real();
}

}  // namespace prodform
