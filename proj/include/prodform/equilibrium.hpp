#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "prodform/model.hpp"
#include "prodform/options.hpp"
#include "prodform/spectral.hpp"

namespace prodform {

/// The dense real linear system for the boundary unknowns: one balance
/// equation per boundary-pool state and per interior state with n0 < K, with
/// the equation of the lexicographically smallest interior state replaced by
/// the normalization row.  Complex weights are folded into (Re, Im) pairs.
struct BoundarySystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
  std::vector<std::string> unknown_labels;

  int n_v = 0;          ///< boundary-pool unknowns come first
  int replaced_row = 0;  ///< row holding the normalization equation
  Eigen::RowVectorXd replaced_equation;  ///< the displaced balance row

  /// Column layout of the folded weights: for each distinct form either one
  /// real column or an (Re, Im) pair shared with its conjugate partner.
  struct FormColumn {
    int form = -1;      ///< representative form index
    int partner = -1;   ///< conjugate partner (== form when real)
    int col = -1;       ///< first column
    bool is_pair = false;
  };
  std::vector<FormColumn> form_columns;

  ProcessSpec spec;
  ProductBasis basis;
};

/// The solved equilibrium: weights per form, boundary-pool probabilities, and
/// (for symmetric specs) the aggregated weights gamma.
struct EquilibriumSolution {
  ProcessSpec spec;
  ProductBasis basis;
  std::vector<Complex> alphas;  ///< aligned with basis.forms
  std::vector<double> v_probs;  ///< aligned with spec.boundary.v_states

  std::optional<AggregatedBasis> aggregated;  ///< symmetric specs only
  std::vector<Complex> gammas;                ///< aligned with aggregated entries

  double condition = 0;          ///< boundary-system condition estimate
  double omitted_residual = 0;   ///< residual of the displaced balance equation
  double normalization = 0;      ///< total mass, should be 1
  double max_abs_beta0 = 0;      ///< dominant decay rate
};

/// Assemble the boundary system.  Throws DegenerateBasisInput (degenerate
/// basis), BestEffortIncomplete, or SingularSystem later at solve time.
BoundarySystem assemble_boundary(const ProcessSpec& spec, const ProductBasis& basis,
                                 const SolverOptions& opts = {});

/// Solve the assembled system and validate the displaced equation.
EquilibriumSolution solve_boundary(const BoundarySystem& system,
                                   const SolverOptions& opts = {});

/// Convenience: basis construction + assembly + solve.
EquilibriumSolution solve_equilibrium(const ProcessSpec& spec,
                                      const SolverOptions& opts = {});

/// Equilibrium probability of an interior state (any n0 >= 0).
double evaluate_p(const EquilibriumSolution& sol, const WState& s,
                  const SolverOptions& opts = {});

/// Equilibrium probability of a boundary-pool state by id.
double evaluate_p(const EquilibriumSolution& sol, const std::string& v_id);

/// Aggregated probability p(n0, m) = sum over states with m raised planes.
/// Requires a symmetric spec.
double evaluate_p_aggregated(const EquilibriumSolution& sol, int n0, int m,
                             const SolverOptions& opts = {});

}  // namespace prodform
