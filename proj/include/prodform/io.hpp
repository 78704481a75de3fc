#pragma once

#include <string>

#include <json.hpp>

#include "prodform/equilibrium.hpp"
#include "prodform/model.hpp"
#include "prodform/passage.hpp"

namespace prodform {

using Json = nlohmann::ordered_json;

/// Parse a model document: {"family": "...", "params": {...}} for presets or
/// {"family": "raw", ...} with explicit planes and boundary description.
/// Throws BadParams on malformed documents.
ProcessSpec parse_model_document(const Json& doc);
ProcessSpec load_model_file(const std::string& path);

Json ergodicity_to_json(const ErgodicityReport& report);
Json basis_to_json(const ProductBasis& basis);
Json solution_to_json(const EquilibriumSolution& sol, int n_dump = 20);
Json mixture_to_json(const WaitingTimeMixture& mix);

/// Per-sign-vector root table in the two-decimal layout.
std::string roots_table(const ProductBasis& basis);

/// Aggregated probability table, one line per (n0, m), 12 significant digits.
std::string p_table_csv(const EquilibriumSolution& sol, int n_max);

/// Two-column CSV "t,F" of the waiting-time tail.
std::string waiting_csv(const WaitingTimeMixture& mix,
                        const std::vector<double>& t_grid);

/// Throw SolverError if any number in the document is non-finite.
void assert_finite(const Json& j, const std::string& context);

void write_file(const std::string& path, const std::string& content);

}  // namespace prodform
