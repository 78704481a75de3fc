#pragma once

#include <stdexcept>
#include <string>

namespace prodform {

/// Base class for every failure the solver raises on purpose.
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

// --- model construction -----------------------------------------------------

/// A structural assumption on the rate planes fails; the message lists every
/// violated clause.
struct AssumptionViolation : SolverError { using SolverError::SolverError; };

/// A plane carries a positive-jump rate beyond the declared maximum jump.
struct InconsistentK : SolverError { using SolverError::SolverError; };

/// Preset or document parameters are malformed (lengths, signs, ranges).
struct BadParams : SolverError { using SolverError::SolverError; };

// --- root finding ------------------------------------------------------------

/// The scalar root search found no sign change on (0,1) even after refining.
struct NoBracket : SolverError { using SolverError::SolverError; };

/// The scalar root search found more than one sign change where exactly one
/// root is expected.
struct MultipleRoots : SolverError { using SolverError::SolverError; };

/// A root-count assertion on the unit disc failed (numerical failure or an
/// assumption breach).
struct RootCountMismatch : SolverError { using SolverError::SolverError; };

/// A root sits on a vanishing discriminant, collapsing the two inner-equation
/// branches into one.
struct DegenerateDiscriminant : SolverError { using SolverError::SolverError; };

/// D(beta0) vanishes at a root, so the closed form for the per-dimension
/// ratios is undefined there.
struct DVanishes : SolverError { using SolverError::SolverError; };

/// A constructed product form fails its residual validation.
struct ResidualTooLarge : SolverError { using SolverError::SolverError; };

/// Deduplication did not yield the expected number of distinct roots.
struct UniqueCountMismatch : SolverError { using SolverError::SolverError; };

/// The best-effort search (non-symmetric, K >= 2) validated fewer forms than
/// the expected count.
struct BestEffortIncomplete : SolverError { using SolverError::SolverError; };

// --- boundary system ----------------------------------------------------------

/// A degenerate (or incomplete) basis was passed to the boundary assembler.
struct DegenerateBasisInput : SolverError { using SolverError::SolverError; };

/// The boundary system is numerically singular; the message carries the
/// condition estimate.
struct SingularSystem : SolverError { using SolverError::SolverError; };

/// The balance equation displaced by the normalization row is not satisfied
/// by the computed solution.
struct ResidualCheckFailed : SolverError { using SolverError::SolverError; };

/// A probability was requested for a state outside the model's state space.
struct StateOutOfDomain : SolverError { using SolverError::SolverError; };

// --- aggregation / waiting time ----------------------------------------------

/// An aggregated-path operation was invoked on a spec whose planes differ.
struct NotSymmetric : SolverError { using SolverError::SolverError; };

/// The waiting-time mixture requires scalar arrival matrices; this spec's
/// positive-jump level matrices are not multiples of the identity.
struct AssumptionFourViolated : SolverError { using SolverError::SolverError; };

/// A mixture term has a non-decaying exponent; numerically a red flag.
struct PositiveExponent : SolverError { using SolverError::SolverError; };

// --- oracle --------------------------------------------------------------------

/// Truncation doubling or ODE step control failed to reach the tolerance.
struct NotConverged : SolverError { using SolverError::SolverError; };

/// The truncated generator is reducible (steady-state solve is singular).
struct ReducibleChain : SolverError { using SolverError::SolverError; };

}  // namespace prodform
