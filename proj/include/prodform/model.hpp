#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prodform/errors.hpp"

namespace prodform {

using Complex = std::complex<double>;

/// The four per-plane transition families.  With n_i denoting the binary
/// coordinate of plane i and k the (signed) jump of the unbounded coordinate:
///   A: (n0, 0) -> (n0+k, 1)    B: (n0, 0) -> (n0+k, 0)
///   C: (n0, 1) -> (n0+k, 1)    D: (n0, 1) -> (n0+k, 0)
enum class RateKind { A, B, C, D };

const char* to_string(RateKind k);

/// Non-negative jump rates of one plane, for jumps k in {-max_down .. max_up}.
/// max_up is the shared positive jump bound K of the spec; max_down is this
/// plane's largest downward jump L_i (finite by design).
class RatePlane {
 public:
  RatePlane() = default;
  RatePlane(int max_down, int max_up);

  int max_down() const { return max_down_; }
  int max_up() const { return max_up_; }

  double a(int k) const { return get(a_, k); }
  double b(int k) const { return get(b_, k); }
  double c(int k) const { return get(c_, k); }
  double d(int k) const { return get(d_, k); }
  double rate(RateKind kind, int k) const;

  void set(RateKind kind, int k, double value);

  bool operator==(const RatePlane& other) const;

 private:
  double get(const std::vector<double>& v, int k) const {
    int idx = k + max_down_;
    if (idx < 0 || idx >= static_cast<int>(v.size())) return 0.0;
    return v[idx];
  }

  int max_down_ = 0;
  int max_up_ = 0;
  std::vector<double> a_, b_, c_, d_;  // index = k + max_down_
};

/// One interior state: the unbounded coordinate n0 >= 0 plus the c binary
/// coordinates packed into a mask (bit i set <=> n_i = 1).
struct WState {
  int n0 = 0;
  unsigned mask = 0;
  bool operator==(const WState& o) const { return n0 == o.n0 && mask == o.mask; }
  bool operator<(const WState& o) const {
    return n0 != o.n0 ? n0 < o.n0 : mask < o.mask;
  }
};

/// Rate between two boundary-pool states.
struct VTransition {
  int from = 0, to = 0;
  double rate = 0;
};

/// Rate from a boundary-pool state into an interior state with n0 < K.
struct EntryRate {
  int from_v = 0;
  WState to;
  double rate = 0;
};

/// Routing of one interior transition that would jump below level 0: the
/// (state, plane, kind, jump) tuple lands in boundary state `to_v`.
struct WToVRoute {
  int n0 = 0;
  unsigned mask = 0;
  int plane = 0;
  RateKind kind = RateKind::A;
  int jump = 0;
  int to_v = 0;
};

/// The finite, unstructured part of the state space plus everything needed to
/// glue it to the interior lattice.  May be empty; in that case interior jumps
/// that would land below level 0 are clipped to level 0 instead.
struct BoundarySpec {
  std::vector<std::string> v_states;
  std::vector<VTransition> v_rates;
  std::vector<EntryRate> entries;
  std::vector<WToVRoute> routes;

  int size() const { return static_cast<int>(v_states.size()); }
  bool empty() const { return v_states.empty(); }
  int index_of(const std::string& id) const;  // -1 if unknown
};

/// Parameters a preset was built from; retained so the event-level simulator
/// can reconstruct the queueing semantics.
struct PresetParams {
  std::string family;
  int c = 0;
  std::vector<double> lambda;  // lambda[k-1] = arrival rate of batches of size k
  std::vector<double> mu1, mu2;  // per-server phase rates (two-phase families)
  double mu = 0, theta = 0, nu = 0;  // breakdown family
  std::vector<double> split;  // per-plane arrival weights, sums to 1
};

/// A validated process specification.
struct ProcessSpec {
  int c = 1;  ///< number of binary dimensions
  int K = 1;  ///< largest upward jump
  std::vector<RatePlane> planes;
  BoundarySpec boundary;
  bool symmetric = false;  ///< all planes identical
  std::optional<PresetParams> preset;

  int max_down() const;  ///< largest downward jump over all planes
};

/// One interior transition as enumerated from a source state.
struct Transition {
  bool to_v = false;
  WState w;     // valid when !to_v
  int v = -1;   // valid when to_v
  double rate = 0;
};

/// Generating-function view of one plane: G(z) = sum_k g_k z^{K-k}, stored as
/// the coefficient vector coeffs[j] * z^j of degree at most K + L.
struct PlaneGf {
  int K = 0, L = 0;
  std::vector<double> A, B, C, D;  // coefficient vectors
  double A1 = 0, B1 = 0, C1 = 0, D1 = 0;      // values at z = 1
  double dA1 = 0, dB1 = 0, dC1 = 0, dD1 = 0;  // derivatives at z = 1

  double S() const { return A1 + B1 + C1 + D1; }

  Complex evalA(Complex z) const;
  Complex evalB(Complex z) const;
  Complex evalC(Complex z) const;
  Complex evalD(Complex z) const;

  /// F(z) = z^K (A(1)+B(1)-C(1)-D(1)) - B(z) + C(z)
  Complex F(Complex z) const;
  /// F(z)^2 + 4 A(z) D(z)
  Complex disc(Complex z) const;
};

struct GeneratingFunctions {
  int c = 0, K = 0;
  bool symmetric = false;
  std::vector<PlaneGf> plane;

  /// Total rate mass, used to normalize residuals.
  double rate_scale() const;
};

struct ErgodicityReport {
  struct PerPlane {
    double pi0 = 0, pi1 = 0;    ///< stationary split of the binary coordinate
    double contribution = 0;    ///< this plane's share of the drift
  };
  double drift = 0;  ///< positive iff the process is ergodic
  bool ergodic = false;
  bool at_boundary = false;  ///< drift is exactly zero
  std::vector<PerPlane> per_plane;
  std::optional<double> symmetric_drift;  ///< simplified one-plane form
};

// --- operations ---------------------------------------------------------------

/// Collect every violated structural-assumption clause; empty means valid.
std::vector<std::string> validate_spec(int c, int K,
                                       const std::vector<RatePlane>& planes,
                                       const BoundarySpec& boundary);

/// Validate and assemble a spec.  Throws AssumptionViolation listing every
/// failed clause, or InconsistentK / BadParams for structural problems.
ProcessSpec build_spec(int c, int K, std::vector<RatePlane> planes,
                       BoundarySpec boundary);

/// Enumerate all interior transitions out of `s`, including those routed into
/// the boundary pool (or clipped to level 0 when the pool is empty).
std::vector<Transition> transitions_from(const ProcessSpec& spec, const WState& s);

/// Total outgoing rate of an interior state; depends only on the mask.
double total_outflow(const ProcessSpec& spec, unsigned mask);

GeneratingFunctions generating_functions(const ProcessSpec& spec);

/// Mean-drift ergodicity test.
ErgodicityReport check_ergodicity(const GeneratingFunctions& gf);

// --- presets -------------------------------------------------------------------

/// c heterogeneous two-phase (Erlang-2) servers, Poisson arrivals of rate
/// lambda split across planes by `split` (equal shares by default).
ProcessSpec preset_erlang2_hetero(int c, double lambda, std::vector<double> mu,
                                  std::vector<double> split = {});

/// Batch-arrival multi-server queue with server breakdowns: batches of size k
/// at rate lambda[k-1], service rate mu per operative server, breakdown rate
/// theta, repair rate nu.
ProcessSpec preset_mxmc_breakdown(int c, std::vector<double> lambda, double mu,
                                  double theta, double nu);

/// c two-phase servers with distinct phase rates mu1[i], mu2[i] and batch
/// arrivals lambda[k-1] split across planes by `split`.
ProcessSpec preset_hypo2_batch(int c, std::vector<double> lambda,
                               std::vector<double> mu1, std::vector<double> mu2,
                               std::vector<double> split = {});

}  // namespace prodform
