#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "prodform/model.hpp"

namespace prodform {

namespace {

std::vector<double> resolve_split(int c, std::vector<double> split) {
  if (split.empty())
    return std::vector<double>(static_cast<size_t>(c), 1.0 / c);
  if (static_cast<int>(split.size()) != c)
    throw BadParams("arrival split needs one weight per plane");
  double total = std::accumulate(split.begin(), split.end(), 0.0);
  if (!(total > 0)) throw BadParams("arrival split must have positive mass");
  for (double& s : split) {
    if (!(s > 0)) throw BadParams("arrival split weights must be positive");
    s /= total;
  }
  return split;
}

void check_positive(double v, const char* what) {
  if (!(v > 0) || !std::isfinite(v))
    throw BadParams(std::string(what) + " must be positive and finite");
}

// --- two-phase service families (erlang2-hetero, hypo2-batch) ---------------
//
// Each server is idle ('i'), in its first service phase ('1'), or in its
// second service phase ('2').  Interior states have every server busy, with
// mask bit i = 1 iff server i is in the second phase.  The boundary pool
// holds every configuration with at least one idle server.  Batches fill the
// lowest-indexed idle servers first; surplus jobs queue.

struct TwoPhaseConfig {
  std::vector<int> phase;  // 0 idle, 1 first phase, 2 second phase

  bool has_idle() const {
    return std::any_of(phase.begin(), phase.end(),
                       [](int p) { return p == 0; });
  }
  std::string label() const {
    std::string s;
    for (int p : phase) s += (p == 0 ? 'i' : (p == 1 ? '1' : '2'));
    return s;
  }
};

BoundarySpec two_phase_boundary(int c, const std::vector<double>& lambda,
                                const std::vector<double>& mu1,
                                const std::vector<double>& mu2) {
  int K = static_cast<int>(lambda.size());
  std::vector<TwoPhaseConfig> configs;
  std::vector<int> pow3(static_cast<size_t>(c) + 1, 1);
  for (int i = 1; i <= c; ++i) pow3[static_cast<size_t>(i)] = 3 * pow3[static_cast<size_t>(i - 1)];
  for (int code = 0; code < pow3[static_cast<size_t>(c)]; ++code) {
    TwoPhaseConfig cfg;
    cfg.phase.resize(static_cast<size_t>(c));
    int rest = code;
    for (int i = 0; i < c; ++i) {
      cfg.phase[static_cast<size_t>(i)] = rest % 3;
      rest /= 3;
    }
    if (cfg.has_idle()) configs.push_back(cfg);
  }

  BoundarySpec b;
  for (const auto& cfg : configs) b.v_states.push_back(cfg.label());
  auto index_of = [&](const TwoPhaseConfig& cfg) {
    return b.index_of(cfg.label());
  };

  for (size_t vi = 0; vi < configs.size(); ++vi) {
    const TwoPhaseConfig& cfg = configs[vi];
    int from = static_cast<int>(vi);

    // Service-phase progress of busy servers.
    for (int i = 0; i < c; ++i) {
      if (cfg.phase[static_cast<size_t>(i)] == 1) {
        TwoPhaseConfig next = cfg;
        next.phase[static_cast<size_t>(i)] = 2;
        b.v_rates.push_back({from, index_of(next), mu1[static_cast<size_t>(i)]});
      } else if (cfg.phase[static_cast<size_t>(i)] == 2) {
        TwoPhaseConfig next = cfg;
        next.phase[static_cast<size_t>(i)] = 0;
        b.v_rates.push_back({from, index_of(next), mu2[static_cast<size_t>(i)]});
      }
    }

    // Batch arrivals fill the lowest-indexed idle servers first.
    std::vector<int> idle;
    for (int i = 0; i < c; ++i)
      if (cfg.phase[static_cast<size_t>(i)] == 0) idle.push_back(i);
    int j = static_cast<int>(idle.size());
    for (int k = 1; k <= K; ++k) {
      double rate = lambda[static_cast<size_t>(k - 1)];
      if (rate <= 0) continue;
      if (k < j) {
        TwoPhaseConfig next = cfg;
        for (int t = 0; t < k; ++t) next.phase[static_cast<size_t>(idle[static_cast<size_t>(t)])] = 1;
        b.v_rates.push_back({from, index_of(next), rate});
      } else {
        unsigned mask = 0;
        for (int i = 0; i < c; ++i)
          if (cfg.phase[static_cast<size_t>(i)] == 2) mask |= 1u << i;
        // Newly started servers are in the first phase (mask bit 0).
        b.entries.push_back({from, WState{k - j, mask}, rate});
      }
    }
  }

  // A second-phase completion at queue level 0 idles the finishing server.
  for (unsigned mask = 0; mask < (1u << c); ++mask) {
    for (int i = 0; i < c; ++i) {
      if (!((mask >> i) & 1u)) continue;
      TwoPhaseConfig target;
      target.phase.resize(static_cast<size_t>(c));
      for (int s = 0; s < c; ++s)
        target.phase[static_cast<size_t>(s)] = ((mask >> s) & 1u) ? 2 : 1;
      target.phase[static_cast<size_t>(i)] = 0;
      b.routes.push_back({0, mask, i, RateKind::D, -1, index_of(target)});
    }
  }
  return b;
}

ProcessSpec two_phase_spec(const std::string& family, int c,
                           std::vector<double> lambda, std::vector<double> mu1,
                           std::vector<double> mu2, std::vector<double> split) {
  if (c < 1) throw BadParams("need at least one server");
  int K = static_cast<int>(lambda.size());
  if (K < 1) throw BadParams("need at least one batch size (K >= 1)");
  if (!(lambda.back() > 0))
    throw BadParams("the largest batch size must have positive rate");
  for (double l : lambda)
    if (l < 0 || !std::isfinite(l)) throw BadParams("batch rates must be non-negative");
  if (static_cast<int>(mu1.size()) != c || static_cast<int>(mu2.size()) != c)
    throw BadParams("need one phase-rate pair per server");
  for (int i = 0; i < c; ++i) {
    check_positive(mu1[static_cast<size_t>(i)], "first-phase rate");
    check_positive(mu2[static_cast<size_t>(i)], "second-phase rate");
  }
  split = resolve_split(c, std::move(split));

  std::vector<RatePlane> planes;
  for (int i = 0; i < c; ++i) {
    RatePlane p(1, K);
    p.set(RateKind::A, 0, mu1[static_cast<size_t>(i)]);
    p.set(RateKind::D, -1, mu2[static_cast<size_t>(i)]);
    for (int k = 1; k <= K; ++k) {
      double r = lambda[static_cast<size_t>(k - 1)] * split[static_cast<size_t>(i)];
      p.set(RateKind::B, k, r);
      p.set(RateKind::C, k, r);
    }
    planes.push_back(std::move(p));
  }

  ProcessSpec spec = build_spec(c, K, std::move(planes),
                                two_phase_boundary(c, lambda, mu1, mu2));
  PresetParams params;
  params.family = family;
  params.c = c;
  params.lambda = std::move(lambda);
  params.mu1 = std::move(mu1);
  params.mu2 = std::move(mu2);
  params.split = std::move(split);
  spec.preset = std::move(params);
  return spec;
}

// --- batch arrivals with server breakdowns (mxmc-breakdown) ------------------
//
// Each server either holds a job or not, and is either operative or broken.
// Interior states have a job at every server; mask bit i = 1 iff server i is
// operative.  The pool holds every configuration with at least one jobless
// server.  Jobs are assigned to the lowest-indexed jobless servers regardless
// of operative status; breakdowns and repairs run independently of jobs.

struct BreakdownConfig {
  std::vector<int> job;  // 0/1
  std::vector<int> op;   // 0/1

  bool has_jobless() const {
    return std::any_of(job.begin(), job.end(), [](int j) { return j == 0; });
  }
  std::string label() const {
    std::string s;
    for (size_t i = 0; i < job.size(); ++i) {
      if (job[i])
        s += op[i] ? 'X' : 'x';
      else
        s += op[i] ? 'o' : '-';
    }
    return s;
  }
};

BoundarySpec breakdown_boundary(int c, const std::vector<double>& lambda,
                                double mu, double theta, double nu) {
  int K = static_cast<int>(lambda.size());
  std::vector<BreakdownConfig> configs;
  for (unsigned code = 0; code < (1u << (2 * c)); ++code) {
    BreakdownConfig cfg;
    cfg.job.resize(static_cast<size_t>(c));
    cfg.op.resize(static_cast<size_t>(c));
    for (int i = 0; i < c; ++i) {
      cfg.job[static_cast<size_t>(i)] = (code >> (2 * i)) & 1u;
      cfg.op[static_cast<size_t>(i)] = (code >> (2 * i + 1)) & 1u;
    }
    if (cfg.has_jobless()) configs.push_back(cfg);
  }

  BoundarySpec b;
  for (const auto& cfg : configs) b.v_states.push_back(cfg.label());
  auto index_of = [&](const BreakdownConfig& cfg) {
    return b.index_of(cfg.label());
  };

  for (size_t vi = 0; vi < configs.size(); ++vi) {
    const BreakdownConfig& cfg = configs[vi];
    int from = static_cast<int>(vi);

    for (int i = 0; i < c; ++i) {
      if (cfg.op[static_cast<size_t>(i)]) {
        // Breakdown.
        BreakdownConfig next = cfg;
        next.op[static_cast<size_t>(i)] = 0;
        b.v_rates.push_back({from, index_of(next), theta});
        // Service completion empties the server (the pool has no queue).
        if (cfg.job[static_cast<size_t>(i)]) {
          BreakdownConfig done = cfg;
          done.job[static_cast<size_t>(i)] = 0;
          b.v_rates.push_back({from, index_of(done), mu});
        }
      } else {
        // Repair.
        BreakdownConfig next = cfg;
        next.op[static_cast<size_t>(i)] = 1;
        b.v_rates.push_back({from, index_of(next), nu});
      }
    }

    std::vector<int> jobless;
    for (int i = 0; i < c; ++i)
      if (!cfg.job[static_cast<size_t>(i)]) jobless.push_back(i);
    int j = static_cast<int>(jobless.size());
    for (int k = 1; k <= K; ++k) {
      double rate = lambda[static_cast<size_t>(k - 1)];
      if (rate <= 0) continue;
      if (k < j) {
        BreakdownConfig next = cfg;
        for (int t = 0; t < k; ++t) next.job[static_cast<size_t>(jobless[static_cast<size_t>(t)])] = 1;
        b.v_rates.push_back({from, index_of(next), rate});
      } else {
        unsigned mask = 0;
        for (int i = 0; i < c; ++i)
          if (cfg.op[static_cast<size_t>(i)]) mask |= 1u << i;
        b.entries.push_back({from, WState{k - j, mask}, rate});
      }
    }
  }

  // A service completion at queue level 0 leaves the server jobless.
  for (unsigned mask = 0; mask < (1u << c); ++mask) {
    for (int i = 0; i < c; ++i) {
      if (!((mask >> i) & 1u)) continue;
      BreakdownConfig target;
      target.job.assign(static_cast<size_t>(c), 1);
      target.op.resize(static_cast<size_t>(c));
      for (int s = 0; s < c; ++s) target.op[static_cast<size_t>(s)] = (mask >> s) & 1u;
      target.job[static_cast<size_t>(i)] = 0;
      b.routes.push_back({0, mask, i, RateKind::C, -1, index_of(target)});
    }
  }
  return b;
}

}  // namespace

ProcessSpec preset_erlang2_hetero(int c, double lambda, std::vector<double> mu,
                                  std::vector<double> split) {
  check_positive(lambda, "arrival rate");
  if (static_cast<int>(mu.size()) != c)
    throw BadParams("need one service rate per server");
  return two_phase_spec("erlang2-hetero", c, {lambda}, mu, mu, std::move(split));
}

ProcessSpec preset_hypo2_batch(int c, std::vector<double> lambda,
                               std::vector<double> mu1, std::vector<double> mu2,
                               std::vector<double> split) {
  return two_phase_spec("hypo2-batch", c, std::move(lambda), std::move(mu1),
                        std::move(mu2), std::move(split));
}

ProcessSpec preset_mxmc_breakdown(int c, std::vector<double> lambda, double mu,
                                  double theta, double nu) {
  if (c < 1) throw BadParams("need at least one server");
  int K = static_cast<int>(lambda.size());
  if (K < 1) throw BadParams("need at least one batch size (K >= 1)");
  if (!(lambda.back() > 0))
    throw BadParams("the largest batch size must have positive rate");
  for (double l : lambda)
    if (l < 0 || !std::isfinite(l)) throw BadParams("batch rates must be non-negative");
  check_positive(mu, "service rate");
  check_positive(theta, "breakdown rate");
  check_positive(nu, "repair rate");
  if (2 * c > 30) throw BadParams("breakdown preset supports at most 15 servers");

  std::vector<RatePlane> planes;
  for (int i = 0; i < c; ++i) {
    RatePlane p(1, K);
    p.set(RateKind::A, 0, nu);
    p.set(RateKind::D, 0, theta);
    p.set(RateKind::C, -1, mu);
    for (int k = 1; k <= K; ++k) {
      double r = lambda[static_cast<size_t>(k - 1)] / c;
      p.set(RateKind::B, k, r);
      p.set(RateKind::C, k, r);
    }
    planes.push_back(std::move(p));
  }

  ProcessSpec spec = build_spec(c, K, std::move(planes),
                                breakdown_boundary(c, lambda, mu, theta, nu));
  PresetParams params;
  params.family = "mxmc-breakdown";
  params.c = c;
  params.lambda = std::move(lambda);
  params.mu = mu;
  params.theta = theta;
  params.nu = nu;
  spec.preset = std::move(params);
  return spec;
}

}  // namespace prodform
