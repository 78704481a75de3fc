#include "prodform/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace prodform {

namespace {

/// Deterministic splitmix64 stream; uniforms are drawn by a fixed bit path so
/// results are bit-identical across platforms.
struct Rng {
  std::uint64_t s;
  explicit Rng(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() {  // in (0, 1]
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }
  double exponential(double rate) { return -std::log(uniform()) / rate; }
};

std::uint64_t rep_seed(std::uint64_t master, int rep) {
  Rng r(master ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(rep + 1)));
  return r.next();
}

constexpr int kMaxLevel = 64;  ///< occupancy is recorded for n0 <= kMaxLevel

struct RepResult {
  std::vector<double> v_occ;   ///< time share per encoded boundary config
  std::vector<double> w_occ;   ///< time share, index n0 * 2^c + mask
  double v_mass = 0;
  std::vector<double> tail_frac;
  long tagged = 0;
};

struct OccupancyWindow {
  std::vector<double> v_occ, w_occ;
  double window = 0;
  int c = 0;

  OccupancyWindow(size_t v_slots, int c_) : c(c_) {
    v_occ.assign(v_slots, 0.0);
    w_occ.assign(static_cast<size_t>(kMaxLevel + 1) << c_, 0.0);
  }
  void add_v(size_t enc, double dt) {
    v_occ[enc] += dt;
    window += dt;
  }
  void add_w(int n0, unsigned mask, double dt) {
    if (n0 <= kMaxLevel) w_occ[(static_cast<size_t>(n0) << c) + mask] += dt;
    window += dt;
  }
  void finish(RepResult& rr) const {
    double w = window > 0 ? window : 1.0;
    rr.v_occ = v_occ;
    rr.w_occ = w_occ;
    for (double& x : rr.v_occ) x /= w;
    for (double& x : rr.w_occ) x /= w;
    rr.v_mass = 0;
    for (double x : rr.v_occ) rr.v_mass += x;
  }
};

struct TailCounter {
  const std::vector<double>& grid;
  std::vector<long> over;
  long tagged = 0;

  explicit TailCounter(const std::vector<double>& g)
      : grid(g), over(g.size(), 0) {}
  void record(double w) {
    ++tagged;
    for (size_t i = 0; i < grid.size(); ++i)
      if (w > grid[i]) ++over[i];
  }
  void finish(RepResult& rr) const {
    rr.tagged = tagged;
    rr.tail_frac.assign(grid.size(), 0.0);
    if (tagged > 0)
      for (size_t i = 0; i < grid.size(); ++i)
        rr.tail_frac[i] = static_cast<double>(over[i]) / tagged;
  }
};

/// Two-phase service families: each server is idle (0), in phase one (1), or
/// in phase two (2); batches fill idle servers lowest-index-first and the
/// surplus queues FIFO.
RepResult run_two_phase(const PresetParams& p, const SimConfig& cfg,
                        std::uint64_t seed) {
  const int c = p.c;
  const int K = static_cast<int>(p.lambda.size());
  Rng rng(seed);
  std::vector<int> phase(static_cast<size_t>(c), 0);
  std::deque<std::pair<double, bool>> queue;  // (arrival time, tagged)

  size_t v_slots = 1;
  for (int i = 0; i < c; ++i) v_slots *= 3;
  OccupancyWindow occ(v_slots, c);
  TailCounter tails(cfg.t_grid);

  const long warm = std::lround(cfg.warmup_fraction *
                                static_cast<double>(cfg.arrivals));
  long seen = 0;
  long pending = 0;
  double now = 0;
  double lambda_total = 0;
  for (double l : p.lambda) lambda_total += l;

  while (seen < warm + cfg.arrivals || pending > 0) {
    double total = lambda_total;
    for (int i = 0; i < c; ++i) {
      if (phase[static_cast<size_t>(i)] == 1) total += p.mu1[static_cast<size_t>(i)];
      if (phase[static_cast<size_t>(i)] == 2) total += p.mu2[static_cast<size_t>(i)];
    }
    double dt = rng.exponential(total);
    if (seen >= warm && seen < warm + cfg.arrivals) {
      int idle = 0;
      unsigned mask = 0;
      size_t enc = 0, base = 1;
      for (int i = 0; i < c; ++i) {
        int ph = phase[static_cast<size_t>(i)];
        if (ph == 0) ++idle;
        if (ph == 2) mask |= 1u << i;
        enc += static_cast<size_t>(ph) * base;
        base *= 3;
      }
      if (idle > 0)
        occ.add_v(enc, dt);
      else
        occ.add_w(static_cast<int>(queue.size()), mask, dt);
    }
    now += dt;

    double u = rng.uniform() * total;
    bool handled = false;
    for (int k = 1; k <= K && !handled; ++k) {
      u -= p.lambda[static_cast<size_t>(k - 1)];
      if (u <= 0) {
        handled = true;
        ++seen;
        bool counted = seen > warm && seen <= warm + cfg.arrivals;
        for (int j = 0; j < k; ++j) {
          int target = -1;
          for (int i = 0; i < c; ++i)
            if (phase[static_cast<size_t>(i)] == 0) { target = i; break; }
          if (target >= 0) {
            phase[static_cast<size_t>(target)] = 1;
            if (j == 0 && counted) tails.record(0.0);
          } else {
            bool tag = (j == 0 && counted);
            queue.emplace_back(now, tag);
            if (tag) ++pending;
          }
        }
      }
    }
    for (int i = 0; i < c && !handled; ++i) {
      if (phase[static_cast<size_t>(i)] == 1) {
        u -= p.mu1[static_cast<size_t>(i)];
        if (u <= 0) {
          handled = true;
          phase[static_cast<size_t>(i)] = 2;
          break;
        }
      }
      if (phase[static_cast<size_t>(i)] == 2) {
        u -= p.mu2[static_cast<size_t>(i)];
        if (u <= 0) {
          handled = true;
          if (!queue.empty()) {
            auto [arr, tag] = queue.front();
            queue.pop_front();
            if (tag) {
              tails.record(now - arr);
              --pending;
            }
            phase[static_cast<size_t>(i)] = 1;
          } else {
            phase[static_cast<size_t>(i)] = 0;
          }
          break;
        }
      }
    }
  }

  RepResult rr;
  occ.finish(rr);
  tails.finish(rr);
  return rr;
}

/// Breakdown family: each server either holds a job or not and is either
/// operative or broken; jobs go to the lowest-index server without one.
RepResult run_breakdown(const PresetParams& p, const SimConfig& cfg,
                        std::uint64_t seed) {
  const int c = p.c;
  const int K = static_cast<int>(p.lambda.size());
  Rng rng(seed);
  std::vector<bool> has_job(static_cast<size_t>(c), false);
  std::vector<bool> operative(static_cast<size_t>(c), true);
  std::deque<std::pair<double, bool>> queue;

  size_t v_slots = size_t{1} << (2 * c);  // (job, operative) pairs
  OccupancyWindow occ(v_slots, c);
  TailCounter tails(cfg.t_grid);

  const long warm = std::lround(cfg.warmup_fraction *
                                static_cast<double>(cfg.arrivals));
  long seen = 0;
  long pending = 0;
  double now = 0;
  double lambda_total = 0;
  for (double l : p.lambda) lambda_total += l;

  while (seen < warm + cfg.arrivals || pending > 0) {
    double total = lambda_total;
    for (int i = 0; i < c; ++i) {
      if (has_job[static_cast<size_t>(i)] && operative[static_cast<size_t>(i)])
        total += p.mu;
      total += operative[static_cast<size_t>(i)] ? p.theta : p.nu;
    }
    double dt = rng.exponential(total);
    if (seen >= warm && seen < warm + cfg.arrivals) {
      int jobless = 0;
      unsigned op_mask = 0;
      size_t enc = 0;
      for (int i = 0; i < c; ++i) {
        bool hj = has_job[static_cast<size_t>(i)];
        bool op = operative[static_cast<size_t>(i)];
        if (!hj) ++jobless;
        if (op) op_mask |= 1u << i;
        enc |= (static_cast<size_t>(hj ? 1 : 0) | (op ? 2u : 0u)) << (2 * i);
      }
      if (jobless > 0)
        occ.add_v(enc, dt);
      else
        occ.add_w(static_cast<int>(queue.size()), op_mask, dt);
    }
    now += dt;

    double u = rng.uniform() * total;
    bool handled = false;
    for (int k = 1; k <= K && !handled; ++k) {
      u -= p.lambda[static_cast<size_t>(k - 1)];
      if (u <= 0) {
        handled = true;
        ++seen;
        bool counted = seen > warm && seen <= warm + cfg.arrivals;
        for (int j = 0; j < k; ++j) {
          int target = -1;
          for (int i = 0; i < c; ++i)
            if (!has_job[static_cast<size_t>(i)]) { target = i; break; }
          if (target >= 0) {
            has_job[static_cast<size_t>(target)] = true;
            if (j == 0 && counted) tails.record(0.0);
          } else {
            bool tag = (j == 0 && counted);
            queue.emplace_back(now, tag);
            if (tag) ++pending;
          }
        }
      }
    }
    for (int i = 0; i < c && !handled; ++i) {
      size_t si = static_cast<size_t>(i);
      if (has_job[si] && operative[si]) {
        u -= p.mu;
        if (u <= 0) {
          handled = true;
          if (!queue.empty()) {
            auto [arr, tag] = queue.front();
            queue.pop_front();
            if (tag) {
              tails.record(now - arr);
              --pending;
            }
          } else {
            has_job[si] = false;
          }
          break;
        }
      }
      u -= operative[si] ? p.theta : p.nu;
      if (u <= 0) {
        handled = true;
        operative[si] = !operative[si];
        break;
      }
    }
  }

  RepResult rr;
  occ.finish(rr);
  tails.finish(rr);
  return rr;
}

/// Raw fallback: simulate the Markov chain itself (occupancy only, events
/// stand in for arrivals in the warmup/measurement accounting).
RepResult run_raw(const ProcessSpec& spec, const SimConfig& cfg,
                  std::uint64_t seed) {
  Rng rng(seed);
  const int n_v = spec.boundary.size();
  OccupancyWindow occ(static_cast<size_t>(std::max(n_v, 1)), spec.c);
  TailCounter tails(cfg.t_grid);

  bool in_v = n_v > 0;
  int v_state = 0;
  WState w{0, 0};
  const long warm = std::lround(cfg.warmup_fraction *
                                static_cast<double>(cfg.arrivals));
  long events = 0;

  std::vector<std::pair<double, Transition>> moves;
  while (events < warm + cfg.arrivals) {
    moves.clear();
    if (in_v) {
      for (const auto& t : spec.boundary.v_rates)
        if (t.from == v_state && t.rate > 0)
          moves.push_back({t.rate, Transition{true, {}, t.to, t.rate}});
      for (const auto& e : spec.boundary.entries)
        if (e.from_v == v_state && e.rate > 0)
          moves.push_back({e.rate, Transition{false, e.to, -1, e.rate}});
    } else {
      for (const auto& t : transitions_from(spec, w))
        if (t.rate > 0) moves.push_back({t.rate, t});
    }
    double total = 0;
    for (const auto& m : moves) total += m.first;
    if (total <= 0) throw ReducibleChain("simulation reached an absorbing state");

    double dt = rng.exponential(total);
    if (events >= warm) {
      if (in_v)
        occ.add_v(static_cast<size_t>(v_state), dt);
      else
        occ.add_w(w.n0, w.mask, dt);
    }
    double u = rng.uniform() * total;
    for (const auto& m : moves) {
      u -= m.first;
      if (u <= 0) {
        if (m.second.to_v) {
          in_v = true;
          v_state = m.second.v;
        } else {
          in_v = false;
          w = m.second.w;
        }
        break;
      }
    }
    ++events;
  }

  RepResult rr;
  occ.finish(rr);
  tails.finish(rr);
  return rr;
}

double t_critical(int df) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447,
                                 2.365,  2.306, 2.262, 2.228, 2.201, 2.179,
                                 2.160,  2.145, 2.131, 2.120, 2.110, 2.101,
                                 2.093,  2.086, 2.080, 2.074, 2.069, 2.064,
                                 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (df < 1) return 0;
  if (df <= 30) return table[df - 1];
  return 1.96;
}

SimEstimate combine(const std::vector<double>& xs, long samples) {
  SimEstimate e;
  const int R = static_cast<int>(xs.size());
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= R;
  double var = 0;
  for (double x : xs) var += (x - mean) * (x - mean);
  e.value = mean;
  e.samples = samples;
  if (R >= 2) {
    double sd = std::sqrt(var / (R - 1));
    e.half_width = t_critical(R - 1) * sd / std::sqrt(static_cast<double>(R));
  }
  return e;
}

std::string two_phase_label(size_t enc, int c) {
  std::string s(static_cast<size_t>(c), 'i');
  for (int i = 0; i < c; ++i) {
    size_t d = enc % 3;
    enc /= 3;
    s[static_cast<size_t>(i)] = d == 0 ? 'i' : (d == 1 ? '1' : '2');
  }
  return s;
}

std::string breakdown_label(size_t enc, int c) {
  std::string s(static_cast<size_t>(c), '-');
  for (int i = 0; i < c; ++i) {
    size_t d = (enc >> (2 * i)) & 3u;
    s[static_cast<size_t>(i)] = d == 0 ? '-' : (d == 1 ? 'x' : (d == 2 ? 'o' : 'X'));
  }
  return s;
}

}  // namespace

SimResult simulate(const ProcessSpec& spec, const SimConfig& cfg) {
  if (cfg.replications < 1) throw BadParams("need at least one replication");
  if (cfg.arrivals < 1) throw BadParams("need at least one arrival");

  enum class Family { TwoPhase, Breakdown, Raw } family = Family::Raw;
  if (spec.preset) {
    if (spec.preset->family == "erlang2-hetero" ||
        spec.preset->family == "hypo2-batch")
      family = Family::TwoPhase;
    else if (spec.preset->family == "mxmc-breakdown")
      family = Family::Breakdown;
  }

  std::vector<RepResult> reps;
  reps.reserve(static_cast<size_t>(cfg.replications));
  for (int r = 0; r < cfg.replications; ++r) {
    std::uint64_t s = rep_seed(cfg.seed, r);
    switch (family) {
      case Family::TwoPhase:
        reps.push_back(run_two_phase(*spec.preset, cfg, s));
        break;
      case Family::Breakdown:
        reps.push_back(run_breakdown(*spec.preset, cfg, s));
        break;
      case Family::Raw:
        reps.push_back(run_raw(spec, cfg, s));
        break;
    }
  }

  SimResult out;
  out.seed = cfg.seed;
  const int R = cfg.replications;

  std::vector<double> xs(static_cast<size_t>(R));
  for (int r = 0; r < R; ++r) xs[static_cast<size_t>(r)] = reps[static_cast<size_t>(r)].v_mass;
  out.v_mass = combine(xs, R);

  // Boundary-state estimates, labeled.  For preset families the encoded
  // configurations map onto the spec's boundary labels; raw chains use the
  // labels directly.
  size_t v_slots = reps.empty() ? 0 : reps[0].v_occ.size();
  for (size_t s = 0; s < v_slots; ++s) {
    bool any = false;
    for (int r = 0; r < R; ++r) {
      xs[static_cast<size_t>(r)] = reps[static_cast<size_t>(r)].v_occ[s];
      if (xs[static_cast<size_t>(r)] > 0) any = true;
    }
    if (!any) continue;
    std::string label;
    switch (family) {
      case Family::TwoPhase:
        label = two_phase_label(s, spec.c);
        break;
      case Family::Breakdown:
        label = breakdown_label(s, spec.c);
        break;
      case Family::Raw:
        label = spec.boundary.empty() ? std::string("v") + std::to_string(s)
                                      : spec.boundary.v_states[s];
        break;
    }
    out.v_probs[label] = combine(xs, R);
  }

  size_t w_slots = reps.empty() ? 0 : reps[0].w_occ.size();
  for (size_t s = 0; s < w_slots; ++s) {
    bool any = false;
    for (int r = 0; r < R; ++r) {
      xs[static_cast<size_t>(r)] = reps[static_cast<size_t>(r)].w_occ[s];
      if (xs[static_cast<size_t>(r)] > 0) any = true;
    }
    if (!any) continue;
    int n0 = static_cast<int>(s >> spec.c);
    unsigned mask = static_cast<unsigned>(s) & ((1u << spec.c) - 1);
    out.w_probs[{n0, mask}] = combine(xs, R);
  }

  long tagged_total = 0;
  for (const auto& rr : reps) tagged_total += rr.tagged;
  for (size_t g = 0; g < cfg.t_grid.size(); ++g) {
    for (int r = 0; r < R; ++r)
      xs[static_cast<size_t>(r)] = reps[static_cast<size_t>(r)].tail_frac[g];
    out.waiting_tail.push_back({cfg.t_grid[g], combine(xs, tagged_total)});
  }
  return out;
}

}  // namespace prodform
