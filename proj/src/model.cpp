#include "prodform/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace prodform {

const char* to_string(RateKind k) {
  switch (k) {
    case RateKind::A: return "a";
    case RateKind::B: return "b";
    case RateKind::C: return "c";
    case RateKind::D: return "d";
  }
  return "?";
}

RatePlane::RatePlane(int max_down, int max_up)
    : max_down_(max_down), max_up_(max_up) {
  if (max_down < 0 || max_up < 1)
    throw BadParams("rate plane needs max_down >= 0 and max_up >= 1");
  size_t n = static_cast<size_t>(max_down + max_up + 1);
  a_.assign(n, 0.0);
  b_.assign(n, 0.0);
  c_.assign(n, 0.0);
  d_.assign(n, 0.0);
}

double RatePlane::rate(RateKind kind, int k) const {
  switch (kind) {
    case RateKind::A: return a(k);
    case RateKind::B: return b(k);
    case RateKind::C: return c(k);
    case RateKind::D: return d(k);
  }
  return 0.0;
}

void RatePlane::set(RateKind kind, int k, double value) {
  if (k < -max_down_ || k > max_up_) {
    std::ostringstream os;
    os << "jump " << k << " outside {-" << max_down_ << ".." << max_up_ << "}";
    throw InconsistentK(os.str());
  }
  if (!(value >= 0.0) || !std::isfinite(value))
    throw BadParams("rates must be finite and non-negative");
  size_t idx = static_cast<size_t>(k + max_down_);
  switch (kind) {
    case RateKind::A: a_[idx] = value; break;
    case RateKind::B: b_[idx] = value; break;
    case RateKind::C: c_[idx] = value; break;
    case RateKind::D: d_[idx] = value; break;
  }
}

bool RatePlane::operator==(const RatePlane& other) const {
  return max_down_ == other.max_down_ && max_up_ == other.max_up_ &&
         a_ == other.a_ && b_ == other.b_ && c_ == other.c_ && d_ == other.d_;
}

int BoundarySpec::index_of(const std::string& id) const {
  for (size_t i = 0; i < v_states.size(); ++i)
    if (v_states[i] == id) return static_cast<int>(i);
  return -1;
}

int ProcessSpec::max_down() const {
  int L = 0;
  for (const auto& p : planes) L = std::max(L, p.max_down());
  return L;
}

namespace {

double sum_rates(const RatePlane& p, RateKind kind) {
  double s = 0;
  for (int k = -p.max_down(); k <= p.max_up(); ++k) s += p.rate(kind, k);
  return s;
}

}  // namespace

std::vector<std::string> validate_spec(int c, int K,
                                       const std::vector<RatePlane>& planes,
                                       const BoundarySpec& boundary) {
  std::vector<std::string> bad;
  auto fail = [&](const std::string& msg) { bad.push_back(msg); };

  if (c < 1) fail("need at least one binary dimension (c >= 1)");
  if (K < 1) fail("largest upward jump must satisfy K >= 1");
  if (static_cast<int>(planes.size()) != c)
    fail("plane count must equal c");

  for (size_t i = 0; i < planes.size(); ++i) {
    const RatePlane& p = planes[i];
    std::string tag = "plane " + std::to_string(i) + ": ";
    if (p.max_up() != K) {
      fail(tag + "positive jump bound differs from spec K");
      continue;
    }
    double A1 = sum_rates(p, RateKind::A);
    double D1 = sum_rates(p, RateKind::D);
    if (!(A1 > 0)) fail(tag + "A_i(1) > 0 fails (no raising rates)");
    if (!(D1 > 0)) fail(tag + "D_i(1) > 0 fails (no lowering rates)");
    if (p.a(K) != 0.0 && p.d(K) != 0.0)
      fail(tag + "a[K] = 0 or d[K] = 0 fails (both largest-jump rates set)");
    if (p.b(K) != p.c(K) || p.b(K) == 0.0)
      fail(tag + "b[K] = c[K] != 0 fails");
  }

  // Boundary-pool sanity.
  int nv = boundary.size();
  for (const auto& t : boundary.v_rates) {
    if (t.from < 0 || t.from >= nv || t.to < 0 || t.to >= nv)
      fail("boundary rate references an unknown pool state");
    if (!(t.rate >= 0) || !std::isfinite(t.rate)) fail("boundary rate must be finite, non-negative");
    if (t.from == t.to && t.rate != 0) fail("boundary self-loops must have rate 0");
  }
  for (const auto& e : boundary.entries) {
    if (e.from_v < 0 || e.from_v >= nv)
      fail("entry rate references an unknown pool state");
    if (e.to.n0 < 0 || e.to.n0 >= K)
      fail("entries from the boundary pool may only reach levels below K");
    if (c >= 1 && e.to.mask >= (1u << c)) fail("entry target mask out of range");
    if (!(e.rate >= 0) || !std::isfinite(e.rate)) fail("entry rate must be finite, non-negative");
  }
  for (const auto& r : boundary.routes) {
    if (r.to_v < 0 || r.to_v >= nv) fail("route targets an unknown pool state");
    if (r.n0 < 0 || r.n0 + r.jump >= 0)
      fail("routes only apply to jumps below level 0");
  }

  // Every below-zero jump with positive rate needs a route when the pool is
  // non-empty.  (With an empty pool such jumps are clipped to level 0.)
  if (nv > 0 && static_cast<int>(planes.size()) == c) {
    auto find_route = [&](int n0, unsigned mask, int plane, RateKind kind,
                          int k) {
      for (const auto& r : boundary.routes)
        if (r.n0 == n0 && r.mask == mask && r.plane == plane &&
            r.kind == kind && r.jump == k)
          return true;
      return false;
    };
    for (int i = 0; i < c; ++i) {
      const RatePlane& p = planes[i];
      for (int n0 = 0; n0 < p.max_down(); ++n0) {
        for (int k = -p.max_down(); k < -n0; ++k) {
          for (unsigned mask = 0; mask < (1u << c); ++mask) {
            bool up = (mask >> i) & 1u;
            RateKind kinds[2] = {up ? RateKind::C : RateKind::A,
                                 up ? RateKind::D : RateKind::B};
            // A and B act on lowered planes, C and D on raised planes.
            RateKind k0 = up ? RateKind::C : RateKind::A;
            RateKind k1 = up ? RateKind::D : RateKind::B;
            (void)kinds;
            for (RateKind kind : {k0, k1}) {
              if (p.rate(kind, k) > 0 && !find_route(n0, mask, i, kind, k)) {
                std::ostringstream os;
                os << "missing boundary route for state (" << n0 << ", mask "
                   << mask << ") plane " << i << " kind " << to_string(kind)
                   << " jump " << k;
                fail(os.str());
              }
            }
          }
        }
      }
    }
  } else if (nv == 0) {
    if (!boundary.v_rates.empty() || !boundary.entries.empty() ||
        !boundary.routes.empty())
      fail("empty boundary pool cannot carry rates, entries, or routes");
  }

  return bad;
}

ProcessSpec build_spec(int c, int K, std::vector<RatePlane> planes,
                       BoundarySpec boundary) {
  auto bad = validate_spec(c, K, planes, boundary);
  if (!bad.empty()) {
    std::string msg = "assumption violations:";
    for (const auto& b : bad) msg += "\n  - " + b;
    throw AssumptionViolation(msg);
  }
  ProcessSpec spec;
  spec.c = c;
  spec.K = K;
  spec.planes = std::move(planes);
  spec.boundary = std::move(boundary);
  spec.symmetric = true;
  for (int i = 1; i < c; ++i)
    if (!(spec.planes[i] == spec.planes[0])) spec.symmetric = false;
  return spec;
}

double total_outflow(const ProcessSpec& spec, unsigned mask) {
  double out = 0;
  for (int i = 0; i < spec.c; ++i) {
    const RatePlane& p = spec.planes[i];
    bool up = (mask >> i) & 1u;
    out += up ? sum_rates(p, RateKind::C) + sum_rates(p, RateKind::D)
              : sum_rates(p, RateKind::A) + sum_rates(p, RateKind::B);
  }
  return out;
}

std::vector<Transition> transitions_from(const ProcessSpec& spec,
                                         const WState& s) {
  std::vector<Transition> out;
  bool pool = !spec.boundary.empty();
  for (int i = 0; i < spec.c; ++i) {
    const RatePlane& p = spec.planes[i];
    bool up = (s.mask >> i) & 1u;
    unsigned bit = 1u << i;
    struct Move {
      RateKind kind;
      unsigned mask2;
    };
    Move moves[2];
    if (!up) {
      moves[0] = {RateKind::A, s.mask | bit};
      moves[1] = {RateKind::B, s.mask};
    } else {
      moves[0] = {RateKind::C, s.mask};
      moves[1] = {RateKind::D, s.mask & ~bit};
    }
    for (int k = -p.max_down(); k <= p.max_up(); ++k) {
      for (const Move& m : moves) {
        double rate = p.rate(m.kind, k);
        if (rate <= 0) continue;
        Transition t;
        t.rate = rate;
        int n0p = s.n0 + k;
        if (n0p >= 0) {
          t.to_v = false;
          t.w = WState{n0p, m.mask2};
        } else if (!pool) {
          // Empty pool: clip the jump onto level 0.
          t.to_v = false;
          t.w = WState{0, m.mask2};
        } else {
          t.to_v = true;
          t.v = -1;
          for (const auto& r : spec.boundary.routes) {
            if (r.n0 == s.n0 && r.mask == s.mask && r.plane == i &&
                r.kind == m.kind && r.jump == k) {
              t.v = r.to_v;
              break;
            }
          }
          if (t.v < 0) {
            std::ostringstream os;
            os << "no route for transition from (" << s.n0 << ", mask "
               << s.mask << ") plane " << i << " kind " << to_string(m.kind)
               << " jump " << k;
            throw AssumptionViolation(os.str());
          }
        }
        out.push_back(t);
      }
    }
  }
  return out;
}

// --- generating functions -----------------------------------------------------

namespace {

Complex horner(const std::vector<double>& coeffs, Complex z) {
  Complex acc(0, 0);
  for (size_t j = coeffs.size(); j-- > 0;) acc = acc * z + coeffs[j];
  return acc;
}

void fill_gf(const RatePlane& p, RateKind kind, int K, std::vector<double>& out,
             double& val1, double& dval1) {
  out.assign(static_cast<size_t>(K + p.max_down() + 1), 0.0);
  val1 = 0;
  dval1 = 0;
  for (int k = -p.max_down(); k <= K; ++k) {
    double r = p.rate(kind, k);
    out[static_cast<size_t>(K - k)] = r;  // coefficient of z^{K-k}
    val1 += r;
    dval1 += static_cast<double>(K - k) * r;
  }
}

}  // namespace

Complex PlaneGf::evalA(Complex z) const { return horner(A, z); }
Complex PlaneGf::evalB(Complex z) const { return horner(B, z); }
Complex PlaneGf::evalC(Complex z) const { return horner(C, z); }
Complex PlaneGf::evalD(Complex z) const { return horner(D, z); }

Complex PlaneGf::F(Complex z) const {
  return std::pow(z, K) * (A1 + B1 - C1 - D1) - evalB(z) + evalC(z);
}

Complex PlaneGf::disc(Complex z) const {
  Complex f = F(z);
  return f * f + 4.0 * evalA(z) * evalD(z);
}

double GeneratingFunctions::rate_scale() const {
  double s = 0;
  for (const auto& p : plane) s += p.S();
  return s > 0 ? s : 1.0;
}

GeneratingFunctions generating_functions(const ProcessSpec& spec) {
  GeneratingFunctions gf;
  gf.c = spec.c;
  gf.K = spec.K;
  gf.symmetric = spec.symmetric;
  gf.plane.resize(static_cast<size_t>(spec.c));
  for (int i = 0; i < spec.c; ++i) {
    PlaneGf& g = gf.plane[static_cast<size_t>(i)];
    const RatePlane& p = spec.planes[static_cast<size_t>(i)];
    g.K = spec.K;
    g.L = p.max_down();
    fill_gf(p, RateKind::A, spec.K, g.A, g.A1, g.dA1);
    fill_gf(p, RateKind::B, spec.K, g.B, g.B1, g.dB1);
    fill_gf(p, RateKind::C, spec.K, g.C, g.C1, g.dC1);
    fill_gf(p, RateKind::D, spec.K, g.D, g.D1, g.dD1);
  }
  return gf;
}

ErgodicityReport check_ergodicity(const GeneratingFunctions& gf) {
  ErgodicityReport rep;
  rep.per_plane.resize(gf.plane.size());
  double drift = 0;
  for (size_t i = 0; i < gf.plane.size(); ++i) {
    const PlaneGf& g = gf.plane[i];
    double denom = g.A1 + g.D1;
    double num = g.D1 * (g.dA1 - gf.K * g.A1 + g.dB1 - gf.K * g.B1) +
                 g.A1 * (g.dC1 - gf.K * g.C1 + g.dD1 - gf.K * g.D1);
    ErgodicityReport::PerPlane& pp = rep.per_plane[i];
    pp.pi0 = g.D1 / denom;
    pp.pi1 = g.A1 / denom;
    pp.contribution = num / denom;
    drift += pp.contribution;
  }
  rep.drift = drift;
  rep.at_boundary = (drift == 0.0);
  rep.ergodic = drift > 0.0;
  if (gf.symmetric && !gf.plane.empty()) {
    const PlaneGf& g = gf.plane[0];
    rep.symmetric_drift = g.D1 * (g.dA1 - gf.K * g.A1 + g.dB1 - gf.K * g.B1) +
                          g.A1 * (g.dC1 - gf.K * g.C1 + g.dD1 - gf.K * g.D1);
  }
  return rep;
}

}  // namespace prodform
