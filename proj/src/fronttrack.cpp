#include "probeflow/fronttrack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace probeflow {

namespace {

constexpr double kTimeTol = 1e-12;
constexpr long kMaxEvents = 2'000'000;

}  // namespace

// ---------------------------------------------------------------------------
// Piecewise-linear flux
// ---------------------------------------------------------------------------

double PiecewiseLinearFlux::slope(int a, int b) const {
  return (values[static_cast<std::size_t>(b)] - values[static_cast<std::size_t>(a)]) /
         (static_cast<double>(b - a) * step());
}

double PiecewiseLinearFlux::operator()(double rho) const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("density outside [0,1]");
  const double pos = rho * levels();
  const int k = std::min(static_cast<int>(std::floor(pos)), levels() - 1);
  const double theta = pos - k;
  return values[static_cast<std::size_t>(k)] * (1.0 - theta) +
         values[static_cast<std::size_t>(k + 1)] * theta;
}

double PiecewiseLinearFlux::lipschitz() const {
  double lip = 0.0;
  for (int k = 0; k < levels(); ++k) lip = std::max(lip, std::abs(slope(k, k + 1)));
  return lip;
}

PiecewiseLinearFlux piecewise_linearize(const std::function<double(double)>& f, int n) {
  if (n < 1 || n > 24) throw DomainError("dyadic resolution must lie in [1, 24]");
  PiecewiseLinearFlux out;
  out.n = n;
  const int m = 1 << n;
  out.values.resize(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k)
    out.values[static_cast<std::size_t>(k)] = f(static_cast<double>(k) / m);
  return out;
}

PiecewiseLinearFlux piecewise_linearize(const SpeedLaw& law, int n) {
  return piecewise_linearize([&law](double r) { return law.flux(r); }, n);
}

// ---------------------------------------------------------------------------
// Step functions
// ---------------------------------------------------------------------------

double StepFunction::operator()(double x, TraceSide side) const {
  const auto it = side == TraceSide::Right ? std::upper_bound(knots.begin(), knots.end(), x)
                                           : std::lower_bound(knots.begin(), knots.end(), x);
  return values[static_cast<std::size_t>(it - knots.begin())];
}

double StepFunction::total_variation() const {
  double tv = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i) tv += std::abs(values[i] - values[i - 1]);
  return tv;
}

double StepFunction::integral(double a, double b) const {
  if (b <= a) return 0.0;
  double sum = 0.0;
  double cur = a;
  for (std::size_t i = 0; i <= knots.size(); ++i) {
    const double hi = i < knots.size() ? knots[i] : std::numeric_limits<double>::infinity();
    if (hi <= cur) continue;
    const double top = std::min(hi, b);
    sum += values[i] * (top - cur);
    cur = top;
    if (cur >= b) break;
  }
  return sum;
}

StepFunction make_step_function(
    double background, const std::vector<std::pair<std::pair<double, double>, double>>& blocks) {
  std::vector<double> cuts;
  for (const auto& [iv, v] : blocks) {
    if (!(iv.second > iv.first)) throw DomainError("datum interval must have from < to");
    cuts.push_back(iv.first);
    cuts.push_back(iv.second);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  auto value_on = [&](double mid) {
    double v = background;
    for (const auto& [iv, val] : blocks)
      if (mid >= iv.first && mid < iv.second) v = val;
    return v;
  };
  StepFunction out;
  out.values.push_back(background);
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double v = i + 1 < cuts.size() ? value_on(0.5 * (cuts[i] + cuts[i + 1])) : background;
    if (v == out.values.back()) continue;
    out.knots.push_back(cuts[i]);
    out.values.push_back(v);
  }
  return out;
}

double l1_distance(const StepFunction& u, const StepFunction& w, double a, double b) {
  std::vector<double> pts{a, b};
  for (double k : u.knots)
    if (k > a && k < b) pts.push_back(k);
  for (double k : w.knots)
    if (k > a && k < b) pts.push_back(k);
  std::sort(pts.begin(), pts.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double mid = 0.5 * (pts[i] + pts[i + 1]);
    sum += std::abs(u(mid) - w(mid)) * (pts[i + 1] - pts[i]);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Quantization
// ---------------------------------------------------------------------------

StepFunction QuantizedDatum::to_step_function() const {
  StepFunction out;
  out.knots = knots;
  const double h = std::ldexp(1.0, -n);
  for (int k : levels) out.values.push_back(k * h);
  return out;
}

QuantizedDatum quantize_datum(const StepFunction& datum, int n) {
  if (datum.values.size() != datum.knots.size() + 1)
    throw DomainError("step function needs one more value than knots");
  QuantizedDatum q;
  q.n = n;
  q.tv_original = datum.total_variation();
  const double scale = std::ldexp(1.0, n);
  for (std::size_t i = 0; i < datum.values.size(); ++i) {
    const double v = datum.values[i];
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("datum value outside [0,1]");
    // nearbyint uses the default round-half-to-even mode.
    const int level = static_cast<int>(std::nearbyint(v * scale));
    if (i > 0 && level == q.levels.back()) continue;
    if (i > 0) q.knots.push_back(datum.knots[i - 1]);
    q.levels.push_back(level);
  }
  q.tv_quantized = q.to_step_function().total_variation();
  return q;
}

// ---------------------------------------------------------------------------
// Riemann problems for the piecewise-linear flux
// ---------------------------------------------------------------------------

namespace {

// Monotone-chain hull over levels lo..hi; lower = convex minorant.
std::vector<int> hull(const PiecewiseLinearFlux& flux, int lo, int hi, bool lower) {
  std::vector<int> h;
  auto cross = [&](int o, int a, int b) {
    const double fo = flux.values[static_cast<std::size_t>(o)];
    const double fa = flux.values[static_cast<std::size_t>(a)];
    const double fb = flux.values[static_cast<std::size_t>(b)];
    return static_cast<double>(a - o) * (fb - fo) - (fa - fo) * static_cast<double>(b - o);
  };
  for (int k = lo; k <= hi; ++k) {
    while (h.size() >= 2) {
      const double c = cross(h[h.size() - 2], h.back(), k);
      // Drop collinear points too: only genuine kinks become states.
      if (lower ? c <= 0.0 : c >= 0.0)
        h.pop_back();
      else
        break;
    }
    h.push_back(k);
  }
  return h;
}

}  // namespace

std::vector<Front> ft_riemann(const PiecewiseLinearFlux& flux, int left, int right, double x) {
  const int m = flux.levels();
  if (left < 0 || left > m || right < 0 || right > m)
    throw DomainError("front-tracking state outside the dyadic grid");
  std::vector<Front> out;
  if (left == right) return out;
  if (left < right) {
    const auto h = hull(flux, left, right, true);
    for (std::size_t i = 0; i + 1 < h.size(); ++i)
      out.push_back({x, h[i], h[i + 1], flux.slope(h[i], h[i + 1])});
  } else {
    auto h = hull(flux, right, left, false);
    std::reverse(h.begin(), h.end());
    for (std::size_t i = 0; i + 1 < h.size(); ++i)
      out.push_back({x, h[i], h[i + 1], flux.slope(h[i + 1], h[i])});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Front state
// ---------------------------------------------------------------------------

double FrontState::total_variation() const {
  double tv = 0.0;
  for (const auto& f : fronts) tv += std::abs(f.right - f.left);
  return tv * flux.step();
}

StepFunction FrontState::profile() const {
  StepFunction out;
  out.values.push_back(far_left * flux.step());
  for (const auto& f : fronts) {
    out.knots.push_back(f.x);
    out.values.push_back(f.right * flux.step());
  }
  return out;
}

std::string FrontState::dump() const {
  std::ostringstream os;
  os.precision(17);
  os << "t=" << t << " far_left=" << far_left << " collisions=" << collisions << '\n';
  for (std::size_t i = 0; i < fronts.size(); ++i)
    os << "  [" << i << "] x=" << fronts[i].x << " " << fronts[i].left << "->"
       << fronts[i].right << " s=" << fronts[i].speed << '\n';
  return os.str();
}

void FrontState::check_consistency() const {
  int prev = far_left;
  for (std::size_t i = 0; i < fronts.size(); ++i) {
    const auto& f = fronts[i];
    if (f.left != prev) throw InternalError("front states do not chain\n" + dump());
    if (f.left == f.right) throw InternalError("front without a jump\n" + dump());
    if (i > 0 && f.x < fronts[i - 1].x - 1e-9)
      throw InternalError("front positions out of order\n" + dump());
    if (std::abs(f.speed - flux.slope(f.left, f.right)) > 1e-12 * (1.0 + std::abs(f.speed)))
      throw InternalError("front speed differs from the flux slope\n" + dump());
    prev = f.right;
  }
}

FrontState make_front_state(const PiecewiseLinearFlux& flux, const QuantizedDatum& datum) {
  if (datum.n != flux.n) throw DomainError("datum and flux resolutions differ");
  FrontState s;
  s.flux = flux;
  s.far_left = datum.levels.front();
  for (std::size_t i = 0; i < datum.knots.size(); ++i) {
    auto fan = ft_riemann(flux, datum.levels[i], datum.levels[i + 1], datum.knots[i]);
    s.fronts.insert(s.fronts.end(), fan.begin(), fan.end());
  }
  return s;
}

namespace {

// Earliest collision time strictly after state.t, or +inf.
double next_collision(const FrontState& s, std::vector<double>& pair_time) {
  pair_time.assign(s.fronts.size() > 0 ? s.fronts.size() - 1 : 0,
                   std::numeric_limits<double>::infinity());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < s.fronts.size(); ++i) {
    const auto& a = s.fronts[i];
    const auto& b = s.fronts[i + 1];
    const double closing = a.speed - b.speed;
    if (closing <= 0.0) continue;
    const double gap = b.x - a.x;
    const double dt = gap / closing;
    if (dt < -1e-9 * (1.0 + std::abs(a.x)))
      throw InternalError("negative collision time " + std::to_string(dt) + "\n" + s.dump());
    pair_time[i] = s.t + std::max(dt, 0.0);
    best = std::min(best, pair_time[i]);
  }
  return best;
}

void advance(FrontState& s, double t) {
  const double dt = t - s.t;
  for (auto& f : s.fronts) f.x += f.speed * dt;
  s.t = t;
}

// Merge every chain of pairs colliding at t_hit (within tolerance).
void resolve(FrontState& s, const std::vector<double>& pair_time, double t_hit) {
  std::vector<Front> out;
  out.reserve(s.fronts.size());
  std::size_t i = 0;
  while (i < s.fronts.size()) {
    std::size_t j = i;
    while (j < pair_time.size() && pair_time[j] <= t_hit + kTimeTol) ++j;
    if (j == i) {
      out.push_back(s.fronts[i]);
      ++i;
      continue;
    }
    double x = 0.0;
    for (std::size_t k = i; k <= j; ++k) x += s.fronts[k].x;
    x /= static_cast<double>(j - i + 1);
    auto fan = ft_riemann(s.flux, s.fronts[i].left, s.fronts[j].right, x);
    out.insert(out.end(), fan.begin(), fan.end());
    i = j + 1;
  }
  s.fronts = std::move(out);
  ++s.collisions;
}

template <typename OnEpoch>
FrontState evolve_impl(FrontState s, double t_end, OnEpoch&& on_epoch) {
  if (t_end < s.t) throw InternalError("cannot evolve backwards in time");
  std::vector<double> pair_time;
  long events = 0;
  while (true) {
    const double t_hit = next_collision(s, pair_time);
    const double t_stop = std::min(t_hit, t_end);
    on_epoch(s, t_stop);
    if (t_hit > t_end) {
      advance(s, t_end);
      return s;
    }
    advance(s, t_hit);
    resolve(s, pair_time, t_hit);
    if (++events > kMaxEvents)
      throw InternalError("front-tracking event cap exceeded\n" + s.dump());
  }
}

}  // namespace

FrontState ft_evolve(FrontState state, double t_end) {
  return evolve_impl(std::move(state), t_end, [](const FrontState&, double) {});
}

FrontHistory evolve_with_history(FrontState state, double t_end) {
  FrontHistory h;
  h.flux = state.flux;
  evolve_impl(std::move(state), t_end, [&h](const FrontState& s, double t1) {
    if (!h.epochs.empty() && h.epochs.back().t1 == s.t && t1 == s.t) return;
    h.epochs.push_back({s.t, t1, s.far_left, s.fronts});
  });
  return h;
}

// ---------------------------------------------------------------------------
// History queries
// ---------------------------------------------------------------------------

const FrontHistory::Epoch& FrontHistory::epoch_at(double t) const {
  if (epochs.empty()) throw InternalError("empty front history");
  if (t < epochs.front().t0 || t > epochs.back().t1)
    throw DomainError("time " + std::to_string(t) + " outside the tracked history");
  // Last epoch starting at or before t.
  auto it = std::upper_bound(epochs.begin(), epochs.end(), t,
                             [](double v, const Epoch& e) { return v < e.t0; });
  return *(it - 1);
}

double FrontHistory::value_at(double t, double x, TraceSide side) const {
  const auto& e = epoch_at(t);
  int level = e.far_left;
  for (const auto& f : e.fronts) {
    const double pos = f.x + f.speed * (t - e.t0);
    if (side == TraceSide::Right ? pos <= x : pos < x)
      level = f.right;
    else
      break;
  }
  return level * flux.step();
}

double FrontHistory::total_variation_at(double t) const {
  const auto& e = epoch_at(t);
  double tv = 0.0;
  for (const auto& f : e.fronts) tv += std::abs(f.right - f.left);
  return tv * flux.step();
}

double PolyCurve::position(double t) const {
  if (times.size() == 1) return positions.front();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t k = static_cast<std::size_t>(it - times.begin());
  k = std::clamp<std::size_t>(k, 1, times.size() - 1) - 1;
  const double theta = (t - times[k]) / (times[k + 1] - times[k]);
  return positions[k] + theta * (positions[k + 1] - positions[k]);
}

double PolyCurve::speed(double t) const {
  if (times.size() == 1) return 0.0;
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t k = static_cast<std::size_t>(it - times.begin());
  k = std::clamp<std::size_t>(k, 1, times.size() - 1) - 1;
  return (positions[k + 1] - positions[k]) / (times[k + 1] - times[k]);
}

namespace {

void add_crossings(const FrontHistory::Epoch& e, const PolyCurve& g, double lo, double hi,
                   std::vector<double>& pts) {
  const double x_lo = g.position(lo);
  const double v = g.speed(0.5 * (lo + hi));
  for (const auto& f : e.fronts) {
    const double rel_speed = v - f.speed;
    if (rel_speed == 0.0) continue;
    const double gap = (f.x + f.speed * (lo - e.t0)) - x_lo;
    const double t = lo + gap / rel_speed;
    if (t > lo && t < hi) pts.push_back(t);
  }
}

void check_curve(const PolyCurve& g, double T, const char* name) {
  if (g.times.size() != g.positions.size() || g.times.empty())
    throw PreconditionError(std::string(name) + ": times and positions must pair up");
  if (g.times.front() > 0.0 || g.times.back() < T)
    throw PreconditionError(std::string(name) + " must cover [0, T]");
  for (std::size_t i = 1; i < g.times.size(); ++i)
    if (!(g.times[i] > g.times[i - 1]))
      throw PreconditionError(std::string(name) + ": times must increase strictly");
}

}  // namespace

CurveIntegral sample_curve_integral(const FrontHistory& history, const SpeedLaw& law,
                                    const PolyCurve& g1, const PolyCurve& g2, double T,
                                    double c) {
  if (!(c > 0.0)) throw PreconditionError("non-characteristic margin c must be positive");
  if (!(T > 0.0) || T > history.t_end() + kTimeTol)
    throw PreconditionError("T must lie in (0, end of the tracked history]");
  check_curve(g1, T, "curve 1");
  check_curve(g2, T, "curve 2");

  std::vector<double> pts{0.0, T};
  for (const auto* g : {&g1, &g2})
    for (double t : g->times)
      if (t > 0.0 && t < T) pts.push_back(t);
  for (const auto& e : history.epochs)
    if (e.t0 > 0.0 && e.t0 < T) pts.push_back(e.t0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  // Within each coarse interval both curves and all fronts are linear.
  std::vector<double> fine = pts;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto& e = history.epoch_at(0.5 * (pts[i] + pts[i + 1]));
    add_crossings(e, g1, pts[i], pts[i + 1], fine);
    add_crossings(e, g2, pts[i], pts[i + 1], fine);
  }
  std::sort(fine.begin(), fine.end());
  fine.erase(std::unique(fine.begin(), fine.end()), fine.end());

  CurveIntegral out;
  for (std::size_t i = 0; i + 1 < fine.size(); ++i) {
    const double dt = fine[i + 1] - fine[i];
    if (dt <= 0.0) continue;
    const double t = 0.5 * (fine[i] + fine[i + 1]);
    const double r1 = history.value_at(t, g1.position(t));
    const double r2 = history.value_at(t, g2.position(t));
    for (const auto& [g, r] : {std::pair{&g1, r1}, std::pair{&g2, r2}}) {
      const double margin = g->speed(t) - law.flux_derivative(r);
      if (margin < c - 1e-12)
        throw PreconditionError("curve is not non-characteristic at t=" + std::to_string(t) +
                                " (margin " + std::to_string(margin) + " < c)");
    }
    out.integral += std::abs(r1 - r2) * dt;
  }
  for (double t : pts) out.c0_distance = std::max(out.c0_distance, std::abs(g1.position(t) - g2.position(t)));
  out.tv0 = history.total_variation_at(0.0);
  out.bound = out.tv0 * out.c0_distance / c;
  return out;
}

}  // namespace probeflow
