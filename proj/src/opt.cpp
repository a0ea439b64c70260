#include "flapsim/opt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <thread>

namespace flapsim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void Bounds::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0) throw ModelError("bounds: lower/upper size mismatch");
  if (!lower.allFinite() || !upper.allFinite()) throw ModelError("bounds: must be finite");
  if ((upper.array() < lower.array()).any()) throw ModelError("bounds: lower exceeds upper");
}

bool Bounds::contains(const VecX& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

VecX Bounds::clip(const VecX& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

Trace simulate_gait(const GaitParams& gait, const ModelParams& params, const SimConfig& sim) {
  const double omega = params.omega_flap;
  const JointReference r0 = joint_reference(0.0, gait, omega);
  const Drive drive =
      Drive::constrained([gait, omega](double t, const State&) { return joint_reference(t, gait, omega).theta_ddot; });
  return run_simulation(sim, params, drive, initial_state(r0.theta, r0.theta_dot));
}

Trace simulate_perch(const GaitParams& gait, const ManeuverParams& maneuver, const ModelParams& params,
                     const SimConfig& sim) {
  const double omega = params.omega_flap;
  const JointReference r0 = maneuver_reference(0.0, gait, maneuver, omega);
  const Drive drive = Drive::constrained([gait, maneuver, omega](double t, const State& s) {
    return pd_acceleration_constraint(s.theta, s.theta_dot(), maneuver_reference(t, gait, maneuver, omega));
  });
  return run_simulation(sim, params, drive, initial_state(r0.theta, r0.theta_dot));
}

Trace simulate_pid(const GaitParams& gait, const ManeuverParams& maneuver, const ModelParams& params,
                   const SimConfig& sim, const PidGains& gains) {
  const double omega = params.omega_flap;
  const JointReference r0 = maneuver_reference(0.0, gait, maneuver, omega);
  auto pid = std::make_shared<PidState>();
  pid->gains = gains;
  // P and D act on every stage; the integral moves once per step.
  auto law = [gait, maneuver, omega, pid](double t, const State& s, double dt) {
    const JointReference ref = maneuver_reference(t, gait, maneuver, omega);
    return pid_torque(*pid, s.theta, s.theta_dot(), ref.theta, ref.theta_dot, dt);
  };
  Drive drive = Drive::torque([law](double t, const State& s) { return law(t, s, 0.0); },
                              [law](double t, const State& s, double dt) { law(t, s, dt); });
  drive.joint_damping = gains.kd;
  drive.joint_stiffness = gains.kp;
  return run_simulation(sim, params, drive, initial_state(r0.theta, r0.theta_dot));
}

double gait_cost_from_trace(const Trace& trace, const Vec4& q_diag) {
  if (trace.failed) return kInf;
  double cost = 0.0;
  for (const TraceRow& row : trace.rows) {
    const Vec4 z(row.momentum.x(), row.momentum.y(), row.momentum.z(), row.state.velocity().z());
    cost += z.dot(q_diag.cwiseProduct(z));
  }
  return cost;
}

double gait_cost(const GaitVector& k1, const GaitCostConfig& config) {
  if (!config.bounds.contains(k1)) throw ModelError("gait_cost: k1 outside bounds");
  const Trace trace = simulate_gait(GaitParams::from_vector(k1), config.params, config.sim);
  return gait_cost_from_trace(trace, config.q_diag);
}

double perch_cost_from_trace(const Trace& trace, double t0, double ramp) {
  if (trace.failed) return kInf;
  // Sample times are k * dt, so allow for rounding at both window edges.
  const double slack = 1e-9;
  const double t_end = t0 + 2.0 * ramp;
  double cost = 0.0;
  for (const TraceRow& row : trace.rows) {
    if (row.t < t0 - slack || row.t > t_end + slack) continue;
    const double e = row.state.omega().x() - roll_reference(row.t, t0, ramp).rate;
    cost += e * e;
  }
  return cost;
}

double perch_cost(const ManeuverVector& k2, const PerchCostConfig& config) {
  if (!config.bounds.contains(k2)) throw ModelError("perch_cost: k2 outside bounds");
  const ManeuverParams m = ManeuverParams::from_vector(k2, config.ramp);
  SimConfig sim = config.sim;
  sim.t_end = m.t0 + 2.0 * m.ramp + 0.5 * sim.dt * sim.record_stride;
  const Trace trace = simulate_perch(config.gait, m, config.params, sim);
  return perch_cost_from_trace(trace, m.t0, m.ramp);
}

Bounds default_gait_bounds() {
  const double d = units::kDegree;
  Bounds b;
  b.lower.resize(11);
  b.upper.resize(11);
  b.lower << -90, -90, -90, -90, 0, 0, 0, 0, -180, -180, -180;
  b.upper << 90, 90, 90, 90, 60, 60, 60, 60, 180, 180, 180;
  b.lower *= d;
  b.upper *= d;
  return b;
}

Bounds default_perch_bounds() {
  const double d = units::kDegree;
  Bounds b;
  b.lower.resize(5);
  b.upper.resize(5);
  b.lower << 1.0, -90 * d, -90 * d, -90 * d, -90 * d;
  b.upper << 1.1, 90 * d, 90 * d, 90 * d, 90 * d;
  return b;
}

GaitReport gait_report(const Trace& trace, double wingbeat, double t_start) {
  GaitReport rep;
  const double slack = 1e-9;
  std::vector<Vec3> beat_velocity;
  double sum_pi = 0.0, sum_pitch = 0.0, sum_p2p = 0.0;
  int rows = 0;
  for (int beat = 0;; ++beat) {
    const double a = t_start + beat * wingbeat, b = a + wingbeat;
    if (trace.rows.empty() || b > trace.rows.back().t + slack) break;
    double lo = kInf, hi = -kInf;
    Vec3 v = Vec3::Zero();
    int n = 0;
    for (const TraceRow& row : trace.rows) {
      // Half-open beats [a, b) so no row is counted twice.
      if (row.t < a - slack || row.t >= b - slack) continue;
      const double pi = row.momentum.norm();
      lo = std::min(lo, pi);
      hi = std::max(hi, pi);
      v += row.state.velocity();
      sum_pi += pi;
      sum_pitch += row.euler.pitch;
      ++n;
    }
    if (n == 0) break;
    rows += n;
    sum_p2p += hi - lo;
    beat_velocity.push_back(v / n);
  }
  rep.wingbeats = static_cast<int>(beat_velocity.size());
  if (rep.wingbeats == 0) return rep;
  rep.mean_momentum = sum_pi / rows;
  rep.mean_pitch = sum_pitch / rows;
  rep.momentum_peak_to_peak = sum_p2p / rep.wingbeats;
  for (const Vec3& v : beat_velocity) rep.mean_velocity += v;
  rep.mean_velocity /= rep.wingbeats;
  double var = 0.0;
  for (const Vec3& v : beat_velocity) var += (v - rep.mean_velocity).squaredNorm();
  rep.velocity_spread = std::sqrt(var / rep.wingbeats);
  return rep;
}

std::vector<double> integrated_roll(const Trace& trace, double t_start) {
  std::vector<double> out(trace.rows.size(), 0.0);
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    const TraceRow& a = trace.rows[i - 1];
    const TraceRow& b = trace.rows[i];
    out[i] = out[i - 1];
    if (b.t <= t_start) continue;
    const double lo = std::max(a.t, t_start);
    // Linear interpolation of omega_x when t_start falls inside the interval.
    const double wa = a.state.omega().x() + (b.state.omega().x() - a.state.omega().x()) * (lo - a.t) / (b.t - a.t);
    out[i] += 0.5 * (wa + b.state.omega().x()) * (b.t - lo);
  }
  return out;
}

ManeuverReport maneuver_report(const Trace& trace, const ManeuverParams& maneuver, double wingbeat) {
  ManeuverReport rep;
  const double beats = maneuver.t0 / wingbeat;
  rep.start_phase = beats - std::floor(beats);
  const std::vector<double> roll = integrated_roll(trace, maneuver.t0);
  const double threshold = 150.0 * units::kDegree;
  rep.time_to_excursion = -1.0;
  rep.min_euler_roll = kInf;
  rep.max_euler_roll = -kInf;
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const double t = trace.rows[i].t;
    rep.min_euler_roll = std::min(rep.min_euler_roll, trace.rows[i].euler.roll);
    rep.max_euler_roll = std::max(rep.max_euler_roll, trace.rows[i].euler.roll);
    if (t < maneuver.t0) continue;
    if (std::abs(roll[i]) > std::abs(rep.roll_excursion)) rep.roll_excursion = roll[i];
    if (rep.time_to_excursion < 0.0 && std::abs(roll[i]) >= threshold) rep.time_to_excursion = t - maneuver.t0;
  }
  rep.final_roll = roll.empty() ? 0.0 : roll.back();
  rep.tracking_cost = perch_cost_from_trace(trace, maneuver.t0, maneuver.ramp);
  return rep;
}

double joint_tracking_rms(const Trace& trace, const std::function<Vec8(double)>& reference) {
  if (trace.rows.empty()) return 0.0;
  double sum = 0.0;
  for (const TraceRow& row : trace.rows) sum += (row.state.theta - reference(row.t)).squaredNorm();
  return std::sqrt(sum / (8.0 * static_cast<double>(trace.rows.size())));
}

namespace {

double safe_cost(const CostFn& cost, const VecX& x) {
  double c;
  try {
    c = cost(x);
  } catch (const ModelError&) {
    return kInf;
  }
  return std::isfinite(c) ? c : kInf;
}

// Evaluates xs[i] into out[i]; thread count never changes the values.
void evaluate_batch(const CostFn& cost, const std::vector<VecX>& xs, std::vector<double>& out, int workers) {
  out.assign(xs.size(), kInf);
  const int threads = std::max(1, std::min<int>(workers, static_cast<int>(xs.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = safe_cost(cost, xs[i]);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < xs.size(); i = next++) out[i] = safe_cost(cost, xs[i]);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

OptimizeResult optimize(const CostFn& cost, const Bounds& bounds, const VecX& x0, const OptimizerSettings& settings) {
  bounds.validate();
  if (settings.budget < 1) throw ModelError("optimize: budget must be >= 1");
  if (!bounds.contains(x0)) throw ModelError("optimize: start point outside bounds");
  const int n = bounds.dimension();
  const VecX width = bounds.upper - bounds.lower;
  // Search in the unit box; zero-width coordinates stay fixed.
  auto to_x = [&](const VecX& y) { return VecX(bounds.lower + width.cwiseProduct(y)); };

  OptimizeResult res;
  res.history.reserve(settings.budget);
  auto record = [&](const VecX& x, double c) {
    ++res.evaluations;
    if (res.evaluations == 1 || c < res.best_cost) {
      res.best_cost = c;
      res.best_params = x;
    }
    res.history.push_back(res.best_cost);
  };

  res.initial_cost = safe_cost(cost, x0);
  record(x0, res.initial_cost);

  const int lambda = settings.population > 0 ? settings.population : 4 + static_cast<int>(3.0 * std::log(n));
  const int mu = lambda / 2;
  VecX weights(mu);
  for (int i = 0; i < mu; ++i) weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  weights /= weights.sum();
  const double mueff = 1.0 / weights.squaredNorm();
  const double cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
  const double cs = (mueff + 2.0) / (n + mueff + 5.0);
  const double c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mueff);
  const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) * (n + 2.0) + mueff));
  const double damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs;
  const double chi_n = std::sqrt(static_cast<double>(n)) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  VecX mean(n);
  for (int i = 0; i < n; ++i) mean[i] = width[i] > 0.0 ? (x0[i] - bounds.lower[i]) / width[i] : 0.0;
  double sigma = settings.initial_step;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);
  VecX scale = VecX::Ones(n);
  VecX pc = VecX::Zero(n), ps = VecX::Zero(n);

  std::mt19937_64 rng(settings.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<VecX> ys, xs;
  std::vector<double> costs;

  for (int gen = 1; res.evaluations < settings.budget; ++gen) {
    const int count = std::min(lambda, settings.budget - res.evaluations);
    ys.assign(count, VecX());
    xs.assign(count, VecX());
    for (int k = 0; k < count; ++k) {
      VecX z(n);
      for (int i = 0; i < n; ++i) z[i] = normal(rng);
      ys[k] = (mean + sigma * (basis * scale.cwiseProduct(z))).cwiseMax(0.0).cwiseMin(1.0);
      xs[k] = bounds.clip(to_x(ys[k]));
    }
    evaluate_batch(cost, xs, costs, settings.workers);
    for (int k = 0; k < count; ++k) record(xs[k], costs[k]);
    if (count < lambda) break;

    std::vector<int> order(lambda);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return costs[a] < costs[b]; });

    const VecX old_mean = mean;
    mean.setZero();
    for (int i = 0; i < mu; ++i) mean += weights[i] * ys[order[i]];
    const VecX step = (mean - old_mean) / sigma;
    const VecX inv_sqrt_step = basis * (basis.transpose() * step).cwiseQuotient(scale);
    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * inv_sqrt_step;
    const double ps_norm = ps.norm() / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * gen));
    const double hsig = ps_norm / chi_n < 1.4 + 2.0 / (n + 1.0) ? 1.0 : 0.0;
    pc = (1.0 - cc) * pc + hsig * std::sqrt(cc * (2.0 - cc) * mueff) * step;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) {
      const VecX s = (ys[order[i]] - old_mean) / sigma;
      rank_mu += weights[i] * s * s.transpose();
    }
    cov = (1.0 - c1 - cmu) * cov + c1 * (pc * pc.transpose() + (1.0 - hsig) * cc * (2.0 - cc) * cov) + cmu * rank_mu;
    cov = 0.5 * (cov + cov.transpose());
    sigma *= std::exp((cs / damps) * (ps.norm() / chi_n - 1.0));
    sigma = std::min(sigma, 1.0);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    basis = eig.eigenvectors();
    scale = eig.eigenvalues().cwiseMax(1e-30).cwiseSqrt();
  }

  res.success = std::isfinite(res.best_cost);
  if (!res.success) res.diagnostic = "all " + std::to_string(res.evaluations) + " evaluations were non-finite";
  return res;
}

OptimizeResult optimize(const CostFn& cost, const Bounds& bounds, const OptimizerSettings& settings) {
  bounds.validate();
  return optimize(cost, bounds, VecX(0.5 * (bounds.lower + bounds.upper)), settings);
}

}  // namespace flapsim
