#include "fleetsim/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fleetsim/errors.hpp"

namespace fleetsim {

double utilization(double lambda_per_h, std::int64_t c, double mu_per_h) {
  if (!(lambda_per_h > 0) || c < 1 || !(mu_per_h > 0)) {
    throw ValidationError("utilization needs positive lambda, mu and c >= 1");
  }
  return lambda_per_h / (static_cast<double>(c) * mu_per_h);
}

MinFleet min_fleet_base(double lambda_per_h, double mu_per_h) {
  if (!(lambda_per_h > 0) || !(mu_per_h > 0)) {
    throw ValidationError("min_fleet_base needs positive lambda and mu");
  }
  MinFleet result;
  result.exact = lambda_per_h / mu_per_h;
  const double nearest = std::round(result.exact);
  const bool integral = std::abs(result.exact - nearest) <= 1e-9 * std::max(result.exact, 1.0);
  if (integral) {
    result.ceil = static_cast<std::int64_t>(nearest);
    result.smallest_stable = result.ceil + 1;  // rho(c = ceil) == 1 exactly
  } else {
    result.ceil = static_cast<std::int64_t>(std::ceil(result.exact));
    result.smallest_stable = result.ceil;
  }
  return result;
}

double poisson_cdf(std::int64_t k, double mean) {
  if (!(mean >= 0) || !std::isfinite(mean)) {
    throw ValidationError("poisson_cdf needs a finite mean >= 0");
  }
  if (k < 0) return 0.0;
  if (mean == 0.0) return 1.0;

  // Sum exp(j ln m - m - lnGamma(j+1)) outward from the largest retained
  // term, so the result stays accurate when the mode term itself is tiny.
  const auto start = std::min<std::int64_t>(k, static_cast<std::int64_t>(mean));
  const double log_mean = std::log(mean);
  auto log_term = [&](std::int64_t j) {
    return static_cast<double>(j) * log_mean - mean - std::lgamma(static_cast<double>(j) + 1.0);
  };

  double sum = 0.0;
  double comp = 0.0;  // Kahan compensation
  auto add = [&](double term) {
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };

  const double t0 = std::exp(log_term(start));
  add(t0);
  double term = t0;
  for (std::int64_t j = start; j > 0; --j) {
    term *= static_cast<double>(j) / mean;
    if (term <= 0 || term < sum * 1e-18) break;
    add(term);
  }
  term = t0;
  for (std::int64_t j = start + 1; j <= k; ++j) {
    term *= mean / static_cast<double>(j);
    if (term <= 0 || term < sum * 1e-18) break;
    add(term);
  }
  return std::clamp(sum, 0.0, 1.0);
}

namespace {

void check_erlang_domain(std::int64_t c, double rho) {
  if (c < 1) {
    throw ValidationError("Erlang quantities need c >= 1");
  }
  if (!(rho > 0) || !(rho < 1)) {
    throw ValidationError("Erlang quantities need 0 < rho < 1");
  }
}

}  // namespace

double log_erlang_f(std::int64_t c, double rho) {
  check_erlang_domain(c, rho);
  const double m = static_cast<double>(c) * rho;
  const double prefactor =
      std::lgamma(static_cast<double>(c) + 1.0) - static_cast<double>(c) * std::log(m) + m;
  return prefactor + std::log(poisson_cdf(c - 1, m));
}

double erlang_f(std::int64_t c, double rho) { return std::exp(log_erlang_f(c, rho)); }

double erlang_c_delay_prob(std::int64_t c, double rho) {
  const double t = std::log1p(-rho) + log_erlang_f(c, rho);
  // C = 1 / (1 + e^t), evaluated on the stable side.
  if (t > 0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

double p0_empty(std::int64_t c, double rho) {
  check_erlang_domain(c, rho);
  const double m = static_cast<double>(c) * rho;
  // P0 = 1 / (S1 + S2) with S1 the truncated exponential series and S2 the
  // busy-tail term; both are carried in log space.
  const double log_s1 = m + std::log(poisson_cdf(c - 1, m));
  const double log_s2 = static_cast<double>(c) * std::log(m) -
                        std::lgamma(static_cast<double>(c) + 1.0) - std::log1p(-rho);
  const double hi = std::max(log_s1, log_s2);
  const double lse = hi + std::log(std::exp(log_s1 - hi) + std::exp(log_s2 - hi));
  return std::exp(-lse);
}

double queue_length_lq(std::int64_t c, double rho) {
  if (rho >= 1.0) {
    throw UnstableQueueError("rho = " + std::to_string(rho) +
                             " >= 1: queue length grows without bound");
  }
  return erlang_c_delay_prob(c, rho) * rho / (1.0 - rho);
}

LittleLaw waits_from_lq(double lambda_per_h, double mu_per_h, double lq) {
  if (!(lambda_per_h > 0) || !(mu_per_h > 0) || lq < 0) {
    throw ValidationError("waits_from_lq needs positive rates and Lq >= 0");
  }
  LittleLaw out;
  out.wq_h = lq / lambda_per_h;
  out.w_h = out.wq_h + 1.0 / mu_per_h;
  out.l = lambda_per_h * out.w_h;
  return out;
}

QueueMetrics mmc_metrics(const QueueParams& params) {
  if (!(params.t_bar_h > 0)) {
    throw ValidationError("mmc_metrics needs t_bar > 0");
  }
  QueueMetrics m;
  m.mu_per_h = params.t_bar_p_h ? service_rate_with_pickup(params.t_bar_h, *params.t_bar_p_h)
                                : 1.0 / params.t_bar_h;
  m.rho = utilization(params.lambda_per_h, params.c, m.mu_per_h);
  if (m.rho >= 1.0) {
    throw UnstableQueueError("rho = " + std::to_string(m.rho) + " >= 1 at c = " +
                             std::to_string(params.c));
  }
  m.erlang_c = erlang_c_delay_prob(params.c, m.rho);
  m.p0_empty = p0_empty(params.c, m.rho);
  m.lq = queue_length_lq(params.c, m.rho);
  const LittleLaw little = waits_from_lq(params.lambda_per_h, m.mu_per_h, m.lq);
  m.wq_h = little.wq_h;
  m.w_h = little.w_h;
  m.l = little.l;
  return m;
}

double pickup_wait_h(double area_km2, double psi, double v_idle, double phi,
                     double v_bar_kmh) {
  // Each idle vehicle covers a square cell of A/(psi V); the mean distance
  // between two uniform points in a square of area a is about 0.52 sqrt(a),
  // stretched by the circuity factor and driven at the mean network speed.
  if (!(v_idle > 0)) {
    throw ValidationError("pickup_wait needs V > 0");
  }
  if (!(psi > 0) || psi > 1.0) {
    throw ValidationError("pickup_wait needs psi in (0, 1]");
  }
  if (!(area_km2 > 0) || !(phi >= 1.0) || !(v_bar_kmh > 0)) {
    throw ValidationError("pickup_wait needs positive area and speed, phi >= 1");
  }
  return 0.52 * phi / v_bar_kmh * std::sqrt(area_km2 / (psi * v_idle));
}

double service_rate_with_pickup(double t_bar_h, double t_bar_p_h) {
  if (!(t_bar_h > 0) || t_bar_p_h < 0) {
    throw ValidationError("service_rate_with_pickup needs t_bar > 0 and t_bar_p >= 0");
  }
  return 1.0 / (t_bar_h + t_bar_p_h);
}

double utilization_with_pickup(double lambda_per_h, std::int64_t c, double t_bar_h,
                               double t_bar_p_h) {
  return utilization(lambda_per_h, c, service_rate_with_pickup(t_bar_h, t_bar_p_h));
}

PickupModel spatial_pickup_model(double area_km2, double psi, double phi, double v_bar_kmh) {
  return [=](double v_idle) { return pickup_wait_h(area_km2, psi, v_idle, phi, v_bar_kmh); };
}

FluidTrace fluid_recursion(double lambda_per_h, double t_bar_h, const PickupModel& pickup_h,
                           double v0, double dt_s, double horizon_s) {
  if (!(lambda_per_h > 0) || !(t_bar_h > 0) || v0 < 0 || !(dt_s > 0) || !(horizon_s > 0)) {
    throw ValidationError("fluid_recursion needs positive parameters and V0 >= 0");
  }
  const double steps_exact = horizon_s / dt_s;
  const auto n = static_cast<std::size_t>(std::llround(steps_exact));
  if (n == 0 || std::abs(steps_exact - static_cast<double>(n)) > 1e-9) {
    throw ValidationError("fluid_recursion needs dt to divide the horizon");
  }

  const double out_per_step = lambda_per_h * dt_s / 3600.0;
  const double dt_h = dt_s / 3600.0;
  std::vector<double> pending(n, 0.0);

  FluidTrace trace;
  trace.dt_s = dt_s;
  trace.v0 = v0;
  trace.steps.resize(n);
  trace.min_v = v0;

  double v = v0;
  for (std::size_t t = 0; t < n; ++t) {
    FluidStep& step = trace.steps[t];
    step.v_in = pending[t];
    step.v_out = out_per_step;
    v = v + step.v_in - step.v_out;
    step.v_idle = v;
    step.feasible = v >= -1e-9;
    trace.min_v = std::min(trace.min_v, v);
    if (!step.feasible) trace.feasible = false;

    // Pickup waits respond to the actual idle stock; the per-step arrival
    // count stands in for it only once the trajectory is already infeasible,
    // to keep the recursion defined.
    const double v_eff = v > 0 ? v : out_per_step;
    const double delay_h = t_bar_h + pickup_h(v_eff);
    const auto delay_steps = std::max<std::int64_t>(1, std::llround(delay_h / dt_h));
    const std::size_t due = t + static_cast<std::size_t>(delay_steps);
    if (due < n) {
      pending[due] += step.v_out;
    }
  }
  return trace;
}

std::int64_t min_fleet_fluid(double lambda_per_h, double t_bar_h, const PickupModel& pickup_h,
                             double dt_s, double horizon_s) {
  const double out_per_step = lambda_per_h * dt_s / 3600.0;
  auto feasible = [&](std::int64_t v0) {
    return fluid_recursion(lambda_per_h, t_bar_h, pickup_h, static_cast<double>(v0), dt_s,
                           horizon_s)
        .feasible;
  };

  auto lo = static_cast<std::int64_t>(std::ceil(lambda_per_h * t_bar_h - 1e-9));
  auto hi = static_cast<std::int64_t>(
      std::ceil(lambda_per_h * (t_bar_h + pickup_h(out_per_step)) - 1e-9));
  if (hi < lo) hi = lo;

  if (feasible(lo)) {
    return lo;
  }
  // The analytic upper endpoint ignores both delay quantization and the
  // growth of pickup waits while the idle stock drains, so it can fall
  // short. Widen geometrically before giving up.
  std::int64_t gap = std::max<std::int64_t>(hi - lo, 1);
  int attempts = 0;
  while (!feasible(hi)) {
    if (++attempts > 6) {
      throw ValidationError("min_fleet_fluid: upper bracket V0 = " + std::to_string(hi) +
                            " is infeasible over the horizon");
    }
    gap *= 2;
    hi = lo + gap;
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace fleetsim
