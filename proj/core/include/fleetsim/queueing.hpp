#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace fleetsim {

/// Inputs of the M/M/c toolkit. lambda in requests/hour, times in hours,
/// area in km^2, speeds in km/h.
struct QueueParams {
  double lambda_per_h = 0;
  double t_bar_h = 0;
  std::int64_t c = 1;
  double area_km2 = 0;
  double phi = 1.0;
  double psi = 1.0;
  double v_bar_kmh = 0;
  std::optional<double> t_bar_p_h;
};

struct QueueMetrics {
  double mu_per_h = 0;
  double rho = 0;
  double erlang_c = 0;  ///< probability an arrival has to wait
  double p0_empty = 0;  ///< probability of an empty system
  double lq = 0;
  double wq_h = 0;
  double w_h = 0;
  double l = 0;
};

/// rho = lambda / (c * mu).
double utilization(double lambda_per_h, std::int64_t c, double mu_per_h);

struct MinFleet {
  double exact = 0;             ///< lambda / mu
  std::int64_t ceil = 0;        ///< smallest integer >= exact
  std::int64_t smallest_stable = 0;  ///< smallest integer c with rho < 1
};

MinFleet min_fleet_base(double lambda_per_h, double mu_per_h);

/// Poisson CDF P(X <= k) at the given mean, by mode-centred term recurrence
/// with compensated summation. Accurate for means up to at least 1e9.
double poisson_cdf(std::int64_t k, double mean);

/// log f(c, rho) where f = c!/(c rho)^c * sum_{m<c} (c rho)^m / m!,
/// evaluated as lnGamma(c+1) - c ln(c rho) + c rho + ln F_Poisson(c-1; c rho).
double log_erlang_f(std::int64_t c, double rho);

/// f(c, rho) itself; may overflow to +inf for very small rho at large c, use
/// log_erlang_f for those regimes.
double erlang_f(std::int64_t c, double rho);

/// Probability that an arrival must wait: 1 / (1 + (1 - rho) f(c, rho)).
double erlang_c_delay_prob(std::int64_t c, double rho);

/// True probability of an empty system (textbook M/M/c normalization),
/// computed in log space.
double p0_empty(std::int64_t c, double rho);

/// Lq = C(c, rho) * rho / (1 - rho). Throws UnstableQueueError for rho >= 1.
double queue_length_lq(std::int64_t c, double rho);

struct LittleLaw {
  double wq_h = 0;
  double w_h = 0;
  double l = 0;
};

/// Wq = Lq / lambda, W = Wq + 1/mu, L = lambda W.
LittleLaw waits_from_lq(double lambda_per_h, double mu_per_h, double lq);

/// Assembles the full metric set; uses the pickup-adjusted service rate when
/// t_bar_p is present. Throws UnstableQueueError when rho >= 1.
QueueMetrics mmc_metrics(const QueueParams& params);

/// Mean pickup wait in hours: (0.52 phi / v_bar) * sqrt(A / (psi V)).
double pickup_wait_h(double area_km2, double psi, double v_idle, double phi,
                     double v_bar_kmh);

/// mu = 1 / (t_bar + t_bar_p).
double service_rate_with_pickup(double t_bar_h, double t_bar_p_h);

/// rho = (lambda / c) * (t_bar + t_bar_p).
double utilization_with_pickup(double lambda_per_h, std::int64_t c, double t_bar_h,
                               double t_bar_p_h);

/// Pickup wait in hours as a function of the idle-vehicle count.
using PickupModel = std::function<double(double)>;

PickupModel spatial_pickup_model(double area_km2, double psi, double phi, double v_bar_kmh);
inline PickupModel zero_pickup_model() {
  return [](double) { return 0.0; };
}

struct FluidStep {
  double v_idle = 0;  ///< idle stock after this step's returns and departures
  double v_in = 0;
  double v_out = 0;
  bool feasible = true;  ///< v_idle >= 0
};

struct FluidTrace {
  double dt_s = 0;
  double v0 = 0;
  std::vector<FluidStep> steps;
  bool feasible = true;
  double min_v = 0;
};

/// Deterministic idle-vehicle balance: every step dispatches lambda*dt
/// vehicles; each cohort returns after its pickup wait plus the mean trip
/// time, rounded to the step grid (ties upward). The pickup wait is
/// evaluated at the post-dispatch idle stock V_t while it stays positive;
/// on infeasible steps it falls back to the per-step arrival count, the
/// idle level a saturated system settles at. Infeasibility (V_t < 0) is
/// reported, not thrown.
FluidTrace fluid_recursion(double lambda_per_h, double t_bar_h, const PickupModel& pickup_h,
                           double v0, double dt_s, double horizon_s);

/// Smallest integer V0 for which the fluid recursion stays feasible, by
/// bisection between ceil(lambda t_bar) and ceil(lambda (t_bar + t_p at
/// per-step arrivals)). Throws when the upper bracket endpoint is infeasible.
std::int64_t min_fleet_fluid(double lambda_per_h, double t_bar_h, const PickupModel& pickup_h,
                             double dt_s, double horizon_s);

}  // namespace fleetsim
