#include "evfleet/battery.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace evfleet {

namespace {

void check_curve_params(double Q, double R, double T) {
    if (!(Q > 0.0 && Q < 1.0)) throw DomainError("need 0 < Q < 1, got " + std::to_string(Q));
    if (!(R > 0.0 && R < T)) throw DomainError("need 0 < R < T");
    if (!(Q / R > 1.0 / T)) throw DomainError("need Q/R > 1/T");
}

// residual of the continuity condition at t = R
double continuity_residual(double Q, double R, double T, double beta) {
    return (Q / (R * beta)) * (1.0 - std::exp(-beta * (T - R))) - (1.0 - Q);
}

}  // namespace

double solve_beta(double Q, double R, double T) {
    check_curve_params(Q, R, T);
    // residual is strictly decreasing in beta: positive near 0, negative at infinity
    double lo = 1e-12;
    double hi = 1.0;
    while (continuity_residual(Q, R, T, hi) > 0.0) hi *= 2.0;
    while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        if (continuity_residual(Q, R, T, mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

BatteryModel BatteryModel::make(double Q, double R, double T, double eta, double q_est,
                                double q_min, double range_km) {
    BatteryModel m;
    m.Q = Q;
    m.R = R;
    m.T = T;
    m.beta = solve_beta(Q, R, T);
    m.eta = eta;
    m.q_est = q_est;
    m.q_min = q_min;
    m.range_km = range_km;
    if (!(q_min >= 0.0 && q_min < Q)) throw DomainError("need 0 <= q_min < Q");
    if (!(q_est > 0.0)) throw DomainError("need q_est > 0");
    if (!(eta > 0.0)) throw DomainError("need eta > 0");
    if (!(range_km > 0.0)) throw DomainError("need range_km > 0");
    return m;
}

double charge_curve(const BatteryModel& m, double t) {
    if (t < 0.0) throw DomainError("charge_curve needs t >= 0");
    double q;
    if (t <= m.R)
        q = m.Q * t / m.R;
    else
        q = 1.0 - (m.Q / (m.R * m.beta)) * std::exp(-m.beta * (m.T - m.R)) *
                      (std::exp(m.beta * (m.T - t)) - 1.0);
    return std::clamp(q, 0.0, 1.0);
}

double charge_time_from_empty(const BatteryModel& m, double q) {
    if (q < 0.0 || q > 1.0) throw DomainError("charge fraction out of [0, 1]");
    if (q <= m.Q) return q * m.R / m.Q;
    // invert the exponential branch
    double inner = 1.0 + (1.0 - q) * m.R * m.beta * std::exp(m.beta * (m.T - m.R)) / m.Q;
    return m.T - std::log(inner) / m.beta;
}

double avg_cost(const BatteryModel& m, double q_to, double d, double cost_rate) {
    if (q_to <= 0.0 || q_to > 1.0) throw DomainError("q_to must be in (0, 1]");
    if (d < 0.0) throw DomainError("d must be >= 0");
    double offline = d + charge_time_from_empty(m, q_to);
    return offline / (offline + q_to / m.q_est) * cost_rate;
}

double optimal_charge_to(const BatteryModel& m, double d, double cost_rate) {
    if (d < 0.0) throw DomainError("d must be >= 0");
    if (d == 0.0) return m.Q;  // cost is flat on (0, Q]; Q is the canonical pick
    // coarse grid, then golden-section on the bracketing interval; the cost is
    // not proven unimodal so the grid picks the basin first
    const double step = 0.001;
    double best_q = step;
    double best_k = avg_cost(m, step, d, cost_rate);
    for (double q = 2 * step; q <= 1.0 + 1e-12; q += step) {
        double k = avg_cost(m, std::min(q, 1.0), d, cost_rate);
        if (k < best_k) {
            best_k = k;
            best_q = std::min(q, 1.0);
        }
    }
    double lo = std::max(step / 2, best_q - step);
    double hi = std::min(1.0, best_q + step);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - phi * (hi - lo);
    double b = lo + phi * (hi - lo);
    double fa = avg_cost(m, a, d, cost_rate);
    double fb = avg_cost(m, b, d, cost_rate);
    while (hi - lo > 1e-9) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = avg_cost(m, a, d, cost_rate);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = avg_cost(m, b, d, cost_rate);
        }
    }
    return 0.5 * (lo + hi);
}

double discharge(const BatteryModel& m, double q, double distance_m) {
    if (q < -0.2 || q > 1.0) throw DomainError("charge out of [-0.2, 1]");
    if (distance_m < 0.0) throw DomainError("distance must be >= 0");
    return q - distance_m / (m.range_km * 1000.0);
}

double predicted_empty_time(const BatteryModel& m, double q0, double t0_seconds) {
    if (q0 < 0.0) throw DomainError("q0 must be >= 0");
    return t0_seconds + q0 / m.q_est * 60.0;
}

}  // namespace evfleet
