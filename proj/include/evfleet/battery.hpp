#pragma once

#include "evfleet/errors.hpp"

namespace evfleet {

// Charge model on the operator scale: 1.0 is the charge-up-to level and 0.0
// sits a q_min buffer above true empty, so fractions may go slightly negative.
struct BatteryModel {
    double Q = 0.7;        // charge fraction at the end of the linear regime
    double R = 15.0;       // minutes, end of the linear regime
    double T = 30.0;       // minutes for a full charge from empty
    double beta = 0.0;     // per-minute decay rate of the exponential branch
    double eta = 1.0 / 30.0;   // fraction per minute, linear rate used by schedulers
    double q_est = 1.0 / 400.0;  // fraction per minute, estimated discharge rate
    double q_min = 0.15;   // operator buffer below the relabeled 0
    double range_km = 180.0;  // km on a full battery

    static BatteryModel make(double Q, double R, double T, double eta, double q_est,
                             double q_min, double range_km);
};

// Rate beta making the charge curve continuous at t = R; bisection on
// (Q/(R*beta))(1 - e^{-beta(T-R)}) = 1 - Q to 1e-10.
double solve_beta(double Q, double R, double T);

// Charge of an initially empty battery after t minutes, clamped to [0, 1].
double charge_curve(const BatteryModel& m, double t_minutes);

// Inverse of charge_curve: minutes to charge an empty battery up to q.
double charge_time_from_empty(const BatteryModel& m, double q);

// Average offline-cost rate of a deplete-to-zero / charge-to-q_to cycle with
// d minutes of empty travel per cycle.
double avg_cost(const BatteryModel& m, double q_to, double d_minutes, double cost_rate);

// Charge-up-to level minimizing avg_cost; Q when d = 0.
double optimal_charge_to(const BatteryModel& m, double d_minutes, double cost_rate);

// Linear discharge over distance; result may go below 0 (buffer region).
double discharge(const BatteryModel& m, double q, double distance_m);

// Scheduling deadline: time at which a vehicle at charge q0 at time t0 is
// expected to hit the relabeled 0, in seconds.
double predicted_empty_time(const BatteryModel& m, double q0, double t0_seconds);

}  // namespace evfleet
