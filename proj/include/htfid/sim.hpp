#pragma once

#include "htfid/model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace htfid {

/// Exogenous input u(t) as a function of clock time.
using InputSignal = std::function<double(double)>;

struct Sample {
    double x = 0.0;
    double xdot = 0.0;
    double u = 0.0;
    Chart chart = Chart::Off;
};

/// A threshold crossing located by bisection.
struct SwitchEvent {
    double t = 0.0;  ///< clock time [s]
    Chart to = Chart::Off;
};

/// Uniformly sampled record: sample i is at clock time t0 + i dt.
struct Trajectory {
    double dt = 1e-3;
    double t0 = 0.0;
    std::vector<Sample> samples;
    std::vector<SwitchEvent> events;

    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    State state(std::size_t i) const { return {samples[i].x, samples[i].xdot}; }
};

/// One period of the settled orbit, sampled from clock phase 0.
struct LimitCycle {
    double T = 1.0;
    double dt = 1e-3;
    std::vector<State> samples;
    std::vector<SwitchEvent> crossings;  ///< event phases within [0, T)
    double t_on = 0.0;                   ///< phase where the damper engages
    double t_hat = 0.0;                  ///< phase where the damper disengages
    double duty = 0.0;
    Eigen::Vector2d residual = Eigen::Vector2d::Zero();  ///< per-component periodicity error

    std::size_t samples_per_period() const { return samples.size(); }
    /// State at the cycle's clock phase 0, where records start.
    const State& start() const { return samples.front(); }
    /// Peak-to-peak half amplitude of the position.
    double position_amplitude() const;
};

struct IntegrateOptions {
    double event_tolerance = 1e-10;  ///< bisection stops below this bracket [s]
    int max_bisections = 100;
};

/// Fixed-step RK4 with bisection-localized chart switches. The step containing
/// a crossing is split at the event and finished in the new chart.
Trajectory integrate(const HybridModel& model, const State& x_init, const InputSignal& u,
                     double duration, double dt, double t0 = 0.0,
                     const IntegrateOptions& options = {});

struct SettleOptions {
    double tolerance = 1e-6;          ///< per-component periodicity tolerance
    std::optional<State> x_init;      ///< defaults to rest at the static equilibrium
};

/// Integrates n_cycles forcing periods with u = 0 and returns the last one.
LimitCycle settle_limit_cycle(const HybridModel& model, int n_cycles, double dt,
                              const SettleOptions& options = {});

/// xi(t) = state(t) - cycle(t mod T). Inputs and chart flags are carried over.
Trajectory error_trajectory(const Trajectory& traj, const LimitCycle& cycle);

}  // namespace htfid
