#include "htfid/sim.hpp"

#include "htfid/error.hpp"

#include <cmath>
#include <sstream>

namespace htfid {

namespace {

State rk4_step(const HybridModel& model, Chart chart, const State& y, double t, double h,
               const InputSignal& u) {
    const double half = 0.5 * h;
    const double u0 = u(t);
    const double um = u(t + half);
    const double u1 = u(t + h);
    const State k1 = model.eval_in_chart(chart, y, t, u0);
    const State k2 = model.eval_in_chart(chart, y + half * k1, t + half, um);
    const State k3 = model.eval_in_chart(chart, y + half * k2, t + half, um);
    const State k4 = model.eval_in_chart(chart, y + h * k3, t + h, u1);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// True once the state has left the region where `chart` is active.
bool left_chart(const HybridModel& model, Chart chart, const State& y) {
    if (model.mode() == DamperMode::AlwaysOn) return false;
    return chart == Chart::On ? y[1] <= 0.0 : y[1] > 0.0;
}

Chart other(Chart chart) { return chart == Chart::On ? Chart::Off : Chart::On; }

std::size_t steps_for(double duration, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw Error(ErrorCode::InvalidInput, "dt must be positive");
    }
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw Error(ErrorCode::InvalidInput, "duration must be positive");
    }
    const double n = std::round(duration / dt);
    if (std::abs(n * dt - duration) > 1e-9 * std::max(1.0, duration)) {
        throw Error(ErrorCode::InvalidInput, "dt does not divide the duration");
    }
    return static_cast<std::size_t>(n);
}

}  // namespace

Trajectory integrate(const HybridModel& model, const State& x_init, const InputSignal& u,
                     double duration, double dt, double t0, const IntegrateOptions& options) {
    const std::size_t n_steps = steps_for(duration, dt);
    if (!x_init.allFinite()) throw Error(ErrorCode::InvalidInput, "initial state is not finite");

    Trajectory traj;
    traj.dt = dt;
    traj.t0 = t0;
    traj.samples.reserve(n_steps + 1);

    State y = x_init;
    Chart chart = model.chart_for(y);

    for (std::size_t i = 0;; ++i) {
        const double t_i = traj.time(i);
        const double u_i = u(t_i);
        if (!y.allFinite() || !std::isfinite(u_i)) {
            std::ostringstream msg;
            msg << "non-finite state at t = " << t_i;
            throw Error(ErrorCode::Divergence, msg.str());
        }
        traj.samples.push_back({y[0], y[1], u_i, chart});
        if (i == n_steps) break;

        const double t_end = traj.time(i + 1);
        double t = t_i;
        int events_in_step = 0;
        while (true) {
            const double h = t_end - t;
            const State y_full = rk4_step(model, chart, y, t, h, u);
            if (!left_chart(model, chart, y_full)) {
                y = y_full;
                break;
            }
            // Bracket [lo, hi]: still in chart at lo, left it at hi.
            double lo = 0.0;
            double hi = h;
            int iterations = 0;
            while (hi - lo > options.event_tolerance) {
                if (++iterations > options.max_bisections) {
                    std::ostringstream msg;
                    msg << "bisection did not converge near t = " << t;
                    throw Error(ErrorCode::EventLocalization, msg.str());
                }
                const double mid = 0.5 * (lo + hi);
                if (left_chart(model, chart, rk4_step(model, chart, y, t, mid, u))) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            y = rk4_step(model, chart, y, t, hi, u);
            t += hi;
            chart = other(chart);
            traj.events.push_back({t, chart});
            if (++events_in_step > 8) {
                std::ostringstream msg;
                msg << "chattering between charts near t = " << t;
                throw Error(ErrorCode::EventLocalization, msg.str());
            }
            if (t_end - t <= 0.0) break;
        }
    }
    return traj;
}

LimitCycle settle_limit_cycle(const HybridModel& model, int n_cycles, double dt,
                              const SettleOptions& options) {
    if (n_cycles < 2) throw Error(ErrorCode::InvalidInput, "need at least two cycles to settle");
    const auto& p = model.params();
    const double period = p.forcing_period();
    const std::size_t per_period = steps_for(period, dt);

    const State x_init = options.x_init.value_or(State(p.static_equilibrium(), 0.0));
    const InputSignal no_input = [](double) { return 0.0; };
    const Trajectory traj =
        integrate(model, x_init, no_input, static_cast<double>(n_cycles) * period, dt);

    const std::size_t last = static_cast<std::size_t>(n_cycles - 1) * per_period;
    const std::size_t prev = last - per_period;

    LimitCycle cycle;
    cycle.T = period;
    cycle.dt = dt;
    cycle.samples.reserve(per_period);
    for (std::size_t i = 0; i < per_period; ++i) {
        const State now = traj.state(last + i);
        const State before = traj.state(prev + i);
        cycle.residual = cycle.residual.cwiseMax((now - before).cwiseAbs());
        cycle.samples.push_back(now);
    }
    // The sample one period after the last is also on the orbit.
    cycle.residual =
        cycle.residual.cwiseMax((traj.state(last + per_period) - traj.state(last)).cwiseAbs());

    if ((cycle.residual.array() > options.tolerance).any()) {
        std::ostringstream msg;
        msg.precision(3);
        msg << "periodicity residual (" << cycle.residual[0] << ", " << cycle.residual[1]
            << ") exceeds " << options.tolerance << " after " << n_cycles << " cycles";
        throw Error(ErrorCode::NotSettled, msg.str());
    }

    const double t_start = static_cast<double>(n_cycles - 1) * period;
    for (const auto& e : traj.events) {
        const double phase = e.t - t_start;
        if (phase >= 0.0 && phase < period) cycle.crossings.push_back({phase, e.to});
    }

    if (model.mode() == DamperMode::AlwaysOn) {
        cycle.duty = 1.0;
        return cycle;
    }
    if (cycle.crossings.size() != 2 || cycle.crossings[0].to == cycle.crossings[1].to) {
        throw Error(ErrorCode::AmbiguousSwitching,
                    std::to_string(cycle.crossings.size()) + " threshold crossings in the settled period");
    }
    for (const auto& e : cycle.crossings) {
        (e.to == Chart::On ? cycle.t_on : cycle.t_hat) = e.t;
    }
    double on_time = cycle.t_hat - cycle.t_on;
    if (on_time < 0.0) on_time += period;
    cycle.duty = on_time / period;
    return cycle;
}

Trajectory error_trajectory(const Trajectory& traj, const LimitCycle& cycle) {
    if (cycle.samples.empty()) throw Error(ErrorCode::InvalidInput, "empty limit cycle");
    if (std::abs(traj.dt - cycle.dt) > 1e-12 * cycle.dt) {
        throw Error(ErrorCode::ResamplingRequired, "trajectory and cycle sampling intervals differ");
    }
    const double n = cycle.samples.size();
    double phase = std::fmod(traj.t0, cycle.T);
    if (phase < 0.0) phase += cycle.T;
    const double offset = phase / cycle.dt;
    if (std::abs(offset - std::round(offset)) > 1e-6) {
        throw Error(ErrorCode::ResamplingRequired, "trajectory start is not on the cycle's sample grid");
    }
    const auto start = static_cast<std::size_t>(std::llround(offset)) % static_cast<std::size_t>(n);

    Trajectory out = traj;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const State& ref = cycle.samples[(start + i) % cycle.samples.size()];
        out.samples[i].x -= ref[0];
        out.samples[i].xdot -= ref[1];
    }
    return out;
}

}  // namespace htfid
