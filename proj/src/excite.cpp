#include "htfid/excite.hpp"

#include "htfid/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace htfid {

void ChirpPlan::validate() const {
    if (!(amplitude >= 0.0)) throw Error(ErrorCode::InvalidInput, "chirp amplitude must be non-negative");
    if (!(f_lo >= 0.0 && f_lo < f_hi)) throw Error(ErrorCode::InvalidInput, "need 0 <= f_lo < f_hi");
    if (!(segment_duration > 0.0)) throw Error(ErrorCode::InvalidInput, "segment duration must be positive");
    if (n_segments < 1) throw Error(ErrorCode::InvalidInput, "need at least one segment");
    if (!(T > 0.0) || !(dt > 0.0)) throw Error(ErrorCode::InvalidInput, "T and dt must be positive");
    if (record_duration < 0.0) throw Error(ErrorCode::InvalidInput, "record duration must be non-negative");
    if (f_hi >= 0.5 / dt) {
        std::ostringstream msg;
        msg << "f_hi = " << f_hi << " Hz is at or above the Nyquist frequency " << 0.5 / dt << " Hz";
        throw Error(ErrorCode::Aliasing, msg.str());
    }
}

double chirp_value(const ChirpPlan& plan, int phase_index, double t) {
    const double tau = t - plan.offset(phase_index);
    if (tau < 0.0 || tau > plan.segment_duration) return 0.0;
    const double rate = std::numbers::pi * (plan.f_hi - plan.f_lo) / plan.segment_duration;
    return plan.amplitude * std::sin(rate * tau * tau + 2.0 * std::numbers::pi * plan.f_lo * tau);
}

std::vector<double> gen_chirp(const ChirpPlan& plan, int phase_index) {
    plan.validate();
    if (phase_index < 0 || phase_index >= plan.n_segments) {
        throw Error(ErrorCode::InvalidInput, "phase index out of range");
    }
    const auto n = static_cast<std::size_t>(std::llround(plan.record_length() / plan.dt));
    std::vector<double> u(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        u[i] = chirp_value(plan, phase_index, static_cast<double>(i) * plan.dt);
    }
    return u;
}

ExperimentBundle run_experiments(const HybridModel& model, const LimitCycle& cycle,
                                 const ChirpPlan& plan) {
    plan.validate();
    if (std::abs(plan.dt - cycle.dt) > 1e-12 * cycle.dt) {
        throw Error(ErrorCode::ResamplingRequired, "chirp plan and cycle use different dt");
    }
    if (std::abs(plan.T - cycle.T) > 1e-12 * cycle.T) {
        throw Error(ErrorCode::InvalidInput, "chirp plan period differs from the cycle period");
    }

    ExperimentBundle bundle;
    bundle.plan = plan;
    const double limit = 0.1 * cycle.position_amplitude();
    for (int k = 0; k < plan.n_segments; ++k) {
        const InputSignal u = [&plan, k](double t) { return chirp_value(plan, k, t); };
        const Trajectory traj = integrate(model, cycle.start(), u, plan.record_length(), plan.dt);

        ExperimentRecord rec;
        rec.phase_index = k;
        rec.chirp_offset = plan.offset(k);
        rec.clock_phase = 0.0;
        rec.error = error_trajectory(traj, cycle);

        double peak = 0.0;
        for (const auto& s : rec.error.samples) peak = std::max(peak, std::abs(s.x));
        if (peak > limit) {
            std::ostringstream msg;
            msg << "record " << k << ": max |xi_1| = " << peak
                << " exceeds 10% of the cycle amplitude; linearization suspect";
            bundle.warnings.push_back(msg.str());
        }
        bundle.records.push_back(std::move(rec));
    }
    return bundle;
}

}  // namespace htfid
