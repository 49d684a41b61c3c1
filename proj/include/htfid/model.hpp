#pragma once

#include <Eigen/Dense>

#include <string>

namespace htfid {

/// Vertical position and velocity of the hopping mass.
using State = Eigen::Vector2d;

/// Physical parameters of the clock-driven spring-mass-damper leg.
struct ModelParams {
    double m = 1.0;                  ///< mass [kg]
    double k = 200.0;                ///< spring stiffness [N/m]
    double c = 2.0;                  ///< damping coefficient [N s/m]
    double g = 9.81;                 ///< gravity [m/s^2]
    double x0 = 0.2;                 ///< spring rest position [m]
    double forcing_amplitude = 1.0;  ///< clock forcing scale [N]
    double forcing_freq = 1.0;       ///< clock forcing frequency [Hz]

    /// Throws Error(InvalidInput) when m <= 0, k <= 0, c < 0 or forcing_freq <= 0.
    void validate() const;

    double forcing_period() const { return 1.0 / forcing_freq; }
    /// Rest position of the lossless chart, x0 - m g / k.
    double static_equilibrium() const { return x0 - m * g / k; }
};

/// Reads a parameter file whose keys are exactly m, k, c, g, x0,
/// forcing_amplitude and forcing_freq.
ModelParams load_params(const std::string& path);
void save_params(const ModelParams& params, const std::string& path);

enum class Chart : int {
    Off = 0,  ///< lossless (flight), damper disengaged
    On = 1,   ///< lossy (stance), damper engaged
};

/// How the damper is switched. `AlwaysOn` gives the plain LTI damped oscillator.
enum class DamperMode { Switched, AlwaysOn };

/// Two-chart hybrid oscillator. The threshold function is the velocity; the
/// damper is engaged while it is strictly positive. Transition maps are the
/// identity.
class HybridModel {
public:
    explicit HybridModel(ModelParams params, DamperMode mode = DamperMode::Switched);

    const ModelParams& params() const { return params_; }
    DamperMode mode() const { return mode_; }

    double threshold(const State& state) const { return state[1]; }

    /// Chart selected by the threshold; ties at zero velocity go to Off.
    Chart chart_for(const State& state) const;

    /// Clock forcing F(t) = A cos(2 pi f t).
    double forcing(double t) const;

    /// Vector field of the chart selected by `state`.
    State eval_chart(const State& state, double t, double u) const;

    /// Vector field of a given chart, regardless of the threshold.
    State eval_in_chart(Chart chart, const State& state, double t, double u) const;

private:
    ModelParams params_;
    DamperMode mode_;
};

struct LimitCycle;

/// Piecewise-LTI error dynamics around the limit cycle:
/// xi' = A(t) xi + B u, y = C xi + D u, with A(t) = A_on while the damper is
/// engaged on the cycle and A_off otherwise.
struct SwitchedLinearization {
    Eigen::Matrix2d A_on;
    Eigen::Matrix2d A_off;
    Eigen::Vector2d B;
    Eigen::RowVector2d C;
    double D = 0.0;
    double duty = 0.0;   ///< fraction of the period with the damper on
    double t_on = 0.0;   ///< clock phase where the damper engages [s]
    double t_hat = 0.0;  ///< clock phase where the damper disengages [s]
    double T = 1.0;      ///< period [s]
};

/// Linearization in error coordinates. Gravity, rest length and the forcing
/// cancel; only k, c, m and the switching geometry of `cycle` remain.
SwitchedLinearization linearize(const HybridModel& model, const LimitCycle& cycle);

}  // namespace htfid
