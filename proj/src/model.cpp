#include "htfid/model.hpp"

#include "htfid/error.hpp"
#include "htfid/sim.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

namespace htfid {

namespace {

constexpr std::array<const char*, 7> kParamKeys = {
    "m", "k", "c", "g", "x0", "forcing_amplitude", "forcing_freq"};

}  // namespace

void ModelParams::validate() const {
    for (double v : {m, k, c, g, x0, forcing_amplitude, forcing_freq}) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::InvalidInput, "model parameters must be finite");
        }
    }
    if (m <= 0.0) throw Error(ErrorCode::InvalidInput, "mass must be positive");
    if (k <= 0.0) throw Error(ErrorCode::InvalidInput, "stiffness must be positive");
    if (c < 0.0) throw Error(ErrorCode::InvalidInput, "damping must be non-negative");
    if (forcing_freq <= 0.0) {
        throw Error(ErrorCode::InvalidInput, "forcing frequency must be positive");
    }
}

ModelParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Config, "cannot open parameter file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Config, path + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::Config, path + ": expected a JSON object");

    std::set<std::string> allowed(kParamKeys.begin(), kParamKeys.end());
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw Error(ErrorCode::Config, "unknown parameter key '" + key + "'");
        if (!value.is_number()) throw Error(ErrorCode::Config, "parameter '" + key + "' is not a number");
    }
    for (const char* key : kParamKeys) {
        if (!j.contains(key)) throw Error(ErrorCode::Config, std::string("missing parameter key '") + key + "'");
    }

    ModelParams p;
    p.m = j["m"];
    p.k = j["k"];
    p.c = j["c"];
    p.g = j["g"];
    p.x0 = j["x0"];
    p.forcing_amplitude = j["forcing_amplitude"];
    p.forcing_freq = j["forcing_freq"];
    p.validate();
    return p;
}

void save_params(const ModelParams& p, const std::string& path) {
    nlohmann::ordered_json j;
    j["m"] = p.m;
    j["k"] = p.k;
    j["c"] = p.c;
    j["g"] = p.g;
    j["x0"] = p.x0;
    j["forcing_amplitude"] = p.forcing_amplitude;
    j["forcing_freq"] = p.forcing_freq;
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Config, "cannot write " + path);
    out << j.dump(2) << '\n';
}

HybridModel::HybridModel(ModelParams params, DamperMode mode) : params_(params), mode_(mode) {
    params_.validate();
}

Chart HybridModel::chart_for(const State& state) const {
    if (mode_ == DamperMode::AlwaysOn) return Chart::On;
    return threshold(state) > 0.0 ? Chart::On : Chart::Off;
}

double HybridModel::forcing(double t) const {
    return params_.forcing_amplitude * std::cos(2.0 * std::numbers::pi * params_.forcing_freq * t);
}

State HybridModel::eval_chart(const State& state, double t, double u) const {
    if (!state.allFinite() || !std::isfinite(u) || !std::isfinite(t)) {
        throw Error(ErrorCode::InvalidInput, "non-finite state, time or input");
    }
    return eval_in_chart(chart_for(state), state, t, u);
}

State HybridModel::eval_in_chart(Chart chart, const State& state, double t, double u) const {
    const auto& p = params_;
    double force = -p.m * p.g - p.k * (state[0] - p.x0) + forcing(t) + u;
    if (chart == Chart::On) force -= p.c * state[1];
    return {state[1], force / p.m};
}

double LimitCycle::position_amplitude() const {
    double lo = samples.front()[0];
    double hi = lo;
    for (const auto& s : samples) {
        lo = std::min(lo, s[0]);
        hi = std::max(hi, s[0]);
    }
    return 0.5 * (hi - lo);
}

SwitchedLinearization linearize(const HybridModel& model, const LimitCycle& cycle) {
    const auto& p = model.params();
    if (cycle.samples.empty() || !(cycle.T > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "limit cycle is empty");
    }
    if (model.mode() == DamperMode::Switched && cycle.crossings.size() > 2) {
        throw Error(ErrorCode::AmbiguousSwitching,
                    std::to_string(cycle.crossings.size()) + " threshold crossings per period");
    }

    SwitchedLinearization lin;
    lin.A_off << 0.0, 1.0, -p.k / p.m, 0.0;
    lin.A_on = lin.A_off;
    lin.A_on(1, 1) = -p.c / p.m;
    lin.B << 0.0, 1.0 / p.m;
    lin.C << 1.0, 0.0;
    lin.D = 0.0;
    lin.T = cycle.T;
    lin.duty = cycle.duty;
    lin.t_on = cycle.t_on;
    lin.t_hat = cycle.t_hat;
    return lin;
}

}  // namespace htfid
