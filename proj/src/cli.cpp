#include "htfid/cli.hpp"

#include "htfid/error.hpp"
#include "htfid/estimate.hpp"
#include "htfid/fit.hpp"
#include "htfid/hss.hpp"
#include "htfid/io.hpp"
#include "htfid/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>

namespace htfid {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Reads the keys of `obj` into the bound targets; anything else is an error.
class Section {
public:
    Section(const json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
        if (!obj_.is_object()) throw Error(ErrorCode::Config, "section '" + name_ + "' must be an object");
    }

    template <typename T>
    Section& field(const std::string& key, T& target) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end()) return *this;
        try {
            target = it->get<T>();
        } catch (const json::exception&) {
            throw Error(ErrorCode::Config, name_ + "." + key + " has the wrong type");
        }
        return *this;
    }

    Section& known(const std::string& key) {
        seen_.insert(key);
        return *this;
    }

    void done() const {
        for (const auto& [key, _] : obj_.items()) {
            if (!seen_.count(key)) throw Error(ErrorCode::Config, "unknown key " + name_ + "." + key);
        }
    }

private:
    const json& obj_;
    std::string name_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::Config, what);
}

std::string prepare_output(const RunConfig& config) {
    const std::string dir = config.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Config, "cannot create output directory " + dir);
    write_json(to_json(config), dir + "/resolved_config.json");
    return dir;
}

ChirpPlan resolved_plan(const RunConfig& config, double T) {
    ChirpPlan plan = config.chirp;
    plan.dt = config.sim.dt;
    plan.T = T;
    return plan;
}

State initial_state(const RunConfig& config) {
    if (config.sim.initial_state) return State((*config.sim.initial_state)[0], (*config.sim.initial_state)[1]);
    return State(config.model.static_equilibrium(), 0.0);
}

LimitCycle settle(const HybridModel& model, const RunConfig& config) {
    SettleOptions opts;
    opts.tolerance = config.sim.tolerance;
    opts.x_init = initial_state(config);
    return settle_limit_cycle(model, config.sim.n_cycles, config.sim.dt, opts);
}

Trajectory cycle_as_trajectory(const HybridModel& model, const LimitCycle& cycle) {
    Trajectory traj;
    traj.dt = cycle.dt;
    traj.t0 = 0.0;
    for (const auto& s : cycle.samples) traj.samples.push_back({s[0], s[1], 0.0, model.chart_for(s)});
    return traj;
}

ordered_json string_list(const std::vector<std::string>& v) {
    ordered_json out = ordered_json::array();
    for (const auto& s : v) out.push_back(s);
    return out;
}

double wrap_degrees(double deg) {
    deg = std::fmod(deg + 180.0, 360.0);
    if (deg < 0.0) deg += 360.0;
    return deg - 180.0;
}

}  // namespace

void RunConfig::validate() const {
    try {
        model.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::Config, e.what());
    }
    require(sim.dt > 0.0 && std::isfinite(sim.dt), "sim.dt must be positive");
    require(sim.n_cycles >= 2, "sim.n_cycles must be at least 2 (zero-length runs are rejected)");
    require(sim.tolerance > 0.0, "sim.tolerance must be positive");
    if (sim.initial_state) {
        require(std::isfinite((*sim.initial_state)[0]) && std::isfinite((*sim.initial_state)[1]),
                "sim.initial_state must be finite");
    }
    require(sim.perturbed_duration >= 0.0, "sim.perturbed_duration must be non-negative");
    require(estimate.n_harmonics >= 0, "estimate.n_harmonics must be non-negative");
    require(estimate.alpha >= 0.0 && std::isfinite(estimate.alpha), "estimate.alpha must be non-negative");
    require(estimate.excitation_threshold >= 0.0, "estimate.excitation_threshold must be non-negative");
    require(estimate.max_condition > 1.0, "estimate.max_condition must exceed 1");
    require(estimate.resonance_exclusion >= 0.0, "estimate.resonance_exclusion must be non-negative");
    require(theory.n_h >= 0, "theory.n_h must be non-negative");
    require(theory.n_keep >= 0, "theory.n_keep must be non-negative");
    require(theory.n_points >= 1, "theory.n_points must be positive");
    require(theory.f_hi > 0.0, "theory.f_hi must be positive");
    require(fit.init_k > 0.0 && fit.init_c > 0.0, "fit.init_k and fit.init_c must be positive");
    require(fit.max_iterations >= 1, "fit.max_iterations must be positive");
    require(fit.n_h >= 0 && fit.n_compare >= 0, "fit.n_h and fit.n_compare must be non-negative");
    require(fit.n_compare <= estimate.n_harmonics, "fit.n_compare exceeds estimate.n_harmonics");
    require(!output_dir.empty(), "output directory must not be empty");
    try {
        resolved_plan(*this, model.forcing_period()).validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::Config, e.what());
    }
}

RunConfig parse_config(const json& j) {
    RunConfig c;
    Section root(j, "config");
    if (j.contains("model") && j["model"].is_string()) {
        c.model = load_params(j["model"].get<std::string>());
        root.known("model");
    } else {
        json model = j.value("model", json::object());
        root.field("model", model);
        Section(model, "model")
            .field("m", c.model.m)
            .field("k", c.model.k)
            .field("c", c.model.c)
            .field("g", c.model.g)
            .field("x0", c.model.x0)
            .field("forcing_amplitude", c.model.forcing_amplitude)
            .field("forcing_freq", c.model.forcing_freq)
            .done();
    }
    json sim = j.value("sim", json::object());
    json chirp = j.value("chirp", json::object());
    json est = j.value("estimate", json::object());
    json theory = j.value("theory", json::object());
    json fit = j.value("fit", json::object());
    root.field("sim", sim)
        .field("chirp", chirp)
        .field("estimate", est)
        .field("theory", theory)
        .field("fit", fit)
        .field("write_records", c.write_records)
        .field("output_dir", c.output_dir)
        .done();

    Section(sim, "sim")
        .field("dt", c.sim.dt)
        .field("n_cycles", c.sim.n_cycles)
        .field("tolerance", c.sim.tolerance)
        .field("perturbed_duration", c.sim.perturbed_duration)
        .known("initial_state")
        .done();
    if (sim.contains("initial_state") && !sim["initial_state"].is_null()) {
        const auto& v = sim["initial_state"];
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            throw Error(ErrorCode::Config, "sim.initial_state must be [x, xdot]");
        }
        c.sim.initial_state = std::array<double, 2>{v[0].get<double>(), v[1].get<double>()};
    }
    Section(chirp, "chirp")
        .field("amplitude", c.chirp.amplitude)
        .field("f_lo", c.chirp.f_lo)
        .field("f_hi", c.chirp.f_hi)
        .field("segment_duration", c.chirp.segment_duration)
        .field("n_segments", c.chirp.n_segments)
        .field("record_duration", c.chirp.record_duration)
        .done();
    Section(est, "estimate")
        .field("n_harmonics", c.estimate.n_harmonics)
        .field("alpha", c.estimate.alpha)
        .field("excitation_threshold", c.estimate.excitation_threshold)
        .field("max_condition", c.estimate.max_condition)
        .field("resonance_exclusion", c.estimate.resonance_exclusion)
        .done();
    Section(theory, "theory")
        .field("n_h", c.theory.n_h)
        .field("n_keep", c.theory.n_keep)
        .field("n_points", c.theory.n_points)
        .field("f_hi", c.theory.f_hi)
        .done();
    Section(fit, "fit")
        .field("init_k", c.fit.init_k)
        .field("init_c", c.fit.init_c)
        .field("max_iterations", c.fit.max_iterations)
        .field("n_h", c.fit.n_h)
        .field("n_compare", c.fit.n_compare)
        .done();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Config, "cannot read config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, path + ": " + e.what());
    }
    return parse_config(j);
}

ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    j["model"] = to_json(c.model);
    j["sim"] = {{"dt", c.sim.dt},
                {"n_cycles", c.sim.n_cycles},
                {"tolerance", c.sim.tolerance},
                {"perturbed_duration", c.sim.perturbed_duration}};
    j["sim"]["initial_state"] = c.sim.initial_state ? ordered_json(*c.sim.initial_state) : ordered_json(nullptr);
    j["chirp"] = {{"amplitude", c.chirp.amplitude},
                  {"f_lo", c.chirp.f_lo},
                  {"f_hi", c.chirp.f_hi},
                  {"segment_duration", c.chirp.segment_duration},
                  {"n_segments", c.chirp.n_segments},
                  {"record_duration", c.chirp.record_length()}};
    j["estimate"] = {{"n_harmonics", c.estimate.n_harmonics},
                     {"alpha", c.estimate.alpha},
                     {"excitation_threshold", c.estimate.excitation_threshold},
                     {"max_condition", c.estimate.max_condition},
                     {"resonance_exclusion", c.estimate.resonance_exclusion}};
    j["theory"] = {{"n_h", c.theory.n_h},
                   {"n_keep", c.theory.n_keep},
                   {"n_points", c.theory.n_points},
                   {"f_hi", c.theory.f_hi}};
    j["fit"] = {{"init_k", c.fit.init_k},
                {"init_c", c.fit.init_c},
                {"max_iterations", c.fit.max_iterations},
                {"n_h", c.fit.n_h},
                {"n_compare", c.fit.n_compare}};
    j["write_records"] = c.write_records;
    j["output_dir"] = c.output_dir;
    return j;
}

void apply_overrides(RunConfig& config, const Overrides& o) {
    if (o.out) config.output_dir = *o.out;
    if (o.alpha) config.estimate.alpha = *o.alpha;
    if (o.nh) config.theory.n_h = *o.nh;
    if (o.dt) config.sim.dt = *o.dt;
}

void run_simulate(const RunConfig& config) {
    config.validate();
    const std::string dir = prepare_output(config);
    const HybridModel model(config.model);
    const double T = config.model.forcing_period();

    const Trajectory settling = integrate(model, initial_state(config),
                                          [](double) { return 0.0; }, config.sim.n_cycles * T,
                                          config.sim.dt);
    const LimitCycle cycle = settle(model, config);
    write_trajectory_csv(settling, dir + "/trajectory.csv");
    write_trajectory_csv(cycle_as_trajectory(model, cycle), dir + "/limit_cycle.csv");

    ordered_json summary = cycle_summary(cycle);
    if (config.sim.perturbed_duration > 0.0) {
        const ChirpPlan plan = resolved_plan(config, cycle.T);
        const Trajectory run = integrate(model, cycle.start(),
                                         [&plan](double t) { return chirp_value(plan, 0, t); },
                                         config.sim.perturbed_duration, config.sim.dt);
        const Trajectory err = error_trajectory(run, cycle);
        write_trajectory_csv(err, dir + "/perturbed_error.csv");
        double peak = 0.0;
        for (const auto& s : err.samples) peak = std::max(peak, std::abs(s.x));
        summary["perturbed_peak_error"] = peak;
    }
    write_json(summary, dir + "/summary.json");
}

void run_htf_theory(const RunConfig& config) {
    config.validate();
    const std::string dir = prepare_output(config);
    const HybridModel model(config.model);
    const LimitCycle cycle = settle(model, config);
    const SwitchedLinearization lin = linearize(model, cycle);

    const int n_keep = std::min(config.theory.n_keep, config.theory.n_h);
    const auto grid = uniform_grid(config.theory.f_hi, config.theory.n_points);
    const auto htf = theoretical_htf(lin, config.theory.n_h, grid, n_keep, FrequencyReference::Input);
    write_htf_csv(htf, dir + "/htf_theory.csv");
    write_htf_plot_csv(htf, dir + "/htf_theory_plot.csv");

    double peak0 = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) peak0 = std::max(peak0, std::abs(htf.at(0, i)));
    ordered_json peaks = ordered_json::object();
    for (int n = -n_keep; n <= n_keep; ++n) {
        double peak = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) peak = std::max(peak, std::abs(htf.at(n, i)));
        peaks[std::to_string(n)] = peak;
    }
    ordered_json summary;
    summary["cycle"] = cycle_summary(cycle);
    summary["duty"] = lin.duty;
    summary["t_on"] = lin.t_on;
    summary["t_hat"] = lin.t_hat;
    summary["peak_abs_G"] = peaks;
    summary["peak_abs_G0"] = peak0;
    summary["warnings"] = string_list(htf.warnings);
    write_json(summary, dir + "/htf_theory_summary.json");
}

void run_identify(const RunConfig& config) {
    config.validate();
    const std::string dir = prepare_output(config);
    const HybridModel model(config.model);
    const LimitCycle cycle = settle(model, config);
    const SwitchedLinearization lin = linearize(model, cycle);

    const ExperimentBundle bundle = run_experiments(model, cycle, resolved_plan(config, cycle.T));
    if (config.write_records) write_bundle(bundle, dir + "/records");

    EstimationProblem problem = make_problem(bundle, config.estimate.n_harmonics, config.estimate.alpha);
    problem.excitation_threshold = config.estimate.excitation_threshold;
    EstimateOptions eopts;
    eopts.max_condition = config.estimate.max_condition;
    const HtfEstimate est = estimate_htf(problem, eopts);
    write_htf_csv(est.htf, dir + "/htf_estimate.csv");
    write_htf_plot_csv(est.htf, dir + "/htf_estimate_plot.csv");

    const int N = config.estimate.n_harmonics;
    HarmonicTransferSet theory =
        theoretical_htf(lin, config.theory.n_h, est.htf.omega, N, FrequencyReference::Output);
    for (int n = -N; n <= N; ++n) {
        for (std::size_t i = 0; i < theory.omega.size(); ++i) {
            theory.set_valid(n, i, theory.is_valid(n, i) && est.htf.is_valid(n, i));
        }
    }
    write_htf_csv(theory, dir + "/htf_theory_matched.csv");
    write_htf_plot_csv(theory, dir + "/htf_theory_matched_plot.csv");

    // Theory-vs-estimate table; bins near the natural frequency at either end
    // of the harmonic map are flagged and left out of the summary.
    const double wn = std::sqrt(config.model.k / config.model.m);
    const double excl = config.estimate.resonance_exclusion;
    std::ofstream table(dir + "/comparison.csv");
    if (!table) throw Error(ErrorCode::Config, "cannot write comparison table");
    table << "omega_rad_s,n,est_re,est_im,theory_re,theory_im,rel_mag_err,phase_err_deg,near_resonance\n";
    ordered_json per_harmonic = ordered_json::object();
    for (int n = -N; n <= N; ++n) {
        double max_mag = 0.0, max_phase = 0.0;
        long count = 0, excluded = 0;
        for (std::size_t i = 0; i < theory.omega.size(); ++i) {
            if (!theory.is_valid(n, i)) continue;
            const double w = theory.omega[i];
            const cd ge = est.htf.at(n, i), gt = theory.at(n, i);
            const double mag = std::abs(std::abs(ge) - std::abs(gt)) / std::abs(gt);
            const double phase = wrap_degrees((std::arg(ge) - std::arg(gt)) * 180.0 / std::numbers::pi);
            const bool near = std::abs(std::abs(w) - wn) <= excl ||
                              std::abs(std::abs(w - n * theory.pump) - wn) <= excl;
            table << format_double(w) << ',' << n << ',' << format_double(ge.real()) << ','
                  << format_double(ge.imag()) << ',' << format_double(gt.real()) << ','
                  << format_double(gt.imag()) << ',' << format_double(mag) << ','
                  << format_double(phase) << ',' << (near ? 1 : 0) << '\n';
            if (near) {
                ++excluded;
                continue;
            }
            ++count;
            max_mag = std::max(max_mag, mag);
            max_phase = std::max(max_phase, std::abs(phase));
        }
        per_harmonic[std::to_string(n)] = {{"bins", count},
                                           {"near_resonance", excluded},
                                           {"max_rel_mag_err", max_mag},
                                           {"max_phase_err_deg", max_phase}};
    }

    FitContext ctx{lin, config.model.m, config.fit.n_h, config.fit.n_compare};
    FitOptions fopts;
    fopts.max_iterations = config.fit.max_iterations;
    const FitResult fit = fit_parameters(est.htf, config.fit.init_k, config.fit.init_c, ctx, fopts);
    write_json(to_json(fit), dir + "/fit.json");

    ordered_json diag;
    diag["estimate"] = to_json(est.diagnostics);
    diag["cycle"] = cycle_summary(cycle);
    diag["comparison"] = per_harmonic;
    diag["fit_warnings"] = string_list(fit.warnings);
    diag["experiment_warnings"] = string_list(bundle.warnings);
    diag["estimate_warnings"] = string_list(est.htf.warnings);
    write_json(diag, dir + "/diagnostics.json");
}

CompareReport compare_htf_files(const std::string& a, const std::string& b, double tolerance) {
    if (!(tolerance >= 0.0)) throw Error(ErrorCode::Config, "tolerance must be non-negative");
    const auto ha = read_htf_csv(a);
    const auto hb = read_htf_csv(b);
    std::map<std::pair<double, int>, cd> rows_a;
    for (std::size_t i = 0; i < ha.omega.size(); ++i) {
        for (int n = -ha.n_keep; n <= ha.n_keep; ++n) {
            if (ha.is_valid(n, i)) rows_a[{ha.omega[i], n}] = ha.at(n, i);
        }
    }

    CompareReport report;
    report.tolerance = tolerance;
    std::map<int, double> peak_b;
    for (std::size_t i = 0; i < hb.omega.size(); ++i) {
        for (int n = -hb.n_keep; n <= hb.n_keep; ++n) {
            if (hb.is_valid(n, i)) peak_b[n] = std::max(peak_b[n], std::abs(hb.at(n, i)));
        }
    }
    struct Stats { double max_rel = 0, max_abs = 0, max_peak = 0; long count = 0; };
    std::map<int, Stats> stats;
    for (std::size_t i = 0; i < hb.omega.size(); ++i) {
        for (int n = -hb.n_keep; n <= hb.n_keep; ++n) {
            if (!hb.is_valid(n, i)) continue;
            const auto it = rows_a.find({hb.omega[i], n});
            if (it == rows_a.end()) {
                ++report.only_in_b;
                continue;
            }
            const cd gb = hb.at(n, i);
            const double diff = std::abs(it->second - gb);
            auto& s = stats[n];
            s.max_abs = std::max(s.max_abs, diff);
            s.max_rel = std::max(s.max_rel, std::abs(gb) > 0.0 ? diff / std::abs(gb)
                                                               : (diff > 0.0 ? INFINITY : 0.0));
            if (peak_b[n] > 0.0) s.max_peak = std::max(s.max_peak, diff / peak_b[n]);
            ++s.count;
            ++report.matched;
            rows_a.erase(it);
        }
    }
    report.only_in_a = static_cast<long>(rows_a.size());
    report.per_harmonic = ordered_json::object();
    for (const auto& [n, s] : stats) {
        report.per_harmonic[std::to_string(n)] = {{"count", s.count},
                                                  {"max_rel", s.max_rel},
                                                  {"max_abs", s.max_abs},
                                                  {"max_rel_to_peak", s.max_peak}};
        if (s.max_rel > tolerance) report.within_tolerance = false;
    }
    return report;
}

ordered_json to_json(const CompareReport& r) {
    ordered_json j;
    j["tolerance"] = r.tolerance;
    j["matched"] = r.matched;
    j["only_in_a"] = r.only_in_a;
    j["only_in_b"] = r.only_in_b;
    j["within_tolerance"] = r.within_tolerance;
    j["per_harmonic"] = r.per_harmonic;
    return j;
}

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::Config:
        case ErrorCode::InvalidInput:
        case ErrorCode::Aliasing:
        case ErrorCode::ResamplingRequired:
            return 2;
        default:
            return 3;
    }
}

}  // namespace htfid
