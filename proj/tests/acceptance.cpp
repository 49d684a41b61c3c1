// Acceptance checks for the full pipeline. One PASS/FAIL line per criterion;
// the exit status is nonzero when any criterion fails.

#include "htfid/estimate.hpp"
#include "htfid/excite.hpp"
#include "htfid/fit.hpp"
#include "htfid/hss.hpp"
#include "htfid/io.hpp"
#include "htfid/sim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

using namespace htfid;
using std::numbers::pi;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("%s criterion %d: %s | %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double wrap_deg(double d) {
    d = std::fmod(d + 180.0, 360.0);
    if (d < 0) d += 360.0;
    return d - 180.0;
}

struct Nominal {
    HybridModel model{ModelParams{}};
    LimitCycle cycle;
    SwitchedLinearization lin;
    double settle_seconds = 0.0;
};

Nominal& nominal() {
    static Nominal p = [] {
        Nominal out;
        const auto t0 = std::chrono::steady_clock::now();
        out.cycle = settle_limit_cycle(out.model, 30, 1e-3);
        out.settle_seconds = seconds_since(t0);
        out.lin = linearize(out.model, out.cycle);
        return out;
    }();
    return p;
}

void criterion1() {
    const auto& p = nominal();
    const bool ok = p.cycle.T == 1.0 && p.cycle.residual[0] < 1e-6 && p.cycle.residual[1] < 1e-6 &&
                    p.settle_seconds < 5.0;
    report(1, ok, "limit cycle settles with T = 1 s, residual < 1e-6, < 5 s",
           fmt("T=%.6g residual=(%.3g, %.3g) runtime=%.3fs", p.cycle.T, p.cycle.residual[0],
               p.cycle.residual[1], p.settle_seconds));
}

void criterion2() {
    ModelParams params;
    params.c = 0.0;
    HybridModel model{params};
    const LimitCycle cycle = [&] {
        // Undamped: start on the forced periodic solution instead of waiting for it.
        SettleOptions opts;
        opts.x_init = State(params.static_equilibrium() + 1.0 / (params.k - 4.0 * pi * pi), 0.0);
        return settle_limit_cycle(model, 2, 1e-3, opts);
    }();
    const auto lin = linearize(model, cycle);

    const auto grid = uniform_grid(7.0, 600);
    const auto theory = theoretical_htf(lin, 10, grid, 10);
    const double wn = std::sqrt(params.k);
    double g0_err = 0.0, side = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (int n = 1; n <= 10; ++n) side = std::max({side, std::abs(theory.at(n, i)), std::abs(theory.at(-n, i))});
        if (std::abs(grid[i] - wn) < 0.5) continue;
        const double exact = 1.0 / (params.k - grid[i] * grid[i]);
        g0_err = std::max(g0_err, std::abs(theory.at(0, i) - exact) / std::abs(exact));
    }
    report(2, g0_err < 1e-9 && side < 1e-10, "lossless theory: G_0 = 1/(200 - w^2), side harmonics vanish",
           fmt("max rel G_0 err=%.3g (off +-0.5 rad/s of resonance) max|G_n!=0|=%.3g", g0_err, side));

    const auto bundle = run_experiments(model, cycle, ChirpPlan{});
    const auto est = estimate_htf(make_problem(bundle, 3, 1e-4));
    double worst = 0.0, worst_w = 0.0;
    long bins = 0, bad = 0;
    for (std::size_t i = 0; i < est.htf.omega.size(); ++i) {
        if (!est.htf.is_valid(0, i)) continue;
        const double w = est.htf.omega[i];
        const double exact = std::abs(1.0 / (params.k - w * w));
        const double rel = std::abs(std::abs(est.htf.at(0, i)) - exact) / exact;
        ++bins;
        if (rel > 0.02) ++bad;
        if (rel > worst) {
            worst = rel;
            worst_w = w;
        }
    }
    report(2, bad == 0, "lossless estimate: |G_0| within 2% of the analytic FRF on excited bins",
           fmt("max rel mag err=%.3g at %.4g rad/s, %.0f of %.0f bins outside 2%%", worst, worst_w,
               static_cast<double>(bad), static_cast<double>(bins)));
}

void criterion3() {
    const auto& lin = nominal().lin;
    const auto grid = uniform_grid(7.0, 600);
    const auto h3 = theoretical_htf(lin, 3, grid, 3);
    const auto h10 = theoretical_htf(lin, 10, grid, 10);
    double rel = 0.0, rel_peak = 0.0, peak0 = 0.0, high = 0.0;
    int rel_n = 0;
    double rel_w = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) peak0 = std::max(peak0, std::abs(h10.at(0, i)));
    for (int n = -1; n <= 1; ++n) {
        double peak_n = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) peak_n = std::max(peak_n, std::abs(h10.at(n, i)));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double d = std::abs(h3.at(n, i) - h10.at(n, i));
            const double r = d / std::abs(h10.at(n, i));
            if (r > rel) {
                rel = r;
                rel_n = n;
                rel_w = grid[i];
            }
            rel_peak = std::max(rel_peak, d / peak_n);
        }
    }
    int high_n = 0;
    for (int n = 4; n <= 10; ++n) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            for (int s : {-1, 1}) {
                const double v = std::abs(h10.at(s * n, i));
                if (v > high) {
                    high = v;
                    high_n = s * n;
                }
            }
        }
    }
    report(3, rel < 0.01, "n_h = 3 vs 10: G_0, G_+-1 differ < 1% relative on (0, 14 pi]",
           fmt("max pointwise rel diff=%.4g (G_%.0f at %.4g rad/s); relative to each harmonic's peak=%.3g",
               rel, rel_n, rel_w, rel_peak));
    report(3, high < 0.01 * peak0, "n_h = 10: max |G_n|, |n| > 3, below 1% of peak |G_0|",
           fmt("max |G_n|/peak|G_0|=%.4g (n=%.0f), peak |G_0|=%.4g", high / peak0, high_n, peak0));
}

struct Identification {
    ExperimentBundle bundle;
    HtfEstimate estimate;
    double seconds = 0.0;
};

Identification& identification() {
    static Identification id = [] {
        Identification out;
        const auto t0 = std::chrono::steady_clock::now();
        out.bundle = run_experiments(nominal().model, nominal().cycle, ChirpPlan{});
        out.estimate = estimate_htf(make_problem(out.bundle, 3, 1e-4));
        out.seconds = seconds_since(t0);
        return out;
    }();
    return id;
}

void criterion4() {
    const auto& id = identification();
    const auto& est = id.estimate.htf;
    const auto theory = theoretical_htf(nominal().lin, 10, est.omega, 3, FrequencyReference::Output);
    const double wn = std::sqrt(nominal().model.params().k / nominal().model.params().m);
    const double wp = 2.0 * pi;

    std::ostringstream detail;
    bool ok = id.seconds < 60.0;
    for (int n : {-1, 0, 1}) {
        long bins = 0, bad = 0;
        double mag = 0.0, phase = 0.0;
        for (std::size_t i = 0; i < est.omega.size(); ++i) {
            if (!est.is_valid(n, i)) continue;
            const double w = est.omega[i];
            if (std::abs(w - wn) <= 0.5 || std::abs(std::abs(w - n * wp) - wn) <= 0.5) continue;
            const double m = std::abs(std::abs(est.at(n, i)) - std::abs(theory.at(n, i))) / std::abs(theory.at(n, i));
            const double ph = std::abs(wrap_deg((std::arg(est.at(n, i)) - std::arg(theory.at(n, i))) * 180.0 / pi));
            ++bins;
            if (m > 0.05 || ph > 5.0) ++bad;
            mag = std::max(mag, m);
            phase = std::max(phase, ph);
        }
        if (bad > 0) ok = false;
        detail << "G_" << n << ": " << bad << "/" << bins << " bins out (max " << fmt("%.3g", mag) << " rel, "
               << fmt("%.3g", phase) << " deg); ";
    }
    // Side harmonics of order two: report where they disagree.
    for (int n : {-2, 2}) {
        double lo = 1e300, hi = -1e300;
        long bad = 0;
        for (std::size_t i = 0; i < est.omega.size(); ++i) {
            if (!est.is_valid(n, i)) continue;
            const double m = std::abs(std::abs(est.at(n, i)) - std::abs(theory.at(n, i))) / std::abs(theory.at(n, i));
            if (m > 0.05) {
                ++bad;
                lo = std::min(lo, est.omega[i]);
                hi = std::max(hi, est.omega[i]);
            }
        }
        detail << "G_" << n << " mismatch: " << bad << " bins";
        if (bad) detail << fmt(" in [%.3g, %.3g] rad/s", lo, hi);
        detail << "; ";
    }
    detail << fmt("runtime=%.2fs", id.seconds);
    report(4, ok, "chirp estimate of G_0, G_+-1 within 5% / 5 deg outside +-0.5 rad/s of resonance", detail.str());
}

void criterion5() {
    const auto& est = identification().estimate.htf;
    FitContext ctx;
    ctx.nominal = nominal().lin;
    const auto fit = fit_parameters(est, 150.0, 1.0, ctx);
    const bool pipeline_ok = fit.k_hat >= 198.0 && fit.k_hat <= 202.0 && fit.c_hat >= 1.9 && fit.c_hat <= 2.3;
    report(5, pipeline_ok, "pipeline fit: k_hat in [198, 202], c_hat in [1.9, 2.3]",
           fmt("k_hat=%.6g c_hat=%.6g objective=%.3g iterations=%.0f", fit.k_hat, fit.c_hat, fit.objective,
               fit.iterations));

    const auto target = theoretical_htf(nominal().lin, 10, est.omega, 1, FrequencyReference::Output);
    const auto crime = fit_parameters(target, 150.0, 1.0, ctx);
    const double ek = std::abs(crime.k_hat - 200.0) / 200.0, ec = std::abs(crime.c_hat - 2.0) / 2.0;
    report(5, ek < 1e-3 && ec < 1e-3, "inverse-crime fit recovers (200, 2) to 0.1%",
           fmt("k_hat=%.8g c_hat=%.8g rel err=(%.2g, %.2g)", crime.k_hat, crime.c_hat, ek, ec));
}

void criterion6() {
    const InputSignal zero = [](double) { return 0.0; };
    std::ostringstream detail;
    bool ok = true;

    {  // lossless energy
        ModelParams p;
        p.c = 0.0;
        p.forcing_amplitude = 0.0;
        const auto traj = integrate(HybridModel{p}, State(p.static_equilibrium() + 0.03, 0.1), zero, 10.0, 1e-3);
        auto energy = [&](const Sample& s) {
            return 0.5 * p.m * s.xdot * s.xdot + 0.5 * p.k * (s.x - p.x0) * (s.x - p.x0) + p.m * p.g * s.x;
        };
        const double e0 = energy(traj.samples.front());
        double worst = 0.0;
        for (const auto& s : traj.samples) worst = std::max(worst, std::abs(energy(s) - e0) / std::abs(e0));
        ok = ok && worst < 1e-6;
        detail << fmt("energy drift=%.3g; ", worst);
    }
    {  // damped closed form
        ModelParams p;
        p.forcing_amplitude = 0.0;
        const double a = 0.01, xeq = p.static_equilibrium(), sigma = p.c / (2 * p.m);
        const double wd = std::sqrt(p.k / p.m - sigma * sigma);
        const auto traj = integrate(HybridModel{p, DamperMode::AlwaysOn}, State(xeq + a, 0.0), zero, 10.0, 1e-3);
        double worst = 0.0;
        for (std::size_t i = 0; i < traj.samples.size(); ++i) {
            const double t = traj.time(i);
            const double x = xeq + std::exp(-sigma * t) * (a * std::cos(wd * t) + a * sigma / wd * std::sin(wd * t));
            worst = std::max(worst, std::abs(traj.samples[i].x - x));
        }
        ok = ok && worst < 1e-6;
        detail << fmt("damped max err=%.3g; ", worst);
    }
    {  // conjugate symmetry, theory
        const std::vector<double> pos{0.7, 5.0, 13.3, 21.0, 40.0}, neg{-40.0, -21.0, -13.3, -5.0, -0.7};
        const auto hp = theoretical_htf(nominal().lin, 10, pos, 5);
        const auto hn = theoretical_htf(nominal().lin, 10, neg, 5);
        double worst = 0.0;
        for (std::size_t i = 0; i < pos.size(); ++i)
            for (int n = -5; n <= 5; ++n)
                worst = std::max(worst, std::abs(hn.at(n, pos.size() - 1 - i) - std::conj(hp.at(-n, i))) /
                                            std::abs(hp.at(0, i)));
        ok = ok && worst < 1e-8;
        detail << fmt("theory conj asym=%.3g; ", worst);
    }
    {  // conjugate symmetry, estimate
        auto problem = make_problem(identification().bundle, 3, 1e-4);
        problem.symmetric_grid = true;
        const auto h = estimate_htf(problem).htf;
        double peak = 0.0, worst = 0.0;
        for (std::size_t i = 0; i < h.omega.size(); ++i) peak = std::max(peak, std::abs(h.at(0, i)));
        for (std::size_t i = 0; i < h.omega.size(); ++i) {
            const std::size_t j = h.omega.size() - 1 - i;
            for (int n = -3; n <= 3; ++n)
                if (h.is_valid(n, i) && h.is_valid(-n, j))
                    worst = std::max(worst, std::abs(h.at(n, i) - std::conj(h.at(-n, j))) / peak);
        }
        ok = ok && worst < 1e-8;
        detail << fmt("estimate conj asym=%.3g; ", worst);
    }
    {  // second difference on degree <= 1
        const auto D = second_difference(50);
        Eigen::VectorXd lin(50);
        for (int i = 0; i < 50; ++i) lin(i) = 3.0 - 0.25 * i;
        const double r = (D * lin).cwiseAbs().maxCoeff();
        ok = ok && r < 1e-13;
        detail << fmt("D2 on ramp=%.3g; ", r);
    }
    {  // determinism by hashing written outputs
        namespace fs = std::filesystem;
        const auto dir = fs::temp_directory_path() / "htfid_acceptance";
        fs::create_directories(dir);
        auto digest = [&](const std::string& name) {
            const auto cycle = settle_limit_cycle(nominal().model, 30, 1e-3);
            const auto bundle = run_experiments(nominal().model, cycle, ChirpPlan{});
            const auto est = estimate_htf(make_problem(bundle, 3, 1e-4));
            const auto path = (dir / name).string();
            write_htf_csv(est.htf, path);
            std::ifstream in(path, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            return std::hash<std::string>{}(ss.str());
        };
        const bool same = digest("a.csv") == digest("b.csv");
        ok = ok && same;
        detail << "rerun hash " << (same ? "identical" : "differs");
    }
    report(6, ok, "property suites", detail.str());
}

}  // namespace

int main() {
    const std::pair<int, std::function<void()>> criteria[] = {
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5}, {6, criterion6}};
    for (const auto& [id, check] : criteria) {
        try {
            check();
        } catch (const std::exception& e) {
            report(id, false, "threw", e.what());
        }
    }
    std::printf("%d failing check(s)\n", failures);
    return failures == 0 ? 0 : 1;
}
