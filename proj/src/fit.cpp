#include "htfid/fit.hpp"

#include "htfid/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace htfid {

namespace {

using Point = std::array<double, 2>;

HarmonicTransferSet theory_for(const SwitchedLinearization& lin, const FitContext& ctx,
                               const HarmonicTransferSet& target,
                               std::vector<std::string>* warnings) {
    try {
        return theoretical_htf(lin, ctx.n_h, target.omega, ctx.n_compare, target.reference);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularFrequency) throw;
    }
    // Evaluate point by point and drop the singular ones.
    HarmonicTransferSet out(target.omega, ctx.n_compare, target.pump, target.reference);
    for (std::size_t i = 0; i < target.omega.size(); ++i) {
        try {
            const auto one = theoretical_htf(lin, ctx.n_h, {target.omega[i]}, ctx.n_compare,
                                             target.reference);
            for (int n = -ctx.n_compare; n <= ctx.n_compare; ++n) out.at(n, i) = one.at(n, 0);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SingularFrequency) throw;
            for (int n = -ctx.n_compare; n <= ctx.n_compare; ++n) out.set_valid(n, i, false);
            if (warnings) warnings->push_back(std::string(e.what()) + "; bin excluded from fit");
        }
    }
    return out;
}

}  // namespace

SwitchedLinearization with_parameters(const FitContext& context, double k, double c) {
    SwitchedLinearization lin = context.nominal;
    lin.A_off << 0.0, 1.0, -k / context.mass, 0.0;
    lin.A_on = lin.A_off;
    lin.A_on(1, 1) = -c / context.mass;
    return lin;
}

double fit_objective(double k, double c, const HarmonicTransferSet& target,
                     const FitContext& context, std::vector<std::string>* warnings) {
    if (!(k > 0.0) || !(c >= 0.0) || !std::isfinite(k) || !std::isfinite(c)) {
        return std::numeric_limits<double>::infinity();
    }
    if (target.n_keep < context.n_compare) {
        throw Error(ErrorCode::InvalidInput, "target lacks the compared harmonics");
    }
    const auto theory = theory_for(with_parameters(context, k, c), context, target, warnings);
    double sum = 0.0;
    std::size_t count = 0;
    for (int n = -context.n_compare; n <= context.n_compare; ++n) {
        for (std::size_t i = 0; i < target.omega.size(); ++i) {
            if (!target.is_valid(n, i) || !theory.is_valid(n, i)) continue;
            sum += std::norm(theory.at(n, i) - target.at(n, i));
            ++count;
        }
    }
    if (count == 0) throw Error(ErrorCode::NoData, "no valid target entries to fit");
    return std::sqrt(sum / static_cast<double>(count));
}

FitResult fit_parameters(const HarmonicTransferSet& target, double k_init, double c_init,
                         const FitContext& context, const FitOptions& options) {
    if (!(k_init > 0.0) || !(c_init > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "initial parameters must be positive");
    }
    FitResult result;
    auto f = [&](const Point& p) { return fit_objective(p[0], p[1], target, context, &result.warnings); };

    std::array<Point, 3> simplex{Point{k_init, c_init},
                                 Point{k_init * (1.0 + options.initial_step), c_init},
                                 Point{k_init, c_init * (1.0 + options.initial_step)}};
    std::array<double, 3> values{};
    for (std::size_t i = 0; i < 3; ++i) values[i] = f(simplex[i]);

    auto order = [&] {
        std::array<std::size_t, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
        const auto s = simplex;
        const auto v = values;
        for (std::size_t i = 0; i < 3; ++i) {
            simplex[i] = s[idx[i]];
            values[i] = v[idx[i]];
        }
    };
    auto converged = [&] {
        double extent = 0.0;
        for (std::size_t i = 1; i < 3; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                const double scale = std::max(std::abs(simplex[0][j]), 1e-12);
                extent = std::max(extent, std::abs(simplex[i][j] - simplex[0][j]) / scale);
            }
        }
        return extent < options.x_tolerance && values[2] - values[0] < options.f_tolerance;
    };
    auto lerp = [](const Point& from, const Point& to, double t) {
        return Point{from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])};
    };

    order();
    while (result.iterations < options.max_iterations) {
        if (converged()) {
            result.converged = true;
            break;
        }
        ++result.iterations;
        const Point centroid{0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])};
        const Point reflected = lerp(centroid, simplex[2], -1.0);
        const double fr = f(reflected);
        if (fr < values[0]) {
            const Point expanded = lerp(centroid, simplex[2], -2.0);
            const double fe = f(expanded);
            if (fe < fr) {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if (fr < values[1]) {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            const bool outside = fr < values[2];
            const Point contracted = lerp(centroid, outside ? reflected : simplex[2], 0.5);
            const double fc = f(contracted);
            if (fc < std::min(fr, values[2])) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for (std::size_t i = 1; i < 3; ++i) {
                    simplex[i] = lerp(simplex[0], simplex[i], 0.5);
                    values[i] = f(simplex[i]);
                }
            }
        }
        order();
        result.best_history.push_back(values[0]);
    }
    if (!result.converged && converged()) result.converged = true;

    result.k_hat = simplex[0][0];
    result.c_hat = simplex[0][1];
    result.objective = values[0];
    return result;
}

}  // namespace htfid
