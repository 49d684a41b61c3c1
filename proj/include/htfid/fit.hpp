#pragma once

#include "htfid/hss.hpp"

#include <string>
#include <vector>

namespace htfid {

/// Fixed quantities of the parametric fit. The switching geometry (duty, t_on,
/// T) and the mass come from the nominal linearization; only k and c vary.
struct FitContext {
    SwitchedLinearization nominal;
    double mass = 1.0;
    int n_h = 10;       ///< truncation of the theoretical model
    int n_compare = 1;  ///< harmonics -n_compare..n_compare enter the RMS
};

/// Nominal linearization with stiffness and damping replaced.
SwitchedLinearization with_parameters(const FitContext& context, double k, double c);

/// RMS of |G_n^theory - G_n^target| over valid target entries with
/// |n| <= n_compare. Returns +inf outside k > 0, c >= 0. Grid points where the
/// harmonic system is singular are skipped and reported through `warnings`.
double fit_objective(double k, double c, const HarmonicTransferSet& target,
                     const FitContext& context, std::vector<std::string>* warnings = nullptr);

struct FitOptions {
    int max_iterations = 500;
    double x_tolerance = 1e-4;  ///< simplex extent relative to the best vertex
    double f_tolerance = 1e-8;  ///< spread of objective values over the simplex
    double initial_step = 0.1;  ///< relative size of the starting simplex
};

struct FitResult {
    double k_hat = 0.0;
    double c_hat = 0.0;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> best_history;  ///< best objective after each iteration
    std::vector<std::string> warnings;
};

/// Nelder-Mead minimization of fit_objective from (k_init, c_init).
FitResult fit_parameters(const HarmonicTransferSet& target, double k_init, double c_init,
                         const FitContext& context, const FitOptions& options = {});

}  // namespace htfid
