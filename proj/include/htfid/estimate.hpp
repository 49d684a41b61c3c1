#pragma once

#include "htfid/excite.hpp"
#include "htfid/hss.hpp"

#include <Eigen/Sparse>

#include <span>
#include <vector>

namespace htfid {

/// Full-length DFT of one input/output record, scaled by sqrt(dt / N) so that
/// sum |U|^2 = sum u^2 dt. Bin b (possibly negative) sits at b * bin_spacing.
struct SpectrumRecord {
    double dt = 0.0;
    double bin_spacing = 0.0;  ///< 2 pi / (N dt) [rad/s]
    double clock_phase = 0.0;  ///< clock phase of the first sample [s]
    std::vector<cd> U;
    std::vector<cd> Y;

    long size() const { return static_cast<long>(U.size()); }
    double frequency(long bin) const { return static_cast<double>(bin) * bin_spacing; }
    cd input(long bin) const { return U[wrap(bin)]; }
    cd output(long bin) const { return Y[wrap(bin)]; }

private:
    std::size_t wrap(long bin) const {
        const long n = size();
        return static_cast<std::size_t>(((bin % n) + n) % n);
    }
};

/// Spectra of samples u(t_i), y(t_i). The times must be uniformly spaced.
SpectrumRecord spectra(std::span<const double> t, std::span<const double> u,
                       std::span<const double> y, double clock_phase = 0.0);

/// Spectra of an experiment record's input and xi_1. The closing sample of the
/// record (time = duration) is dropped so the DFT spans an integer number of
/// periods.
SpectrumRecord spectra(const ExperimentRecord& record);

struct EstimationProblem {
    int n_harmonics = 3;
    double pump = 0.0;            ///< [rad/s]
    double alpha = 1e-4;          ///< curvature weight relative to the mean input power per unknown
    double band_hi = 0.0;         ///< upper edge of the excited band [rad/s]
    bool symmetric_grid = false;  ///< also estimate at the mirrored negative bins
    double excitation_threshold = 1e-3;  ///< fraction of band-median input level
    std::vector<SpectrumRecord> records;

    void validate() const;
};

/// Per-bin least-squares rows: Y_r(w) = sum_n G_n(w) e^{j n wp phase_r} U_r(w - n wp).
struct RegressorBlock {
    long bin = 0;
    Eigen::MatrixXcd U;          ///< records x (2N + 1), column n + N
    Eigen::VectorXcd Y;          ///< records
    std::vector<bool> excited;   ///< false: column zeroed, shifted input not excited
};

RegressorBlock build_regressor(const EstimationProblem& problem, long bin);
/// Nearest-bin variant; throws when omega is more than half a bin off the grid.
RegressorBlock build_regressor_at(const EstimationProblem& problem, double omega);

/// (n - 2) x n second-difference stencil [1, -2, 1].
Eigen::SparseMatrix<double> second_difference(int n_points);

struct EstimateDiagnostics {
    double alpha = 0.0;
    double penalty_scale = 0.0;   ///< mean diagonal of U^H U over the unknowns
    double condition = 0.0;       ///< of the regularized normal matrix
    double residual_norm = 0.0;   ///< ||Y - U G||
    double relative_residual = 0.0;
    double cost = 0.0;            ///< data misfit plus curvature penalty
    long n_unknowns = 0;
    long n_bins = 0;
    long n_excluded = 0;          ///< (bin, harmonic) pairs without excitation
};

struct HtfEstimate {
    HarmonicTransferSet htf;  ///< output-referenced, n in [-N, N]
    EstimateDiagnostics diagnostics;
};

struct EstimateOptions {
    double max_condition = 1e14;
};

/// Solves (U^H U + alpha D^4) G = U^H Y jointly over all bins and harmonics.
HtfEstimate estimate_htf(const EstimationProblem& problem, const EstimateOptions& options = {});

/// Cost of an arbitrary candidate on the estimation grid, with the same
/// masking and penalty as estimate_htf. Candidate entries outside the
/// estimated unknowns are ignored.
double estimation_cost(const EstimationProblem& problem, const HarmonicTransferSet& candidate);

/// Builds a problem from simulated experiment records.
EstimationProblem make_problem(const ExperimentBundle& bundle, int n_harmonics, double alpha);

}  // namespace htfid
