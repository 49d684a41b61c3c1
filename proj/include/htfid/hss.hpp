#pragma once

#include "htfid/model.hpp"

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace htfid {

using cd = std::complex<double>;

/// Complex Fourier coefficients s_n, n = -n_h..n_h, of the damper flag s(t).
struct SquareWaveSeries {
    int n_h = 0;
    std::vector<cd> coeffs;  ///< index n + n_h
    bool lti = false;        ///< duty is 0 or 1, only s_0 is nonzero

    cd operator[](int n) const { return coeffs[static_cast<std::size_t>(n + n_h)]; }
};

/// s_0 = duty; s_n = e^{-j n wp t_on} (1 - e^{-j 2 pi n duty}) / (j 2 pi n).
SquareWaveSeries square_wave_coeffs(double duty, double t_on, double T, int n_h);

/// Fourier coefficients of the T-periodic system matrices, indexed n + n_h.
struct FourierMatrixSeries {
    int n_h = 0;
    double T = 1.0;
    double pump = 0.0;  ///< 2 pi / T [rad/s]
    std::vector<Eigen::Matrix2cd> A;
    std::vector<Eigen::Vector2cd> B;
    std::vector<Eigen::RowVector2cd> C;
    std::vector<cd> D;

    std::size_t index(int n) const { return static_cast<std::size_t>(n + n_h); }
};

FourierMatrixSeries fourier_series(const SwitchedLinearization& lin, int n_h);

/// Truncated harmonic state space with 2 n_h + 1 harmonic blocks per side.
struct TruncatedHSS {
    int n_h = 0;
    int n_states = 2;
    double pump = 0.0;
    Eigen::MatrixXcd A;  ///< block Toeplitz, block (r, c) = A_{r-c}
    Eigen::MatrixXcd B;
    Eigen::MatrixXcd C;
    Eigen::MatrixXcd D;
    Eigen::MatrixXcd N;  ///< blockdiag(j n wp I)
};

/// Harmonic window -n_blocks..n_blocks (defaults to the series order).
/// Toeplitz blocks whose index exceeds the series order are left zero.
TruncatedHSS build_hss(const FourierMatrixSeries& series, int n_blocks = -1);

/// Which frequency the grid of a harmonic response refers to.
enum class FrequencyReference {
    Input,   ///< G_n(w): input at w produces output at w + n wp
    Output,  ///< G_n(w) multiplies U(w - n wp) in Y(w)
};

/// Harmonic responses G_n, n = -n_keep..n_keep, on a common frequency grid.
/// Entries with `valid == false` carry no information (e.g. unexcited bins).
struct HarmonicTransferSet {
    std::vector<double> omega;
    int n_keep = 0;
    double pump = 0.0;
    FrequencyReference reference = FrequencyReference::Input;
    std::vector<std::vector<cd>> values;    ///< [n + n_keep][grid index]
    std::vector<std::vector<bool>> valid;   ///< same shape as values
    std::vector<std::string> warnings;

    HarmonicTransferSet() = default;
    HarmonicTransferSet(std::vector<double> grid, int n_keep, double pump, FrequencyReference ref);

    cd& at(int n, std::size_t i) { return values[static_cast<std::size_t>(n + n_keep)][i]; }
    cd at(int n, std::size_t i) const { return values[static_cast<std::size_t>(n + n_keep)][i]; }
    bool is_valid(int n, std::size_t i) const {
        return valid[static_cast<std::size_t>(n + n_keep)][i];
    }
    void set_valid(int n, std::size_t i, bool v) {
        valid[static_cast<std::size_t>(n + n_keep)][i] = v;
    }
};

struct HtfEvalOptions {
    double warn_condition = 1e12;     ///< attach a warning above this condition number
    double singular_perturbation = 1e-9;  ///< relative nudge for singular grid points
};

/// Central block column of C [jw I - (A - N)]^-1 B + D at each grid point.
/// `reference == Output` evaluates the central block row instead, so that the
/// result is indexed by output frequency.
HarmonicTransferSet eval_htf(const TruncatedHSS& hss, const std::vector<double>& omega_grid,
                             int n_keep,
                             FrequencyReference reference = FrequencyReference::Input,
                             const HtfEvalOptions& options = {});

/// Uniform grid of `n_points` frequencies on (0, f_hi] Hz, in rad/s.
std::vector<double> uniform_grid(double f_hi_hz, int n_points);

/// Convenience: linearization -> Fourier series -> HSS -> responses.
HarmonicTransferSet theoretical_htf(const SwitchedLinearization& lin, int n_h,
                                    const std::vector<double>& omega_grid, int n_keep,
                                    FrequencyReference reference = FrequencyReference::Input);

}  // namespace htfid
