#include "htfid/hss.hpp"

#include "htfid/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace htfid {

namespace {

constexpr cd kJ{0.0, 1.0};

}  // namespace

SquareWaveSeries square_wave_coeffs(double duty, double t_on, double T, int n_h) {
    if (!(duty >= 0.0 && duty <= 1.0)) throw Error(ErrorCode::InvalidInput, "duty must lie in [0, 1]");
    if (!(T > 0.0)) throw Error(ErrorCode::InvalidInput, "period must be positive");
    if (n_h < 0) throw Error(ErrorCode::InvalidInput, "truncation order must be non-negative");

    SquareWaveSeries s;
    s.n_h = n_h;
    s.coeffs.assign(static_cast<std::size_t>(2 * n_h + 1), cd{0.0, 0.0});
    s.coeffs[static_cast<std::size_t>(n_h)] = duty;
    if (duty == 0.0 || duty == 1.0) {
        s.lti = true;
        return s;
    }
    const double pump = 2.0 * std::numbers::pi / T;
    for (int n = -n_h; n <= n_h; ++n) {
        if (n == 0) continue;
        const double two_pi_n = 2.0 * std::numbers::pi * n;
        const cd pulse = (1.0 - std::exp(-kJ * two_pi_n * duty)) / (kJ * two_pi_n);
        s.coeffs[static_cast<std::size_t>(n + n_h)] = std::exp(-kJ * (n * pump * t_on)) * pulse;
    }
    return s;
}

FourierMatrixSeries fourier_series(const SwitchedLinearization& lin, int n_h) {
    if (n_h < 0) throw Error(ErrorCode::InvalidInput, "truncation order must be non-negative");
    const SquareWaveSeries s = square_wave_coeffs(lin.duty, lin.t_on, lin.T, n_h);

    FourierMatrixSeries f;
    f.n_h = n_h;
    f.T = lin.T;
    f.pump = 2.0 * std::numbers::pi / lin.T;
    const auto len = static_cast<std::size_t>(2 * n_h + 1);
    f.A.assign(len, Eigen::Matrix2cd::Zero());
    f.B.assign(len, Eigen::Vector2cd::Zero());
    f.C.assign(len, Eigen::RowVector2cd::Zero());
    f.D.assign(len, cd{0.0, 0.0});

    // A(t) = A_off + (A_on - A_off) s(t)
    const Eigen::Matrix2cd jump = (lin.A_on - lin.A_off).cast<cd>();
    for (int n = -n_h; n <= n_h; ++n) f.A[f.index(n)] = jump * s[n];
    f.A[f.index(0)] += lin.A_off.cast<cd>();
    f.B[f.index(0)] = lin.B.cast<cd>();
    f.C[f.index(0)] = lin.C.cast<cd>();
    f.D[f.index(0)] = lin.D;
    return f;
}

TruncatedHSS build_hss(const FourierMatrixSeries& series, int n_blocks) {
    if (series.n_h < 0) throw Error(ErrorCode::InvalidInput, "truncation order must be non-negative");
    const int n_h = n_blocks < 0 ? series.n_h : n_blocks;
    const int blocks = 2 * n_h + 1;
    const int d = 2;

    TruncatedHSS h;
    h.n_h = n_h;
    h.n_states = d;
    h.pump = series.pump;
    h.A = Eigen::MatrixXcd::Zero(d * blocks, d * blocks);
    h.B = Eigen::MatrixXcd::Zero(d * blocks, blocks);
    h.C = Eigen::MatrixXcd::Zero(blocks, d * blocks);
    h.D = Eigen::MatrixXcd::Zero(blocks, blocks);
    h.N = Eigen::MatrixXcd::Zero(d * blocks, d * blocks);

    for (int r = 0; r < blocks; ++r) {
        for (int c = 0; c < blocks; ++c) {
            const int n = r - c;
            if (n < -series.n_h || n > series.n_h) continue;
            const auto idx = series.index(n);
            h.A.block(d * r, d * c, d, d) = series.A[idx];
            h.B.block(d * r, c, d, 1) = series.B[idx];
            h.C.block(r, d * c, 1, d) = series.C[idx];
            h.D(r, c) = series.D[idx];
        }
        const double harmonic = r - n_h;
        for (int i = 0; i < d; ++i) h.N(d * r + i, d * r + i) = kJ * (harmonic * series.pump);
    }
    return h;
}

HarmonicTransferSet::HarmonicTransferSet(std::vector<double> grid, int keep, double wp,
                                         FrequencyReference ref)
    : omega(std::move(grid)), n_keep(keep), pump(wp), reference(ref) {
    const auto rows = static_cast<std::size_t>(2 * keep + 1);
    values.assign(rows, std::vector<cd>(omega.size(), cd{0.0, 0.0}));
    valid.assign(rows, std::vector<bool>(omega.size(), true));
}

HarmonicTransferSet eval_htf(const TruncatedHSS& hss, const std::vector<double>& omega_grid,
                             int n_keep, FrequencyReference reference,
                             const HtfEvalOptions& options) {
    if (n_keep < 0 || n_keep > hss.n_h) {
        throw Error(ErrorCode::InvalidInput, "n_keep must lie in [0, n_h]");
    }
    for (std::size_t i = 1; i < omega_grid.size(); ++i) {
        if (!(omega_grid[i] > omega_grid[i - 1])) {
            throw Error(ErrorCode::InvalidInput, "frequency grid must be strictly increasing");
        }
    }

    HarmonicTransferSet out(omega_grid, n_keep, hss.pump, reference);
    const Eigen::MatrixXcd base = hss.A - hss.N;
    const int center = hss.n_h;

    const Eigen::VectorXcd rhs = reference == FrequencyReference::Input
                                     ? Eigen::VectorXcd(hss.B.col(center))
                                     : Eigen::VectorXcd(hss.C.row(center).transpose());

    for (std::size_t i = 0; i < omega_grid.size(); ++i) {
        double w = omega_grid[i];
        Eigen::VectorXcd response;
        for (int attempt = 0; attempt < 2; ++attempt) {
            Eigen::MatrixXcd M = -base;
            M.diagonal().array() += kJ * w;
            if (reference == FrequencyReference::Output) M.transposeInPlace();
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
            const double rcond = lu.rcond();
            const Eigen::VectorXcd x = lu.solve(rhs);
            if (rcond > 0.0 && x.allFinite()) {
                if (1.0 / rcond > options.warn_condition) {
                    std::ostringstream msg;
                    msg << "near-singular solve at omega = " << w << " (condition " << 1.0 / rcond << ")";
                    out.warnings.push_back(msg.str());
                }
                if (reference == FrequencyReference::Input) {
                    response = hss.C * x + hss.D.col(center);
                } else {
                    response = (x.transpose() * hss.B).transpose() + hss.D.row(center).transpose();
                }
                break;
            }
            if (attempt == 1) {
                std::ostringstream msg;
                msg << "singular harmonic system at omega = " << omega_grid[i];
                throw Error(ErrorCode::SingularFrequency, msg.str());
            }
            std::ostringstream msg;
            msg << "singular harmonic system at omega = " << w << "; grid point perturbed";
            out.warnings.push_back(msg.str());
            w = w == 0.0 ? options.singular_perturbation : w * (1.0 + options.singular_perturbation);
        }
        for (int n = -n_keep; n <= n_keep; ++n) {
            // Output reference reads the central row: column -n is the input at w - n wp.
            const int col = reference == FrequencyReference::Input ? n + center : -n + center;
            out.at(n, i) = response(col);
        }
    }
    return out;
}

std::vector<double> uniform_grid(double f_hi_hz, int n_points) {
    if (!(f_hi_hz > 0.0) || n_points < 1) {
        throw Error(ErrorCode::InvalidInput, "grid needs a positive band and at least one point");
    }
    std::vector<double> grid(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        grid[static_cast<std::size_t>(i)] =
            2.0 * std::numbers::pi * f_hi_hz * static_cast<double>(i + 1) / n_points;
    }
    return grid;
}

HarmonicTransferSet theoretical_htf(const SwitchedLinearization& lin, int n_h,
                                    const std::vector<double>& omega_grid, int n_keep,
                                    FrequencyReference reference) {
    // Blocks up to +-n_h couple through coefficients up to +-2 n_h.
    return eval_htf(build_hss(fourier_series(lin, 2 * n_h), n_h), omega_grid, n_keep, reference);
}

}  // namespace htfid
