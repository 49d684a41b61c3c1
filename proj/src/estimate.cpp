#include "htfid/estimate.hpp"

#include "htfid/error.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace htfid {

namespace {

constexpr cd kJ{0.0, 1.0};

long shift_bins(const EstimationProblem& p) {
    return std::lround(p.pump / p.records.front().bin_spacing);
}

long top_bin(const EstimationProblem& p) {
    return static_cast<long>(std::floor(p.band_hi / p.records.front().bin_spacing + 1e-9));
}

// RMS input level per non-negative bin over records, and the in-band median.
struct Excitation {
    std::vector<double> level;  ///< index |bin|, 0..top
    double threshold = 0.0;
    long top = 0;

    bool excited(long bin) const {
        const long a = std::labs(bin);
        return a >= 1 && a <= top && level[static_cast<std::size_t>(a)] >= threshold &&
               level[static_cast<std::size_t>(a)] > 0.0;
    }
};

Excitation excitation(const EstimationProblem& p) {
    Excitation e;
    e.top = top_bin(p);
    e.level.assign(static_cast<std::size_t>(e.top + 1), 0.0);
    for (long b = 1; b <= e.top; ++b) {
        double power = 0.0;
        for (const auto& r : p.records) power += std::norm(r.input(b));
        e.level[static_cast<std::size_t>(b)] = std::sqrt(power / static_cast<double>(p.records.size()));
    }
    std::vector<double> band(e.level.begin() + 1, e.level.end());
    if (band.empty()) throw Error(ErrorCode::NoData, "estimation band contains no bins");
    std::nth_element(band.begin(), band.begin() + static_cast<long>(band.size() / 2), band.end());
    const double median = band[band.size() / 2];
    if (!(median > 0.0)) throw Error(ErrorCode::NoData, "input carries no energy in the estimation band");
    e.threshold = p.excitation_threshold * median;
    return e;
}

RegressorBlock regressor(const EstimationProblem& p, const Excitation& e, long bin) {
    const int N = p.n_harmonics;
    const long shift = shift_bins(p);
    const auto rows = static_cast<Eigen::Index>(p.records.size());
    RegressorBlock block;
    block.bin = bin;
    block.U = Eigen::MatrixXcd::Zero(rows, 2 * N + 1);
    block.Y.resize(rows);
    block.excited.assign(static_cast<std::size_t>(2 * N + 1), false);
    for (int n = -N; n <= N; ++n) {
        const long source = bin - n * shift;
        const bool ok = e.excited(source);
        block.excited[static_cast<std::size_t>(n + N)] = ok;
        if (!ok) continue;
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto& rec = p.records[static_cast<std::size_t>(r)];
            const cd phase = std::exp(kJ * (n * p.pump * rec.clock_phase));
            block.U(r, n + N) = phase * rec.input(source);
        }
    }
    for (Eigen::Index r = 0; r < rows; ++r) block.Y(r) = p.records[static_cast<std::size_t>(r)].output(bin);
    return block;
}

// Unknown numbering: bin-major, harmonic-minor, only excited columns.
struct Layout {
    int N = 0;
    std::vector<long> bins;
    std::vector<RegressorBlock> blocks;
    std::vector<std::vector<long>> index;  ///< [bin position][n + N] -> unknown or -1
    long n_unknowns = 0;
    long n_excluded = 0;
    double penalty_scale = 0.0;
    // Runs of adjacent bins per harmonic, as unknown indices.
    std::vector<std::vector<long>> runs;
};

Layout make_layout(const EstimationProblem& p) {
    p.validate();
    const Excitation e = excitation(p);
    Layout L;
    L.N = p.n_harmonics;
    const int width = 2 * L.N + 1;
    for (long b = p.symmetric_grid ? -e.top : 1; b <= e.top; ++b) {
        if (b != 0) L.bins.push_back(b);
    }

    double diag_sum = 0.0;
    for (long b : L.bins) {
        RegressorBlock block = regressor(p, e, b);
        std::vector<long> idx(static_cast<std::size_t>(width), -1);
        for (int c = 0; c < width; ++c) {
            if (block.excited[static_cast<std::size_t>(c)]) {
                idx[static_cast<std::size_t>(c)] = L.n_unknowns++;
                diag_sum += block.U.col(c).squaredNorm();
            } else {
                ++L.n_excluded;
            }
        }
        L.index.push_back(std::move(idx));
        L.blocks.push_back(std::move(block));
    }
    if (L.n_unknowns == 0) throw Error(ErrorCode::NoData, "no excited harmonic columns in the band");
    L.penalty_scale = diag_sum / static_cast<double>(L.n_unknowns);

    for (int c = 0; c < width; ++c) {
        std::vector<long> run;
        auto flush = [&] {
            if (run.size() >= 3) L.runs.push_back(run);
            run.clear();
        };
        for (std::size_t i = 0; i < L.bins.size(); ++i) {
            const long u = L.index[i][static_cast<std::size_t>(c)];
            const bool adjacent = i > 0 && L.bins[i] == L.bins[i - 1] + 1;
            if (u < 0 || !adjacent) flush();
            if (u >= 0) run.push_back(u);
        }
        flush();
    }
    return L;
}

double penalty_value(const Layout& L, const Eigen::VectorXcd& g) {
    double total = 0.0;
    for (const auto& run : L.runs) {
        for (std::size_t i = 1; i + 1 < run.size(); ++i) {
            total += std::norm(g(run[i - 1]) - 2.0 * g(run[i]) + g(run[i + 1]));
        }
    }
    return total;
}

double misfit(const Layout& L, const Eigen::VectorXcd& g, double* y_norm2 = nullptr) {
    double total = 0.0;
    double ynorm = 0.0;
    const int width = 2 * L.N + 1;
    for (std::size_t i = 0; i < L.bins.size(); ++i) {
        const auto& block = L.blocks[i];
        Eigen::VectorXcd local = Eigen::VectorXcd::Zero(width);
        for (int c = 0; c < width; ++c) {
            const long u = L.index[i][static_cast<std::size_t>(c)];
            if (u >= 0) local(c) = g(u);
        }
        total += (block.Y - block.U * local).squaredNorm();
        ynorm += block.Y.squaredNorm();
    }
    if (y_norm2) *y_norm2 = ynorm;
    return total;
}

}  // namespace

SpectrumRecord spectra(std::span<const double> t, std::span<const double> u,
                       std::span<const double> y, double clock_phase) {
    const std::size_t n = t.size();
    if (n < 2 || u.size() != n || y.size() != n) {
        throw Error(ErrorCode::InvalidInput, "time, input and output must have equal length >= 2");
    }
    const double dt = t[1] - t[0];
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidInput, "time stamps must increase");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(u[i]) || !std::isfinite(y[i]) || !std::isfinite(t[i])) {
            throw Error(ErrorCode::InvalidInput, "non-finite sample");
        }
        const double expected = t[0] + static_cast<double>(i) * dt;
        if (std::abs(t[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
            throw Error(ErrorCode::InvalidInput, "non-uniform sampling");
        }
    }

    SpectrumRecord rec;
    rec.dt = dt;
    rec.bin_spacing = 2.0 * std::numbers::pi / (static_cast<double>(n) * dt);
    rec.clock_phase = clock_phase;

    Eigen::FFT<double> fft;
    std::vector<double> buffer(u.begin(), u.end());
    fft.fwd(rec.U, buffer);
    buffer.assign(y.begin(), y.end());
    fft.fwd(rec.Y, buffer);
    const double scale = std::sqrt(dt / static_cast<double>(n));
    for (auto& v : rec.U) v *= scale;
    for (auto& v : rec.Y) v *= scale;
    return rec;
}

SpectrumRecord spectra(const ExperimentRecord& record) {
    const auto& traj = record.error;
    if (traj.samples.size() < 3) throw Error(ErrorCode::InvalidInput, "record too short");
    const std::size_t n = traj.samples.size() - 1;
    std::vector<double> t(n), u(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = traj.time(i);
        u[i] = traj.samples[i].u;
        y[i] = traj.samples[i].x;
    }
    return spectra(t, u, y, record.clock_phase);
}

void EstimationProblem::validate() const {
    if (n_harmonics < 0) throw Error(ErrorCode::InvalidInput, "n_harmonics must be non-negative");
    if (records.empty()) throw Error(ErrorCode::NoData, "no records");
    if (records.size() < static_cast<std::size_t>(2 * n_harmonics + 1)) {
        std::ostringstream msg;
        msg << records.size() << " records cannot separate " << 2 * n_harmonics + 1 << " harmonics";
        throw Error(ErrorCode::InvalidInput, msg.str());
    }
    const auto& first = records.front();
    for (const auto& r : records) {
        if (r.size() != first.size() || std::abs(r.dt - first.dt) > 1e-12 * first.dt) {
            throw Error(ErrorCode::InvalidInput, "records must share length and sampling interval");
        }
    }
    if (!(pump > 0.0) || !(band_hi > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "pump frequency and band edge must be positive");
    }
    if (!(alpha >= 0.0)) throw Error(ErrorCode::InvalidInput, "alpha must be non-negative");
    const double nyquist = std::numbers::pi / first.dt;
    if (n_harmonics * pump + band_hi >= nyquist) {
        throw Error(ErrorCode::Aliasing, "shifted band exceeds the Nyquist frequency");
    }
}

RegressorBlock build_regressor(const EstimationProblem& problem, long bin) {
    problem.validate();
    return regressor(problem, excitation(problem), bin);
}

RegressorBlock build_regressor_at(const EstimationProblem& problem, double omega) {
    problem.validate();
    const double spacing = problem.records.front().bin_spacing;
    const double exact = omega / spacing;
    const long bin = std::lround(exact);
    if (std::abs(exact - static_cast<double>(bin)) > 0.5) {
        throw Error(ErrorCode::InvalidInput, "frequency is off the bin grid");
    }
    return build_regressor(problem, bin);
}

Eigen::SparseMatrix<double> second_difference(int n_points) {
    if (n_points < 3) throw Error(ErrorCode::InvalidInput, "second difference needs at least 3 points");
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(3 * (n_points - 2)));
    for (int r = 0; r < n_points - 2; ++r) {
        entries.emplace_back(r, r, 1.0);
        entries.emplace_back(r, r + 1, -2.0);
        entries.emplace_back(r, r + 2, 1.0);
    }
    Eigen::SparseMatrix<double> D(n_points - 2, n_points);
    D.setFromTriplets(entries.begin(), entries.end());
    return D;
}

HtfEstimate estimate_htf(const EstimationProblem& problem, const EstimateOptions& options) {
    const Layout L = make_layout(problem);
    const int width = 2 * L.N + 1;
    const double weight = problem.alpha * L.penalty_scale;

    std::vector<Eigen::Triplet<cd>> entries;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(L.n_unknowns);
    for (std::size_t i = 0; i < L.bins.size(); ++i) {
        const auto& block = L.blocks[i];
        const Eigen::MatrixXcd gram = block.U.adjoint() * block.U;
        const Eigen::VectorXcd cross = block.U.adjoint() * block.Y;
        for (int a = 0; a < width; ++a) {
            const long ua = L.index[i][static_cast<std::size_t>(a)];
            if (ua < 0) continue;
            rhs(ua) = cross(a);
            for (int b = 0; b < width; ++b) {
                const long ub = L.index[i][static_cast<std::size_t>(b)];
                if (ub >= 0) entries.emplace_back(ua, ub, gram(a, b));
            }
        }
    }
    if (weight > 0.0) {
        for (const auto& run : L.runs) {
            const Eigen::SparseMatrix<double> D = second_difference(static_cast<int>(run.size()));
            const Eigen::SparseMatrix<double> D4 = D.transpose() * D;
            for (int k = 0; k < D4.outerSize(); ++k) {
                for (Eigen::SparseMatrix<double>::InnerIterator it(D4, k); it; ++it) {
                    entries.emplace_back(run[static_cast<std::size_t>(it.row())],
                                         run[static_cast<std::size_t>(it.col())], weight * it.value());
                }
            }
        }
    }
    Eigen::SparseMatrix<cd> M(L.n_unknowns, L.n_unknowns);
    M.setFromTriplets(entries.begin(), entries.end());

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<cd>> solver(M);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::IllConditioned, "normal matrix is singular; increase alpha");
    }
    const Eigen::VectorXcd g = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !g.allFinite()) {
        throw Error(ErrorCode::IllConditioned, "normal equations could not be solved; increase alpha");
    }

    // Extreme eigenvalues of the Hermitian normal matrix by (inverse) power iteration.
    Eigen::VectorXcd v = Eigen::VectorXcd::Ones(L.n_unknowns).normalized();
    Eigen::VectorXcd w = v;
    double lambda_max = 0.0;
    double lambda_min_inv = 0.0;
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXcd mv = M * v;
        lambda_max = mv.norm();
        if (lambda_max == 0.0) break;
        v = mv / lambda_max;
        Eigen::VectorXcd iw = solver.solve(w);
        lambda_min_inv = iw.norm();
        if (!(lambda_min_inv > 0.0) || !std::isfinite(lambda_min_inv)) break;
        w = iw / lambda_min_inv;
    }
    const double condition = lambda_max * lambda_min_inv;
    if (!std::isfinite(condition) || condition > options.max_condition) {
        std::ostringstream msg;
        msg << "normal matrix condition number " << condition << " exceeds " << options.max_condition
            << "; increase alpha";
        throw Error(ErrorCode::IllConditioned, msg.str());
    }

    HtfEstimate out;
    std::vector<double> grid;
    grid.reserve(L.bins.size());
    const double spacing = problem.records.front().bin_spacing;
    for (long b : L.bins) grid.push_back(static_cast<double>(b) * spacing);
    out.htf = HarmonicTransferSet(std::move(grid), L.N, problem.pump, FrequencyReference::Output);
    for (std::size_t i = 0; i < L.bins.size(); ++i) {
        for (int n = -L.N; n <= L.N; ++n) {
            const long u = L.index[i][static_cast<std::size_t>(n + L.N)];
            out.htf.set_valid(n, i, u >= 0);
            if (u >= 0) out.htf.at(n, i) = g(u);
        }
    }

    double y_norm2 = 0.0;
    const double data = misfit(L, g, &y_norm2);
    auto& d = out.diagnostics;
    d.alpha = problem.alpha;
    d.penalty_scale = L.penalty_scale;
    d.condition = condition;
    d.residual_norm = std::sqrt(data);
    d.relative_residual = y_norm2 > 0.0 ? std::sqrt(data / y_norm2) : 0.0;
    d.cost = data + weight * penalty_value(L, g);
    d.n_unknowns = L.n_unknowns;
    d.n_bins = static_cast<long>(L.bins.size());
    d.n_excluded = L.n_excluded;
    return out;
}

double estimation_cost(const EstimationProblem& problem, const HarmonicTransferSet& candidate) {
    const Layout L = make_layout(problem);
    if (candidate.omega.size() != L.bins.size() || candidate.n_keep < L.N) {
        throw Error(ErrorCode::InvalidInput, "candidate grid does not match the estimation grid");
    }
    const double spacing = problem.records.front().bin_spacing;
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(L.n_unknowns);
    for (std::size_t i = 0; i < L.bins.size(); ++i) {
        const double w = static_cast<double>(L.bins[i]) * spacing;
        if (std::abs(candidate.omega[i] - w) > 1e-9 * std::max(1.0, std::abs(w))) {
            throw Error(ErrorCode::InvalidInput, "candidate grid does not match the estimation grid");
        }
        for (int n = -L.N; n <= L.N; ++n) {
            const long u = L.index[i][static_cast<std::size_t>(n + L.N)];
            if (u >= 0) g(u) = candidate.at(n, i);
        }
    }
    return misfit(L, g) + problem.alpha * L.penalty_scale * penalty_value(L, g);
}

EstimationProblem make_problem(const ExperimentBundle& bundle, int n_harmonics, double alpha) {
    EstimationProblem p;
    p.n_harmonics = n_harmonics;
    p.alpha = alpha;
    p.pump = 2.0 * std::numbers::pi / bundle.plan.T;
    p.band_hi = 2.0 * std::numbers::pi * bundle.plan.f_hi;
    p.records.reserve(bundle.records.size());
    for (const auto& rec : bundle.records) p.records.push_back(spectra(rec));
    return p;
}

}  // namespace htfid
