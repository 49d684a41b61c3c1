#include "htfid/io.hpp"

#include "htfid/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace htfid {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Config, "cannot write " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Config, "cannot read " + path);
    return in;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

double parse(const std::string& s, const std::string& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidInput, path + ": cannot parse number '" + s + "'");
    }
}

void expect_header(std::istream& in, const std::string& header, const std::string& path) {
    std::string line;
    if (!std::getline(in, line) || line != header) {
        throw Error(ErrorCode::InvalidInput, path + ": expected header '" + header + "'");
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    auto out = open_out(path);
    out << "t,x,xdot,u,chart\n";
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const auto& s = traj.samples[i];
        out << format_double(traj.time(i)) << ',' << format_double(s.x) << ','
            << format_double(s.xdot) << ',' << format_double(s.u) << ','
            << static_cast<int>(s.chart) << '\n';
    }
}

Trajectory read_trajectory_csv(const std::string& path) {
    auto in = open_in(path);
    expect_header(in, "t,x,xdot,u,chart", path);
    std::vector<double> times;
    Trajectory traj;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 5) throw Error(ErrorCode::InvalidInput, path + ": expected 5 columns");
        times.push_back(parse(f[0], path));
        const double chart = parse(f[4], path);
        if (chart != 0.0 && chart != 1.0) throw Error(ErrorCode::InvalidInput, path + ": chart must be 0 or 1");
        traj.samples.push_back({parse(f[1], path), parse(f[2], path), parse(f[3], path),
                                chart == 1.0 ? Chart::On : Chart::Off});
    }
    if (times.size() < 2) throw Error(ErrorCode::InvalidInput, path + ": need at least two samples");
    traj.t0 = times.front();
    traj.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (std::abs(traj.time(i) - times[i]) > 1e-9 * std::max(1.0, std::abs(times[i]))) {
            throw Error(ErrorCode::InvalidInput, path + ": non-uniform sampling");
        }
    }
    return traj;
}

void write_htf_csv(const HarmonicTransferSet& htf, const std::string& path) {
    auto out = open_out(path);
    out << "omega_rad_s,n,re,im\n";
    for (std::size_t i = 0; i < htf.omega.size(); ++i) {
        for (int n = -htf.n_keep; n <= htf.n_keep; ++n) {
            if (!htf.is_valid(n, i)) continue;
            const cd g = htf.at(n, i);
            out << format_double(htf.omega[i]) << ',' << n << ',' << format_double(g.real()) << ','
                << format_double(g.imag()) << '\n';
        }
    }
}

HarmonicTransferSet read_htf_csv(const std::string& path, FrequencyReference reference) {
    auto in = open_in(path);
    expect_header(in, "omega_rad_s,n,re,im", path);
    std::map<double, std::map<int, cd>> rows;
    int n_keep = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 4) throw Error(ErrorCode::InvalidInput, path + ": expected 4 columns");
        const double w = parse(f[0], path);
        const int n = static_cast<int>(parse(f[1], path));
        rows[w][n] = cd{parse(f[2], path), parse(f[3], path)};
        n_keep = std::max(n_keep, std::abs(n));
    }
    std::vector<double> grid;
    for (const auto& [w, _] : rows) grid.push_back(w);
    HarmonicTransferSet htf(grid, n_keep, 0.0, reference);
    std::size_t i = 0;
    for (const auto& [w, by_n] : rows) {
        for (int n = -n_keep; n <= n_keep; ++n) {
            const auto it = by_n.find(n);
            htf.set_valid(n, i, it != by_n.end());
            if (it != by_n.end()) htf.at(n, i) = it->second;
        }
        ++i;
    }
    return htf;
}

void write_htf_plot_csv(const HarmonicTransferSet& htf, const std::string& path) {
    auto out = open_out(path);
    out << "omega_rad_s,n,mag_db,phase_deg\n";
    for (int n = -htf.n_keep; n <= htf.n_keep; ++n) {
        for (std::size_t i = 0; i < htf.omega.size(); ++i) {
            if (!htf.is_valid(n, i)) continue;
            const cd g = htf.at(n, i);
            out << format_double(htf.omega[i]) << ',' << n << ','
                << format_double(20.0 * std::log10(std::abs(g))) << ','
                << format_double(std::arg(g) * 180.0 / std::numbers::pi) << '\n';
        }
    }
}

void write_bundle(const ExperimentBundle& bundle, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& rec : bundle.records) {
        write_trajectory_csv(rec.error, dir + "/rec_" + std::to_string(rec.phase_index) + ".csv");
    }
    nlohmann::ordered_json j = to_json(bundle.plan);
    nlohmann::ordered_json offsets = nlohmann::ordered_json::array();
    for (const auto& rec : bundle.records) offsets.push_back(rec.chirp_offset);
    j["clock_phase_offsets"] = offsets;
    write_json(j, dir + "/plan.json");
}

nlohmann::ordered_json to_json(const ModelParams& p) {
    nlohmann::ordered_json j;
    j["m"] = p.m;
    j["k"] = p.k;
    j["c"] = p.c;
    j["g"] = p.g;
    j["x0"] = p.x0;
    j["forcing_amplitude"] = p.forcing_amplitude;
    j["forcing_freq"] = p.forcing_freq;
    return j;
}

nlohmann::ordered_json to_json(const ChirpPlan& plan) {
    nlohmann::ordered_json j;
    j["amplitude"] = plan.amplitude;
    j["f_lo"] = plan.f_lo;
    j["f_hi"] = plan.f_hi;
    j["segment_duration"] = plan.segment_duration;
    j["n_segments"] = plan.n_segments;
    j["T"] = plan.T;
    j["dt"] = plan.dt;
    j["record_duration"] = plan.record_length();
    return j;
}

nlohmann::ordered_json to_json(const FitResult& r) {
    nlohmann::ordered_json j;
    j["k_hat"] = r.k_hat;
    j["c_hat"] = r.c_hat;
    j["objective"] = r.objective;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    return j;
}

nlohmann::ordered_json to_json(const EstimateDiagnostics& d) {
    nlohmann::ordered_json j;
    j["alpha"] = d.alpha;
    j["penalty_scale"] = d.penalty_scale;
    j["condition_number"] = d.condition;
    j["residual_norm"] = d.residual_norm;
    j["relative_residual"] = d.relative_residual;
    j["cost"] = d.cost;
    j["n_unknowns"] = d.n_unknowns;
    j["n_bins"] = d.n_bins;
    j["n_excluded"] = d.n_excluded;
    return j;
}

nlohmann::ordered_json cycle_summary(const LimitCycle& cycle) {
    nlohmann::ordered_json j;
    j["T"] = cycle.T;
    j["t_hat"] = cycle.t_hat;
    j["t_on"] = cycle.t_on;
    j["duty"] = cycle.duty;
    j["residual"] = {cycle.residual[0], cycle.residual[1]};
    j["samples_per_period"] = cycle.samples.size();
    j["position_amplitude"] = cycle.position_amplitude();
    return j;
}

void write_json(const nlohmann::ordered_json& j, const std::string& path) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

}  // namespace htfid
