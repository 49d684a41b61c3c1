#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "htfid/error.hpp"
#include "htfid/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace htfid;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "htfid_io_test";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("doubles round-trip through text") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("trajectory CSV round trip") {
    HybridModel model{ModelParams{}};
    const auto traj = integrate(model, State(0.15, 0.2), [](double t) { return 0.01 * t; }, 0.5, 1e-3);
    const auto path = scratch("traj.csv").string();
    write_trajectory_csv(traj, path);
    CHECK(slurp(path).rfind("t,x,xdot,u,chart\n", 0) == 0);
    const auto back = read_trajectory_csv(path);
    REQUIRE(back.samples.size() == traj.samples.size());
    CHECK(back.dt == doctest::Approx(traj.dt).epsilon(1e-12));
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        CHECK(back.samples[i].x == traj.samples[i].x);
        CHECK(back.samples[i].xdot == traj.samples[i].xdot);
        CHECK(back.samples[i].u == traj.samples[i].u);
        CHECK(back.samples[i].chart == traj.samples[i].chart);
    }
}

TEST_CASE("malformed CSV input") {
    const auto path = scratch("bad.csv").string();
    std::ofstream(path) << "t,x\n0,1\n";
    CHECK_THROWS_AS(read_trajectory_csv(path), Error);
    std::ofstream(path) << "t,x,xdot,u,chart\n0,1,2,3,0\n0.1,1,oops,3,0\n";
    CHECK_THROWS_AS(read_trajectory_csv(path), Error);
    std::ofstream(path) << "omega_rad_s,n,re,im\n1,0,2\n";
    CHECK_THROWS_AS(read_htf_csv(path), Error);
    CHECK_THROWS_AS(read_htf_csv(scratch("missing.csv").string()), Error);
}

TEST_CASE("HTF CSV round trip keeps the valid mask") {
    HarmonicTransferSet h({1.0, 2.0, 3.5}, 2, 2.0 * 3.141592653589793, FrequencyReference::Output);
    for (int n = -2; n <= 2; ++n)
        for (std::size_t i = 0; i < 3; ++i) h.at(n, i) = cd(0.1 * n + i, -1.0 / (i + 1.0));
    h.set_valid(2, 1, false);
    h.set_valid(-1, 0, false);
    const auto path = scratch("htf.csv").string();
    write_htf_csv(h, path);
    const auto back = read_htf_csv(path);
    CHECK(back.n_keep == 2);
    CHECK(back.omega == h.omega);
    CHECK(back.reference == FrequencyReference::Output);
    for (int n = -2; n <= 2; ++n) {
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(back.is_valid(n, i) == h.is_valid(n, i));
            if (h.is_valid(n, i)) CHECK(back.at(n, i) == h.at(n, i));
        }
    }
    const auto text = slurp(path);
    CHECK(text.rfind("omega_rad_s,n,re,im\n1,-2,", 0) == 0);
}

TEST_CASE("plot CSV carries magnitude and phase") {
    HarmonicTransferSet h({1.0}, 0, 1.0, FrequencyReference::Input);
    h.at(0, 0) = cd(0.0, 10.0);
    const auto path = scratch("plot.csv").string();
    write_htf_plot_csv(h, path);
    CHECK(slurp(path) == "omega_rad_s,n,mag_db,phase_deg\n1,0,20,90\n");
}

TEST_CASE("JSON summaries") {
    const auto j = to_json(ModelParams{});
    CHECK(j.size() == 7);
    CHECK(j.begin().key() == "m");
    CHECK(j["k"] == 200.0);
    FitResult r;
    r.k_hat = 199.5;
    r.converged = true;
    const auto fj = to_json(r);
    CHECK(fj["k_hat"] == 199.5);
    CHECK(fj["converged"] == true);
    CHECK(fj.contains("iterations"));
    const auto path = scratch("fit.json").string();
    write_json(fj, path);
    CHECK(nlohmann::json::parse(slurp(path))["k_hat"] == 199.5);
}

TEST_CASE("writing is deterministic") {
    HybridModel model{ModelParams{}};
    const auto cycle = settle_limit_cycle(model, 30, 1e-3);
    ChirpPlan plan;
    plan.n_segments = 2;
    plan.segment_duration = 2.0;
    plan.record_duration = 2.0;
    const auto bundle = run_experiments(model, cycle, plan);
    const auto a = scratch("bundle_a"), b = scratch("bundle_b");
    write_bundle(bundle, a.string());
    write_bundle(run_experiments(model, cycle, plan), b.string());
    for (const char* f : {"rec_0.csv", "rec_1.csv", "plan.json"}) {
        REQUIRE(fs::exists(a / f));
        CHECK(std::hash<std::string>{}(slurp(a / f)) == std::hash<std::string>{}(slurp(b / f)));
    }
    write_json(cycle_summary(cycle), (a / "cycle.json").string());
    write_json(cycle_summary(settle_limit_cycle(model, 30, 1e-3)), (b / "cycle.json").string());
    CHECK(slurp(a / "cycle.json") == slurp(b / "cycle.json"));
}
