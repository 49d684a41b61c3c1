#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "htfid/error.hpp"
#include "htfid/model.hpp"
#include "htfid/sim.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace htfid;

TEST_CASE("eval_chart: damper on while moving up") {
    HybridModel model{ModelParams{}};
    const State d = model.eval_chart(State(0.2, 1.0), 0.0, 0.0);
    CHECK(d[0] == doctest::Approx(1.0));
    CHECK(d[1] == doctest::Approx(-10.81).epsilon(1e-12));
}

TEST_CASE("eval_chart: lossless branch when moving down") {
    HybridModel model{ModelParams{}};
    const State d = model.eval_chart(State(0.2, -1.0), 0.0, 0.0);
    CHECK(d[1] == doctest::Approx(-8.81).epsilon(1e-12));
}

TEST_CASE("static equilibrium of the lossless chart") {
    ModelParams p;
    p.forcing_amplitude = 0.0;
    HybridModel model{p};
    const State d = model.eval_chart(State(p.static_equilibrium(), 0.0), 0.3, 0.0);
    CHECK(std::abs(d[1]) < 1e-13);
}

TEST_CASE("chart selection depends only on the sign of the velocity") {
    HybridModel model{ModelParams{}};
    CHECK(model.chart_for(State(0.0, 0.0)) == Chart::Off);
    CHECK(model.chart_for(State(5.0, -1e-300)) == Chart::Off);
    CHECK(model.chart_for(State(-5.0, 1e-300)) == Chart::On);
    for (double x : {-1.0, 0.0, 0.7}) {
        for (double v : {-2.0, 0.5, 3.0}) {
            const State s(x, v);
            const State on = model.eval_in_chart(Chart::On, s, 0.1, 0.2);
            const State off = model.eval_in_chart(Chart::Off, s, 0.1, 0.2);
            CHECK(on[1] - off[1] == doctest::Approx(-2.0 * v));
            CHECK(model.eval_chart(s, 0.1, 0.2)[1] == (v > 0 ? on[1] : off[1]));
        }
    }
}

TEST_CASE("always-on mode ignores the threshold") {
    HybridModel model{ModelParams{}, DamperMode::AlwaysOn};
    CHECK(model.chart_for(State(0.0, -1.0)) == Chart::On);
}

TEST_CASE("non-finite inputs are rejected") {
    HybridModel model{ModelParams{}};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(model.eval_chart(State(nan, 0.0), 0.0, 0.0), Error);
    CHECK_THROWS_AS(model.eval_chart(State(0.0, 0.0), 0.0, INFINITY), Error);
}

TEST_CASE("parameter validation") {
    ModelParams p;
    p.k = 0.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = ModelParams{};
    p.c = -1.0;
    CHECK_THROWS_AS(p.validate(), Error);
    CHECK_NOTHROW(ModelParams{}.validate());
}

TEST_CASE("parameter files need exactly the seven keys") {
    const auto dir = std::filesystem::temp_directory_path() / "htfid_model_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "params.json").string();

    ModelParams p;
    p.k = 123.5;
    save_params(p, path);
    const ModelParams q = load_params(path);
    CHECK(q.k == 123.5);
    CHECK(q.x0 == p.x0);

    std::ofstream(path) << R"({"m":1,"k":200,"c":2,"g":9.81,"x0":0.2,"forcing_amplitude":1})";
    CHECK_THROWS_AS(load_params(path), Error);
    std::ofstream(path) << R"({"m":1,"k":200,"c":2,"g":9.81,"x0":0.2,"forcing_amplitude":1,"forcing_freq":1,"extra":0})";
    CHECK_THROWS_AS(load_params(path), Error);
    try {
        load_params(path);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Config);
    }
}

TEST_CASE("linearization of the default cycle") {
    HybridModel model{ModelParams{}};
    const LimitCycle cycle = settle_limit_cycle(model, 30, 1e-3);
    const SwitchedLinearization lin = linearize(model, cycle);
    CHECK(lin.A_on(1, 0) == -200.0);
    CHECK(lin.A_on(1, 1) == -2.0);
    CHECK(lin.A_off(1, 1) == 0.0);
    CHECK(lin.A_off(0, 1) == 1.0);
    CHECK(lin.B[1] == 1.0);
    CHECK(lin.C[0] == 1.0);
    CHECK(lin.C[1] == 0.0);
    CHECK(lin.D == 0.0);
    CHECK(lin.duty == doctest::Approx(cycle.duty));
    CHECK(lin.T == 1.0);
}

TEST_CASE("linearization is independent of gravity and rest length") {
    // Shifting g and x0 together leaves the equilibrium and the cycle in place.
    ModelParams a;
    ModelParams b;
    b.g = 19.62;
    b.x0 = a.x0 + (b.g - a.g) * a.m / a.k;
    HybridModel ma{a}, mb{b};
    const auto la = linearize(ma, settle_limit_cycle(ma, 30, 1e-3));
    const auto lb = linearize(mb, settle_limit_cycle(mb, 30, 1e-3));
    CHECK(la.A_on == lb.A_on);
    CHECK(la.A_off == lb.A_off);
    CHECK(la.duty == doctest::Approx(lb.duty).epsilon(1e-6));
}
