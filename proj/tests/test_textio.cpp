#include <doctest.h>

#include <sstream>

#include "nobleqm/config.hpp"
#include "nobleqm/textio.hpp"

using namespace nobleqm;

TEST_CASE("doubles survive formatting")
{
    for (double v : {0.1, 1.0 / 3.0, 2.78e-6, -1e300, 15e-6, 0.0})
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("envelope files round-trip")
{
    Envelope e = scaled(exponential_input(1.0, 1.0, 0.01), cplx(0.6, -0.8));
    std::stringstream ss;
    write_envelope(ss, e);
    const std::string first = ss.str();
    const Envelope back = read_envelope(ss);
    CHECK(back.t0 == e.t0);
    CHECK(back.dt == e.dt);
    CHECK(back.samples == e.samples);
    std::stringstream again;
    write_envelope(again, back);
    CHECK(again.str() == first);
}

TEST_CASE("plan files round-trip")
{
    PhysicalParams q;
    q.gamma_p = 1e7;
    q.cooperativity = 100.0;
    q.exchange_J = 1000.0;
    q.gamma_s = 17.0;
    q.gamma_k = 2.78e-6;
    const Envelope in = exponential_input(15e-6, 1.0, 15e-8);
    PlanOptions po;
    po.shape = ControlShape::Matched;
    const ProtocolPlan plan = build_retrieval(build_sequential(q, in, 15e-6, 1e4, po));
    std::stringstream ss;
    write_plan(ss, plan);
    const std::string first = ss.str();
    const ProtocolPlan back = read_plan(ss);
    CHECK(back.retrieval);
    CHECK(back.scheme == Scheme::Sequential);
    CHECK(back.hold_delta == plan.hold_delta);
    REQUIRE(back.stages.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back.stages[i].label == plan.stages[i].label);
        CHECK(back.stages[i].schedule.omega == plan.stages[i].schedule.omega);
        CHECK(back.stages[i].schedule.delta_k == plan.stages[i].schedule.delta_k);
        CHECK(back.stages[i].expected_duration == plan.stages[i].expected_duration);
    }
    std::stringstream again;
    write_plan(again, back);
    CHECK(again.str() == first);
}

TEST_CASE("malformed files are config errors")
{
    std::stringstream a("# envelope t0=0 dt=1 n=3\n0 1 0\n1 x 0\n");
    CHECK_THROWS_AS(read_envelope(a), ConfigError);
    std::stringstream b("# envelope t0=0 dt=1 n=3\n0 1 0\n");
    CHECK_THROWS_AS(read_envelope(b), ConfigError);
    std::stringstream c("0 1 2 3 4\n");
    CHECK_THROWS_AS(read_plan(c), ConfigError);
    std::stringstream d("# stage swap t0=0 dt=1 n=1\n0 0 0 0\n");
    CHECK_THROWS_AS(read_plan(d), ConfigError);
}

TEST_CASE("config parsing is strict")
{
    std::stringstream ok("# helium\ngamma_s_per_s = 17\nexchange_J_per_s = 1000 # resonant\nscheme = adiabatic\n");
    const ScenarioConfig c = parse_config(ok);
    CHECK(c.params.gamma_s == 17.0);
    CHECK(c.scheme == Scheme::Adiabatic);

    std::stringstream unknown("gamma_s = 17\n");
    CHECK_THROWS_AS(parse_config(unknown), ConfigError);
    std::stringstream twice("gamma_s_per_s = 1\ngamma_s_per_s = 2\n");
    CHECK_THROWS_AS(parse_config(twice), ConfigError);
    std::stringstream bad("gamma_s_per_s = fast\n");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    std::stringstream neg("gamma_p_per_s = -1\n");
    CHECK_THROWS_AS(parse_config(neg), ConfigError);
    std::stringstream noeq("gamma_p_per_s 1\n");
    CHECK_THROWS_AS(parse_config(noeq), ConfigError);
    std::stringstream coarse("pulse_T_s = 1\ndt_s = 0.5\n");
    CHECK_THROWS_AS(parse_config(coarse), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/nobleqm.cfg"), ConfigError);
}

TEST_CASE("config files round-trip")
{
    ScenarioConfig c = preset_helium(Scheme::Sequential);
    c.seed = 99;
    c.hold_duration = 3.5;
    std::stringstream ss;
    write_config(ss, c);
    const std::string first = ss.str();
    const ScenarioConfig back = parse_config(ss);
    std::stringstream again;
    write_config(again, back);
    CHECK(again.str() == first);
    CHECK(back.params.gamma_k == c.params.gamma_k);
    CHECK(back.seed == 99);
}

TEST_CASE("helium presets")
{
    const ScenarioConfig s = preset_helium(Scheme::Sequential);
    const ScenarioConfig a = preset_helium(Scheme::Adiabatic);
    CHECK(s.params.exchange_J == 1000.0);
    CHECK(s.params.gamma_s == 17.0);
    CHECK(s.params.cooperativity == 100.0);
    CHECK(s.params.gamma_k == doctest::Approx(2.78e-6).epsilon(1e-3));
    CHECK(s.gamma_omega == 1e4);
    CHECK(s.pulse.duration_T == doctest::Approx(15e-6));
    CHECK(a.pulse.duration_T == doctest::Approx(15e-3));
    CHECK(s.n_alkali_per_cm3 == 3.5e14);
    CHECK(s.n_noble_per_cm3 == 2e20);
    CHECK_NOTHROW(s.validate());
    CHECK(scenario_input(a).size() == 3001);
}

TEST_CASE("summary reports undefined efficiencies for an empty input")
{
    std::stringstream ss;
    write_memory_summary(ss, nullptr, Scheme::Adiabatic);
    const std::string s = ss.str();
    CHECK(s.find("eta_total = undefined") != std::string::npos);
    CHECK(s.find("eta_store = undefined") != std::string::npos);
}
