#include <catch_amalgamated.hpp>

#include <cmath>

#include "distflow/c1.hpp"
#include "distflow/exactness.hpp"
#include "distflow/lindistflow.hpp"
#include "support/random_instances.hpp"

using namespace distflow;
using Catch::Matchers::WithinAbs;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::Io;
}

RadialNetwork two_line_chain() {
    return build_network({{BusId{1}, BusId{0}, 0.01, 0.02}, {BusId{2}, BusId{1}, 0.02, 0.01}});
}

const std::vector<Complex> chain_loads{{0, 0}, {-0.4, -0.2}, {-0.3, -0.25}};

InjectionBounds bounds_at(const std::vector<Complex>& s) {
    InjectionBounds b{std::vector<double>(s.size()), std::vector<double>(s.size())};
    for (std::size_t i = 0; i < s.size(); ++i) {
        b.p_up[i] = s[i].real();
        b.q_up[i] = s[i].imag();
    }
    return b;
}

// largest violation of the linear equations (power balance and voltage drop)
double linear_residual(const RadialNetwork& net, const FlowState& st) {
    const auto r = residuals(net, st);
    return std::max({r.flow, r.substation, r.voltage});
}

}  // namespace

TEST_CASE("sweep output is exact", "[exactness]") {
    testing::InstanceGenerator gen(41);
    for (int trial = 0; trial < 50; ++trial) {
        const auto net = gen.random_network(2, 40, 1e-4, 2e-2);
        std::vector<Complex> s(net.bus_count());
        for (std::size_t i = 1; i < s.size(); ++i) s[i] = {gen.uniform(-0.3, 0.1), gen.uniform(-0.3, 0.1)};
        const auto st = sweep_solve(net, s);
        const auto rep = verify(net, st, 1e-9);
        CHECK(rep.exact);
        CHECK(rep.max_gap <= 1e-9);
        for (const auto& f : rep.first_violation) CHECK_FALSE(f);
        CHECK(rep.first_violation.size() == net.leaves().size());
    }
}

TEST_CASE("inflating one current makes that line the worst", "[exactness]") {
    const auto net = two_line_chain();
    auto st = sweep_solve(net, chain_loads);
    st.ell[1] += 0.1;
    const auto rep = verify(net, st);
    CHECK_FALSE(rep.exact);
    CHECK(rep.worst_line.value == 1);
    CHECK_THAT(rep.gaps[1], WithinAbs(st.v[1] * 0.1 / std::max(1.0, std::norm(st.S[1])), 1e-9));
    REQUIRE(rep.first_violation.size() == 1);
    REQUIRE(rep.first_violation[0]);
    CHECK(rep.first_violation[0]->value == 1);
}

TEST_CASE("verify rejects nonpositive voltages and tolerances", "[exactness]") {
    const auto net = two_line_chain();
    auto st = sweep_solve(net, chain_loads);
    CHECK(code_of([&] { (void)verify(net, st, 0.0); }) == Errc::NonpositiveTolerance);
    st.v[2] = 0.0;
    CHECK(code_of([&] { (void)verify(net, st); }) == Errc::NonpositiveVoltage);
}

TEST_CASE("construction refuses an exact state", "[exactness]") {
    const auto net = two_line_chain();
    const auto st = sweep_solve(net, chain_loads);
    CHECK(code_of([&] { (void)construct_point(net, st); }) == Errc::NoViolation);
}

TEST_CASE("construction needs a path with equality before the first relaxed line", "[exactness]") {
    const auto net = two_line_chain();
    auto st = sweep_solve(net, chain_loads);
    st.ell[1] *= 0.5;  // below |S|^2 / v on the root line
    st.ell[2] += 0.1;
    CHECK(code_of([&] { (void)construct_point(net, st); }) == Errc::NoEligiblePath);
}

TEST_CASE("construction on a chain relaxed at the leaf line", "[exactness]") {
    const auto net = two_line_chain();
    const std::vector<double> excess{0.0, 0.0, 0.05};
    const auto st = sweep_solve(net, chain_loads, {}, excess);
    const auto tr = construct_point(net, st);
    REQUIRE(tr.m == 2);
    CHECK(tr.leaf.value == 2);
    CHECK(tr.path == std::vector<std::size_t>{1, 2});
    const auto& out = tr.output;

    // currents on the path are tight against the original voltages
    CHECK_THAT(out.ell[2], WithinAbs(std::norm(out.S[2]) / st.v[2], 1e-15));
    CHECK_THAT(out.ell[1], WithinAbs(std::norm(out.S[1]) / st.v[1], 1e-15));

    // the upstream flow grows by z_2 times the removed current
    const Complex z2{0.02, 0.01};
    const Complex expected = z2 * (st.ell[2] - out.ell[2]);
    CHECK(std::abs(tr.delta_S[1] - expected) <= 1e-14);
    CHECK(tr.delta_S[1].real() > 0.0);
    CHECK(tr.delta_S[1].imag() > 0.0);
    CHECK(tr.delta_S[0].real() > 0.0);
    CHECK(tr.delta_S[0].imag() > 0.0);
    CHECK(out.S[2] == st.S[2]);

    CHECK(tr.objective_after < tr.objective_before);
    CHECK_THAT(tr.objective_before - tr.objective_after, WithinAbs(tr.delta_S[0].real(), 1e-14));
    CHECK(out.s == st.s);
    CHECK(linear_residual(net, out) <= 1e-13);
    for (double dv : tr.delta_v) CHECK(dv >= 0.0);
    CHECK(tr.delta_v[0] == 0.0);
}

TEST_CASE("upstream flow changes follow the recorded proof matrices", "[exactness]") {
    const auto net = build_network({{BusId{1}, BusId{0}, 0.01, 0.02},
                                    {BusId{2}, BusId{1}, 0.02, 0.01},
                                    {BusId{3}, BusId{2}, 0.015, 0.015},
                                    {BusId{4}, BusId{3}, 0.01, 0.03}});
    const std::vector<Complex> s{{0, 0}, {-0.1, -0.1}, {-0.2, -0.05}, {0.1, -0.1}, {-0.2, -0.1}};
    const auto st = sweep_solve(net, s, {}, std::vector<double>{0, 0, 0, 0, 0.02});
    const auto tr = construct_point(net, st);
    REQUIRE(tr.m == 4);
    REQUIRE(tr.B.size() == 4);
    for (std::size_t k = 1; k < tr.m; ++k) {
        const Eigen::Vector2d dk(tr.delta_S[k].real(), tr.delta_S[k].imag());
        const Eigen::Vector2d up = tr.B[k - 1] * dk;
        CHECK_THAT(up[0], WithinAbs(tr.delta_S[k - 1].real(), 1e-9));
        CHECK_THAT(up[1], WithinAbs(tr.delta_S[k - 1].imag(), 1e-9));
    }
}

TEST_CASE("construction picks the smallest leaf and the first relaxed line", "[exactness]") {
    // star of two chains: 0-1-2 and 0-3-4
    const auto net = build_network({{BusId{1}, BusId{0}, 0.01, 0.01},
                                    {BusId{2}, BusId{1}, 0.01, 0.01},
                                    {BusId{3}, BusId{0}, 0.01, 0.01},
                                    {BusId{4}, BusId{3}, 0.01, 0.01}});
    const std::vector<Complex> s{{0, 0}, {-0.1, 0}, {-0.1, 0}, {-0.1, 0}, {-0.1, 0}};
    const auto st = sweep_solve(net, s, {}, std::vector<double>{0, 0, 0, 0.01, 0.01});
    const auto tr = construct_point(net, st);
    CHECK(tr.leaf.value == 4);
    CHECK(tr.m == 1);
    CHECK(tr.path == std::vector<std::size_t>{3});
}

TEST_CASE("construction properties on random instances", "[exactness][property]") {
    testing::InstanceGenerator gen(42);
    int with_c1 = 0, constructed = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const auto net = gen.random_network(2, 30, 1e-3, 5e-2);
        std::vector<Complex> s(net.bus_count());
        for (std::size_t i = 1; i < s.size(); ++i) s[i] = {gen.uniform(-0.2, 0.15), gen.uniform(-0.2, 0.15)};
        std::vector<double> excess(net.bus_count(), 0.0);
        for (std::size_t i = 1; i < s.size(); ++i) {
            if (gen.coin(0.3)) excess[i] = gen.log_uniform(1e-5, 1e-1);
        }
        FlowState st;
        try {
            st = sweep_solve(net, s, {}, excess);
        } catch (const NotConvergedError&) {
            continue;
        }
        ConstructionTrace tr;
        try {
            tr = construct_point(net, st);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::NoViolation);
            continue;
        }
        ++constructed;
        const auto& out = tr.output;

        // s unchanged and the linear equations still hold
        CHECK(out.s == st.s);
        CHECK(linear_residual(net, out) <= 1e-10);

        // currents stay at or above |S'|^2 / v with the original voltages; the sweep
        // input is itself tight only to its tolerance, so no line may get worse
        for (std::size_t i = 1; i < net.bus_count(); ++i) {
            const double before = std::min(0.0, st.ell[i] - std::norm(st.S[i]) / st.v[i]);
            CHECK(out.ell[i] - std::norm(out.S[i]) / st.v[i] >= before - 1e-15);
        }

        // voltages stay below the linear approximation
        const auto vhat = hat_v(net, s);
        for (std::size_t i = 1; i < net.bus_count(); ++i) CHECK(out.v[i] <= vhat[i] + 1e-9);
        if (in_svolt(net, s).inside) {
            for (std::size_t i = 1; i < net.bus_count(); ++i) CHECK(out.v[i] <= net.vmax(i) + 1e-9);
        }

        if (check_c1(net, bounds_at(s)).holds) {
            ++with_c1;
            for (std::size_t k = 0; k < tr.m; ++k) {
                CHECK(tr.delta_S[k].real() > 0.0);
                CHECK(tr.delta_S[k].imag() > 0.0);
            }
            for (double dv : tr.delta_v) CHECK(dv >= -1e-15);
            CHECK(tr.objective_after < tr.objective_before);
        }
    }
    CHECK(constructed > 150);
    CHECK(with_c1 > 50);
}

TEST_CASE("objective values", "[exactness]") {
    const auto net = two_line_chain();
    CHECK(objective_value(FlowState::zero(net), Objective::losses(net)) == 0.0);
    const auto st = sweep_solve(net, chain_loads);
    CHECK_THAT(objective_value(st, Objective::losses(net)), WithinAbs(line_losses(net, st), 1e-9));
    Objective quad{{QuadraticCost{2.0, 1.0}, LinearCost{0.0}, LinearCost{3.0}}};
    const double p0 = st.s0.real();
    CHECK_THAT(objective_value(st, quad), WithinAbs(2.0 * p0 * p0 + p0 + 3.0 * chain_loads[2].real(), 1e-15));
    CHECK(code_of([&] { (void)objective_value(st, Objective{{LinearCost{1.0}}}); }) == Errc::InvalidArgument);
}

TEST_CASE("solution distance", "[exactness]") {
    const auto net = two_line_chain();
    const auto a = sweep_solve(net, chain_loads);
    CHECK(solution_distance(a, a) == 0.0);
    auto b = a;
    b.v[2] += 0.125;
    CHECK(solution_distance(a, b) == 0.125);
    b = a;
    b.s0 += Complex{0.0, -0.25};
    CHECK(solution_distance(a, b) == 0.25);
    auto c = a;
    c.v.pop_back();
    CHECK(code_of([&] { (void)solution_distance(a, c); }) == Errc::InvalidArgument);
}
