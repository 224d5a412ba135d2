#include <doctest.h>

#include <cmath>

#include "dualflow/dynamics.hpp"
#include "dualflow/kinetics.hpp"
#include "support.hpp"

using namespace dualflow;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

IntegratorOptions on_grid(double t_end, int points) {
    IntegratorOptions o;
    o.output_times = uniform_grid(t_end, points);
    return o;
}

double kl(const Vec& x, const Vec& r) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) d += x(i) * std::log(x(i) / r(i)) - x(i) + r(i);
    return d;
}

// Ψ + Ψ* for A⇄B (k⁺=2, k⁻=1) on the exact trajectory x_A = 2/3 + e^{−3t}/3.
double ab_dissipation(double t) {
    const double xa = 2.0 / 3.0 + std::exp(-3.0 * t) / 3.0, xb = 2.0 - xa;
    const double jp = 2.0 * xa, jm = xb;
    const double w = 2.0 * std::sqrt(jp * jm), f = std::log(jp / jm), u = (jp - jm) / w;
    const double psi_star = 2.0 * w * (std::cosh(f / 2) - 1.0);
    const double psi = 2.0 * w * (u * std::asinh(u) - (std::sqrt(1.0 + u * u) - 1.0));
    return psi + psi_star;
}

void check_ledger_identities(const Trajectory& traj) {
    for (const LedgerRow& row : traj.ledger) {
        CHECK(std::fabs(row.epr - (row.psi + row.psi_star)) <= 1e-9 * std::max(1.0, row.epr));
        CHECK(row.pepr >= 0.0);
        CHECK(row.epr >= row.pepr * (1 - 1e-12) - 1e-300);
    }
}

}  // namespace

TEST_SUITE("dynamics") {
    TEST_CASE("linear relaxation matches the closed form") {
        const ReactionNetwork net = support::ab();
        IntegratorOptions o = on_grid(5.0, 501);
        o.reference = v2(1, 2);
        const Trajectory traj = simulate(net, Vec::Ones(2), 5.0, o);
        REQUIRE(traj.size() == 501);
        double worst = 0.0;
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const double xa = 2.0 / 3.0 + std::exp(-3.0 * traj.times[k]) / 3.0;
            worst = std::max(worst, std::fabs(traj.states[k](0) - xa));
            CHECK(std::fabs(traj.states[k].sum() - 2.0) < 1e-12);
            CHECK(std::fabs(traj.ledger[k].divergence - kl(traj.states[k], v2(1, 2))) < 1e-14);
            if (k > 0) CHECK(traj.ledger[k].divergence <= traj.ledger[k - 1].divergence);
        }
        CHECK(worst < 1e-8);
        CHECK(conservation_drift(traj) < 1e-12);
        check_ledger_identities(traj);
    }

    TEST_CASE("detailed-balanced start gives a constant trajectory") {
        const Trajectory traj = simulate(support::ab(), v2(2.0 / 3, 4.0 / 3), 10.0, on_grid(10.0, 11));
        for (const Vec& x : traj.states) CHECK((x - v2(2.0 / 3, 4.0 / 3)).norm() < 1e-8);
        const Trajectory bru = simulate(support::brusselator_eq(), v2(1, 3), 10.0, on_grid(10.0, 11));
        for (const Vec& x : bru.states) CHECK((x - v2(1, 3)).norm() < 1e-8);
    }

    TEST_CASE("constant schedule equals static simulation") {
        const ReactionNetwork net = support::brusselator();
        const IntegratorOptions o = on_grid(20.0, 201);
        const Trajectory a = simulate(net, v2(1, 4), 20.0, o);
        const Trajectory b = simulate_timedep(net, v2(1, 4), 20.0, RateSchedule::constant(net.kplus(), net.kminus()), o);
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) CHECK((a.states[k] - b.states[k]).lpNorm<Eigen::Infinity>() < 1e-9);
    }

    TEST_CASE("brusselator relaxes onto a sustained oscillation") {
        const ReactionNetwork net = support::brusselator();
        // Linearization at (1, 31/11): trace > 0 and det > 0 make it an unstable focus.
        const double x2 = 31.0 / 11.0;
        const double a = -4.0 + 2.0 * x2 - 0.3, b = 1.1, c = 3.0 - 2.0 * x2 + 0.3, d = -1.1;
        CHECK(a + d > 0.0);
        CHECK(a * d - b * c > 0.0);
        CHECK((a + d) * (a + d) < 4.0 * (a * d - b * c));

        const Trajectory traj = simulate(net, v2(1, 4), 40.0, on_grid(40.0, 4001));
        int sign_changes = 0;
        double late_lo = 1e300, late_hi = -1e300;
        for (std::size_t k = 1; k < traj.size(); ++k) {
            sign_changes += (traj.states[k - 1](0) - 1.0) * (traj.states[k](0) - 1.0) < 0;
            if (traj.times[k] > 30.0) {
                late_lo = std::min(late_lo, traj.states[k](0));
                late_hi = std::max(late_hi, traj.states[k](0));
            }
            CHECK(traj.states[k].maxCoeff() < 20.0);
        }
        CHECK(sign_changes >= 6);
        CHECK(late_hi - late_lo > 0.1);
        check_ledger_identities(traj);
    }

    TEST_CASE("halving the tolerance changes the final state by less than the coarse tolerance") {
        for (const ReactionNetwork& net : {support::brusselator_eq(), support::triangle(), support::abc()}) {
            IntegratorOptions coarse = on_grid(20.0, 2);
            IntegratorOptions fine = coarse;
            fine.rtol /= 2;
            fine.atol /= 2;
            const Vec x0 = Vec::LinSpaced(net.num_species(), 0.5, 3.0);
            const Vec a = simulate(net, x0, 20.0, coarse).states.back();
            const Vec b = simulate(net, x0, 20.0, fine).states.back();
            CHECK((a - b).lpNorm<Eigen::Infinity>() < coarse.rtol * a.lpNorm<Eigen::Infinity>() + coarse.atol);
        }
    }

    TEST_CASE("rate schedule interpolation") {
        RateSchedule s;
        s.times = {0.0, 1.0};
        s.kplus = {Vec::Constant(1, 1.0), Vec::Constant(1, 3.0)};
        s.kminus = {Vec::Constant(1, 2.0), Vec::Constant(1, 2.0)};
        s.validate(1);
        Vec kp, km;
        s.at(0.25, kp, km);
        CHECK(kp(0) == doctest::Approx(1.5));
        s.at(-1.0, kp, km);
        CHECK(kp(0) == 1.0);
        s.at(5.0, kp, km);
        CHECK(kp(0) == 3.0);
        CHECK_THROWS_AS(s.validate(2), InvalidArgument);
        s.times = {1.0, 0.0};
        CHECK_THROWS_AS(s.validate(1), InvalidArgument);
    }

    TEST_CASE("simpson quadrature") {
        const std::vector<double> t = {0.0, 0.1, 0.35, 0.5, 0.9, 1.0, 1.6};
        std::vector<double> y;
        for (double s : t) y.push_back(3 * s * s - 2 * s + 1);
        const double exact = 1.6 * 1.6 * 1.6 - 1.6 * 1.6 + 1.6;
        CHECK(simpson(t, y) == doctest::Approx(exact).epsilon(1e-13));
        const std::vector<double> g = uniform_grid(M_PI, 201);
        std::vector<double> sy;
        for (double s : g) sy.push_back(std::sin(s));
        CHECK(std::fabs(simpson(g, sy) - 2.0) < 1e-8);
    }

    TEST_CASE("energy-dissipation balance for a linear edge") {
        const ReactionNetwork net = support::ab();
        const Trajectory traj = simulate(net, Vec::Ones(2), 5.0, on_grid(5.0, 2001));
        const DeGiorgiReport r = degiorgi_ledger(traj, net, v2(1, 2));
        const double xa = 2.0 / 3.0 + std::exp(-15.0) / 3.0;
        const double lhs = kl(Vec::Ones(2), v2(1, 2)) - kl(v2(xa, 2 - xa), v2(1, 2));
        // Midpoint rule on a fine grid of the exact trajectory.
        const int n = 400000;
        long double rhs = 0.0L;
        for (int i = 0; i < n; ++i) rhs += ab_dissipation(5.0 * (i + 0.5) / n);
        rhs *= 5.0L / n;
        CHECK(std::fabs(r.lhs - lhs) < 1e-9);
        CHECK(std::fabs(r.rhs - static_cast<double>(rhs)) < 1e-7);
        CHECK(r.balanced);
        CHECK(r.monotone);
        CHECK(std::fabs(r.gap) < std::max(1e-6, 1e-4 * std::fabs(r.lhs)));

        const Trajectory t0 = simulate(net, Vec::Ones(2), 1e-6, on_grid(1e-6, 3));
        const DeGiorgiReport r0 = degiorgi_ledger(t0, net, v2(1, 2));
        CHECK(std::fabs(r0.lhs) < 1e-5);
        CHECK(std::fabs(r0.rhs) < 1e-5);
    }

    TEST_CASE("energy-dissipation balance for the equilibrium brusselator") {
        const ReactionNetwork net = support::brusselator_eq();
        const Trajectory traj = simulate(net, v2(1, 4), 20.0, on_grid(20.0, 2001));
        const DeGiorgiReport r = degiorgi_ledger(traj, net, v2(1, 3));
        CHECK(r.balanced);
        CHECK(r.monotone);
        CHECK(std::fabs(r.gap) < std::max(1e-6, 1e-4 * std::fabs(r.lhs)));
        CHECK_THROWS_AS(degiorgi_ledger(traj, net, v2(1, 2)), InvalidArgument);
        const Trajectory ne = simulate(support::brusselator(), v2(1, 4), 1.0, on_grid(1.0, 11));
        CHECK_THROWS_AS(degiorgi_ledger(ne, support::brusselator(), v2(1, 3)), InvalidArgument);
    }

    TEST_CASE("KL divergence is a Lyapunov function of rLDG networks") {
        std::mt19937_64 rng(31);
        for (int trial = 0; trial < 10; ++trial) {
            const ReactionNetwork net = support::random_graph(rng);
            const Vec x0 = support::random_positive(rng, net.num_species());
            const Vec xs = steady_state(net, x0);
            const Trajectory traj = simulate(net, x0, 5.0, on_grid(5.0, 201));
            const LyapunovReport rep = lyapunov_monitor(traj, net, xs);
            CHECK(rep.non_increasing());
            CHECK(rep.reference_cb_residual < 1e-8);
            CHECK(conservation_drift(traj) < 1e-6);
            check_ledger_identities(traj);
        }
    }

    TEST_CASE("KL divergence to a complex-balanced state is monotone") {
        const ReactionNetwork net = support::triangle();
        const Vec xs = steady_state(net, Vec::Ones(3));
        IntegratorOptions o = on_grid(10.0, 1001);
        o.reference = xs;
        const Trajectory traj = simulate(net, (Vec(3) << 2.0, 0.5, 0.25).finished(), 10.0, o);
        const LyapunovReport rep = lyapunov_monitor(traj, net, xs);
        CHECK(rep.non_increasing());
        for (std::size_t k = 1; k < traj.size(); ++k) CHECK(traj.ledger[k].divergence <= traj.ledger[k - 1].divergence + 1e-14);
    }

    TEST_CASE("conservation along hypergraph dynamics") {
        const ReactionNetwork net = support::abc();
        const Trajectory traj = simulate(net, Vec::Ones(3), 5.0, on_grid(5.0, 501));
        CHECK(conservation_drift(traj) < 1e-6);
        CHECK(traj.ledger.front().conserved.size() == 2);
        const Vec end = traj.states.back();
        CHECK((end - (Vec(3) << 0.78078, 0.78078, 1.21922).finished()).lpNorm<Eigen::Infinity>() < 1e-4);
    }

    TEST_CASE("approaching the boundary halts with a partial trajectory") {
        const ReactionNetwork net = parse_network("species A\nreaction r1: A <-> 0 ; kf=1e6 kr=1e-30\n");
        bool halted = false;
        try {
            simulate(net, Vec::Ones(1), 1.0, on_grid(1.0, 11));
        } catch (const BoundaryHalt& h) {
            halted = true;
            CHECK(!h.partial().empty());
            CHECK(h.partial().times.front() == 0.0);
            for (const Vec& x : h.partial().states) CHECK(x(0) > 0.0);
        }
        CHECK(halted);
    }

    TEST_CASE("invalid inputs") {
        const ReactionNetwork net = support::ab();
        CHECK_THROWS_AS(simulate(net, v2(1, 0), 1.0), InvalidArgument);
        CHECK_THROWS_AS(simulate(net, Vec::Ones(3), 1.0), DimensionError);
        CHECK_THROWS_AS(simulate(net, Vec::Ones(2), -1.0), InvalidArgument);
        CHECK_THROWS_AS(uniform_grid(1.0, 1), InvalidArgument);
    }
}
