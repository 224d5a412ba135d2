#include <doctest.h>

#include <cmath>

#include "dualflow/convexfun.hpp"
#include "support.hpp"

using namespace dualflow;

namespace {

double rel(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::max(std::fabs(a), std::fabs(b))); }

// Central differences of a scalar function.
template <class F>
Vec fd_gradient(F f, const Vec& x, double h_rel = 1e-6) {
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = h_rel * std::max(1.0, std::fabs(x(i)));
        Vec p = x, m = x;
        p(i) += h;
        m(i) -= h;
        g(i) = (f(p) - f(m)) / (2 * h);
    }
    return g;
}

double rel_err(const Vec& a, const Vec& b) { return (a - b).lpNorm<Eigen::Infinity>() / std::max(1.0, b.lpNorm<Eigen::Infinity>()); }

}  // namespace

TEST_SUITE("convexfun") {
    TEST_CASE("KL transforms") {
        const ThermoFunction kl = ThermoFunction::kl_unit(2);
        CHECK(kl.to_dual(Vec::Ones(2)).norm() == 0.0);
        const Vec y = legendre_to_dual(kl, (Vec(2) << 2.0 / 3, 4.0 / 3).finished());
        CHECK(y(0) == doctest::Approx(std::log(2.0 / 3)).epsilon(1e-15));
        CHECK(y(1) == doctest::Approx(std::log(4.0 / 3)).epsilon(1e-15));
        CHECK_THROWS_AS(kl.to_dual((Vec(2) << 1, 0).finished()), InvalidArgument);
        CHECK_THROWS_AS(kl.to_dual(Vec::Ones(3)), DimensionError);
        CHECK_THROWS_AS(ThermoFunction::kl((Vec(2) << 1, -1).finished()), InvalidArgument);
    }

    TEST_CASE("KL divergence values") {
        const ThermoFunction kl = ThermoFunction::kl_unit(2);
        const Vec x = (Vec(2) << 2.0 / 3, 4.0 / 3).finished();
        const Vec xr = (Vec(2) << 1.0, 2.0).finished();
        const long double expected = 2.0L * std::log(2.0L / 3.0L) + 1.0L;
        CHECK(std::fabs(bregman_vertex(kl, x, xr) - static_cast<double>(expected)) < 1e-15);
        CHECK(bregman_vertex(kl, x, xr) == doctest::Approx(0.18906).epsilon(1e-4));
        CHECK(bregman_vertex(kl, x, x) == 0.0);
        // Independent of the reference x°.
        const ThermoFunction shifted = ThermoFunction::kl((Vec(2) << 0.3, 7.0).finished());
        CHECK(std::fabs(shifted.bregman(x, xr) - kl.bregman(x, xr)) < 1e-15);
    }

    TEST_CASE("KL Legendre identities at random points") {
        std::mt19937_64 rng(21);
        for (int trial = 0; trial < 300; ++trial) {
            const int n = 1 + trial % 6;
            const ThermoFunction fn = ThermoFunction::kl(support::random_positive(rng, n, 0.2, 5.0));
            const Vec x = support::random_positive(rng, n, 1e-3, 10.0);
            const Vec y = fn.to_dual(x);
            CHECK((fn.to_primal(y) - x).lpNorm<Eigen::Infinity>() < 1e-12);
            CHECK(rel(fn.primal(x) + fn.dual(y), x.dot(y)) < 1e-10);
            CHECK(rel_err(fn.to_dual(x), fd_gradient([&](const Vec& v) { return fn.primal(v); }, x, 1e-7)) < 1e-6);
            CHECK(rel_err(fn.to_primal(y), fd_gradient([&](const Vec& v) { return fn.dual(v); }, y)) < 1e-6);
            const Mat gx = fn.hessian_primal(x), gy = fn.hessian_dual(y);
            CHECK((gx * gy - Mat::Identity(n, n)).lpNorm<Eigen::Infinity>() < 1e-12);
            const Vec x2 = support::random_positive(rng, n, 1e-3, 10.0);
            CHECK(fn.bregman(x2, x) >= 0.0);
        }
    }

    TEST_CASE("quadratic thermodynamic function") {
        Mat m(2, 2);
        m << 2, 0.5, 0.5, 1;
        const ThermoFunction q = ThermoFunction::quadratic(m);
        const Vec x = (Vec(2) << 0.3, -1.2).finished();
        const Vec y = q.to_dual(x);
        CHECK((q.to_primal(y) - x).norm() < 1e-14);
        CHECK(rel(q.primal(x) + q.dual(y), x.dot(y)) < 1e-14);
        CHECK((q.hessian_primal(x) * q.hessian_dual(y) - Mat::Identity(2, 2)).norm() < 1e-14);
        Mat bad(2, 2);
        bad << 1, 2, 2, 1;
        CHECK_THROWS_AS(ThermoFunction::quadratic(bad), InvalidArgument);
    }

    TEST_CASE("cosh dissipation closed form") {
        const DissipationFunction fn = DissipationFunction::cosh(Vec::Constant(1, 2 * std::sqrt(2.0)));
        const DissipationPair p = dissipation_pair_from_force(fn, Vec::Constant(1, std::log(2.0)));
        CHECK(p.flux(0) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(p.psi_star == doctest::Approx(6 - 4 * std::sqrt(2.0)).epsilon(1e-14));
        CHECK(p.psi_star == doctest::Approx(0.34315).epsilon(1e-4));
        const long double u = 1.0L / (2.0L * std::sqrt(2.0L));
        const long double psi = 2.0L * 2.0L * std::sqrt(2.0L) * (u * std::asinh(u) - (std::sqrt(1.0L + u * u) - 1.0L));
        CHECK(std::fabs(p.psi - static_cast<double>(psi)) < 1e-15);
        CHECK(p.psi == doctest::Approx(0.35000).epsilon(1e-4));
        CHECK(p.pairing == doctest::Approx(std::log(2.0)).epsilon(1e-15));
        CHECK(rel(p.psi + p.psi_star, p.pairing) < 1e-14);

        const DissipationPair z = dissipation_pair_from_force(fn, Vec::Zero(1));
        CHECK(z.flux(0) == 0.0);
        CHECK(z.psi == 0.0);
        CHECK(z.psi_star == 0.0);
        CHECK_THROWS_AS(DissipationFunction::cosh(Vec::Zero(1)), InvalidArgument);
    }

    TEST_CASE("stable asinh matches extended precision") {
        for (double u : {1e-12, 1e-8, 3e-5, 9.9e-5, 1e-4, 0.3, 1.0, 12.0, 1e8, 1e200}) {
            const long double ref = std::asinh(static_cast<long double>(u));
            CHECK(std::fabs(stable_asinh(u) - static_cast<double>(ref)) <= 2e-16 * static_cast<double>(ref));
            CHECK(stable_asinh(-u) == -stable_asinh(u));
        }
    }

    TEST_CASE("dissipation identities at random points") {
        std::mt19937_64 rng(33);
        for (int trial = 0; trial < 300; ++trial) {
            const int n = 1 + trial % 5;
            const Vec w = support::random_positive(rng, n, 0.05, 20.0);
            const DissipationFunction fn = trial % 2 ? DissipationFunction::cosh(w) : DissipationFunction::quadratic(w);
            const Vec f = support::random_normal(rng, n, 3.0);
            const Vec j = fn.to_flux(f);
            CHECK(rel_err(fn.to_force(j), f) < 1e-12);
            CHECK(rel(fn.primal(j) + fn.dual(f), j.dot(f)) < 1e-10);
            CHECK(j.dot(f) >= 0.0);
            CHECK(std::fabs(fn.dual(-f) - fn.dual(f)) <= 1e-14 * fn.dual(f));
            CHECK((fn.to_flux(-f) + j).lpNorm<Eigen::Infinity>() == 0.0);
            CHECK(rel_err(j, fd_gradient([&](const Vec& v) { return fn.dual(v); }, f)) < 1e-6);
            CHECK(rel_err(fn.to_force(j), fd_gradient([&](const Vec& v) { return fn.primal(v); }, j)) < 1e-6);
            const Vec hd = fn.hessian_dual(f), hp = fn.hessian_primal(j);
            CHECK((hd.cwiseProduct(hp) - Vec::Ones(n)).lpNorm<Eigen::Infinity>() < 1e-10);
            CHECK(rel_err(hd, fd_gradient([&](const Vec& v) { return fn.to_flux(v).sum(); }, f)) < 1e-6);
            CHECK(std::fabs(fn.bregman(j, f)) <= 1e-12 * (1 + fn.dual(f)));
            const Vec f2 = support::random_normal(rng, n, 3.0);
            CHECK(fn.bregman(j, f2) >= -1e-12 * (1 + fn.dual(f2)));
            CHECK(fn.bregman(Vec::Zero(n), f2) == doctest::Approx(fn.dual(f2)));
        }
    }

    TEST_CASE("cosh dissipation is 1-coercive along rays") {
        const DissipationFunction fn = DissipationFunction::cosh((Vec(3) << 0.5, 2.0, 1.0).finished());
        const Vec dir = (Vec(3) << 0.3, -1.0, 0.7).finished();
        double prev = 0.0;
        for (double t = 0.5; t < 40; t *= 1.5) {
            const double ratio = fn.dual(t * dir) / (t * dir.norm());
            CHECK(ratio > prev);
            prev = ratio;
        }
    }

    TEST_CASE("log-mean quadratic dissipation reproduces the mass-action pair") {
        std::mt19937_64 rng(4);
        for (int trial = 0; trial < 100; ++trial) {
            const Vec jp = support::random_positive(rng, 4, 0.01, 100.0);
            const Vec jm = support::random_positive(rng, 4, 0.01, 100.0);
            const Vec f = (jp.array() / jm.array()).log();
            const DissipationFunction q = DissipationFunction::log_mean(jp, jm);
            const DissipationFunction c = DissipationFunction::cosh(2.0 * (jp.array() * jm.array()).sqrt());
            CHECK(rel_err(q.to_flux(f), jp - jm) < 1e-12);
            CHECK(rel_err(c.to_flux(f), jp - jm) < 1e-12);
        }
        const DissipationFunction lim = DissipationFunction::log_mean(Vec::Constant(1, 2.5), Vec::Constant(1, 2.5));
        CHECK(lim.to_flux(Vec::Ones(1))(0) == 2.5);
    }
}
