#include <doctest.h>

#include <quadmath.h>

#include "dualflow/convexfun.hpp"
#include "support.hpp"

using namespace dualflow;

namespace {

// Ψ(j) + Ψ*(f′) − ⟨j, f′⟩ summed term by term in quadruple precision.
__float128 edge_bregman_q(const Vec& w, const Vec& j, const Vec& f) {
    __float128 psi = 0, psi_star = 0, pair = 0;
    for (Eigen::Index e = 0; e < w.size(); ++e) {
        const __float128 we = w(e), je = j(e), fe = f(e);
        const __float128 u = je / we;
        psi += 2 * we * (u * asinhq(u) - (sqrtq(1 + u * u) - 1));
        psi_star += 2 * we * (coshq(fe / 2) - 1);
        pair += je * fe;
    }
    return psi + psi_star - pair;
}

}  // namespace

TEST_SUITE("convexfun") {
    TEST_CASE("edge Bregman divergence against quadruple precision") {
        std::mt19937_64 rng(77);
        for (int trial = 0; trial < 500; ++trial) {
            const int n = 1 + trial % 4;
            const Vec w = support::random_positive(rng, n, 0.1, 10.0);
            const Vec j = support::random_normal(rng, n, 2.0);
            const Vec f = support::random_normal(rng, n, 2.0);
            const DissipationFunction fn = DissipationFunction::cosh(w);
            const double got = bregman_edge(fn, j, f);
            const double want = static_cast<double>(edge_bregman_q(w, j, f));
            const double scale = fn.primal(j) + fn.dual(f) + std::fabs(j.dot(f));
            CHECK(got >= 0.0);
            CHECK(std::fabs(got - want) <= 1e-13 * (1.0 + scale));
        }
    }
}
