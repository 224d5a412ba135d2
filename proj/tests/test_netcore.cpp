#include <doctest.h>

#include <boost/rational.hpp>
#include <numeric>

#include "dualflow/netcore.hpp"
#include "support.hpp"

using namespace dualflow;

namespace {

using Q = boost::rational<long long>;
using QMat = std::vector<std::vector<Q>>;

// Reduced row echelon form over the rationals; returns pivot columns.
std::vector<int> rational_rref(QMat& a) {
    std::vector<int> pivots;
    const int rows = static_cast<int>(a.size());
    const int cols = rows ? static_cast<int>(a[0].size()) : 0;
    int r = 0;
    for (int c = 0; c < cols && r < rows; ++c) {
        int p = r;
        while (p < rows && a[p][c].numerator() == 0) ++p;
        if (p == rows) continue;
        std::swap(a[p], a[r]);
        const Q piv = a[r][c];
        for (auto& v : a[r]) v /= piv;
        for (int i = 0; i < rows; ++i) {
            if (i == r || a[i][c].numerator() == 0) continue;
            const Q f = a[i][c];
            for (int k = 0; k < cols; ++k) a[i][k] -= f * a[r][k];
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

QMat to_q(const IntMat& m) {
    QMat a(static_cast<std::size_t>(m.rows()), std::vector<Q>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) a[i][j] = Q(m(i, j));
    return a;
}

// Rank over the rationals.
int rational_rank(const IntMat& m) {
    QMat a = to_q(m);
    return static_cast<int>(rational_rref(a).size());
}

// Rational nullspace basis of m as integer columns.
IntMat rational_kernel(const IntMat& m) {
    QMat a = to_q(m);
    const auto piv = rational_rref(a);
    const int cols = static_cast<int>(m.cols());
    std::vector<int> free;
    for (int c = 0; c < cols; ++c)
        if (std::find(piv.begin(), piv.end(), c) == piv.end()) free.push_back(c);
    IntMat k(cols, static_cast<Eigen::Index>(free.size()));
    for (std::size_t f = 0; f < free.size(); ++f) {
        std::vector<Q> v(static_cast<std::size_t>(cols), Q(0));
        v[free[f]] = 1;
        for (std::size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -a[r][free[f]];
        long long l = 1;
        for (const Q& q : v) l = std::lcm(l, q.denominator());
        for (int c = 0; c < cols; ++c) k(c, f) = (v[c] * l).numerator();
    }
    return k;
}

bool same_span(const IntMat& a, const IntMat& b) {
    if (a.cols() != b.cols()) return false;
    if (a.cols() == 0) return true;
    IntMat both(a.rows(), a.cols() + b.cols());
    both << a, b;
    return rational_rank(a) == a.cols() && rational_rank(b) == b.cols() && rational_rank(both) == a.cols();
}

IntMat mat(std::initializer_list<std::initializer_list<std::int64_t>> rows) {
    IntMat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (auto v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

void check_homology(const ReactionNetwork& net) {
    CHECK((net.stoich() - net.gamma() * net.incidence()).cwiseAbs().maxCoeff() == 0);
    for (Eigen::Index e = 0; e < net.incidence().cols(); ++e) {
        CHECK(net.incidence().col(e).sum() == 0);
        CHECK(net.incidence().col(e).cwiseAbs().sum() == 2);
    }
    const int rank = rational_rank(net.stoich());
    CHECK(net.stoich_rank() == rank);
    CHECK(net.num_cycles() == net.num_edges() - rank);
    CHECK(net.num_conserved() == net.num_species() - rank);
    if (net.num_conserved() > 0) CHECK((net.cons_basis() * net.stoich()).cwiseAbs().maxCoeff() == 0);
    if (net.num_cycles() > 0) CHECK((net.stoich() * net.cycle_basis()).cwiseAbs().maxCoeff() == 0);
    CHECK(same_span(net.cycle_basis(), rational_kernel(net.stoich())));
    CHECK(same_span(IntMat(net.cons_basis().transpose()), rational_kernel(IntMat(net.stoich().transpose()))));
}

}  // namespace

TEST_SUITE("netcore") {
    TEST_CASE("brusselator matrices") {
        const ReactionNetwork net = support::brusselator();
        CHECK(net.num_species() == 2);
        CHECK(net.num_hypervertices() == 5);
        CHECK(net.num_edges() == 3);
        CHECK(net.gamma() == mat({{0, 1, 0, 2, 3}, {0, 0, 1, 1, 0}}));
        CHECK(net.incidence() == mat({{1, 0, 0}, {-1, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}));
        CHECK(net.stoich() == mat({{-1, 1, -1}, {0, -1, 1}}));
        CHECK(net.num_conserved() == 0);
        REQUIRE(net.num_cycles() == 1);
        CHECK(net.cycle_basis() == mat({{0}, {1}, {1}}));
        check_homology(net);
    }

    TEST_CASE("graph special case") {
        const ReactionNetwork net = support::ab();
        CHECK(net.is_graph());
        CHECK(net.stoich() == mat({{1}, {-1}}));
        CHECK(net.stoich() == net.incidence());
        CHECK(net.cons_basis() == mat({{1, 1}}));
    }

    TEST_CASE("A+B <-> C") {
        const ReactionNetwork net = support::abc();
        CHECK(net.stoich() == mat({{1}, {1}, {-1}}));
        CHECK(net.cons_basis() == mat({{1, 0, 1}, {0, 1, 1}}));
        CHECK(net.num_cycles() == 0);
        CHECK_FALSE(net.is_graph());
    }

    TEST_CASE("kernel of a zero matrix is the identity") {
        const IntMat k = kernel_cols(IntMat::Zero(3, 4));
        CHECK(k == IntMat::Identity(4, 4));
        CHECK(kernel_cols(mat({{1, 2}, {3, 4}})).cols() == 0);
    }

    TEST_CASE("kernel columns against a rational oracle") {
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<int> entry(-3, 3), dim(1, 6);
        for (int trial = 0; trial < 200; ++trial) {
            IntMat m(dim(rng), dim(rng));
            for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = entry(rng);
            const IntMat k = kernel_cols(m);
            CHECK(k.cols() == m.cols() - rational_rank(m));
            if (k.cols() > 0) CHECK((m * k).cwiseAbs().maxCoeff() == 0);
            CHECK(same_span(k, rational_kernel(m)));
        }
    }

    TEST_CASE("random hypergraphs satisfy the exact homology invariants") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 50; ++trial) check_homology(support::random_hypergraph(rng));
    }

    TEST_CASE("random graphs conserve total mass") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            const ReactionNetwork net = support::random_graph(rng);
            CHECK(net.is_graph());
            CHECK(net.stoich().colwise().sum().cwiseAbs().maxCoeff() == 0);
            CHECK(net.num_conserved() == 1);
            CHECK(net.cons_basis() == IntMat::Ones(1, net.num_species()));
            check_homology(net);
        }
    }

    TEST_CASE("discrete operators") {
        const ReactionNetwork net = support::brusselator();
        CHECK(grad(net, Vec::Unit(2, 0)) == Vec((Vec(3) << -1, 1, -1).finished()));
        std::mt19937_64 rng(1);
        for (int i = 0; i < 20; ++i) {
            const Vec y = support::random_normal(rng, 2);
            CHECK(curl(net, grad(net, y)).cwiseAbs().maxCoeff() < 1e-14);
            const Vec z = support::random_normal(rng, 1);
            CHECK(div(net, curl_adj(net, z)).cwiseAbs().maxCoeff() < 1e-14);
        }
        CHECK_THROWS_AS(grad(net, Vec::Zero(3)), DimensionError);
        CHECK_THROWS_AS(div(net, Vec::Zero(2)), DimensionError);
        CHECK_THROWS_AS(curl(net, Vec::Zero(2)), DimensionError);
        CHECK_THROWS_AS(curl_adj(net, Vec::Zero(2)), DimensionError);
    }

    TEST_CASE("graph laplacian") {
        const ReactionNetwork net = support::ab();
        const Mat l = graph_laplacian(net);
        CHECK(l.isApprox((Mat(2, 2) << 2, -1, -2, 1).finished()));
        const ReactionNetwork sym = net.with_rates(Vec::Ones(1), Vec::Ones(1));
        CHECK(graph_laplacian(sym).isApprox((Mat(2, 2) << 1, -1, -1, 1).finished()));
        CHECK_THROWS_AS(graph_laplacian(support::brusselator()), InvalidArgument);

        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 10; ++trial) {
            const ReactionNetwork g = support::random_graph(rng);
            const Mat lg = graph_laplacian(g);
            CHECK(lg.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
            // L x = 𝔹 j(x) for the linear flux j = k⁺x_head − k⁻x_tail.
            const Vec x = support::random_positive(rng, g.num_species());
            Vec j(g.num_edges());
            for (int e = 0; e < g.num_edges(); ++e)
                j(e) = g.kplus()(e) * x(g.edges()[e].head) - g.kminus()(e) * x(g.edges()[e].tail);
            CHECK((lg * x - g.incidence_d() * j).cwiseAbs().maxCoeff() < 1e-12);
        }
    }

    TEST_CASE("build rejects malformed input") {
        const std::vector<IntVec> hv = {IntVec::Unit(2, 0), IntVec::Unit(2, 1)};
        const Vec one = Vec::Ones(1);
        CHECK_THROWS_AS(ReactionNetwork::build({"A", "A"}, hv, {{0, 1}}, one, one), InvalidArgument);
        CHECK_THROWS_AS(ReactionNetwork::build({"A", "B"}, hv, {{0, 0}}, one, one), InvalidArgument);
        CHECK_THROWS_AS(ReactionNetwork::build({"A", "B"}, hv, {{0, 1}}, Vec::Zero(1), one), InvalidArgument);
        CHECK_THROWS_AS(ReactionNetwork::build({"A", "B"}, hv, {{0, 1}}, one, -one), InvalidArgument);
        CHECK_THROWS_AS(ReactionNetwork::build({"A", "B"}, {hv[0], hv[0]}, {{0, 1}}, one, one), InvalidArgument);
        CHECK_THROWS_AS(ReactionNetwork::build({"A", "B"}, hv, {{0, 1}}, Vec::Ones(2), one), DimensionError);
        CHECK_THROWS_AS(ReactionNetwork::build({"A", "B"}, hv, {{0, 2}}, one, one), InvalidArgument);
    }
}
