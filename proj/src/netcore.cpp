#include "dualflow/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace dualflow {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("integer overflow in exact elimination");
    return r;
}

std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_sub_overflow(a, b, &r)) throw std::overflow_error("integer overflow in exact elimination");
    return r;
}

// Divide a row by the gcd of its entries.
void make_primitive(IntMat& m, Eigen::Index row) {
    std::int64_t g = 0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) g = std::gcd(g, m(row, c));
    if (g > 1) m.row(row) /= g;
}

std::string check_dims(const char* op, Eigen::Index got, Eigen::Index want) {
    return std::string(op) + ": vector has length " + std::to_string(got) + ", expected " + std::to_string(want);
}

}  // namespace

IntegerEchelon integer_rref(const IntMat& m) {
    IntMat a = m;
    const Eigen::Index nr = a.rows(), nc = a.cols();
    std::vector<int> pivots;
    Eigen::Index r = 0;
    for (Eigen::Index c = 0; c < nc && r < nr; ++c) {
        Eigen::Index p = -1;
        for (Eigen::Index i = r; i < nr; ++i) {
            if (a(i, c) != 0) { p = i; break; }
        }
        if (p < 0) continue;
        if (p != r) a.row(p).swap(a.row(r));
        if (a(r, c) < 0) a.row(r) *= -1;
        make_primitive(a, r);
        const std::int64_t piv = a(r, c);
        for (Eigen::Index i = 0; i < nr; ++i) {
            if (i == r || a(i, c) == 0) continue;
            const std::int64_t factor = a(i, c);
            for (Eigen::Index k = 0; k < nc; ++k)
                a(i, k) = checked_sub(checked_mul(piv, a(i, k)), checked_mul(factor, a(r, k)));
            make_primitive(a, i);
        }
        pivots.push_back(static_cast<int>(c));
        ++r;
    }
    IntegerEchelon out;
    out.rows = a.topRows(r);
    out.pivots = std::move(pivots);
    return out;
}

IntMat kernel_cols(const IntMat& m) {
    const Eigen::Index n = m.cols();
    const IntegerEchelon ech = integer_rref(m);
    std::vector<bool> is_pivot(n, false);
    for (int c : ech.pivots) is_pivot[c] = true;

    std::vector<IntVec> basis;
    for (Eigen::Index free = 0; free < n; ++free) {
        if (is_pivot[free]) continue;
        // x_free = L, x_pivot(r) = -a(r, free) * L / p_r with L the lcm of the pivots involved.
        std::int64_t lcm = 1;
        for (int r = 0; r < ech.rank(); ++r) {
            if (ech.rows(r, free) != 0) lcm = std::lcm(lcm, ech.rows(r, ech.pivots[r]));
        }
        IntVec b = IntVec::Zero(n);
        b(free) = lcm;
        for (int r = 0; r < ech.rank(); ++r) {
            const std::int64_t p = ech.rows(r, ech.pivots[r]);
            b(ech.pivots[r]) = -checked_mul(ech.rows(r, free), lcm / p);
        }
        basis.push_back(std::move(b));
    }
    if (basis.empty()) return IntMat(n, 0);

    IntMat rows(static_cast<Eigen::Index>(basis.size()), n);
    for (std::size_t i = 0; i < basis.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = basis[i].transpose();
    // Canonical representative of the subspace.
    return integer_rref(rows).rows.transpose();
}

ReactionNetwork ReactionNetwork::build(std::vector<std::string> species,
                                       std::vector<IntVec> hypervertices,
                                       std::vector<Edge> edges,
                                       Vec kplus,
                                       Vec kminus,
                                       std::vector<std::string> labels) {
    const auto nx = static_cast<Eigen::Index>(species.size());
    if (nx == 0) throw InvalidArgument("network has no species");
    std::set<std::string> seen;
    for (const auto& s : species) {
        if (s.empty()) throw InvalidArgument("empty species name");
        if (!seen.insert(s).second) throw InvalidArgument("duplicate species name '" + s + "'");
    }
    std::set<std::vector<std::int64_t>> comps;
    for (std::size_t l = 0; l < hypervertices.size(); ++l) {
        const IntVec& g = hypervertices[l];
        if (g.size() != nx)
            throw DimensionError("hypervertex " + std::to_string(l) + " has " + std::to_string(g.size()) +
                                 " entries, expected " + std::to_string(nx));
        if ((g.array() < 0).any()) throw InvalidArgument("hypervertex " + std::to_string(l) + " has a negative coefficient");
        if (!comps.insert(std::vector<std::int64_t>(g.data(), g.data() + g.size())).second)
            throw InvalidArgument("duplicate hypervertex composition at index " + std::to_string(l));
    }
    const auto ne = static_cast<Eigen::Index>(edges.size());
    if (ne == 0) throw InvalidArgument("network has no edges");
    const auto nv = static_cast<int>(hypervertices.size());
    for (Eigen::Index e = 0; e < ne; ++e) {
        const Edge& ed = edges[e];
        if (ed.head < 0 || ed.head >= nv || ed.tail < 0 || ed.tail >= nv)
            throw InvalidArgument("edge " + std::to_string(e) + " refers to a missing hypervertex");
        if (ed.head == ed.tail) throw InvalidArgument("edge " + std::to_string(e) + " is a self-loop");
    }
    if (kplus.size() != ne || kminus.size() != ne) throw DimensionError("rate vectors must have one entry per edge");
    for (Eigen::Index e = 0; e < ne; ++e) {
        if (!(kplus(e) > 0.0) || !(kminus(e) > 0.0) || !std::isfinite(kplus(e)) || !std::isfinite(kminus(e)))
            throw InvalidArgument("edge " + std::to_string(e) + " has a non-positive rate constant");
    }
    if (labels.empty()) {
        for (Eigen::Index e = 0; e < ne; ++e) labels.push_back("r" + std::to_string(e + 1));
    } else if (static_cast<Eigen::Index>(labels.size()) != ne) {
        throw DimensionError("one label per edge is required");
    }
    std::set<std::string> seen_labels;
    for (const auto& l : labels) {
        if (!seen_labels.insert(l).second) throw InvalidArgument("duplicate reaction label '" + l + "'");
    }

    ReactionNetwork net;
    net.species_ = std::move(species);
    net.labels_ = std::move(labels);
    net.edges_ = std::move(edges);
    net.gamma_ = IntMat(nx, nv);
    for (int l = 0; l < nv; ++l) net.gamma_.col(l) = hypervertices[l];
    net.kplus_ = std::move(kplus);
    net.kminus_ = std::move(kminus);
    net.assemble();
    return net;
}

void ReactionNetwork::assemble() {
    const Eigen::Index nv = gamma_.cols(), ne = static_cast<Eigen::Index>(edges_.size());
    incidence_ = IntMat::Zero(nv, ne);
    IntMat bplus = IntMat::Zero(nv, ne), bminus = IntMat::Zero(nv, ne);
    for (Eigen::Index e = 0; e < ne; ++e) {
        incidence_(edges_[e].head, e) = 1;
        incidence_(edges_[e].tail, e) = -1;
        bplus(edges_[e].head, e) = 1;
        bminus(edges_[e].tail, e) = 1;
    }
    stoich_ = gamma_ * incidence_;
    head_comp_ = gamma_ * bplus;
    tail_comp_ = gamma_ * bminus;

    cycle_basis_ = kernel_cols(stoich_);
    cons_basis_ = kernel_cols(stoich_.transpose()).transpose();
    rank_ = static_cast<int>(stoich_.cols() - cycle_basis_.cols());

    stoich_d_ = stoich_.cast<double>();
    incidence_d_ = incidence_.cast<double>();
    cons_basis_d_ = cons_basis_.cast<double>();
    cycle_basis_d_ = cycle_basis_.cast<double>();
    if (rank_ > 0) {
        Eigen::JacobiSVD<Mat> svd(stoich_d_, Eigen::ComputeThinU);
        image_basis_ = svd.matrixU().leftCols(rank_);
    } else {
        image_basis_ = Mat(stoich_d_.rows(), 0);
    }
}

ReactionNetwork ReactionNetwork::with_rates(Vec kplus, Vec kminus) const {
    std::vector<IntVec> hv;
    for (Eigen::Index l = 0; l < gamma_.cols(); ++l) hv.push_back(gamma_.col(l));
    return build(species_, std::move(hv), edges_, std::move(kplus), std::move(kminus), labels_);
}

bool ReactionNetwork::is_graph() const {
    return gamma_.rows() == gamma_.cols() && gamma_ == IntMat::Identity(gamma_.rows(), gamma_.cols());
}

Vec grad(const ReactionNetwork& net, const Vec& y) {
    if (y.size() != net.num_species()) throw DimensionError(check_dims("grad", y.size(), net.num_species()));
    return net.stoich_d().transpose() * y;
}

Vec div(const ReactionNetwork& net, const Vec& j) {
    if (j.size() != net.num_edges()) throw DimensionError(check_dims("div", j.size(), net.num_edges()));
    return net.stoich_d() * j;
}

Vec curl(const ReactionNetwork& net, const Vec& f) {
    if (f.size() != net.num_edges()) throw DimensionError(check_dims("curl", f.size(), net.num_edges()));
    return net.cycle_basis_d().transpose() * f;
}

Vec curl_adj(const ReactionNetwork& net, const Vec& z) {
    if (z.size() != net.num_cycles()) throw DimensionError(check_dims("curl_adj", z.size(), net.num_cycles()));
    return net.cycle_basis_d() * z;
}

Mat graph_laplacian(const ReactionNetwork& net) {
    if (!net.is_graph()) throw InvalidArgument("graph Laplacian requires Γ = I (an ordinary graph)");
    const Mat b = net.incidence_d();
    const Mat bplus = b.cwiseMax(0.0);
    const Mat bminus = (-b).cwiseMax(0.0);
    return b * (net.kplus().asDiagonal() * bplus.transpose() - net.kminus().asDiagonal() * bminus.transpose());
}

}  // namespace dualflow
