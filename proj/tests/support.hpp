#pragma once

#include <random>
#include <string>

#include "dualflow/netcore.hpp"
#include "dualflow/netio.hpp"

namespace support {

using dualflow::IntVec;
using dualflow::ReactionNetwork;
using dualflow::Vec;

inline std::string data_path(const std::string& name) { return std::string(DUALFLOW_DATA_DIR) + "/" + name; }

inline ReactionNetwork brusselator() { return dualflow::load_network(data_path("brusselator.crn")); }
inline ReactionNetwork brusselator_eq() { return dualflow::load_network(data_path("brusselator_eq.crn")); }
inline ReactionNetwork ab() { return dualflow::load_network(data_path("ab.crn")); }
inline ReactionNetwork abc() { return dualflow::load_network(data_path("abc.crn")); }
inline ReactionNetwork triangle() { return dualflow::load_network(data_path("triangle.crn")); }

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

inline Vec random_positive(std::mt19937_64& rng, int n, double lo = 0.1, double hi = 10.0) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = log_uniform(rng, lo, hi);
    return v;
}

inline Vec random_normal(std::mt19937_64& rng, int n, double sigma = 1.0) {
    std::normal_distribution<double> g(0.0, sigma);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

/// Random reversible hypergraph on `species` species with complexes of
/// molecularity at most 2 per species and `edges` distinct reactions.
inline ReactionNetwork random_hypergraph(std::mt19937_64& rng, int species = 5, int edges = 6) {
    std::uniform_int_distribution<int> coeff(0, 2);
    std::bernoulli_distribution sparse(0.6);
    std::vector<std::string> names;
    for (int i = 0; i < species; ++i) names.push_back("S" + std::to_string(i + 1));
    std::vector<IntVec> vertices;
    std::vector<dualflow::Edge> list;
    auto vertex_of = [&](const IntVec& g) {
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            if (vertices[i] == g) return static_cast<int>(i);
        }
        vertices.push_back(g);
        return static_cast<int>(vertices.size() - 1);
    };
    auto random_complex = [&]() {
        IntVec g = IntVec::Zero(species);
        for (int i = 0; i < species; ++i) g(i) = sparse(rng) ? 0 : coeff(rng);
        return g;
    };
    while (static_cast<int>(list.size()) < edges) {
        const IntVec h = random_complex(), t = random_complex();
        if (h == t) continue;
        const int hi = vertex_of(h), ti = vertex_of(t);
        bool dup = false;
        for (const auto& e : list) dup = dup || (e.head == hi && e.tail == ti) || (e.head == ti && e.tail == hi);
        if (dup) continue;
        list.push_back({hi, ti});
    }
    // Drop complexes that ended up unused by rejected draws.
    std::vector<int> remap(vertices.size(), -1);
    std::vector<IntVec> used;
    for (auto& e : list) {
        for (int* v : {&e.head, &e.tail}) {
            if (remap[*v] < 0) {
                remap[*v] = static_cast<int>(used.size());
                used.push_back(vertices[*v]);
            }
            *v = remap[*v];
        }
    }
    return ReactionNetwork::build(names, used, list, random_positive(rng, edges), random_positive(rng, edges));
}

/// Random connected graph (Γ = I) on `n` vertices: a random spanning tree plus
/// `extra` additional edges.
inline ReactionNetwork random_graph(std::mt19937_64& rng, int n = 5, int extra = 3) {
    std::vector<std::string> names;
    std::vector<IntVec> vertices;
    for (int i = 0; i < n; ++i) {
        names.push_back("V" + std::to_string(i + 1));
        vertices.push_back(IntVec::Unit(n, i));
    }
    std::vector<dualflow::Edge> list;
    auto has = [&](int a, int b) {
        for (const auto& e : list) {
            if ((e.head == a && e.tail == b) || (e.head == b && e.tail == a)) return true;
        }
        return false;
    };
    for (int i = 1; i < n; ++i) {
        std::uniform_int_distribution<int> pick(0, i - 1);
        list.push_back({pick(rng), i});
    }
    std::uniform_int_distribution<int> any(0, n - 1);
    int added = 0;
    while (added < extra) {
        const int a = any(rng), b = any(rng);
        if (a == b || has(a, b)) continue;
        list.push_back({a, b});
        ++added;
    }
    const int m = static_cast<int>(list.size());
    return ReactionNetwork::build(names, vertices, list, random_positive(rng, m), random_positive(rng, m));
}

}  // namespace support
