#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dualflow/error.hpp"

namespace dualflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IntVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using IntMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Oriented reversible edge between two hypervertices. The head carries +1
/// in the incidence matrix; the forward one-way flux consumes the head complex.
struct Edge {
    int head = 0;
    int tail = 0;
};

/// Reduced row-echelon form of an integer matrix computed without fractions.
/// Every row is primitive (gcd 1) with a positive pivot; pivot columns are
/// zero outside their pivot row.
struct IntegerEchelon {
    IntMat rows;              // only the non-zero rows
    std::vector<int> pivots;  // pivot column of each row
    int rank() const { return static_cast<int>(pivots.size()); }
};

IntegerEchelon integer_rref(const IntMat& m);

/// Exact basis of Ker m, one basis vector per column. The basis is canonical:
/// the transposed basis is in reduced row-echelon form with primitive rows and
/// positive leading entries, so equal kernels give identical matrices.
IntMat kernel_cols(const IntMat& m);

/// Hypergraph of a reversible chemical reaction network together with its
/// exact homology bases. Immutable once built.
class ReactionNetwork {
public:
    /// Validates the inputs and assembles every derived matrix.
    /// `labels` may be empty, in which case edges are named r1, r2, ...
    static ReactionNetwork build(std::vector<std::string> species,
                                 std::vector<IntVec> hypervertices,
                                 std::vector<Edge> edges,
                                 Vec kplus,
                                 Vec kminus,
                                 std::vector<std::string> labels = {});

    /// Same structure with a new set of rate constants.
    ReactionNetwork with_rates(Vec kplus, Vec kminus) const;

    int num_species() const { return static_cast<int>(species_.size()); }
    int num_hypervertices() const { return static_cast<int>(gamma_.cols()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    int num_conserved() const { return static_cast<int>(cons_basis_.rows()); }
    int num_cycles() const { return static_cast<int>(cycle_basis_.cols()); }
    int stoich_rank() const { return rank_; }

    const std::vector<std::string>& species() const { return species_; }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<Edge>& edges() const { return edges_; }

    const IntMat& gamma() const { return gamma_; }
    const IntMat& incidence() const { return incidence_; }
    const IntMat& stoich() const { return stoich_; }
    /// Γ𝔹⁺ and Γ𝔹⁻: composition of the head and tail complex of every edge.
    const IntMat& head_composition() const { return head_comp_; }
    const IntMat& tail_composition() const { return tail_comp_; }
    /// Rows span Ker 𝕊ᵀ (N_l × N_X).
    const IntMat& cons_basis() const { return cons_basis_; }
    /// Columns span Ker 𝕊 (N_e × N_z).
    const IntMat& cycle_basis() const { return cycle_basis_; }

    const Vec& kplus() const { return kplus_; }
    const Vec& kminus() const { return kminus_; }

    // Floating copies used by the numerical modules.
    const Mat& stoich_d() const { return stoich_d_; }
    const Mat& incidence_d() const { return incidence_d_; }
    const Mat& cons_basis_d() const { return cons_basis_d_; }
    const Mat& cycle_basis_d() const { return cycle_basis_d_; }
    /// Orthonormal basis of Im 𝕊 (N_X × rank).
    const Mat& image_basis() const { return image_basis_; }

    /// True when Γ is the identity, i.e. the hypergraph is an ordinary graph.
    bool is_graph() const;

private:
    ReactionNetwork() = default;
    void assemble();

    std::vector<std::string> species_;
    std::vector<std::string> labels_;
    std::vector<Edge> edges_;
    IntMat gamma_, incidence_, stoich_, head_comp_, tail_comp_;
    IntMat cons_basis_, cycle_basis_;
    int rank_ = 0;
    Vec kplus_, kminus_;
    Mat stoich_d_, incidence_d_, cons_basis_d_, cycle_basis_d_, image_basis_;
};

// Discrete exterior calculus on the hypergraph.
Vec grad(const ReactionNetwork& net, const Vec& y);       // 𝕊ᵀy
Vec div(const ReactionNetwork& net, const Vec& j);        // 𝕊j
Vec curl(const ReactionNetwork& net, const Vec& f);       // Vᵀf
Vec curl_adj(const ReactionNetwork& net, const Vec& z);   // Vz

/// Weighted asymmetric graph Laplacian 𝔹[diag(k⁺)(𝔹⁺)ᵀ − diag(k⁻)(𝔹⁻)ᵀ].
/// Only defined for graphs (Γ = I).
Mat graph_laplacian(const ReactionNetwork& net);

}  // namespace dualflow
