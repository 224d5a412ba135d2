#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dualflow/convexfun.hpp"
#include "dualflow/dynamics.hpp"
#include "dualflow/kinetics.hpp"
#include "dualflow/netcore.hpp"

namespace dualflow {

struct NewtonOptions {
    double tol = 1e-10;  // on the stationarity residual, scaled per solver
    int max_iter = 100;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
};

struct NewtonStats {
    int iterations = 0;
    double residual = 0.0;  // ∞-norm of the gradient at the returned point
};

/// Objective value, gradient, and Hessian of a smooth convex function.
struct ConvexModel {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<Mat(const Vec&)> hessian;
};

/// Damped Newton with Armijo backtracking. Stops once ‖∇‖∞ ≤ threshold and
/// throws SolverError with the best iterate otherwise.
Vec minimize_convex(const ConvexModel& model, Vec a0, double threshold, const NewtonOptions& opts, NewtonStats* stats,
                    const char* what);

// ---------------------------------------------------------------------------
// Vertex space

struct BirchResult {
    Vec x_eq;
    Vec lambda;                       // multipliers of U x = U x0
    double conservation_residual = 0.0;  // ‖U x_eq − U x0‖∞
    double leaf_residual = 0.0;          // ‖𝕊ᵀ(∂Φ(x_eq) − ∂Φ(x̃))‖∞
    NewtonStats stats;
};

/// Bregman projection of x̃ onto the stoichiometric polytope of x0.
BirchResult birch_point(const ReactionNetwork& net, const ThermoFunction& thermo, const Vec& x0, const Vec& x_tilde,
                        const NewtonOptions& opts = {});

struct PythagorasReport {
    double gap = 0.0;  // D[x‖x_q] − D[x‖x†] − D[x†‖x_q]
    double d_total = 0.0;
    double d_polytope = 0.0;
    double d_manifold = 0.0;
};

/// Generalized Pythagorean relation on the vertex space. Rejects triples with
/// x ∉ 𝒫^sc(x†) or x_q ∉ ℳ^eq(x†).
PythagorasReport pythagoras_vertex(const ReactionNetwork& net, const ThermoFunction& thermo, const Vec& x,
                                   const Vec& x_dagger, const Vec& x_q, double tol = 1e-8);

// ---------------------------------------------------------------------------
// Edge space

struct TangentDualResult {
    Vec u;         // representative in Im 𝕊
    Vec flux;      // j† = ∂Ψ*(−𝕊ᵀu)
    double psi_tilde = 0.0;       // Ψ̃(v) = Ψ(j†)
    double psi_star_tilde = 0.0;  // Ψ̃*(u) = Ψ*(−𝕊ᵀu)
    double pairing = 0.0;         // ⟨v, u⟩
    double divergence_residual = 0.0;  // ‖v + 𝕊 j†‖∞
    NewtonStats stats;
};

/// Solves v = −𝕊 ∂Ψ*(−𝕊ᵀu) for the induced dissipation pair on Im 𝕊.
TangentDualResult tangent_dual(const ReactionNetwork& net, const DissipationFunction& dissip, const Vec& v,
                               const NewtonOptions& opts = {}, const Vec* warm_start = nullptr);

struct EquilibriumFluxResult {
    Vec j_eq;
    Vec u_eq;  // certificate: ∂Ψ(j_eq) = −𝕊ᵀu_eq
    double divergence_residual = 0.0;  // ‖𝕊(j − j_eq)‖∞
    NewtonStats stats;
};

/// Equilibrium flux of the HHK split: the minimizer of Ψ over 𝒫^vl(j).
EquilibriumFluxResult hhk_j_eq(const ReactionNetwork& net, const DissipationFunction& dissip, const Vec& j,
                               const NewtonOptions& opts = {}, const Vec* warm_start = nullptr);

struct SteadyForceResult {
    Vec f_st;
    Vec y;     // f_st = f + 𝕊ᵀy, y ∈ Im 𝕊
    Vec j_st;  // ∂Ψ*(f_st)
    double stationarity_residual = 0.0;  // ‖𝕊 j_st‖∞
    NewtonStats stats;
};

/// Steady force of the HHK split: the minimizer of Ψ* over f + Im 𝕊ᵀ.
SteadyForceResult hhk_f_st(const ReactionNetwork& net, const DissipationFunction& dissip, const Vec& f,
                           const NewtonOptions& opts = {}, const Vec* warm_start = nullptr);

struct SubspaceCoords {
    Vec eta;   // U x
    Vec v;     // −𝕊 j
    Vec zeta;  // Vᵀ f
    Vec z;     // V z = j − j_eq
    double z_residual = 0.0;
};

struct HHKDecomposition {
    Vec x, j, f;
    Vec j_eq, j_cycle;  // j = j_eq + j_cycle, 𝕊 j_cycle = 0
    Vec f_st, f_eq;     // f = f_st + f_eq, f_eq ∈ Im 𝕊ᵀ
    Vec u_eq, y_st;
    double divergence_residual = 0.0;    // ‖𝕊 j_cycle‖∞
    double equilibrium_residual = 0.0;   // ‖∂Ψ(j_eq) + 𝕊ᵀu_eq‖∞
    double stationarity_residual = 0.0;  // ‖𝕊 ∂Ψ*(f_st)‖∞
    double cycle_affinity_residual = 0.0;  // ‖Vᵀ(f − f_st)‖∞
    double primal_gap = 0.0;  // Ψ(j) − 𝒟[j‖j_eq] − Ψ(j_eq)
    double dual_gap = 0.0;    // Ψ*(f) − 𝒟[j_st‖f] − Ψ*(f_st)
    SubspaceCoords coords;
};

/// Full flux and force decomposition at an LMA state, with the cosh
/// dissipation of the local activity.
HHKDecomposition hhk_decompose(const ReactionNetwork& net, const Vec& x, const NewtonOptions& opts = {});
/// Same for an arbitrary flux/force pair and dissipation.
HHKDecomposition hhk_decompose(const ReactionNetwork& net, const DissipationFunction& dissip, const Vec& x,
                               const Vec& j, const Vec& f, const NewtonOptions& opts = {});

struct CycleDualResult {
    Vec f_diamond;
    Vec j_diamond;  // ∂Ψ*(f◊) ∈ Ker 𝕊
    Vec z;          // V z = j◊
    Vec y;          // f◊ − f₀ = 𝕊ᵀy for the least-squares f₀
    double psi_hat_star = 0.0;  // Ψ̂*(ζ) = Ψ*(f◊)
    double psi_hat = 0.0;       // Ψ̂(z) = Ψ(j◊)
    double pairing = 0.0;       // ⟨z, ζ⟩
    double z_residual = 0.0;
    NewtonStats stats;
};

/// Induced dissipation pair on the cycle spaces at cycle affinity ζ.
CycleDualResult cycle_dual(const ReactionNetwork& net, const DissipationFunction& dissip, const Vec& zeta,
                           const NewtonOptions& opts = {}, const Vec* warm_start = nullptr);

// ---------------------------------------------------------------------------
// Effective kinetics

struct ScheduleCertificate {
    /// ‖𝕊 j(x_t; k_eff) − 𝕊 j(x_t; k)‖∞ / max(‖ẋ_t‖∞, 1e-8·‖j±‖∞)
    double velocity_residual = 0.0;
    double force_cycle_residual = 0.0;  // ‖Vᵀ f(x_t; k_eff) − target‖∞
    double steadiness_residual = 0.0;   // ‖𝕊 j(x_t; k_eff)‖∞
    int iterations = 0;
};

struct EffectiveSchedule {
    std::vector<double> times;
    std::vector<Vec> bigK;
    std::vector<Vec> kappa;
    std::vector<Vec> kplus;
    std::vector<Vec> kminus;
    std::vector<Vec> z;  // cycle coordinates (cycle schedules only)
    std::vector<ScheduleCertificate> certificates;

    RateSchedule rate_schedule() const;
    double max_velocity_residual() const;
    double max_force_cycle_residual() const;
    double max_steadiness_residual() const;
    /// Largest relative change of κ across the schedule.
    double kappa_variation() const;
};

/// Time-dependent equilibrium rate constants K_eq(t) whose mass-action flux at
/// x_t is the equilibrium part of j(x_t), so that the velocity is unchanged.
EffectiveSchedule effective_Keq(const ReactionNetwork& net, const Trajectory& traj, const NewtonOptions& opts = {});

/// Time-dependent rate constants K_st(t) that make x_t a steady state with the
/// cycle affinity of the original kinetics.
EffectiveSchedule effective_Kst(const ReactionNetwork& net, const Trajectory& traj, const NewtonOptions& opts = {});

// ---------------------------------------------------------------------------
// Pseudo-Hilbert orthogonality

struct PseudoHilbertSplit {
    Vec f_S, f_A;
    Vec flux;             // ∂Ψ*(f)
    double pairing_A = 0.0;  // ⟨j, f_A⟩
    double pairing_S = 0.0;  // ⟨j, f_S⟩
    double half_bregman_A = 0.0;  // ½𝒟[j‖f″]
    double half_bregman_S = 0.0;  // ½𝒟[j‖−f″]
    double level_gap = 0.0;       // Ψ*(f″) − Ψ*(f)
};

/// Splits f around a second force f″ on the same Ψ*-level set.
PseudoHilbertSplit pseudo_hilbert_decompose(const DissipationFunction& dissip, const Vec& f, const Vec& f_pp,
                                            double tol = 1e-9);

struct ForceSplit {
    Vec f_S;  // 𝕊ᵀ ln(x/x̃)
    Vec f_A;  // ln K + 𝕊ᵀ ln x̃
};

/// Symmetric/antisymmetric force split around a complex-balanced state x̃.
ForceSplit cb_force_split(const ReactionNetwork& net, const Vec& x, const Vec& x_cb);

}  // namespace dualflow
