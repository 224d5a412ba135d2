#pragma once

#include <functional>
#include <string>

#include "dualflow/convexfun.hpp"
#include "dualflow/netcore.hpp"

namespace dualflow {

/// One-way fluxes at a state and the derived flux, force, and frenetic activity.
struct EdgePair {
    Vec jplus;
    Vec jminus;
    Vec flux;      // j = j⁺ − j⁻
    Vec force;     // f = ln j⁺ − ln j⁻
    Vec activity;  // ω = 2√(j⁺∘j⁻)

    /// Cosh-type dissipation function with this pair's activity.
    DissipationFunction dissipation() const { return DissipationFunction::cosh(activity); }
};

/// Force part K = k⁺/k⁻ and activity part κ = √(k⁺∘k⁻) of the rate constants.
struct KineticSplit {
    Vec kappa;
    Vec bigK;

    static KineticSplit from_rates(const Vec& kplus, const Vec& kminus);
    Vec kplus() const;   // κ∘K^{1/2}
    Vec kminus() const;  // κ∘K^{-1/2}
};

/// Local multiplicative factor g(x) > 0 of extended mass-action kinetics.
using ActivityFactor = std::function<Vec(const Vec&)>;

/// x^γ for every column γ of `composition`; requires x > 0.
Vec monomials(const IntMat& composition, const Vec& x);

/// Mass-action one-way fluxes j±ₑ = k±ₑ x^{γ±ₑ} with the network's rates.
EdgePair lma_flux(const ReactionNetwork& net, const Vec& x);
/// Same with explicit rate vectors (time-dependent kinetics).
EdgePair lma_flux(const ReactionNetwork& net, const Vec& x, const Vec& kplus, const Vec& kminus);

/// f = ln K + 𝕊ᵀ ln x and ω = 2κ∘x^{[Γ(𝔹⁺+𝔹⁻)]ᵀ/2}, optionally multiplied by g(x).
struct ForceActivity {
    Vec force;
    Vec activity;
};
ForceActivity lma_force_activity(const ReactionNetwork& net, const Vec& x, const ActivityFactor& g = {});
ForceActivity lma_force_activity(const ReactionNetwork& net, const Vec& x, const KineticSplit& split,
                                 const ActivityFactor& g = {});

/// Entropy production rate ⟨j, f⟩ = Σ (j⁺ − j⁻) ln(j⁺/j⁻).
double epr(const Vec& jplus, const Vec& jminus);
/// Pseudo entropy production rate 2 Σ (j⁺ − j⁻)²/(j⁺ + j⁻).
double pepr(const Vec& jplus, const Vec& jminus);

struct WegscheiderReport {
    bool is_equilibrium = false;
    Vec cycle_affinity;  // ζ = Vᵀ ln K
    Vec tilde_y;         // minimum-norm least-squares solution of −𝕊ᵀỹ = ln K
    Vec f_ne;            // ln K + 𝕊ᵀỹ, orthogonal to Im 𝕊ᵀ
};

WegscheiderReport wegscheider_check(const ReactionNetwork& net, double tol = 1e-10);

enum class StateClass { None, Steady, ComplexBalanced, DetailedBalanced };
std::string to_string(StateClass c);

struct Classification {
    StateClass label = StateClass::None;
    double stoich_residual = 0.0;     // ‖𝕊j‖∞
    double incidence_residual = 0.0;  // ‖𝔹j‖∞
    double flux_residual = 0.0;       // ‖j‖∞
};

Classification classify_state(const ReactionNetwork& net, const Vec& x, double tol = 1e-8);

struct SteadyStateOptions {
    double tol = 1e-12;  // on ‖𝕊j‖∞ and the conservation residual, relative to flux scale
    int max_iter = 200;
};

/// Steady state in the stoichiometric compatibility class of x0: solves
/// 𝕊j(x) = 0 together with U x = U x0 by damped Newton in log coordinates.
Vec steady_state(const ReactionNetwork& net, const Vec& x0, const SteadyStateOptions& opts = {});

/// Throws InvalidArgument unless every entry is strictly positive and finite.
void require_positive(const Vec& x, const char* what);

}  // namespace dualflow
