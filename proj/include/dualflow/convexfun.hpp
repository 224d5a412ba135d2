#pragma once

#include "dualflow/netcore.hpp"

namespace dualflow {

/// Strictly convex function on the vertex (density) space together with its
/// Legendre conjugate on the potential space.
///
/// Two families are provided:
///  - generalized Kullback-Leibler with reference x° > 0:
///      Φ(x) = Σ (ln(xᵢ/x°ᵢ) − 1) xᵢ,   Φ*(y) = Σ x°ᵢ e^{yᵢ}
///  - quadratic with symmetric positive-definite metric M₀:
///      Φ(x) = ½⟨x, M₀x⟩,               Φ*(y) = ½⟨y, M₀⁻¹y⟩
class ThermoFunction {
public:
    enum class Family { KullbackLeibler, Quadratic };

    static ThermoFunction kl(Vec reference);
    /// KL family with x° = 𝟙.
    static ThermoFunction kl_unit(int dim);
    static ThermoFunction quadratic(Mat metric);

    Family family() const { return family_; }
    int dim() const { return static_cast<int>(ref_.size()); }
    /// x° for the KL family.
    const Vec& reference() const { return ref_; }

    double primal(const Vec& x) const;        // Φ(x)
    double dual(const Vec& y) const;          // Φ*(y)
    Vec to_dual(const Vec& x) const;          // ∂Φ(x)
    Vec to_primal(const Vec& y) const;        // ∂Φ*(y)
    Mat hessian_primal(const Vec& x) const;   // G_x
    Mat hessian_dual(const Vec& y) const;     // G*_y

    /// D[x‖x_ref] = Φ(x) − Φ(x_ref) − ⟨x − x_ref, ∂Φ(x_ref)⟩.
    double bregman(const Vec& x, const Vec& x_ref) const;

private:
    void check_primal(const Vec& x, const char* op) const;
    void check_dual(const Vec& y, const char* op) const;

    Family family_ = Family::KullbackLeibler;
    Vec ref_;
    Mat metric_;
    Eigen::LLT<Mat> metric_llt_;
};

/// Convenience: y = ∂Φ(x).
inline Vec legendre_to_dual(const ThermoFunction& fn, const Vec& x) { return fn.to_dual(x); }
/// Convenience: D[x‖x_ref] of the thermodynamic function.
inline double bregman_vertex(const ThermoFunction& fn, const Vec& x, const Vec& x_ref) { return fn.bregman(x, x_ref); }

/// Symmetric separable dissipation function pair on the edge space.
///
///  - cosh family with activity ω > 0:
///      Ψ*(f) = 2 Σ ωₑ (cosh(fₑ/2) − 1),   ∂Ψ*(f) = ω ∘ sinh(f/2)
///      Ψ(j)  = 2 Σ ωₑ [uₑ asinh(uₑ) − (√(1+uₑ²) − 1)],  u = j/ω
///  - quadratic with diagonal metric m > 0:
///      Ψ*(f) = ½ Σ mₑ fₑ²,   Ψ(j) = ½ Σ jₑ²/mₑ
class DissipationFunction {
public:
    enum class Family { Cosh, Quadratic };

    static DissipationFunction cosh(Vec activity);
    static DissipationFunction quadratic(Vec metric);
    /// Quadratic family whose metric (j⁺ − j⁻)/(ln j⁺ − ln j⁻) reproduces the
    /// mass-action flux-force relation of the given one-way fluxes.
    static DissipationFunction log_mean(const Vec& jplus, const Vec& jminus);

    Family family() const { return family_; }
    int dim() const { return static_cast<int>(weights_.size()); }
    /// ω for the cosh family, m for the quadratic family.
    const Vec& weights() const { return weights_; }
    /// Typical magnitude of the weights, used to scale solver tolerances.
    double scale() const;

    double primal(const Vec& j) const;       // Ψ(j)
    double dual(const Vec& f) const;         // Ψ*(f)
    Vec to_force(const Vec& j) const;        // ∂Ψ(j)
    Vec to_flux(const Vec& f) const;         // ∂Ψ*(f)
    Vec hessian_primal(const Vec& j) const;  // diagonal of G_j
    Vec hessian_dual(const Vec& f) const;    // diagonal of G*_f

    /// 𝒟[j; f′] = Ψ(j) + Ψ*(f′) − ⟨j, f′⟩.
    double bregman(const Vec& j, const Vec& f_ref) const;

private:
    void check(const Vec& v, const char* op) const;

    Family family_ = Family::Cosh;
    Vec weights_;
};

/// Result of pairing a flux or force through a dissipation function.
struct DissipationPair {
    Vec flux;
    Vec force;
    double psi = 0.0;       // Ψ(j)
    double psi_star = 0.0;  // Ψ*(f)
    double pairing = 0.0;   // ⟨j, f⟩
};

DissipationPair dissipation_pair_from_force(const DissipationFunction& fn, const Vec& f);
DissipationPair dissipation_pair_from_flux(const DissipationFunction& fn, const Vec& j);

inline double bregman_edge(const DissipationFunction& fn, const Vec& j, const Vec& f_ref) { return fn.bregman(j, f_ref); }

/// asinh via ln(u + √(1+u²)) with odd symmetry and a series for small |u|.
double stable_asinh(double u);

}  // namespace dualflow
