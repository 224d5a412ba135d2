#pragma once

#include <optional>
#include <vector>

#include "dualflow/kinetics.hpp"

namespace dualflow {

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    /// Smallest admissible density; steps that would go below it are rejected.
    double positivity_floor = 1e-12;
    double initial_step = 0.0;  // 0 selects automatically
    double min_step = 1e-14;
    long max_steps = 5'000'000;
    /// Sample times for the dense output. Empty records every accepted step.
    std::vector<double> output_times;
    /// Reference point x̃ for the divergence column of the ledger.
    std::optional<Vec> reference;
};

/// Thermodynamic bookkeeping at one recorded state.
struct LedgerRow {
    double divergence = 0.0;  // D[x_t‖x̃], NaN without a reference
    double epr = 0.0;
    double pepr = 0.0;
    double psi = 0.0;       // Ψ_ω(j)
    double psi_star = 0.0;  // Ψ*_ω(f)
    Vec conserved;          // U x
    double step = 0.0;      // integrator step size in force at this sample
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<LedgerRow> ledger;
    long accepted_steps = 0;
    long rejected_steps = 0;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
};

/// Integration stopped because the state approached the boundary of the
/// positive orthant. Carries everything recorded up to that point.
class BoundaryHalt : public Error {
public:
    BoundaryHalt(const std::string& what, Trajectory partial) : Error(what), partial_(std::move(partial)) {}
    const Trajectory& partial() const { return partial_; }

private:
    Trajectory partial_;
};

/// Tabulated rate constants interpolated piecewise-linearly in time and held
/// constant outside the table.
struct RateSchedule {
    std::vector<double> times;
    std::vector<Vec> kplus;
    std::vector<Vec> kminus;

    static RateSchedule constant(const Vec& kplus, const Vec& kminus);
    void validate(int num_edges) const;
    void at(double t, Vec& kp, Vec& km) const;
};

/// Uniform grid 0, t_end/(n−1), ..., t_end.
std::vector<double> uniform_grid(double t_end, int points);

/// Integrates ẋ = −𝕊 j_MA(x) with the network's rate constants.
Trajectory simulate(const ReactionNetwork& net, const Vec& x0, double t_end, const IntegratorOptions& opts = {});

/// Integrates ẋ = −𝕊 j_MA(x; k±(t)) with tabulated rate constants.
Trajectory simulate_timedep(const ReactionNetwork& net, const Vec& x0, double t_end, const RateSchedule& schedule,
                            const IntegratorOptions& opts = {});

/// Largest ∞-norm change of U x over the trajectory relative to ‖U x(0)‖∞.
double conservation_drift(const Trajectory& traj);

/// max_k ‖a_k − b_k‖∞ / max_k ‖a_k‖∞ for trajectories sampled on the same grid.
double sup_relative_deviation(const Trajectory& a, const Trajectory& b);

/// Composite Simpson rule on a possibly non-uniform grid.
double simpson(const std::vector<double>& t, const std::vector<double>& y);

struct DeGiorgiReport {
    double lhs = 0.0;  // D[x0‖x̃] − D[x_T‖x̃]
    double rhs = 0.0;  // ∫(Ψ* + Ψ) dt
    double gap = 0.0;  // lhs − rhs
    double tolerance = 0.0;
    bool balanced = false;
    bool monotone = false;  // D[x_t‖x̃] non-increasing at every sample
    double max_increase = 0.0;
};

/// Energy-dissipation balance along a gradient-flow trajectory. Refuses
/// networks violating the Wegscheider condition and references x̃ that are
/// not on the equilibrium manifold.
DeGiorgiReport degiorgi_ledger(const Trajectory& traj, const ReactionNetwork& net, const Vec& x_ref);

struct LyapunovReport {
    std::vector<double> rates;  // dD[x_t‖x̃]/dt at every sample
    double max_rate = 0.0;
    int violations = 0;  // samples with rate > threshold
    double threshold = 1e-10;
    double reference_cb_residual = 0.0;  // ‖𝔹 j(x̃)‖∞
    bool non_increasing() const { return violations == 0; }
};

/// dD[x‖x̃]/dt = −⟨j, 𝕊ᵀ ln(x/x̃)⟩ sampled along the trajectory.
LyapunovReport lyapunov_monitor(const Trajectory& traj, const ReactionNetwork& net, const Vec& x_ref);

}  // namespace dualflow
