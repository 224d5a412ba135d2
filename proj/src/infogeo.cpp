#include "dualflow/infogeo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace dualflow {

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Columns of 𝕊ᵀQ, the edge-space image of the reduced coordinates.
Mat reduced_grad(const ReactionNetwork& net) { return net.stoich_d().transpose() * net.image_basis(); }

Vec reduced_warm(const ReactionNetwork& net, const Vec* warm) {
    const Mat& q = net.image_basis();
    if (!warm) return Vec::Zero(q.cols());
    if (warm->size() != q.rows()) throw DimensionError("warm start has wrong length");
    return q.transpose() * *warm;
}

}  // namespace

Vec minimize_convex(const ConvexModel& model, Vec a, double threshold, const NewtonOptions& opts, NewtonStats* stats,
                    const char* what) {
    double h = model.value(a);
    Vec g = model.gradient(a);
    if (!std::isfinite(h) || !g.allFinite())
        throw SolverError(std::string(what) + ": objective not finite at the starting point", a, inf_norm(g));
    int it = 0;
    for (; it < opts.max_iter && inf_norm(g) > threshold; ++it) {
        const Mat hess = model.hessian(a);
        Vec step = hess.ldlt().solve(-g);
        double slope = g.dot(step);
        if (!step.allFinite() || !(slope < 0.0)) {
            step = -g;
            slope = -g.squaredNorm();
        }
        bool accepted = false;
        if (-slope > 1e-13 * (1.0 + std::fabs(h))) {
            double alpha = 1.0;
            for (int ls = 0; ls < 60; ++ls) {
                const Vec trial = a + alpha * step;
                const double ht = model.value(trial);
                if (std::isfinite(ht) && ht <= h + opts.armijo_c * alpha * slope) {
                    a = trial;
                    h = ht;
                    g = model.gradient(a);
                    accepted = true;
                    break;
                }
                alpha *= opts.backtrack;
            }
        }
        if (!accepted) {
            // Predicted decrease is below the rounding level of the objective;
            // backtrack on the gradient norm instead.
            double alpha = 1.0;
            for (int ls = 0; ls < 30 && !accepted; ++ls, alpha *= opts.backtrack) {
                const Vec trial = a + alpha * step;
                const Vec gt = model.gradient(trial);
                if (gt.allFinite() && inf_norm(gt) < inf_norm(g)) {
                    a = trial;
                    h = model.value(a);
                    g = gt;
                    accepted = true;
                }
            }
            if (!accepted) break;
        }
    }
    const double res = inf_norm(g);
    if (stats) {
        stats->iterations = it;
        stats->residual = res;
    }
    if (!(res <= threshold))
        throw SolverError(std::string(what) + ": Newton did not converge (residual " + sci(res) + " > " +
                              sci(threshold) + " after " + std::to_string(it) + " iterations)",
                          a, res);
    return a;
}

// ---------------------------------------------------------------------------
// Vertex space

BirchResult birch_point(const ReactionNetwork& net, const ThermoFunction& thermo, const Vec& x0, const Vec& x_tilde,
                        const NewtonOptions& opts) {
    const int n = net.num_species();
    if (thermo.dim() != n) throw DimensionError("birch_point: thermodynamic function has wrong dimension");
    if (x0.size() != n || x_tilde.size() != n) throw DimensionError("birch_point: state has wrong length");
    if (thermo.family() == ThermoFunction::Family::KullbackLeibler) {
        require_positive(x0, "birch_point x0");
        require_positive(x_tilde, "birch_point reference");
    }
    const Mat& u = net.cons_basis_d();
    const Vec y0 = thermo.to_dual(x_tilde);
    const Vec target = u * x0;
    BirchResult r;
    if (u.rows() == 0) {
        r.x_eq = x_tilde;
        r.lambda = Vec(0);
    } else {
        ConvexModel m;
        m.value = [&](const Vec& l) { return thermo.dual(y0 + u.transpose() * l) - l.dot(target); };
        m.gradient = [&](const Vec& l) -> Vec { return u * thermo.to_primal(y0 + u.transpose() * l) - target; };
        m.hessian = [&](const Vec& l) -> Mat { return u * thermo.hessian_dual(y0 + u.transpose() * l) * u.transpose(); };
        const double threshold = std::max(0.1 * opts.tol, 1e-15 * (1.0 + inf_norm(target)) * n);
        r.lambda = minimize_convex(m, Vec::Zero(u.rows()), threshold, opts, &r.stats, "birch_point");
        r.x_eq = thermo.to_primal(y0 + u.transpose() * r.lambda);
    }
    r.conservation_residual = inf_norm(u * r.x_eq - target);
    r.leaf_residual = inf_norm(net.stoich_d().transpose() * (thermo.to_dual(r.x_eq) - y0));
    return r;
}

PythagorasReport pythagoras_vertex(const ReactionNetwork& net, const ThermoFunction& thermo, const Vec& x,
                                   const Vec& x_dagger, const Vec& x_q, double tol) {
    const int n = net.num_species();
    if (x.size() != n || x_dagger.size() != n || x_q.size() != n)
        throw DimensionError("pythagoras_vertex: state has wrong length");
    const Mat& u = net.cons_basis_d();
    const double cons = inf_norm(u * (x - x_dagger));
    if (cons > tol * (1.0 + inf_norm(u * x)))
        throw InvalidArgument("pythagoras_vertex: x is not on the stoichiometric polytope of x† (residual " +
                              std::to_string(cons) + ")");
    const double leaf = inf_norm(net.stoich_d().transpose() * (thermo.to_dual(x_dagger) - thermo.to_dual(x_q)));
    if (leaf > tol)
        throw InvalidArgument("pythagoras_vertex: x_q is not on the equilibrium manifold of x† (residual " +
                              std::to_string(leaf) + ")");
    PythagorasReport r;
    r.d_total = thermo.bregman(x, x_q);
    r.d_polytope = thermo.bregman(x, x_dagger);
    r.d_manifold = thermo.bregman(x_dagger, x_q);
    r.gap = r.d_total - r.d_polytope - r.d_manifold;
    return r;
}

// ---------------------------------------------------------------------------
// Edge space

TangentDualResult tangent_dual(const ReactionNetwork& net, const DissipationFunction& dissip, const Vec& v,
                               const NewtonOptions& opts, const Vec* warm_start) {
    if (v.size() != net.num_species()) throw DimensionError("tangent_dual: velocity has wrong length");
    if (dissip.dim() != net.num_edges()) throw DimensionError("tangent_dual: dissipation has wrong dimension");
    const Mat& q = net.image_basis();
    const double off = inf_norm(v - q * (q.transpose() * v));
    if (off > 1e-9 * (1.0 + inf_norm(v)))
        throw InvalidArgument("tangent_dual: velocity is not in the image of S (residual " + std::to_string(off) + ")");
    const Mat m = reduced_grad(net);
    const Mat& s = net.stoich_d();

    ConvexModel model;
    model.value = [&](const Vec& a) { return dissip.dual(-(m * a)) - (q * a).dot(v); };
    model.gradient = [&](const Vec& a) -> Vec { return q.transpose() * (-(s * dissip.to_flux(-(m * a))) - v); };
    model.hessian = [&](const Vec& a) -> Mat { return m.transpose() * dissip.hessian_dual(-(m * a)).asDiagonal() * m; };
    const double threshold = opts.tol * inf_norm(v);

    TangentDualResult r;
    const Vec a = minimize_convex(model, reduced_warm(net, warm_start), threshold, opts, &r.stats, "tangent_dual");
    r.u = q * a;
    const Vec force = -(s.transpose() * r.u);
    r.flux = dissip.to_flux(force);
    r.psi_tilde = dissip.primal(r.flux);
    r.psi_star_tilde = dissip.dual(force);
    r.pairing = v.dot(r.u);
    r.divergence_residual = inf_norm(v + s * r.flux);
    return r;
}

EquilibriumFluxResult hhk_j_eq(const ReactionNetwork& net, const DissipationFunction& dissip, const Vec& j,
                               const NewtonOptions& opts, const Vec* warm_start) {
    if (j.size() != net.num_edges()) throw DimensionError("hhk_j_eq: flux has wrong length");
    const Vec v = -(net.stoich_d() * j);
    const TangentDualResult t = tangent_dual(net, dissip, v, opts, warm_start);
    EquilibriumFluxResult r;
    r.j_eq = t.flux;
    r.u_eq = t.u;
    r.divergence_residual = inf_norm(net.stoich_d() * (j - r.j_eq));
    r.stats = t.stats;
    return r;
}

SteadyForceResult hhk_f_st(const ReactionNetwork& net, const DissipationFunction& dissip, const Vec& f,
                           const NewtonOptions& opts, const Vec* warm_start) {
    if (f.size() != net.num_edges()) throw DimensionError("hhk_f_st: force has wrong length");
    if (dissip.dim() != net.num_edges()) throw DimensionError("hhk_f_st: dissipation has wrong dimension");
    const Mat& q = net.image_basis();
    const Mat m = reduced_grad(net);

    ConvexModel model;
    model.value = [&](const Vec& a) { return dissip.dual(f + m * a); };
    model.gradient = [&](const Vec& a) -> Vec { return m.transpose() * dissip.to_flux(f + m * a); };
    model.hessian = [&](const Vec& a) -> Mat { return m.transpose() * dissip.hessian_dual(f + m * a).asDiagonal() * m; };
    // Absolute target, floored at the rounding level of the flux evaluation.
    const double threshold = std::max(opts.tol, 100.0 * std::numeric_limits<double>::epsilon() * dissip.scale());

    SteadyForceResult r;
    const Vec a = minimize_convex(model, reduced_warm(net, warm_start), threshold, opts, &r.stats, "hhk_f_st");
    r.y = q * a;
    r.f_st = f + m * a;
    r.j_st = dissip.to_flux(r.f_st);
    r.stationarity_residual = inf_norm(net.stoich_d() * r.j_st);
    return r;
}

HHKDecomposition hhk_decompose(const ReactionNetwork& net, const Vec& x, const NewtonOptions& opts) {
    const EdgePair p = lma_flux(net, x);
    return hhk_decompose(net, p.dissipation(), x, p.flux, p.force, opts);
}

HHKDecomposition hhk_decompose(const ReactionNetwork& net, const DissipationFunction& dissip, const Vec& x,
                               const Vec& j, const Vec& f, const NewtonOptions& opts) {
    if (x.size() != net.num_species()) throw DimensionError("hhk_decompose: state has wrong length");
    const EquilibriumFluxResult eq = hhk_j_eq(net, dissip, j, opts);
    const SteadyForceResult st = hhk_f_st(net, dissip, f, opts);
    const Mat& s = net.stoich_d();
    const Mat& v = net.cycle_basis_d();

    HHKDecomposition d;
    d.x = x;
    d.j = j;
    d.f = f;
    d.j_eq = eq.j_eq;
    d.j_cycle = j - eq.j_eq;
    d.u_eq = eq.u_eq;
    d.f_st = st.f_st;
    d.f_eq = f - st.f_st;
    d.y_st = st.y;
    d.divergence_residual = eq.divergence_residual;
    d.equilibrium_residual = inf_norm(dissip.to_force(d.j_eq) + s.transpose() * d.u_eq);
    d.stationarity_residual = st.stationarity_residual;
    d.cycle_affinity_residual = inf_norm(v.transpose() * d.f_eq);

    const Vec f_eq_dual = -(s.transpose() * d.u_eq);
    d.primal_gap = dissip.primal(j) - dissip.bregman(j, f_eq_dual) - dissip.primal(d.j_eq);
    d.dual_gap = dissip.dual(f) - dissip.bregman(st.j_st, f) - dissip.dual(d.f_st);

    d.coords.eta = net.cons_basis_d() * x;
    d.coords.v = -(s * j);
    d.coords.zeta = v.transpose() * f;
    if (v.cols() > 0) {
        d.coords.z = (v.transpose() * v).ldlt().solve(v.transpose() * d.j_cycle);
        d.coords.z_residual = inf_norm(v * d.coords.z - d.j_cycle);
    } else {
        d.coords.z = Vec(0);
        d.coords.z_residual = inf_norm(d.j_cycle);
    }
    return d;
}

CycleDualResult cycle_dual(const ReactionNetwork& net, const DissipationFunction& dissip, const Vec& zeta,
                           const NewtonOptions& opts, const Vec* warm_start) {
    const Mat& v = net.cycle_basis_d();
    if (zeta.size() != v.cols()) throw DimensionError("cycle_dual: cycle affinity has wrong length");
    CycleDualResult r;
    const Eigen::LDLT<Mat> gram((v.transpose() * v).eval());
    const Vec f0 = v.cols() > 0 ? Vec(v * gram.solve(zeta)) : Vec(Vec::Zero(net.num_edges()));
    const SteadyForceResult st = hhk_f_st(net, dissip, f0, opts, warm_start);
    r.f_diamond = st.f_st;
    r.j_diamond = st.j_st;
    r.y = st.y;
    r.stats = st.stats;
    r.z = v.cols() > 0 ? Vec(gram.solve(v.transpose() * r.j_diamond)) : Vec(0);
    r.z_residual = inf_norm(v * r.z - r.j_diamond);
    r.psi_hat_star = dissip.dual(r.f_diamond);
    r.psi_hat = dissip.primal(r.j_diamond);
    r.pairing = r.z.dot(zeta);
    return r;
}

// ---------------------------------------------------------------------------
// Effective kinetics

RateSchedule EffectiveSchedule::rate_schedule() const {
    RateSchedule s;
    s.times = times;
    s.kplus = kplus;
    s.kminus = kminus;
    return s;
}

double EffectiveSchedule::max_velocity_residual() const {
    double m = 0.0;
    for (const auto& c : certificates) m = std::max(m, c.velocity_residual);
    return m;
}

double EffectiveSchedule::max_force_cycle_residual() const {
    double m = 0.0;
    for (const auto& c : certificates) m = std::max(m, c.force_cycle_residual);
    return m;
}

double EffectiveSchedule::max_steadiness_residual() const {
    double m = 0.0;
    for (const auto& c : certificates) m = std::max(m, c.steadiness_residual);
    return m;
}

double EffectiveSchedule::kappa_variation() const {
    double m = 0.0;
    for (const Vec& k : kappa) m = std::max(m, inf_norm(k - kappa.front()) / inf_norm(kappa.front()));
    return m;
}

namespace {

void push_rates(EffectiveSchedule& s, const KineticSplit& base, const Vec& lnK) {
    KineticSplit split{base.kappa, lnK.array().exp()};
    s.bigK.push_back(split.bigK);
    s.kappa.push_back(split.kappa);
    s.kplus.push_back(base.kappa.array() * (0.5 * lnK.array()).exp());
    s.kminus.push_back(base.kappa.array() * (-0.5 * lnK.array()).exp());
}

void require_trajectory(const ReactionNetwork& net, const Trajectory& traj, const char* what) {
    if (traj.empty()) throw InvalidArgument(std::string(what) + ": trajectory is empty");
    for (const Vec& x : traj.states) {
        if (x.size() != net.num_species()) throw DimensionError(std::string(what) + ": state has wrong length");
    }
}

}  // namespace

EffectiveSchedule effective_Keq(const ReactionNetwork& net, const Trajectory& traj, const NewtonOptions& opts) {
    require_trajectory(net, traj, "effective_Keq");
    const KineticSplit base = KineticSplit::from_rates(net.kplus(), net.kminus());
    const Mat& s = net.stoich_d();
    const Mat& v = net.cycle_basis_d();
    EffectiveSchedule out;
    Vec warm;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const Vec& x = traj.states[i];
        const EdgePair p = lma_flux(net, x);
        const Vec xdot = -(s * p.flux);
        const TangentDualResult td = tangent_dual(net, p.dissipation(), xdot, opts, i ? &warm : nullptr);
        warm = td.u;
        const Vec lnK = -(s.transpose() * (td.u + Vec(x.array().log())));
        out.times.push_back(traj.times[i]);
        push_rates(out, base, lnK);

        const EdgePair q = lma_flux(net, x, out.kplus.back(), out.kminus.back());
        ScheduleCertificate c;
        // Below this level ẋ is dominated by rounding in j⁺ − j⁻.
        const double floor = 1e-8 * std::max(inf_norm(p.jplus), inf_norm(p.jminus));
        c.velocity_residual = inf_norm(s * q.flux - s * p.flux) / std::max(inf_norm(xdot), floor);
        c.force_cycle_residual = inf_norm(v.transpose() * q.force);
        c.steadiness_residual = inf_norm(s * q.flux);
        c.iterations = td.stats.iterations;
        out.certificates.push_back(c);
    }
    return out;
}

EffectiveSchedule effective_Kst(const ReactionNetwork& net, const Trajectory& traj, const NewtonOptions& opts) {
    require_trajectory(net, traj, "effective_Kst");
    const KineticSplit base = KineticSplit::from_rates(net.kplus(), net.kminus());
    const Mat& s = net.stoich_d();
    const Mat& v = net.cycle_basis_d();
    EffectiveSchedule out;
    Vec warm;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const Vec& x = traj.states[i];
        const EdgePair p = lma_flux(net, x);
        const Vec zeta = v.transpose() * p.force;
        const CycleDualResult cd = cycle_dual(net, p.dissipation(), zeta, opts, i ? &warm : nullptr);
        warm = cd.y;
        const Vec lnK = cd.f_diamond - s.transpose() * Vec(x.array().log());
        out.times.push_back(traj.times[i]);
        push_rates(out, base, lnK);
        out.z.push_back(cd.z);

        const EdgePair q = lma_flux(net, x, out.kplus.back(), out.kminus.back());
        ScheduleCertificate c;
        c.force_cycle_residual = inf_norm(v.transpose() * q.force - zeta);
        c.steadiness_residual = inf_norm(s * q.flux);
        c.iterations = cd.stats.iterations;
        out.certificates.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pseudo-Hilbert orthogonality

PseudoHilbertSplit pseudo_hilbert_decompose(const DissipationFunction& dissip, const Vec& f, const Vec& f_pp,
                                            double tol) {
    if (f.size() != dissip.dim() || f_pp.size() != dissip.dim())
        throw DimensionError("pseudo_hilbert_decompose: force has wrong length");
    PseudoHilbertSplit r;
    const double level = dissip.dual(f);
    r.level_gap = dissip.dual(f_pp) - level;
    if (std::fabs(r.level_gap) > tol * (1.0 + level))
        throw InvalidArgument("pseudo_hilbert_decompose: forces are not on the same level set (gap " +
                              std::to_string(r.level_gap) + ")");
    r.f_S = 0.5 * (f + f_pp);
    r.f_A = 0.5 * (f - f_pp);
    r.flux = dissip.to_flux(f);
    r.pairing_A = r.flux.dot(r.f_A);
    r.pairing_S = r.flux.dot(r.f_S);
    r.half_bregman_A = 0.5 * dissip.bregman(r.flux, f_pp);
    r.half_bregman_S = 0.5 * dissip.bregman(r.flux, -f_pp);
    return r;
}

ForceSplit cb_force_split(const ReactionNetwork& net, const Vec& x, const Vec& x_cb) {
    if (x.size() != net.num_species() || x_cb.size() != net.num_species())
        throw DimensionError("cb_force_split: state has wrong length");
    require_positive(x, "cb_force_split");
    require_positive(x_cb, "cb_force_split reference");
    const Mat st = net.stoich_d().transpose();
    const Vec ln_cb = x_cb.array().log();
    ForceSplit r;
    r.f_S = st * (Vec(x.array().log()) - ln_cb);
    r.f_A = (net.kplus().array() / net.kminus().array()).log().matrix() + st * ln_cb;
    return r;
}

}  // namespace dualflow
