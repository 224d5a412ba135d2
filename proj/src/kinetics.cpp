#include <algorithm>
#include "dualflow/kinetics.hpp"

#include <cmath>

namespace dualflow {

void require_positive(const Vec& x, const char* what) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!(x(i) > 0.0) || !std::isfinite(x(i)))
            throw InvalidArgument(std::string(what) + ": component " + std::to_string(i) +
                                  " is not strictly positive (boundary evaluation is refused)");
    }
}

KineticSplit KineticSplit::from_rates(const Vec& kplus, const Vec& kminus) {
    if (kplus.size() != kminus.size()) throw DimensionError("rate vectors differ in length");
    require_positive(kplus, "k+");
    require_positive(kminus, "k-");
    return {(kplus.array() * kminus.array()).sqrt(), kplus.array() / kminus.array()};
}

Vec KineticSplit::kplus() const { return kappa.array() * bigK.array().sqrt(); }
Vec KineticSplit::kminus() const { return kappa.array() / bigK.array().sqrt(); }

Vec monomials(const IntMat& composition, const Vec& x) {
    if (composition.rows() != x.size()) throw DimensionError("monomials: composition/state size mismatch");
    Vec out(composition.cols());
    for (Eigen::Index c = 0; c < composition.cols(); ++c) {
        const auto gamma = composition.col(c);
        if (gamma.maxCoeff() <= 3) {
            double p = 1.0;
            for (Eigen::Index i = 0; i < gamma.size(); ++i) {
                for (std::int64_t k = 0; k < gamma(i); ++k) p *= x(i);
            }
            out(c) = p;
        } else {
            double s = 0.0;
            for (Eigen::Index i = 0; i < gamma.size(); ++i) {
                if (gamma(i) != 0) s += static_cast<double>(gamma(i)) * std::log(x(i));
            }
            out(c) = std::exp(s);
        }
    }
    return out;
}

EdgePair lma_flux(const ReactionNetwork& net, const Vec& x) { return lma_flux(net, x, net.kplus(), net.kminus()); }

EdgePair lma_flux(const ReactionNetwork& net, const Vec& x, const Vec& kplus, const Vec& kminus) {
    if (x.size() != net.num_species()) throw DimensionError("lma_flux: state has wrong length");
    if (kplus.size() != net.num_edges() || kminus.size() != net.num_edges())
        throw DimensionError("lma_flux: rate vectors have wrong length");
    require_positive(x, "lma_flux");
    EdgePair p;
    p.jplus = kplus.cwiseProduct(monomials(net.head_composition(), x));
    p.jminus = kminus.cwiseProduct(monomials(net.tail_composition(), x));
    p.flux = p.jplus - p.jminus;
    p.force = p.jplus.array().log() - p.jminus.array().log();
    p.activity = 2.0 * (p.jplus.array() * p.jminus.array()).sqrt();
    return p;
}

ForceActivity lma_force_activity(const ReactionNetwork& net, const Vec& x, const ActivityFactor& g) {
    return lma_force_activity(net, x, KineticSplit::from_rates(net.kplus(), net.kminus()), g);
}

ForceActivity lma_force_activity(const ReactionNetwork& net, const Vec& x, const KineticSplit& split,
                                 const ActivityFactor& g) {
    if (x.size() != net.num_species()) throw DimensionError("lma_force_activity: state has wrong length");
    require_positive(x, "lma_force_activity");
    const Vec lnx = x.array().log();
    ForceActivity out;
    out.force = split.bigK.array().log().matrix() + net.stoich_d().transpose() * lnx;
    const Mat both = (net.head_composition() + net.tail_composition()).cast<double>();
    out.activity = 2.0 * split.kappa.array() * (0.5 * (both.transpose() * lnx).array()).exp();
    if (g) {
        const Vec factor = g(x);
        if (factor.size() != net.num_edges()) throw DimensionError("activity factor has wrong length");
        require_positive(factor, "activity factor");
        out.activity = out.activity.cwiseProduct(factor);
    }
    return out;
}

double epr(const Vec& jplus, const Vec& jminus) {
    double s = 0.0;
    for (Eigen::Index e = 0; e < jplus.size(); ++e) {
        const double d = jplus(e) - jminus(e);
        s += d * std::log1p(d / jminus(e));
    }
    return s;
}

double pepr(const Vec& jplus, const Vec& jminus) {
    double s = 0.0;
    for (Eigen::Index e = 0; e < jplus.size(); ++e) {
        const double d = jplus(e) - jminus(e);
        s += 2.0 * d * d / (jplus(e) + jminus(e));
    }
    return s;
}

WegscheiderReport wegscheider_check(const ReactionNetwork& net, double tol) {
    WegscheiderReport r;
    const Vec lnK = (net.kplus().array() / net.kminus().array()).log();
    r.cycle_affinity = net.cycle_basis_d().transpose() * lnK;
    r.is_equilibrium = r.cycle_affinity.size() == 0 || r.cycle_affinity.lpNorm<Eigen::Infinity>() < tol;
    const Mat st = -net.stoich_d().transpose();
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(st);
    cod.setThreshold(1e-12);
    r.tilde_y = cod.solve(lnK);
    // Drop any component along Ker 𝕊ᵀ so the representative is gauge-fixed.
    if (net.num_conserved() > 0) {
        const Mat& u = net.cons_basis_d();
        r.tilde_y -= u.transpose() * (u * u.transpose()).ldlt().solve(u * r.tilde_y);
    }
    r.f_ne = lnK + net.stoich_d().transpose() * r.tilde_y;
    return r;
}

std::string to_string(StateClass c) {
    switch (c) {
        case StateClass::DetailedBalanced: return "DB";
        case StateClass::ComplexBalanced: return "CB";
        case StateClass::Steady: return "ST";
        case StateClass::None: break;
    }
    return "none";
}

Classification classify_state(const ReactionNetwork& net, const Vec& x, double tol) {
    const EdgePair p = lma_flux(net, x);
    Classification c;
    c.stoich_residual = (net.stoich_d() * p.flux).lpNorm<Eigen::Infinity>();
    c.incidence_residual = (net.incidence_d() * p.flux).lpNorm<Eigen::Infinity>();
    c.flux_residual = p.flux.lpNorm<Eigen::Infinity>();
    if (c.flux_residual < tol) c.label = StateClass::DetailedBalanced;
    else if (c.incidence_residual < tol) c.label = StateClass::ComplexBalanced;
    else if (c.stoich_residual < tol) c.label = StateClass::Steady;
    return c;
}

Vec steady_state(const ReactionNetwork& net, const Vec& x0, const SteadyStateOptions& opts) {
    if (x0.size() != net.num_species()) throw DimensionError("steady_state: state has wrong length");
    require_positive(x0, "steady_state");
    const Mat& q = net.image_basis();
    const Mat& u = net.cons_basis_d();
    const Mat& s = net.stoich_d();
    const Mat head = net.head_composition().cast<double>();
    const Mat tail = net.tail_composition().cast<double>();
    const Vec target = u * x0;
    const double cons_scale = 1.0 + (target.size() ? target.lpNorm<Eigen::Infinity>() : 0.0);

    // Residual in log coordinates: [Qᵀ𝕊j(x); (U x − U x0)/scale].
    // A positive `fixed_scale` keeps the normalization of the current iterate
    // so that the line search compares a single merit function.
    auto residual = [&](const Vec& lnx, double& flux_scale, double fixed_scale = 0.0) {
        const Vec x = lnx.array().exp();
        const EdgePair p = lma_flux(net, x);
        flux_scale = fixed_scale > 0.0
                         ? fixed_scale
                         : 1.0 + std::max(p.jplus.lpNorm<Eigen::Infinity>(), p.jminus.lpNorm<Eigen::Infinity>());
        Vec r(q.cols() + u.rows());
        r.head(q.cols()) = q.transpose() * (s * p.flux) / flux_scale;
        r.tail(u.rows()) = (u * x - target) / cons_scale;
        return r;
    };

    auto jacobian_dlnx = [&](const Vec& x) {
        const EdgePair p = lma_flux(net, x);
        // d j/d ln x = diag(j⁺) γ⁺ᵀ − diag(j⁻) γ⁻ᵀ
        return Mat(p.jplus.asDiagonal() * head.transpose() - p.jminus.asDiagonal() * tail.transpose());
    };

    Vec lnx = x0.array().log();
    double flux_scale = 1.0;
    Vec r = residual(lnx, flux_scale);

    // Damped Newton on the residual; returns true on convergence.
    auto newton = [&]() {
        for (int it = 0; it < opts.max_iter; ++it) {
            if (r.lpNorm<Eigen::Infinity>() < opts.tol) return true;
            const Vec x = lnx.array().exp();
            Mat jac(r.size(), x.size());
            jac.topRows(q.cols()) = q.transpose() * s * jacobian_dlnx(x) / flux_scale;
            jac.bottomRows(u.rows()) = u * x.asDiagonal() / cons_scale;
            const Vec step = jac.colPivHouseholderQr().solve(-r);
            double alpha = 1.0;
            const double r0 = r.norm();
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                const Vec trial = lnx + alpha * step;
                double fs = 1.0;
                Vec rt;
                try {
                    rt = residual(trial, fs, flux_scale);
                } catch (const InvalidArgument&) {
                    alpha *= 0.5;
                    continue;
                }
                if (rt.allFinite() && rt.norm() <= (1.0 - 1e-4 * alpha) * r0) {
                    lnx = trial;
                    r = residual(lnx, flux_scale);
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) return false;
        }
        return r.lpNorm<Eigen::Infinity>() < opts.tol;
    };

    // Pseudo-transient continuation along d ln x/dt = −diag(1/x) 𝕊 j(x), which
    // stays in the compatibility class; the pseudo time step grows as the
    // rate residual shrinks.
    auto continuation = [&](Vec start) {
        lnx = start;
        const int n = static_cast<int>(lnx.size());
        auto rate = [&](const Vec& y) {
            const Vec x = y.array().exp();
            return Vec(-(s * lma_flux(net, x).flux).cwiseQuotient(x));
        };
        Vec g = rate(lnx);
        double dt = 1e-2 / (1.0 + g.lpNorm<Eigen::Infinity>());
        for (int it = 0; it < 50 * opts.max_iter; ++it) {
            const Vec x = lnx.array().exp();
            const Mat dg = -(x.cwiseInverse().asDiagonal() * s * jacobian_dlnx(x)) - Mat(g.asDiagonal());
            const Mat lhs = Mat::Identity(n, n) / dt - dg;
            const Vec step = lhs.partialPivLu().solve(g);
            const Vec trial = lnx + step;
            Vec gt;
            try {
                gt = rate(trial);
            } catch (const InvalidArgument&) {
                dt *= 0.25;
                continue;
            }
            if (!gt.allFinite() || !trial.allFinite()) {
                dt *= 0.25;
                continue;
            }
            dt *= std::clamp(g.norm() / std::max(gt.norm(), 1e-300), 0.5, 10.0);
            lnx = trial;
            g = gt;
            r = residual(lnx, flux_scale);
            if (r.lpNorm<Eigen::Infinity>() < 1e-6) return;
        }
    };

    if (!newton()) {
        continuation(x0.array().log());
        newton();
    }
    if (r.lpNorm<Eigen::Infinity>() < opts.tol) return lnx.array().exp();
    throw SolverError("steady_state: Newton did not converge (residual " + std::to_string(r.lpNorm<Eigen::Infinity>()) +
                          ")",
                      lnx.array().exp(), r.lpNorm<Eigen::Infinity>());
}

}  // namespace dualflow
