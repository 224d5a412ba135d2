#include "dualflow/convexfun.hpp"

#include <cmath>
#include <string>

namespace dualflow {

namespace {

void require_size(const Vec& v, int n, const char* op) {
    if (v.size() != n)
        throw DimensionError(std::string(op) + ": length " + std::to_string(v.size()) + ", expected " + std::to_string(n));
}

// 2ω(cosh(f/2) − 1) written as 4ω sinh²(f/4) to avoid cancellation near 0.
double psi_star_scalar(double w, double f) {
    const double s = std::sinh(0.25 * f);
    return 4.0 * w * s * s;
}

double psi_scalar(double w, double j) {
    const double u = j / w;
    const double r = std::hypot(1.0, u);
    // √(1+u²) − 1 = u²/(√(1+u²) + 1)
    return 2.0 * w * (u * stable_asinh(u) - u * u / (r + 1.0));
}

}  // namespace

double stable_asinh(double u) {
    const double a = std::fabs(u);
    double r;
    if (a < 1e-4) {
        const double a2 = a * a;
        r = a * (1.0 - a2 / 6.0 + 3.0 * a2 * a2 / 40.0);
    } else if (a > 1e150) {
        r = std::log(2.0) + std::log(a);
    } else {
        // ln(a + √(1+a²)) = log1p(a + a²/(1 + √(1+a²))).
        r = std::log1p(a + a * a / (1.0 + std::sqrt(1.0 + a * a)));
    }
    return u < 0 ? -r : r;
}

// ---------------------------------------------------------------------------
// ThermoFunction

ThermoFunction ThermoFunction::kl(Vec reference) {
    if (reference.size() == 0) throw InvalidArgument("KL reference must be non-empty");
    if (!(reference.array() > 0.0).all()) throw InvalidArgument("KL reference x° must be strictly positive");
    ThermoFunction fn;
    fn.family_ = Family::KullbackLeibler;
    fn.ref_ = std::move(reference);
    return fn;
}

ThermoFunction ThermoFunction::kl_unit(int dim) { return kl(Vec::Ones(dim)); }

ThermoFunction ThermoFunction::quadratic(Mat metric) {
    if (metric.rows() != metric.cols() || metric.rows() == 0) throw DimensionError("quadratic metric must be square");
    if (!metric.isApprox(metric.transpose())) throw InvalidArgument("quadratic metric must be symmetric");
    ThermoFunction fn;
    fn.family_ = Family::Quadratic;
    fn.metric_llt_.compute(metric);
    if (fn.metric_llt_.info() != Eigen::Success) throw InvalidArgument("quadratic metric must be positive definite");
    fn.ref_ = Vec::Zero(metric.rows());
    fn.metric_ = std::move(metric);
    return fn;
}

void ThermoFunction::check_primal(const Vec& x, const char* op) const {
    require_size(x, dim(), op);
    if (family_ == Family::KullbackLeibler && !(x.array() > 0.0).all())
        throw InvalidArgument(std::string(op) + ": density must be strictly positive");
}

void ThermoFunction::check_dual(const Vec& y, const char* op) const { require_size(y, dim(), op); }

double ThermoFunction::primal(const Vec& x) const {
    check_primal(x, "Phi");
    if (family_ == Family::Quadratic) return 0.5 * x.dot(metric_ * x);
    return ((x.array() / ref_.array()).log() - 1.0).matrix().dot(x);
}

double ThermoFunction::dual(const Vec& y) const {
    check_dual(y, "Phi*");
    if (family_ == Family::Quadratic) return 0.5 * y.dot(metric_llt_.solve(y));
    return ref_.dot(y.array().exp().matrix());
}

Vec ThermoFunction::to_dual(const Vec& x) const {
    check_primal(x, "legendre_to_dual");
    if (family_ == Family::Quadratic) return metric_ * x;
    return (x.array() / ref_.array()).log();
}

Vec ThermoFunction::to_primal(const Vec& y) const {
    check_dual(y, "legendre_to_primal");
    if (family_ == Family::Quadratic) return metric_llt_.solve(y);
    return ref_.array() * y.array().exp();
}

Mat ThermoFunction::hessian_primal(const Vec& x) const {
    check_primal(x, "hessian_primal");
    if (family_ == Family::Quadratic) return metric_;
    return x.cwiseInverse().asDiagonal();
}

Mat ThermoFunction::hessian_dual(const Vec& y) const {
    check_dual(y, "hessian_dual");
    if (family_ == Family::Quadratic) return metric_llt_.solve(Mat::Identity(dim(), dim()));
    return to_primal(y).asDiagonal();
}

double ThermoFunction::bregman(const Vec& x, const Vec& x_ref) const {
    check_primal(x, "bregman_vertex");
    check_primal(x_ref, "bregman_vertex");
    if (family_ == Family::Quadratic) {
        const Vec d = x - x_ref;
        return 0.5 * d.dot(metric_ * d);
    }
    // Σ x ln(x/x') − (x − x'); the x° terms cancel.
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) sum += x(i) * std::log(x(i) / x_ref(i)) - (x(i) - x_ref(i));
    return sum;
}

// ---------------------------------------------------------------------------
// DissipationFunction

DissipationFunction DissipationFunction::cosh(Vec activity) {
    if (!(activity.array() > 0.0).all() || !activity.allFinite())
        throw InvalidArgument("activity ω must be strictly positive and finite");
    DissipationFunction fn;
    fn.family_ = Family::Cosh;
    fn.weights_ = std::move(activity);
    return fn;
}

DissipationFunction DissipationFunction::quadratic(Vec metric) {
    if (!(metric.array() > 0.0).all() || !metric.allFinite())
        throw InvalidArgument("quadratic dissipation metric must be strictly positive and finite");
    DissipationFunction fn;
    fn.family_ = Family::Quadratic;
    fn.weights_ = std::move(metric);
    return fn;
}

DissipationFunction DissipationFunction::log_mean(const Vec& jplus, const Vec& jminus) {
    if (jplus.size() != jminus.size()) throw DimensionError("log_mean: one-way flux lengths differ");
    Vec m(jplus.size());
    for (Eigen::Index e = 0; e < m.size(); ++e) {
        const double a = jplus(e), b = jminus(e);
        if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("log_mean: one-way fluxes must be strictly positive");
        // Removable singularity at a = b.
        m(e) = std::fabs(a - b) < 1e-12 * (a + b) ? a : (a - b) / (std::log(a) - std::log(b));
    }
    return quadratic(std::move(m));
}

double DissipationFunction::scale() const { return weights_.size() == 0 ? 1.0 : weights_.maxCoeff(); }

void DissipationFunction::check(const Vec& v, const char* op) const { require_size(v, dim(), op); }

double DissipationFunction::primal(const Vec& j) const {
    check(j, "Psi");
    double sum = 0.0;
    for (Eigen::Index e = 0; e < j.size(); ++e) {
        sum += family_ == Family::Cosh ? psi_scalar(weights_(e), j(e)) : 0.5 * j(e) * j(e) / weights_(e);
    }
    return sum;
}

double DissipationFunction::dual(const Vec& f) const {
    check(f, "Psi*");
    double sum = 0.0;
    for (Eigen::Index e = 0; e < f.size(); ++e) {
        sum += family_ == Family::Cosh ? psi_star_scalar(weights_(e), f(e)) : 0.5 * weights_(e) * f(e) * f(e);
    }
    return sum;
}

Vec DissipationFunction::to_force(const Vec& j) const {
    check(j, "dPsi");
    Vec f(j.size());
    for (Eigen::Index e = 0; e < j.size(); ++e)
        f(e) = family_ == Family::Cosh ? 2.0 * stable_asinh(j(e) / weights_(e)) : j(e) / weights_(e);
    return f;
}

Vec DissipationFunction::to_flux(const Vec& f) const {
    check(f, "dPsi*");
    if (family_ == Family::Quadratic) return weights_.cwiseProduct(f);
    return weights_.array() * (0.5 * f.array()).sinh();
}

Vec DissipationFunction::hessian_primal(const Vec& j) const {
    check(j, "hessian_primal");
    if (family_ == Family::Quadratic) return weights_.cwiseInverse();
    Vec h(j.size());
    for (Eigen::Index e = 0; e < j.size(); ++e) h(e) = 2.0 / std::hypot(weights_(e), j(e));
    return h;
}

Vec DissipationFunction::hessian_dual(const Vec& f) const {
    check(f, "hessian_dual");
    if (family_ == Family::Quadratic) return weights_;
    return 0.5 * weights_.array() * (0.5 * f.array()).cosh();
}

double DissipationFunction::bregman(const Vec& j, const Vec& f_ref) const {
    check(j, "bregman_edge");
    check(f_ref, "bregman_edge");
    return primal(j) + dual(f_ref) - j.dot(f_ref);
}

DissipationPair dissipation_pair_from_force(const DissipationFunction& fn, const Vec& f) {
    DissipationPair p;
    p.force = f;
    p.flux = fn.to_flux(f);
    p.psi = fn.primal(p.flux);
    p.psi_star = fn.dual(f);
    p.pairing = p.flux.dot(f);
    return p;
}

DissipationPair dissipation_pair_from_flux(const DissipationFunction& fn, const Vec& j) {
    DissipationPair p;
    p.flux = j;
    p.force = fn.to_force(j);
    p.psi = fn.primal(j);
    p.psi_star = fn.dual(p.force);
    p.pairing = j.dot(p.force);
    return p;
}

}  // namespace dualflow
