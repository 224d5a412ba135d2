#include "dualflow/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace dualflow {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// Difference between the 5th and embedded 4th order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
// Continuous extension (Hairer's contd5).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

using RatesAt = std::function<void(double, Vec&, Vec&)>;

class Rhs {
public:
    Rhs(const ReactionNetwork& net, RatesAt rates) : net_(net), rates_(std::move(rates)) {}

    // False when x leaves the open positive orthant.
    bool operator()(double t, const Vec& x, Vec& dx) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (!(x(i) > 0.0) || !std::isfinite(x(i))) return false;
        }
        rates_(t, kp_, km_);
        const Vec j = kp_.cwiseProduct(monomials(net_.head_composition(), x)) -
                      km_.cwiseProduct(monomials(net_.tail_composition(), x));
        dx = -(net_.stoich_d() * j);
        return dx.allFinite();
    }

    void rates(double t, Vec& kp, Vec& km) const { rates_(t, kp, km); }

private:
    const ReactionNetwork& net_;
    RatesAt rates_;
    Vec kp_, km_;
};

LedgerRow make_row(const ReactionNetwork& net, const Vec& x, const Vec& kp, const Vec& km,
                   const std::optional<Vec>& ref, double step) {
    const EdgePair p = lma_flux(net, x, kp, km);
    LedgerRow row;
    row.divergence = ref ? ThermoFunction::kl_unit(net.num_species()).bregman(x, *ref)
                         : std::numeric_limits<double>::quiet_NaN();
    row.epr = epr(p.jplus, p.jminus);
    row.pepr = pepr(p.jplus, p.jminus);
    const DissipationFunction psi = DissipationFunction::cosh(p.activity);
    row.psi = psi.primal(p.flux);
    row.psi_star = psi.dual(p.force);
    row.conserved = net.cons_basis_d() * x;
    row.step = step;
    return row;
}

double error_norm(const Vec& err, const Vec& x0, const Vec& x1, const IntegratorOptions& o) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = o.atol + o.rtol * std::max(std::fabs(x0(i)), std::fabs(x1(i)));
        s += (err(i) / sc) * (err(i) / sc);
    }
    return std::sqrt(s / static_cast<double>(err.size()));
}

Trajectory integrate(const ReactionNetwork& net, const Vec& x0, double t_end, const RatesAt& rates_at,
                     const IntegratorOptions& opts) {
    if (x0.size() != net.num_species()) throw DimensionError("simulate: initial state has wrong length");
    require_positive(x0, "simulate");
    if (!(t_end > 0.0)) throw InvalidArgument("simulate: t_end must be positive");
    if (!(opts.rtol > 0.0) || !(opts.atol > 0.0)) throw InvalidArgument("simulate: tolerances must be positive");
    if (opts.reference) {
        if (opts.reference->size() != net.num_species()) throw DimensionError("simulate: reference has wrong length");
        require_positive(*opts.reference, "simulate reference");
    }
    const auto& grid = opts.output_times;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0 || grid[i] > t_end * (1.0 + 1e-12))
            throw InvalidArgument("simulate: output time outside [0, t_end]");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw InvalidArgument("simulate: output times must increase strictly");
    }

    Rhs rhs(net, rates_at);
    Trajectory traj;
    Vec kp, km;
    auto record = [&](double t, const Vec& x, double h) {
        rhs.rates(t, kp, km);
        traj.times.push_back(t);
        traj.states.push_back(x);
        traj.ledger.push_back(make_row(net, x, kp, km, opts.reference, h));
    };

    const Eigen::Index n = x0.size();
    double t = 0.0;
    Vec x = x0;
    Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), xs(n), xnew(n);
    if (!rhs(t, x, k1)) throw InvalidArgument("simulate: right-hand side not finite at the initial state");

    std::size_t next_out = 0;
    if (grid.empty()) {
        record(t, x, 0.0);
    } else {
        while (next_out < grid.size() && grid[next_out] <= 0.0) record(grid[next_out++], x, 0.0);
    }

    double h = opts.initial_step;
    if (h <= 0.0) {
        const Vec sc = (opts.atol + opts.rtol * x.array().abs()).matrix();
        const double d0 = (x.array() / sc.array()).matrix().norm() / std::sqrt(double(n));
        const double d1n = (k1.array() / sc.array()).matrix().norm() / std::sqrt(double(n));
        h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h = std::min(h, t_end);
    }

    auto halt = [&](const std::string& why) {
        throw BoundaryHalt("integration halted at t=" + std::to_string(t) + ": " + why, std::move(traj));
    };

    while (t < t_end) {
        if (traj.accepted_steps + traj.rejected_steps >= opts.max_steps) halt("step budget exhausted");
        bool last = false;
        if (t + h >= t_end) {
            h = t_end - t;
            last = true;
        }
        bool ok = true;
        xs = x + h * a21 * k1;
        ok = ok && rhs(t + c2 * h, xs, k2);
        if (ok) { xs = x + h * (a31 * k1 + a32 * k2); ok = rhs(t + c3 * h, xs, k3); }
        if (ok) { xs = x + h * (a41 * k1 + a42 * k2 + a43 * k3); ok = rhs(t + c4 * h, xs, k4); }
        if (ok) { xs = x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4); ok = rhs(t + c5 * h, xs, k5); }
        if (ok) { xs = x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5); ok = rhs(t + h, xs, k6); }
        if (ok) {
            xnew = x + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            ok = (xnew.array() >= opts.positivity_floor).all() && rhs(t + h, xnew, k7);
        }
        if (!ok) {
            ++traj.rejected_steps;
            h *= 0.25;
            if (h < opts.min_step * std::max(1.0, std::fabs(t))) halt("state approaches the positivity boundary");
            continue;
        }
        const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = error_norm(err, x, xnew, opts);
        if (!(en <= 1.0)) {
            ++traj.rejected_steps;
            const double fac = std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.2;
            h *= fac;
            if (h < opts.min_step * std::max(1.0, std::fabs(t))) halt("step size underflow");
            continue;
        }
        ++traj.accepted_steps;
        const double t_new = last ? t_end : t + h;
        if (grid.empty()) {
            record(t_new, xnew, h);
        } else {
            // Dense output on (t, t_new].
            const Vec r1 = x, r2 = xnew - x;
            const Vec r3 = h * k1 - r2;
            const Vec r4 = r2 - h * k7 - r3;
            const Vec r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            while (next_out < grid.size() && grid[next_out] <= t_new * (1.0 + 1e-14)) {
                const double to = std::min(grid[next_out], t_end);
                const double th = (to - t) / h, th1 = 1.0 - th;
                Vec xo = r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
                if (!(xo.array() > 0.0).all()) xo = xo.cwiseMax(opts.positivity_floor);
                record(grid[next_out++], xo, h);
            }
        }
        t = t_new;
        x = xnew;
        k1 = k7;
        if (last) break;
        const double fac = std::min(10.0, std::max(0.2, 0.9 * std::pow(std::max(en, 1e-10), -0.2)));
        h *= fac;
    }
    return traj;
}

}  // namespace

RateSchedule RateSchedule::constant(const Vec& kplus, const Vec& kminus) {
    RateSchedule s;
    s.times = {0.0};
    s.kplus = {kplus};
    s.kminus = {kminus};
    return s;
}

void RateSchedule::validate(int num_edges) const {
    if (times.empty()) throw InvalidArgument("rate schedule is empty");
    if (kplus.size() != times.size() || kminus.size() != times.size())
        throw DimensionError("rate schedule needs one rate pair per time");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i > 0 && !(times[i] > times[i - 1])) throw InvalidArgument("rate schedule times must increase strictly");
        if (kplus[i].size() != num_edges || kminus[i].size() != num_edges)
            throw DimensionError("rate schedule entry has wrong length");
        require_positive(kplus[i], "rate schedule k+");
        require_positive(kminus[i], "rate schedule k-");
    }
}

void RateSchedule::at(double t, Vec& kp, Vec& km) const {
    if (t <= times.front()) {
        kp = kplus.front();
        km = kminus.front();
        return;
    }
    if (t >= times.back()) {
        kp = kplus.back();
        km = kminus.back();
        return;
    }
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times.begin());
    const double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    kp = (1.0 - w) * kplus[i - 1] + w * kplus[i];
    km = (1.0 - w) * kminus[i - 1] + w * kminus[i];
}

std::vector<double> uniform_grid(double t_end, int points) {
    if (points < 2) throw InvalidArgument("uniform_grid: need at least two points");
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = t_end * i / (points - 1);
    g.back() = t_end;
    return g;
}

Trajectory simulate(const ReactionNetwork& net, const Vec& x0, double t_end, const IntegratorOptions& opts) {
    const Vec kp = net.kplus(), km = net.kminus();
    return integrate(
        net, x0, t_end,
        [kp, km](double, Vec& p, Vec& m) {
            p = kp;
            m = km;
        },
        opts);
}

Trajectory simulate_timedep(const ReactionNetwork& net, const Vec& x0, double t_end, const RateSchedule& schedule,
                            const IntegratorOptions& opts) {
    schedule.validate(net.num_edges());
    return integrate(
        net, x0, t_end, [&schedule](double t, Vec& p, Vec& m) { schedule.at(t, p, m); }, opts);
}

double conservation_drift(const Trajectory& traj) {
    if (traj.empty() || traj.ledger.front().conserved.size() == 0) return 0.0;
    const Vec& eta0 = traj.ledger.front().conserved;
    const double scale = std::max(eta0.lpNorm<Eigen::Infinity>(), std::numeric_limits<double>::min());
    double m = 0.0;
    for (const LedgerRow& row : traj.ledger) m = std::max(m, (row.conserved - eta0).lpNorm<Eigen::Infinity>());
    return m / scale;
}

double sup_relative_deviation(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size()) throw DimensionError("sup_relative_deviation: trajectories differ in length");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::fabs(a.times[k] - b.times[k]) > 1e-12 * (1.0 + std::fabs(a.times[k])))
            throw InvalidArgument("sup_relative_deviation: trajectories use different grids");
        num = std::max(num, (a.states[k] - b.states[k]).lpNorm<Eigen::Infinity>());
        den = std::max(den, a.states[k].lpNorm<Eigen::Infinity>());
    }
    return den > 0.0 ? num / den : num;
}

double simpson(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size()) throw DimensionError("simpson: abscissa and ordinate lengths differ");
    const std::size_t n = t.size();
    if (n < 2) return 0.0;
    if (n == 2) return 0.5 * (t[1] - t[0]) * (y[0] + y[1]);
    double s = 0.0;
    std::size_t i = 0;
    for (; i + 2 < n; i += 2) {
        const double h0 = t[i + 1] - t[i], h1 = t[i + 2] - t[i + 1];
        s += (h0 + h1) / 6.0 *
             ((2.0 - h1 / h0) * y[i] + (h0 + h1) * (h0 + h1) / (h0 * h1) * y[i + 1] + (2.0 - h0 / h1) * y[i + 2]);
    }
    if (i + 1 < n) {
        // One interval left: integrate the quadratic through the last three points over it.
        const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
        s += h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1)) * y[i + 1] + h1 * (h1 + 3.0 * h0) / (6.0 * h0) * y[i] -
             h1 * h1 * h1 / (6.0 * h0 * (h0 + h1)) * y[i - 1];
    }
    return s;
}

DeGiorgiReport degiorgi_ledger(const Trajectory& traj, const ReactionNetwork& net, const Vec& x_ref) {
    const WegscheiderReport w = wegscheider_check(net);
    if (!w.is_equilibrium)
        throw InvalidArgument("degiorgi_ledger: network violates the Wegscheider condition (cycle affinity " +
                              std::to_string(w.cycle_affinity.lpNorm<Eigen::Infinity>()) +
                              "); the balance holds only for gradient flows");
    if (x_ref.size() != net.num_species()) throw DimensionError("degiorgi_ledger: reference has wrong length");
    require_positive(x_ref, "degiorgi_ledger reference");
    const double ref_force = lma_flux(net, x_ref).force.lpNorm<Eigen::Infinity>();
    if (ref_force > 1e-8)
        throw InvalidArgument("degiorgi_ledger: reference is not an equilibrium point (force residual " +
                              std::to_string(ref_force) + ")");
    if (traj.size() < 2) throw InvalidArgument("degiorgi_ledger: trajectory needs at least two samples");

    const ThermoFunction kl = ThermoFunction::kl_unit(net.num_species());
    std::vector<double> integrand(traj.size()), div(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const EdgePair p = lma_flux(net, traj.states[i]);
        const DissipationFunction psi = p.dissipation();
        integrand[i] = psi.dual(p.force) + psi.primal(p.flux);
        div[i] = kl.bregman(traj.states[i], x_ref);
    }
    DeGiorgiReport r;
    r.lhs = div.front() - div.back();
    r.rhs = simpson(traj.times, integrand);
    r.gap = r.lhs - r.rhs;
    r.tolerance = std::max(1e-6, 1e-4 * std::fabs(r.lhs));
    r.balanced = std::fabs(r.gap) < r.tolerance;
    for (std::size_t i = 1; i < div.size(); ++i) r.max_increase = std::max(r.max_increase, div[i] - div[i - 1]);
    r.monotone = r.max_increase <= 1e-12 * (1.0 + std::fabs(div.front()));
    return r;
}

LyapunovReport lyapunov_monitor(const Trajectory& traj, const ReactionNetwork& net, const Vec& x_ref) {
    if (x_ref.size() != net.num_species()) throw DimensionError("lyapunov_monitor: reference has wrong length");
    require_positive(x_ref, "lyapunov_monitor reference");
    LyapunovReport r;
    r.reference_cb_residual = (net.incidence_d() * lma_flux(net, x_ref).flux).lpNorm<Eigen::Infinity>();
    r.max_rate = -std::numeric_limits<double>::infinity();
    const Vec ln_ref = x_ref.array().log();
    for (const Vec& x : traj.states) {
        const EdgePair p = lma_flux(net, x);
        const Vec fs = net.stoich_d().transpose() * (x.array().log().matrix() - ln_ref);
        const double rate = -p.flux.dot(fs);
        r.rates.push_back(rate);
        r.max_rate = std::max(r.max_rate, rate);
        if (rate > r.threshold) ++r.violations;
    }
    return r;
}

}  // namespace dualflow
