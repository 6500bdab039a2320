#include "fblab/profile.hpp"
#include "fblab/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace fblab {
namespace {

using State = std::array<double, 2>;
namespace ode = boost::numeric::odeint;

constexpr double kPi = 3.14159265358979323846;

// g'' solved from 9 g^2 s g'' + 21 g s S^2 + 6 g' S^2 c - 9 g g'^2 s = 0,
// s = sin(2t), c = cos(2t), S^2 = 9g^2 + g'^2.
void rhs(const State& y, State& dydt, double th) {
    const double g = y[0], gp = y[1];
    const double s = std::sin(2 * th), c = std::cos(2 * th);
    const double S2 = 9 * g * g + gp * gp;
    dydt[0] = gp;
    dydt[1] = (9 * g * gp * gp * s - 21 * g * s * S2 - 6 * gp * S2 * c) / (9 * g * g * s);
}

// Fractional series at the Simons-cone crossing: with t = theta - pi/4 and
// x = t^(1/3),  g = t * sum_m a_m x^m.  a_0 = 1 (normalization g'(pi/4)=1),
// a_1 = b is the free branch coefficient, the rest follow recursively.
struct FracSeries {
    double a[9];
    explicit FracSeries(double b) {
        const double b2 = b * b, b3 = b2 * b, b6 = b3 * b3;
        a[0] = 1.0;
        a[1] = b;
        a[2] = 4.0 * b2 / 3.0;
        a[3] = 2.0 * b3;
        a[4] = 260.0 * b2 * b2 / 81.0;
        a[5] = 1309.0 * b2 * b3 / 243.0;
        a[6] = 28.0 * b6 / 3.0 - 13.0 / 6.0;
        a[7] = 247.0 * b * (6160.0 * b6 - 729.0) / 91854.0;
        a[8] = b2 * (8254792.0 * b6 - 703485.0) / 275562.0;
    }
    void eval(double t, double& g, double& gp, double& gpp) const {
        const double x = std::cbrt(t);
        double gs = 0, gps = 0, gpps = 0, xm = 1.0;
        for (int m = 0; m <= 8; ++m) {
            const double e = 1.0 + m / 3.0;
            gs += a[m] * xm;
            gps += a[m] * e * xm;
            if (m >= 1) gpps += a[m] * e * (m / 3.0) * xm / (x * x * x);
            xm *= x;
        }
        g = t * gs;
        gp = gps;
        gpp = gpps / 1.0; // sum of a_m e (m/3) t^(m/3 - 1); singular ~ t^(-2/3)
    }
};

// Even endpoint series at theta = pi/2 (psi = theta - pi/2):
// g = A (1 + sum_k e_k psi^k), k = 2,4,6,8.
constexpr double kE2 = -21.0 / 8.0;
constexpr double kE4 = 973.0 / 512.0;
constexpr double kE6 = -263669.0 / 491520.0;
constexpr double kE8 = 6816623.0 / 62914560.0;

void end_series(double A, double psi, double& g, double& gp, double& gpp) {
    const double p2 = psi * psi;
    g = A * (1 + p2 * (kE2 + p2 * (kE4 + p2 * (kE6 + p2 * kE8))));
    gp = A * psi * (2 * kE2 + p2 * (4 * kE4 + p2 * (6 * kE6 + p2 * 8 * kE8)));
    gpp = A * (2 * kE2 + p2 * (12 * kE4 + p2 * (30 * kE6 + p2 * 56 * kE8)));
}

struct Recorder {
    std::vector<double>* th;
    std::vector<double>* g;
    std::vector<double>* dg;
    void operator()(const State& y, double t) const {
        th->push_back(t);
        g->push_back(y[0]);
        dg->push_back(y[1]);
    }
};

State integrate_to(State y, double th0, double th1) {
    auto stepper = ode::make_controlled(1e-15, 1e-13, ode::runge_kutta_fehlberg78<State>());
    const double dt = (th1 > th0 ? 1e-4 : -1e-4);
    ode::integrate_adaptive(stepper, rhs, y, th0, th1, dt);
    return y;
}

void integrate_times(State y, const std::vector<double>& times, AngularProfile::Segment& seg) {
    auto stepper = ode::make_controlled(1e-15, 1e-13, ode::runge_kutta_fehlberg78<State>());
    const double dt = (times.back() > times.front() ? 1e-4 : -1e-4);
    Recorder rec{&seg.theta, &seg.g, &seg.dg};
    ode::integrate_times(stepper, rhs, y, times.begin(), times.end(), dt, rec);
}

// Hermite cubic on a sorted segment.
double hermite(const AngularProfile::Segment& s, double th, int deriv) {
    auto it = std::upper_bound(s.theta.begin(), s.theta.end(), th);
    size_t i = (it == s.theta.begin()) ? 0 : (it - s.theta.begin() - 1);
    if (i + 1 >= s.theta.size()) i = s.theta.size() - 2;
    const double x0 = s.theta[i], x1 = s.theta[i + 1], h = x1 - x0;
    const double u = (th - x0) / h;
    const double g0 = s.g[i], g1 = s.g[i + 1], d0 = s.dg[i] * h, d1 = s.dg[i + 1] * h;
    if (deriv == 0) {
        const double u2 = u * u, u3 = u2 * u;
        return g0 * (2 * u3 - 3 * u2 + 1) + d0 * (u3 - 2 * u2 + u) + g1 * (-2 * u3 + 3 * u2) +
               d1 * (u3 - u2);
    }
    const double u2 = u * u;
    return (g0 * (6 * u2 - 6 * u) + d0 * (3 * u2 - 4 * u + 1) + g1 * (6 * u - 6 * u2) +
            d1 * (3 * u2 - 2 * u)) / h;
}

} // namespace

double profile_ode_residual(double theta, double g, double dg, double ddg) {
    const double s = std::sin(2 * theta), c = std::cos(2 * theta);
    const double S2 = 9 * g * g + dg * dg, S = std::sqrt(S2);
    const double s2 = s * s, s3 = s2 * s;
    return 21 * g * s3 / S + ddg * s3 / S + 6 * dg * s2 * c / S -
           dg * s3 * (9 * g * dg + dg * ddg) / (S * S2);
}

AngularProfile solve_angular_profile(double tolerance) {
    if (!(tolerance > 0) || tolerance > 1e-4)
        throw DomainError("solve_angular_profile: tolerance must lie in (0, 1e-4]");

    AngularProfile p;
    p.tolerance = tolerance;
    p.t_ser = 0.01;
    p.psi_ser = 0.02;
    p.theta_c = 1.1;
    const double t0 = 1e-4, psi0 = 1e-3;

    // Inward reference trajectory from pi/2 with unit scale.
    State yin0;
    {
        double g, gp, gpp;
        end_series(1.0, -psi0, g, gp, gpp);
        yin0 = {g, gp};
    }
    const State yin_c = integrate_to(yin0, kPi / 2 - psi0, p.theta_c);
    const double q_in = yin_c[1] / yin_c[0];

    // Shoot on the fractional branch coefficient b, matching the
    // scale-invariant logarithmic derivative q = g'/g at theta_c.
    auto mismatch = [&](double b) -> double {
        FracSeries fs(b);
        double g, gp, gpp;
        fs.eval(t0, g, gp, gpp);
        const State yc = integrate_to({g, gp}, kPi / 4 + t0, p.theta_c);
        const double q = yc[1] / yc[0];
        if (!std::isfinite(q)) return std::numeric_limits<double>::infinity();
        return q - q_in;
    };
    double blo = 0.45, bhi = 0.95;
    double flo = mismatch(blo), fhi = mismatch(bhi);
    if (!(flo < 0) || !(fhi > 0))
        throw NonConvergence("solve_angular_profile: shooting bracket lost");
    for (int it = 0; it < 100; ++it) {
        const double bm = 0.5 * (blo + bhi);
        const double fm = mismatch(bm);
        (fm < 0 ? blo : bhi) = bm;
        (fm < 0 ? flo : fhi) = fm;
    }
    p.b_frac = 0.5 * (blo + bhi);

    // Final matched trajectories sampled on dense grids.
    FracSeries fs(p.b_frac);
    {
        double g, gp, gpp;
        fs.eval(t0, g, gp, gpp);
        const int n = 1600;
        std::vector<double> times{kPi / 4 + t0};
        for (int i = 0; i <= n; ++i)
            times.push_back(kPi / 4 + p.t_ser + (p.theta_c - kPi / 4 - p.t_ser) * i / n);
        AngularProfile::Segment raw;
        integrate_times({g, gp}, times, raw);
        p.seg_lo.theta.assign(raw.theta.begin() + 1, raw.theta.end());
        p.seg_lo.g.assign(raw.g.begin() + 1, raw.g.end());
        p.seg_lo.dg.assign(raw.dg.begin() + 1, raw.dg.end());
    }
    {
        const int n = 1600;
        std::vector<double> times{kPi / 2 - psi0};
        for (int i = 0; i <= n; ++i)
            times.push_back(kPi / 2 - p.psi_ser - (kPi / 2 - p.psi_ser - p.theta_c) * i / n);
        AngularProfile::Segment raw;
        integrate_times(yin0, times, raw);
        p.seg_hi.theta.assign(raw.theta.rbegin(), raw.theta.rend() - 1);
        p.seg_hi.g.assign(raw.g.rbegin(), raw.g.rend() - 1);
        p.seg_hi.dg.assign(raw.dg.rbegin(), raw.dg.rend() - 1);
    }

    // Scale the inward branch so both sides agree in value at theta_c,
    // then record the residual slope mismatch as the endpoint consistency.
    const double g_out = p.seg_lo.g.back(), dg_out = p.seg_lo.dg.back();
    const double g_in = p.seg_hi.g.front(), dg_in = p.seg_hi.dg.front();
    const double lam = g_out / g_in;
    for (auto& v : p.seg_hi.g) v *= lam;
    for (auto& v : p.seg_hi.dg) v *= lam;
    p.g_end = lam;
    p.dg_end_mismatch = std::abs(dg_out - lam * dg_in);
    if (p.dg_end_mismatch > 1e-6)
        throw NonConvergence("solve_angular_profile: endpoint slope mismatch too large");

    // Export grid (includes pi/4 as an exact node).
    const int n_exp = 2049;
    p.theta_grid.resize(n_exp);
    p.g.resize(n_exp);
    p.dg.resize(n_exp);
    p.ddg.resize(n_exp);
    for (int i = 0; i < n_exp; ++i) {
        const double th = (kPi / 2) * i / (n_exp - 1);
        p.theta_grid[i] = th;
        if (2 * i < n_exp - 1)
            continue; // lower half filled by mirroring below
        p.g[i] = p.eval_g(th);
        p.dg[i] = p.eval_dg(th);
        p.ddg[i] = p.eval_ddg(th);
    }
    // odd reflection about pi/4, exact at paired nodes
    for (int i = 0; 2 * i < n_exp - 1; ++i) {
        p.g[i] = -p.g[n_exp - 1 - i];
        p.dg[i] = p.dg[n_exp - 1 - i];
        p.ddg[i] = -p.ddg[n_exp - 1 - i];
    }

    // Residual sweep with an independent (finite-difference) second
    // derivative; probes stay clear of the cusp and the endpoints.
    double rmax = 0;
    for (int i = 0; i <= 300; ++i) {
        const double th = kPi / 4 + 0.1 + (kPi / 2 - 0.12 - kPi / 4) * i / 300.0;
        const double h = 2e-3; // wide 5-point stencil keeps interpolation noise below h^4 truncation
        const double ddg_fd = (-p.eval_dg(th + 2 * h) + 8 * p.eval_dg(th + h) -
                               8 * p.eval_dg(th - h) + p.eval_dg(th - 2 * h)) / (12 * h);
        rmax = std::max(rmax, std::abs(profile_ode_residual(th, p.eval_g(th), p.eval_dg(th), ddg_fd)));
    }
    // Near the cusp the fractional t^(4/3) branch defeats finite differencing;
    // there the second derivative comes from the local series, which is an
    // independent construction from the rearranged ODE used for integration.
    for (int i = 1; i <= 6; ++i) {
        const double th = kPi / 4 + 5e-4 * i;
        rmax = std::max(rmax, std::abs(profile_ode_residual(th, p.eval_g(th), p.eval_dg(th),
                                                            p.eval_ddg(th))));
    }
    p.residual_max = rmax;
    if (rmax > tolerance)
        throw ResidualTooLarge("solve_angular_profile: residual " + std::to_string(rmax));
    return p;
}

double AngularProfile::eval_g(double theta) const {
    if (theta < kPi / 4) return -eval_g(kPi / 2 - theta);
    const double t = theta - kPi / 4, psi = theta - kPi / 2;
    double g, gp, gpp;
    if (t <= t_ser) {
        FracSeries fs(b_frac);
        fs.eval(t, g, gp, gpp);
        return g;
    }
    if (-psi <= psi_ser) {
        end_series(g_end, psi, g, gp, gpp);
        return g;
    }
    return hermite(theta <= theta_c ? seg_lo : seg_hi, theta, 0);
}

double AngularProfile::eval_dg(double theta) const {
    if (theta < kPi / 4) return eval_dg(kPi / 2 - theta);
    const double t = theta - kPi / 4, psi = theta - kPi / 2;
    double g, gp, gpp;
    if (t <= t_ser) {
        if (t < 1e-13) return 1.0;
        FracSeries fs(b_frac);
        fs.eval(t, g, gp, gpp);
        return gp;
    }
    if (-psi <= psi_ser) {
        end_series(g_end, psi, g, gp, gpp);
        return gp;
    }
    return hermite(theta <= theta_c ? seg_lo : seg_hi, theta, 1);
}

double AngularProfile::eval_ddg(double theta) const {
    if (theta < kPi / 4) return -eval_ddg(kPi / 2 - theta);
    const double t = theta - kPi / 4, psi = theta - kPi / 2;
    double g, gp, gpp;
    if (t < 1e-13) return 0.0; // odd-limit convention on the cone ray
    if (t <= t_ser) {
        FracSeries fs(b_frac);
        fs.eval(t, g, gp, gpp);
        return gpp;
    }
    if (-psi <= psi_ser) {
        end_series(g_end, psi, g, gp, gpp);
        return gpp;
    }
    // away from the degeneracies the equation itself gives g''
    g = eval_g(theta);
    gp = eval_dg(theta);
    const double s = std::sin(2 * theta), c = std::cos(2 * theta);
    const double S2 = 9 * g * g + gp * gp;
    return (9 * g * gp * gp * s - 21 * g * s * S2 - 6 * gp * S2 * c) / (9 * g * g * s);
}

void AngularProfile::export_csv(std::ostream& os) const {
    os << "theta,g,dg,ddg\n";
    char buf[160];
    for (size_t i = 0; i < theta_grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", theta_grid[i], g[i], dg[i],
                      ddg[i]);
        os << buf;
    }
}

} // namespace fblab
