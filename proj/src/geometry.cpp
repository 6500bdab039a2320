#include "fblab/geometry.hpp"
#include "fblab/errors.hpp"

#include <cmath>

namespace fblab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEndEps = 1e-8; // crossover to limiting formulas at theta in {0, pi/2}

void check_point(const ChartPoint& q) {
    if (!(q.r > 0) || q.theta < 0 || q.theta > kPi / 2)
        throw DomainError("chart point outside r>0, theta in [0,pi/2]");
}

struct Local {
    double g, dg, ddg;
    double S2, sigma, rs; // S2 = 9g^2+g'^2, sigma = 1+r^4 S2, rs = sqrt(sigma)
};

Local local_data(const AngularProfile& p, const ChartPoint& q) {
    Local l;
    l.g = p.eval_g(q.theta);
    l.dg = p.eval_dg(q.theta);
    l.ddg = p.eval_ddg(q.theta);
    l.S2 = 9 * l.g * l.g + l.dg * l.dg;
    const double r2 = q.r * q.r, r4 = r2 * r2;
    l.sigma = 1 + r4 * l.S2;
    l.rs = std::sqrt(l.sigma);
    return l;
}

} // namespace

double CurvatureSpectrum::H(int l) const {
    auto pw = [l](double x) {
        double v = 1;
        for (int i = 0; i < l; ++i) v *= x;
        return v;
    };
    return 3 * pw(mu1) + 3 * pw(mu2) + pw(lam1) + pw(lam2);
}

double CurvatureSpectrum::max_abs() const {
    return std::max(std::max(std::abs(mu1), std::abs(mu2)),
                    std::max(std::abs(lam1), std::abs(lam2)));
}

double model_height(const AngularProfile& p, const ChartPoint& q) {
    check_point(q);
    return q.r * q.r * q.r * p.eval_g(q.theta);
}

MetricBlocks metric_blocks(const AngularProfile& p, const ChartPoint& q) {
    check_point(q);
    const Local l = local_data(p, q);
    const double r = q.r, r2 = r * r, r4 = r2 * r2, r5 = r4 * r;
    MetricBlocks m;
    m.sigma = l.sigma;
    m.g2[0][0] = 1 + 9 * r4 * l.g * l.g;
    m.g2[0][1] = m.g2[1][0] = 3 * r5 * l.g * l.dg;
    m.g2[1][1] = r2 * (1 + l.dg * l.dg * r4);
    const double det = r2 * l.sigma; // det g2 = r^2 sigma
    m.g2_inv[0][0] = m.g2[1][1] / det;
    m.g2_inv[0][1] = m.g2_inv[1][0] = -m.g2[0][1] / det;
    m.g2_inv[1][1] = m.g2[0][0] / det;
    const double cu = std::cos(q.theta), sv = std::sin(q.theta);
    m.sym_u = r2 * cu * cu;
    m.sym_v = r2 * sv * sv;
    return m;
}

CurvatureSpectrum curvature_spectrum(const AngularProfile& p, const ChartPoint& q) {
    check_point(q);
    const Local l = local_data(p, q);
    const double r = q.r, r2 = r * r, r3 = r2 * r;
    const double th = q.theta;
    CurvatureSpectrum c;

    // mu1 = (r/sqrt(sigma))(3g - g' tan), mu2 = (r/sqrt(sigma))(3g + g' cot);
    // at the poles substitute the limit g' tan -> -g'', g' cot -> g''.
    double t1, t2;
    if (th > kPi / 2 - kEndEps)
        t1 = 3 * l.g + l.ddg;
    else
        t1 = 3 * l.g - l.dg * std::tan(th);
    if (th < kEndEps)
        t2 = 3 * l.g + l.ddg;
    else
        t2 = 3 * l.g + l.dg / std::tan(th);
    c.mu1 = r / l.rs * t1;
    c.mu2 = r / l.rs * t2;

    // 2x2 block: shape operator (A_inf)_2 . g2^{-1}
    const MetricBlocks m = metric_blocks(p, q);
    const double a00 = 6 * r * l.g / l.rs;
    const double a01 = 2 * r2 * l.dg / l.rs;
    const double a11 = r3 * (3 * l.g + l.ddg) / l.rs;
    const double w00 = a00 * m.g2_inv[0][0] + a01 * m.g2_inv[1][0];
    const double w01 = a00 * m.g2_inv[0][1] + a01 * m.g2_inv[1][1];
    const double w10 = a01 * m.g2_inv[0][0] + a11 * m.g2_inv[1][0];
    const double w11 = a01 * m.g2_inv[0][1] + a11 * m.g2_inv[1][1];
    const double tr = w00 + w11;
    const double det = w00 * w11 - w01 * w10;
    double disc = tr * tr - 4 * det;
    if (disc < 0) {
        if (disc < -1e-10 * std::max(1.0, tr * tr))
            throw NumericalInconsistency("shape operator block has complex eigenvalues");
        disc = 0;
    }
    const double rt = std::sqrt(disc);
    c.lam1 = (tr + rt) / 2;
    c.lam2 = (tr - rt) / 2;
    return c;
}

double h3_closed_form(const CurvatureSpectrum& c) {
    const double mu = c.mu1 + c.mu2, la = c.lam1 + c.lam2;
    return 3 * mu * (c.mu1 * c.mu1 - c.mu1 * c.mu2 + c.mu2 * c.mu2) +
           la * (c.lam1 * c.lam1 - c.lam1 * c.lam2 + c.lam2 * c.lam2);
}

double mu_sum_closed_form(const AngularProfile& p, const ChartPoint& q) {
    check_point(q);
    const Local l = local_data(p, q);
    const double s = std::sin(2 * q.theta);
    double ang;
    if (std::abs(s) < kEndEps)
        ang = 6 * l.g + l.ddg; // limit of 2 g' cot 2theta at both poles
    else
        ang = 6 * l.g + 2 * l.dg * std::cos(2 * q.theta) / s;
    return q.r / l.rs * ang;
}

double homogenized_divergence(const AngularProfile& p, const ChartPoint& q) {
    check_point(q);
    const double s = std::sin(2 * q.theta);
    if (std::abs(s) < kEndEps)
        throw DomainError("divergence evaluation at a degenerate angle");
    const double res = profile_ode_residual(q.theta, p.eval_g(q.theta), p.eval_dg(q.theta),
                                            p.eval_ddg(q.theta));
    return res / (q.r * s * s * s);
}

double graph_mean_curvature(const AngularProfile& p, const ChartPoint& q) {
    check_point(q);
    const Local l = local_data(p, q);
    const double r = q.r, r2 = r * r, r3 = r2 * r, r4 = r2 * r2;
    const double S = std::sqrt(l.S2);
    // Q = sqrt(sigma) (r^2 S + sqrt(sigma)); grad F = (3 r^2 g, r^2 g') in the
    // orthonormal polar frame, |grad F| = r^2 S.
    const double sig_r = 4 * r3 * l.S2;
    const double sig_t = 2 * r4 * l.dg * (9 * l.g + l.ddg);
    const double S_t = l.dg * (9 * l.g + l.ddg) / S;
    const double Q = l.rs * (r2 * S + l.rs);
    const double Q_r = sig_r / (2 * l.rs) * (r2 * S + l.rs) + l.rs * (2 * r * S + sig_r / (2 * l.rs));
    const double Q_t = sig_t / (2 * l.rs) * (r2 * S + l.rs) + l.rs * (r2 * S_t + sig_t / (2 * l.rs));
    const double Fr = 3 * r2 * l.g, Ft = r2 * l.dg; // orthonormal components
    const double gradF = r2 * S;
    if (gradF == 0)
        throw DomainError("grad F vanishes");
    return (Fr * Q_r + Ft * Q_t / r) / (gradF * Q * Q);
}

double graph_mean_curvature_fd(const std::function<double(double, double)>& f, double u, double v,
                               double h) {
    if (!(h > 0))
        throw DomainError("fd step must be positive");
    auto gu = [&](double a, double b) { return (f(a + h, b) - f(a - h, b)) / (2 * h); };
    auto gv = [&](double a, double b) { return (f(a, b + h) - f(a, b - h)) / (2 * h); };
    auto Q = [&](double a, double b) {
        const double p = gu(a, b), q = gv(a, b);
        const double gf = std::sqrt(p * p + q * q);
        const double w = std::sqrt(1 + gf * gf);
        return w * (gf + w);
    };
    const double fu = gu(u, v), fv = gv(u, v);
    const double gf = std::sqrt(fu * fu + fv * fv);
    if (gf == 0)
        return 0;
    const double Qu = (Q(u + h, v) - Q(u - h, v)) / (2 * h);
    const double Qv = (Q(u, v + h) - Q(u, v - h)) / (2 * h);
    const double q0 = Q(u, v);
    return (fu * Qu + fv * Qv) / (gf * q0 * q0);
}

double hf_decay_slope(const AngularProfile& p, double theta, double r0, double r1, int npts) {
    if (!(r1 > r0) || r0 <= 0 || npts < 2)
        throw DomainError("bad decay-fit window");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < npts; ++i) {
        const double r = r0 * std::pow(r1 / r0, double(i) / (npts - 1));
        const double H = std::abs(graph_mean_curvature(p, {r, theta}));
        if (H <= 0)
            throw NumericalInconsistency("vanishing H in decay fit");
        const double x = std::log(r), y = std::log(H);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    return (npts * sxy - sx * sy) / (npts * sxx - sx * sx);
}

namespace {

struct Christoffel {
    double rrr, trr, rtr, ttr, rtt, ttt; // Gamma^a_{bc} named a|bc
};

Christoffel christoffel(const Local& l, double r) {
    const double r2 = r * r, r3 = r2 * r, r4 = r2 * r2, r5 = r4 * r;
    Christoffel c;
    c.rrr = 18 * r3 * l.g * l.g / l.sigma;
    c.trr = 6 * r2 * l.g * l.dg / l.sigma;
    c.rtr = 6 * r4 * l.g * l.dg / l.sigma;
    c.ttr = (1 / r + 3 * r3 * (l.dg * l.dg + 3 * l.g * l.g)) / l.sigma;
    c.rtt = (r5 * (3 * l.g * l.ddg - l.dg * l.dg) - r) / l.sigma;
    c.ttt = r4 * l.dg * (l.ddg - 3 * l.g) / l.sigma;
    return c;
}

} // namespace

IntrinsicDerivs intrinsic_derivatives(const AngularProfile& p,
                                      const std::function<double(double, double)>& h,
                                      const ChartPoint& q, double fd) {
    check_point(q);
    if (!(fd > 0))
        throw DomainError("fd step must be positive");
    if (q.theta - 2 * fd < 0 || q.theta + 2 * fd > kPi / 2 || q.r - 2 * fd <= 0)
        throw BoundaryError("stencil leaves the chart domain");
    const double r = q.r, t = q.theta;
    const double hr = (h(r + fd, t) - h(r - fd, t)) / (2 * fd);
    const double ht = (h(r, t + fd) - h(r, t - fd)) / (2 * fd);
    const double hrr = (h(r + fd, t) - 2 * h(r, t) + h(r - fd, t)) / (fd * fd);
    const double htt = (h(r, t + fd) - 2 * h(r, t) + h(r, t - fd)) / (fd * fd);
    const double hrt = (h(r + fd, t + fd) - h(r + fd, t - fd) - h(r - fd, t + fd) +
                        h(r - fd, t - fd)) / (4 * fd * fd);

    const Local l = local_data(p, q);
    const MetricBlocks m = metric_blocks(p, q);
    // contravariant gradient
    const double Hr = m.g2_inv[0][0] * hr + m.g2_inv[0][1] * ht;
    const double Ht = m.g2_inv[1][0] * hr + m.g2_inv[1][1] * ht;
    const double grad2 = Hr * hr + Ht * ht;

    // covariant chart hessian
    const Christoffel c = christoffel(l, r);
    double H2[2][2];
    H2[0][0] = hrr - c.rrr * hr - c.trr * ht;
    H2[0][1] = H2[1][0] = hrt - c.rtr * hr - c.ttr * ht;
    H2[1][1] = htt - c.rtt * hr - c.ttt * ht;
    double s2 = 0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y)
                    s2 += m.g2_inv[a][x] * m.g2_inv[b][y] * H2[a][b] * H2[x][y];

    // symmetry-orbit block: 3 directions per warped sphere factor with warp
    // factors U = r cos(theta), V = r sin(theta)
    const double tn = std::tan(t);
    if (std::abs(std::cos(t)) < kEndEps || std::abs(std::sin(t)) < kEndEps)
        throw BoundaryError("orbit block degenerate at the poles");
    const double wu = Hr / r - Ht * tn;
    const double wv = Hr / r + Ht / tn;
    const double ssym = 3 * wu * wu + 3 * wv * wv;

    IntrinsicDerivs out;
    out.grad_mag = std::sqrt(std::max(0.0, grad2));
    out.hess_mag = std::sqrt(std::max(0.0, s2 + ssym));
    return out;
}

double grad_bound_majorant(const ChartPoint& q, double hr, double ht) {
    const double vt = std::abs(q.theta - kPi / 4);
    const double r = q.r;
    return std::abs(hr) + (vt / r + 1 / (r * r * r)) * std::abs(ht);
}

double hess_bound_majorant(const ChartPoint& q, double hr, double ht, double hrr, double hrt,
                           double htt) {
    const double vt = std::abs(q.theta - kPi / 4);
    const double r = q.r, w = vt / r + 1 / (r * r * r);
    const double r6 = std::pow(r, 6);
    return std::abs(hrr) + w * std::abs(hrt) + w * w * std::abs(htt) +
           grad_bound_majorant(q, hr, ht) / r + (1 / r6 + vt * vt / (r * r)) * std::abs(ht);
}

LBCoeffs lb_coeffs(const AngularProfile& p, const ChartPoint& q) {
    check_point(q);
    const Local l = local_data(p, q);
    const double r = q.r, r2 = r * r, r4 = r2 * r2, r5 = r4 * r;
    const double r6 = r4 * r2, r7 = r6 * r, r9 = r7 * r2, r10 = r9 * r;
    const double s = std::sin(2 * q.theta), c = std::cos(2 * q.theta);
    if (std::abs(s) < kEndEps)
        throw DomainError("Laplace-Beltrami coefficients degenerate at the poles");

    LBCoeffs o;
    o.grr = (1 + r4 * l.dg * l.dg) / l.sigma;
    o.grt = -3 * r * r2 * l.g * l.dg / l.sigma;
    o.gtt = (1 + 9 * r4 * l.g * l.g) / (r2 * l.sigma);
    o.B = r7 * l.rs * s * s * s;
    o.A2 = curvature_spectrum(p, q).A2();

    // first-order coefficients C^a = div of the flux densities P^{ab} = B g^{ab};
    // the common factor sin^3(2 theta) is divided out analytically.
    const double sig_r = 4 * r * r2 * l.S2;
    const double sig_t = 2 * r4 * l.dg * (9 * l.g + l.ddg);
    const double dis_r = -sig_r / (2 * l.sigma * l.rs); // d(1/sqrt(sigma))/dr
    const double dis_t = -sig_t / (2 * l.sigma * l.rs);

    const double p2 = -3 * r10 * l.g * l.dg / l.rs;
    const double p3 = r5 * (1 + 9 * r4 * l.g * l.g) / l.rs;

    const double dp1_r = (7 * r6 + 11 * r10 * l.dg * l.dg) / l.rs +
                         r7 * (1 + r4 * l.dg * l.dg) * dis_r;
    const double dp2_t = -3 * r10 * ((l.dg * l.dg + l.g * l.ddg) / l.rs + l.g * l.dg * dis_t);
    const double dp2_r = -3 * l.g * l.dg * (10 * r9 / l.rs + r10 * dis_r);
    const double dp3_t = r5 * (18 * r4 * l.g * l.dg / l.rs + (1 + 9 * r4 * l.g * l.g) * dis_t);

    const double den = r7 * l.rs, cs = 6 * c / s;
    o.Cr = (dp1_r + dp2_t + cs * p2) / den;
    o.Ct = (dp2_r + dp3_t + cs * p3) / den;
    return o;
}

double laplace_beltrami(const AngularProfile& p, const std::function<double(double, double)>& f,
                        const ChartPoint& q, double fd_r, double fd_t) {
    if (!(fd_r > 0) || !(fd_t > 0))
        throw DomainError("fd steps must be positive");
    const LBCoeffs c = lb_coeffs(p, q);
    const double r = q.r, t = q.theta;
    const double frr = (f(r + fd_r, t) - 2 * f(r, t) + f(r - fd_r, t)) / (fd_r * fd_r);
    const double ftt = (f(r, t + fd_t) - 2 * f(r, t) + f(r, t - fd_t)) / (fd_t * fd_t);
    const double frt = (f(r + fd_r, t + fd_t) - f(r + fd_r, t - fd_t) - f(r - fd_r, t + fd_t) +
                        f(r - fd_r, t - fd_t)) / (4 * fd_r * fd_t);
    const double fr = (f(r + fd_r, t) - f(r - fd_r, t)) / (2 * fd_r);
    const double ft = (f(r, t + fd_t) - f(r, t - fd_t)) / (2 * fd_t);
    return c.grr * frr + 2 * c.grt * frt + c.gtt * ftt + c.Cr * fr + c.Ct * ft;
}

double jacobi_apply(const AngularProfile& p, const std::function<double(double, double)>& f,
                    const ChartPoint& q, double fd_r, double fd_t) {
    const LBCoeffs c = lb_coeffs(p, q);
    return laplace_beltrami(p, f, q, fd_r, fd_t) + c.A2 * f(q.r, q.theta);
}

} // namespace fblab
