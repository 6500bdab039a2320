#include "fblab/fermi.hpp"
#include "fblab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

namespace fblab {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kThEps = 1e-8; // crossover to the axis limits of the mu ratios
} // namespace

void SurfaceSampler::mu_ratios(double u, double v, double& ru, double& rv) const {
    // generic interior fallback; samplers with axis limits override
    double fu, fv;
    gradient(u, v, fu, fv);
    if (u <= 0 || v <= 0)
        throw BoundaryError("mu_ratios fallback needs an interior chart point");
    ru = fu / u;
    rv = fv / v;
}

SlicePoint SurfaceSampler::position(double u, double v) const { return {u, v, height(u, v)}; }

void SurfaceSampler::normal(double u, double v, double& nu, double& nv, double& nt) const {
    double fu, fv;
    gradient(u, v, fu, fv);
    const double W = std::sqrt(1 + fu * fu + fv * fv);
    nu = -fu / W;
    nv = -fv / W;
    nt = 1 / W;
}

std::array<double, 8> SurfaceSampler::curvatures(double u, double v) const {
    double fu, fv, fuu, fuv, fvv, ru, rv;
    gradient(u, v, fu, fv);
    hessian(u, v, fuu, fuv, fvv);
    mu_ratios(u, v, ru, rv);
    const double q2 = fu * fu + fv * fv;
    const double W = std::sqrt(1 + q2);
    const double mu_u = ru / W, mu_v = rv / W;
    // lambda block: eigenvalues of (Hess/W).(I + grad x grad)^{-1}
    const double inv00 = 1 - fu * fu / (1 + q2), inv01 = -fu * fv / (1 + q2),
                 inv11 = 1 - fv * fv / (1 + q2);
    const double a00 = fuu / W, a01 = fuv / W, a11 = fvv / W;
    const double m00 = a00 * inv00 + a01 * inv01;
    const double m01 = a00 * inv01 + a01 * inv11;
    const double m10 = a01 * inv00 + a11 * inv01;
    const double m11 = a01 * inv01 + a11 * inv11;
    const double tr = m00 + m11, det = m00 * m11 - m01 * m10;
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4 * det));
    return {mu_u, mu_u, mu_u, mu_v, mu_v, mu_v, (tr + disc) / 2, (tr - disc) / 2};
}

double SphereSampler::height(double u, double v) const {
    const double s2 = R * R - u * u - v * v;
    if (s2 <= 0) throw DomainError("sphere chart point outside the equator");
    return -std::sqrt(s2);
}

void SphereSampler::gradient(double u, double v, double& fu, double& fv) const {
    const double s = -height(u, v);
    fu = u / s;
    fv = v / s;
}

void SphereSampler::hessian(double u, double v, double& fuu, double& fuv, double& fvv) const {
    const double s = -height(u, v), s3 = s * s * s;
    fuu = 1 / s + u * u / s3;
    fuv = u * v / s3;
    fvv = 1 / s + v * v / s3;
}

void SphereSampler::mu_ratios(double u, double v, double& ru, double& rv) const {
    ru = rv = 1 / -height(u, v);
}

ModelSampler::ModelSampler(std::shared_ptr<const AngularProfile> p, double a)
    : profile(std::move(p)), alpha(a) {
    if (!(alpha > 0)) throw DomainError("model sampler needs alpha > 0");
}

double ModelSampler::height(double u, double v) const {
    const double r = std::hypot(u, v);
    if (r == 0) return 0;
    return -alpha * alpha * r * r * r * profile->eval_g(std::atan2(v, u));
}

void ModelSampler::gradient(double u, double v, double& fu, double& fv) const {
    const double r = std::hypot(u, v);
    if (r == 0) {
        fu = fv = 0;
        return;
    }
    const double th = std::atan2(v, u);
    const double g = profile->eval_g(th), dg = profile->eval_dg(th);
    const double a2 = alpha * alpha;
    fu = a2 * (-3 * r * g * u + r * dg * v);
    fv = a2 * (-3 * r * g * v - r * dg * u);
}

void ModelSampler::hessian(double u, double v, double& fuu, double& fuv, double& fvv) const {
    const double r = std::hypot(u, v);
    if (r == 0) throw BoundaryError("model hessian undefined at the origin");
    const double th = std::atan2(v, u);
    const double g = profile->eval_g(th), dg = profile->eval_dg(th), ddg = profile->eval_ddg(th);
    const double a2 = alpha * alpha;
    fuu = a2 * (-3 * r * r * g - 3 * u * u * g + 4 * u * v * dg - v * v * ddg) / r;
    fvv = a2 * (-3 * r * r * g - 3 * v * v * g - 4 * u * v * dg - u * u * ddg) / r;
    fuv = a2 * (-3 * u * v * g + 2 * (v * v - u * u) * dg + u * v * ddg) / r;
}

void ModelSampler::mu_ratios(double u, double v, double& ru, double& rv) const {
    const double r = std::hypot(u, v);
    if (r == 0) throw BoundaryError("mu ratios undefined at the origin");
    const double th = std::atan2(v, u);
    const double g = profile->eval_g(th), dg = profile->eval_dg(th);
    const double a2 = alpha * alpha;
    // F_u/u = a2 r (dg tan(th) - 3 g); the dg factor vanishes at the axes,
    // where the product tends to -g'' of the endpoint
    if (th > kPi / 2 - kThEps)
        ru = a2 * r * (-3 * g - profile->eval_ddg(th));
    else
        ru = a2 * r * (dg * (v / u) - 3 * g);
    if (th < kThEps)
        rv = a2 * r * (-3 * g - profile->eval_ddg(th));
    else
        rv = a2 * r * (-dg * (u / v) - 3 * g);
}

SlicePoint from_fermi(const BandPoint& b, const SurfaceSampler& s) {
    double nu, nv, nt;
    s.normal(b.yu, b.yv, nu, nv, nt);
    const SlicePoint p = s.position(b.yu, b.yv);
    return {p.u + b.z * nu, p.v + b.z * nv, p.t + b.z * nt};
}

namespace {

struct Foot {
    double u, v, dist;
};

// damped Newton for the squared-distance minimization on the chart
bool newton_foot(const SlicePoint& x, const SurfaceSampler& s, double u0, double v0, Foot& out) {
    double u = std::max(u0, 1e-12), v = std::max(v0, 1e-12);
    const double cap = s.chart_radius();
    u = std::min(u, cap);
    v = std::min(v, cap);
    auto phi = [&](double a, double b) {
        const double F = s.height(a, b);
        return 0.5 * ((a - x.u) * (a - x.u) + (b - x.v) * (b - x.v) + (F - x.t) * (F - x.t));
    };
    double p;
    try {
        p = phi(u, v);
    } catch (const Error&) { // seed outside the sampler's chart (e.g. past the equator)
        return false;
    }
    for (int it = 0; it < 60; ++it) {
        double fu, fv, fuu, fuv, fvv;
        s.gradient(u, v, fu, fv);
        s.hessian(u, v, fuu, fuv, fvv);
        const double F = s.height(u, v), d = F - x.t;
        const double gu = (u - x.u) + d * fu, gv = (v - x.v) + d * fv;
        const double scale = 1 + std::abs(u) + std::abs(v) + std::abs(d);
        if (std::hypot(gu, gv) < 1e-13 * scale) {
            out = {u, v, std::sqrt(2 * p)};
            return true;
        }
        double h00 = 1 + fu * fu + d * fuu, h01 = fu * fv + d * fuv, h11 = 1 + fv * fv + d * fvv;
        double det = h00 * h11 - h01 * h01;
        double du, dv;
        if (det > 1e-14 * (1 + h00 * h00 + h11 * h11)) {
            du = -(h11 * gu - h01 * gv) / det;
            dv = -(-h01 * gu + h00 * gv) / det;
        } else { // fall back to gradient descent when the Hessian degenerates
            du = -gu;
            dv = -gv;
        }
        bool moved = false;
        for (int bt = 0; bt < 25; ++bt, du /= 2, dv /= 2) {
            const double un = std::clamp(u + du, 1e-12, cap);
            const double vn = std::clamp(v + dv, 1e-12, cap);
            double pn;
            try {
                pn = phi(un, vn);
            } catch (const Error&) { // left the chart: treat as a rejected step
                continue;
            }
            if (pn < p) {
                u = un;
                v = vn;
                p = pn;
                moved = true;
                break;
            }
        }
        if (!moved) {
            double fu2, fv2;
            s.gradient(u, v, fu2, fv2);
            const double d2 = s.height(u, v) - x.t;
            const double g2 = std::hypot((u - x.u) + d2 * fu2, (v - x.v) + d2 * fv2);
            if (g2 < 1e-8 * scale) {
                out = {u, v, std::sqrt(2 * p)};
                return true;
            }
            return false;
        }
    }
    return false;
}

std::vector<Foot> collect_feet(const SlicePoint& x, const SurfaceSampler& s, double spread) {
    std::vector<Foot> feet;
    const double offs[3] = {0, spread, -spread};
    for (double du : offs)
        for (double dv : offs) {
            Foot f;
            if (!newton_foot(x, s, x.u + du, x.v + dv, f)) continue;
            bool dup = false;
            for (const Foot& o : feet)
                if (std::hypot(f.u - o.u, f.v - o.v) < 1e-6 * (1 + std::hypot(o.u, o.v)))
                    dup = true;
            if (!dup) feet.push_back(f);
        }
    return feet;
}

} // namespace

BandPoint to_fermi(const SlicePoint& x, const SurfaceSampler& s, const BandConfig& cfg) {
    auto feet = collect_feet(x, s, cfg.half_width);
    if (feet.empty()) throw NewtonDiverged("to_fermi: foot search did not converge");
    std::sort(feet.begin(), feet.end(), [](const Foot& a, const Foot& b) { return a.dist < b.dist; });
    const Foot& best = feet.front();
    if (best.dist > cfg.half_width)
        throw OutsideBand("to_fermi: point farther than the band half-width");
    if (feet.size() > 1 && feet[1].dist <= best.dist + 1e-8 * (1 + best.dist) &&
        feet[1].dist <= cfg.half_width)
        throw AmbiguousProjection("to_fermi: two feet at equal distance (fold)");
    double nu, nv, nt;
    s.normal(best.u, best.v, nu, nv, nt);
    const SlicePoint p = s.position(best.u, best.v);
    const double z = (x.u - p.u) * nu + (x.v - p.v) * nv + (x.t - p.t) * nt;
    return {best.u, best.v, z};
}

LevelCurvature level_mean_curvature(const SurfaceSampler& s, double u, double v, double z,
                                    int series_order) {
    const auto ks = s.curvatures(u, v);
    LevelCurvature out;
    if (series_order == 0) {
        for (double k : ks) {
            if (k * z >= 1) throw FocalPoint("level curvature: k z >= 1");
            out.value += k / (1 - k * z);
        }
        return out;
    }
    if (series_order < 2) throw DomainError("series order must be >= 2");
    double h1 = 0;
    for (double k : ks) {
        if (std::abs(k * z) > 0.5)
            throw DomainError("series mode requires |k z| <= 1/2");
        h1 += k;
        double pw = k; // k^l z^{l-1} accumulated from l = 1
        for (int l = 2; l <= series_order; ++l) {
            pw *= k * z;
            out.value += pw;
        }
        const double a = std::abs(k * z);
        out.tail_bound += std::abs(k) * std::pow(a, series_order) / (1 - a);
    }
    out.tail_bound += std::abs(h1); // the dropped l = 1 term (minimality residual)
    return out;
}

namespace detail {

namespace {

// 2x2 metric of the level surface Gamma(z) in chart coordinates, with the
// block-radial area weight U^3 V^3 sqrt(det)
struct LevelMetric {
    double g11, g12, g22, B;
};

LevelMetric level_metric(const SurfaceSampler& s, double u, double v, double z) {
    double fu, fv, fuu, fuv, fvv;
    s.gradient(u, v, fu, fv);
    s.hessian(u, v, fuu, fuv, fvv);
    const double W2 = 1 + fu * fu + fv * fv, W = std::sqrt(W2);
    const double cu = (fu * fuu + fv * fuv) / (W2 * W); // -d_u (1/W)
    const double cv = (fu * fuv + fv * fvv) / (W2 * W);
    // P(u,v) = (u,v,F) + z nu;  dP/du, dP/dv
    const double pu[3] = {1 - z * (fuu / W - fu * cu), -z * (fuv / W - fv * cu), fu - z * cu};
    const double pv[3] = {-z * (fuv / W - fu * cv), 1 - z * (fvv / W - fv * cv), fv - z * cv};
    const double U = u - z * fu / W, V = v - z * fv / W;
    LevelMetric m;
    m.g11 = pu[0] * pu[0] + pu[1] * pu[1] + pu[2] * pu[2];
    m.g12 = pu[0] * pv[0] + pu[1] * pv[1] + pu[2] * pv[2];
    m.g22 = pv[0] * pv[0] + pv[1] * pv[1] + pv[2] * pv[2];
    const double det = m.g11 * m.g22 - m.g12 * m.g12;
    if (det <= 0 || U <= 0 || V <= 0)
        throw FocalPoint("level metric degenerates inside the band");
    m.B = U * U * U * V * V * V * std::sqrt(det);
    return m;
}

} // namespace

double lap_tangential(double (*call)(const void*, double, double, double), const void* ctx,
                      const BandPoint& b, const SurfaceSampler& s, double chart_h) {
    const double u = b.yu, v = b.yv, z = b.z, h = chart_h;
    // flux divergence with the lifted metric of the level set Gamma(z)
    auto flux = [&](double a, double bb, int comp) {
        const LevelMetric m = level_metric(s, a, bb, z);
        const double det = m.g11 * m.g22 - m.g12 * m.g12;
        const double i11 = m.g22 / det, i12 = -m.g12 / det, i22 = m.g11 / det;
        const double fa = (call(ctx, a + h, bb, z) - call(ctx, a - h, bb, z)) / (2 * h);
        const double fb = (call(ctx, a, bb + h, z) - call(ctx, a, bb - h, z)) / (2 * h);
        return comp == 0 ? m.B * (i11 * fa + i12 * fb) : m.B * (i12 * fa + i22 * fb);
    };
    const double div = (flux(u + h, v, 0) - flux(u - h, v, 0)) / (2 * h) +
                       (flux(u, v + h, 1) - flux(u, v - h, 1)) / (2 * h);
    return div / level_metric(s, u, v, z).B;
}

double lap_decomposition(double (*call)(const void*, double, double, double), const void* ctx,
                         const BandPoint& b, const SurfaceSampler& s, double chart_h, double z_h) {
    const double u = b.yu, v = b.yv, z = b.z;
    // normal part
    const double f0 = call(ctx, u, v, z);
    const double fzp = call(ctx, u, v, z + z_h), fzm = call(ctx, u, v, z - z_h);
    const double fz = (fzp - fzm) / (2 * z_h), fzz = (fzp - 2 * f0 + fzm) / (z_h * z_h);
    const double H = level_mean_curvature(s, u, v, z).value;
    return lap_tangential(call, ctx, b, s, chart_h) + fzz - H * fz;
}

double lap_ambient_fd(double (*call)(const void*, double, double, double), const void* ctx,
                      const BandPoint& b, const SurfaceSampler& s, const BandConfig& cfg,
                      double chart_h) {
    const SlicePoint x0 = from_fermi(b, s);
    if (x0.u - chart_h <= 0 || x0.v - chart_h <= 0)
        throw BoundaryError("ambient stencil crosses a block axis");
    auto g = [&](double du, double dv, double dt) {
        const BandPoint bp = to_fermi({x0.u + du, x0.v + dv, x0.t + dt}, s, cfg);
        return call(ctx, bp.yu, bp.yv, bp.z);
    };
    const double h = chart_h, c = g(0, 0, 0);
    const double up = g(h, 0, 0), um = g(-h, 0, 0);
    const double vp = g(0, h, 0), vm = g(0, -h, 0);
    const double tp = g(0, 0, h), tm = g(0, 0, -h);
    return (up - 2 * c + um) / (h * h) + (vp - 2 * c + vm) / (h * h) +
           (tp - 2 * c + tm) / (h * h) + 3 * (up - um) / (2 * h * x0.u) +
           3 * (vp - vm) / (2 * h * x0.v);
}

} // namespace detail

InjectivityReport check_injectivity(const SurfaceSampler& s, double half_width, long samples,
                                    unsigned seed, double diagonal_guard) {
    if (samples < 100) throw DomainError("check_injectivity needs at least 100 samples");
    InjectivityReport rep;
    rep.samples = samples;
    std::mt19937 rng(seed);
    const double cap = std::min(s.chart_radius() / std::sqrt(2.0), 50.0);
    std::uniform_real_distribution<double> uc(0.02 * cap, cap), uz(-1.0, 1.0);
    auto width_passes = [&](double w) {
        BandConfig cfg{1.0, w};
        for (long i = 0; i < samples; ++i) {
            double yu = uc(rng), yv = uc(rng);
            const double z = w * uz(rng);
            if (std::abs(std::atan2(yv, yu) - kPi / 4) < diagonal_guard)
                continue; // guard wedge around the symmetry diagonal
            SlicePoint x;
            try {
                x = from_fermi({yu, yv, z}, s);
            } catch (const Error&) {
                return false; // band leaves the chart: not a safe width
            }
            if (x.u < 0 || x.v < 0) return false; // band crosses a block axis
            try {
                const BandPoint bp = to_fermi(x, s, cfg);
                // a strictly nearer foot than the generating one is a fold
                if (std::abs(bp.z) < std::abs(z) - 1e-7 * (1 + std::abs(z))) return false;
            } catch (const AmbiguousProjection&) {
                return false;
            } catch (const Error&) {
                return false;
            }
        }
        return true;
    };
    double w = half_width;
    rep.pass = width_passes(w);
    if (rep.pass) {
        rep.max_safe_width = w;
        return rep;
    }
    for (int k = 0; k < 12; ++k) {
        w /= 2;
        if (width_passes(w)) {
            rep.max_safe_width = w;
            return rep;
        }
    }
    rep.max_safe_width = 0;
    return rep;
}

void export_band_csv(std::ostream& os, const SurfaceSampler& s, const BandConfig& cfg,
                     long samples, unsigned seed) {
    os << "x1,x2,x3,x4,x5,x6,x7,x8,x9,z,y_r,y_theta\n";
    std::mt19937 rng(seed);
    const double cap = std::min(s.chart_radius() / std::sqrt(2.0), 50.0);
    std::uniform_real_distribution<double> uc(0.02 * cap, cap), uz(-1.0, 1.0);
    char buf[320];
    for (long i = 0; i < samples; ++i) {
        const double yu = uc(rng), yv = uc(rng), z = cfg.half_width * uz(rng);
        const SlicePoint x = from_fermi({yu, yv, z}, s);
        std::snprintf(buf, sizeof buf,
                      "%.17g,0,0,0,%.17g,0,0,0,%.17g,%.17g,%.17g,%.17g\n", x.u, x.v, x.t, z,
                      std::hypot(yu, yv), std::atan2(yv, yu));
        os << buf;
    }
}

} // namespace fblab
