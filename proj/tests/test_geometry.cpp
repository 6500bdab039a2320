#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fblab/errors.hpp"
#include "fblab/geometry.hpp"

#include <cmath>
#include <random>

using namespace fblab;

namespace {
constexpr double kPi = 3.14159265358979323846;

const AngularProfile& profile() {
    static AngularProfile p = solve_angular_profile(1e-8);
    return p;
}
} // namespace

TEST_CASE("spectrum on the Simons ray at r=1") {
    const auto c = curvature_spectrum(profile(), {1.0, kPi / 4});
    const double is2 = 1 / std::sqrt(2.0);
    CHECK(c.mu1 == doctest::Approx(-is2).epsilon(1e-9));
    CHECK(c.mu2 == doctest::Approx(is2).epsilon(1e-9));
    CHECK(c.lam1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(c.lam2 == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(c.H(2) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("H3 vanishes on the Simons ray") {
    for (double r : {0.5, 1.0, 3.0, 20.0}) {
        const auto c = curvature_spectrum(profile(), {r, kPi / 4});
        CHECK(std::abs(c.H(3)) < 1e-10);
        CHECK(std::abs(h3_closed_form(c)) < 1e-10);
    }
}

TEST_CASE("frozen spectrum at (r=2, theta=0.9)") {
    const auto c = curvature_spectrum(profile(), {2.0, 0.9});
    CHECK(c.mu1 == doctest::Approx(-0.455690059575941).epsilon(1e-8));
    CHECK(c.mu2 == doctest::Approx(0.518281631009791).epsilon(1e-8));
    CHECK(c.lam1 == doctest::Approx(0.058404039882858).epsilon(1e-8));
    CHECK(c.lam2 == doctest::Approx(-0.219369305001368).epsilon(1e-8));
    CHECK(c.H(2) == doctest::Approx(1.480341762166902).epsilon(1e-8));
    const double ms = mu_sum_closed_form(profile(), {2.0, 0.9});
    CHECK(ms == doctest::Approx(0.062591571433850).epsilon(1e-8));
    CHECK(std::abs(c.mu1 + c.mu2 - ms) < 1e-10);
}

TEST_CASE("metric block invariants at random points") {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> ur(-1, 2), ut(1e-3, kPi / 2 - 1e-3);
    for (int i = 0; i < 2000; ++i) {
        const ChartPoint q{std::pow(10.0, ur(rng)), ut(rng)};
        const auto m = metric_blocks(profile(), q);
        CHECK(m.sigma >= 1.0);
        // positive definite
        CHECK(m.g2[0][0] > 0);
        CHECK(m.g2[0][0] * m.g2[1][1] - m.g2[0][1] * m.g2[0][1] > 0);
        // g2 . g2_inv = I, relative to the size of the summed products
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                double s = 0, mag = 1;
                for (int k = 0; k < 2; ++k) {
                    s += m.g2[a][k] * m.g2_inv[k][b];
                    mag += std::abs(m.g2[a][k] * m.g2_inv[k][b]);
                }
                CHECK(std::abs(s - (a == b ? 1 : 0)) < 1e-12 * mag);
            }
    }
}

TEST_CASE("mu1+mu2: eigen route vs closed form at 10^4 random points") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> ur(0.1, 100.0), ut(1e-3, kPi / 2 - 1e-3);
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
        const ChartPoint q{ur(rng), ut(rng)};
        const auto c = curvature_spectrum(profile(), q);
        worst = std::max(worst, std::abs(c.mu1 + c.mu2 - mu_sum_closed_form(profile(), q)));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("trace and determinant identities") {
    const auto& p = profile();
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ur(0.2, 50.0), ut(0.05, kPi / 2 - 0.05);
    for (int i = 0; i < 500; ++i) {
        const ChartPoint q{ur(rng), ut(rng)};
        const auto c = curvature_spectrum(p, q);
        const auto m = metric_blocks(p, q);
        // independent assembly of the 2x2 second-fundamental-form block
        const double g = p.eval_g(q.theta), dg = p.eval_dg(q.theta), ddg = p.eval_ddg(q.theta);
        const double rs = std::sqrt(m.sigma), r = q.r;
        const double a00 = 6 * r * g / rs, a01 = 2 * r * r * dg / rs;
        const double a11 = r * r * r * (3 * g + ddg) / rs;
        const double tr = a00 * m.g2_inv[0][0] + 2 * a01 * m.g2_inv[0][1] + a11 * m.g2_inv[1][1];
        const double det_ratio = (a00 * a11 - a01 * a01) *
                                 (m.g2_inv[0][0] * m.g2_inv[1][1] - m.g2_inv[0][1] * m.g2_inv[0][1]);
        const double tanq = std::tan(q.theta);
        const double mu1 = r / rs * (3 * g - dg * tanq), mu2 = r / rs * (3 * g + dg / tanq);
        CHECK(std::abs(c.H(1) - (3 * mu1 + 3 * mu2 + tr)) < 1e-10);
        CHECK(std::abs(c.lam1 * c.lam2 - det_ratio) < 1e-10);
    }
}

TEST_CASE("curvature decay constant is reported and finite") {
    double worst = 0;
    for (double r : {1.0, 2.0, 5.0, 10.0, 50.0})
        for (double t : {0.1, 0.5, kPi / 4, 1.0, 1.4}) {
            const auto c = curvature_spectrum(profile(), {r, t});
            worst = std::max(worst, c.max_abs() * (1 + r));
        }
    MESSAGE("sup (1+r)|k_i| over probe grid = ", worst);
    CHECK(std::isfinite(worst));
}

TEST_CASE("homogenized divergence residual") {
    CHECK(std::abs(homogenized_divergence(profile(), {10.0, 1.0})) < 1e-6);
    CHECK(std::abs(homogenized_divergence(profile(), {2.0, 1.3})) < 1e-6);
}

TEST_CASE("graph mean curvature: linear field is exactly minimal") {
    // dyadic coefficients, points and step keep the FD arithmetic exact
    auto lin = [](double u, double v) { return 0.25 * u + 0.5 * v - 2.0; };
    CHECK(graph_mean_curvature_fd(lin, 1.75, 0.5, 0.125) == 0.0);
}

TEST_CASE("H[F] decay slope on r in [10,100]") {
    const double s = hf_decay_slope(profile(), 1.0, 10.0, 100.0, 40);
    CHECK(s == doctest::Approx(-5.0).epsilon(0.06)); // within +-0.3
}

TEST_CASE("intrinsic derivatives of a constant vanish") {
    auto cf = [](double, double) { return 3.25; };
    const auto d = intrinsic_derivatives(profile(), cf, {5.0, 1.0}, 1e-4);
    CHECK(std::abs(d.grad_mag) < 1e-9);
    CHECK(std::abs(d.hess_mag) < 1e-9);
}

TEST_CASE("gradient bound for h = r") {
    auto hr = [](double r, double) { return r; };
    const ChartPoint q{5.0, 1.0};
    const auto d = intrinsic_derivatives(profile(), hr, q, 1e-4);
    const double maj = grad_bound_majorant(q, 1.0, 0.0);
    MESSAGE("|Dh| = ", d.grad_mag, ", majorant = ", maj, ", ratio = ", d.grad_mag / maj);
    CHECK(d.grad_mag <= 3.0 * maj);
}

TEST_CASE("hessian bound sweep for h = 1/(1+r)") {
    auto hf = [](double r, double) { return 1 / (1 + r); };
    double worst = 0;
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 50; ++j) {
            const double r = 1 + 19.0 * i / 49, t = 0.2 + 1.1 * j / 49;
            const ChartPoint q{r, t};
            const auto d = intrinsic_derivatives(profile(), hf, q, 1e-4);
            const double c = 1 + r;
            const double maj =
                hess_bound_majorant(q, -1 / (c * c), 0.0, 2 / (c * c * c), 0.0, 0.0);
            worst = std::max(worst, d.hess_mag / maj);
        }
    MESSAGE("sup |D2h|/majorant over 50x50 grid = ", worst);
    CHECK(worst < 10.0);
}

TEST_CASE("stencil near the grid edge is rejected") {
    auto cf = [](double, double) { return 1.0; };
    CHECK_THROWS_AS(intrinsic_derivatives(profile(), cf, {5.0, 1e-6}, 1e-4), BoundaryError);
    CHECK_THROWS_AS(intrinsic_derivatives(profile(), cf, {1e-6, 1.0}, 1e-4), BoundaryError);
}

TEST_CASE("Laplace-Beltrami matches a pure flux-divergence computation") {
    const auto& p = profile();
    auto f = [](double r, double t) { return std::sin(r) * std::cos(t) / (1 + r); };
    // independent route: numerically divergence the fluxes B g^{ab} d_b f
    auto flux = [&](double r, double t, int a) {
        const auto c = lb_coeffs(p, {r, t});
        const double h = 1e-5;
        const double fr = (f(r + h, t) - f(r - h, t)) / (2 * h);
        const double ft = (f(r, t + h) - f(r, t - h)) / (2 * h);
        return a == 0 ? c.B * (c.grr * fr + c.grt * ft) : c.B * (c.grt * fr + c.gtt * ft);
    };
    for (const ChartPoint q : {ChartPoint{3.0, 0.8}, ChartPoint{1.5, 1.2}}) {
        const double h = 1e-4;
        const double div = ((flux(q.r + h, q.theta, 0) - flux(q.r - h, q.theta, 0)) / (2 * h) +
                            (flux(q.r, q.theta + h, 1) - flux(q.r, q.theta - h, 1)) / (2 * h)) /
                           lb_coeffs(p, q).B;
        const double lb = laplace_beltrami(p, f, q, 1e-4, 1e-4);
        CHECK(lb == doctest::Approx(div).epsilon(1e-4));
    }
}

TEST_CASE("vertical translation mode nearly solves the Jacobi equation") {
    const auto& p = profile();
    auto vert = [&](double r, double t) {
        const double g = p.eval_g(t), dg = p.eval_dg(t);
        return 1 / std::sqrt(1 + r * r * r * r * (9 * g * g + dg * dg));
    };
    const ChartPoint q{30.0, 1.0};
    const double jf = jacobi_apply(p, vert, q, 1e-3, 1e-4);
    const double scale = lb_coeffs(p, q).A2 * vert(q.r, q.theta);
    MESSAGE("J(nu_9) = ", jf, " vs potential term ", scale);
    CHECK(std::abs(jf) < 0.05 * std::abs(scale));
}
