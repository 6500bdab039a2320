#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fblab/errors.hpp"
#include "fblab/jacobi.hpp"

#include <cmath>
#include <random>

using namespace fblab;

namespace {
constexpr double kPi = 3.14159265358979323846;

const AngularProfile& profile() {
    static AngularProfile p = solve_angular_profile(1e-8);
    return p;
}

double sigma_of(double r, double th) {
    const AngularProfile& p = profile();
    const double g = p.eval_g(th), dg = p.eval_dg(th);
    return 1 + r * r * r * r * (9 * g * g + dg * dg);
}

WeightedField solve_decay_rhs(double R, double decay) {
    const JacobiGrid g = make_jacobi_grid(R);
    const WeightedField f = sample_field(
        g, [&](double r, double) { return -1.0 / (1 + std::pow(r, decay)); }, decay);
    return dirichlet_solve(profile(), f);
}

// sup |a-b| over shared octave-aligned nodes with r <= rmax
double supdiff(const WeightedField& a, const WeightedField& b, double rmax) {
    const int ni = std::min(a.grid.nr(), b.grid.nr()) - 1;
    double s = 0;
    for (int j = 0; j < a.grid.nt(); ++j)
        for (int i = 0; i < ni && a.grid.r[i] <= rmax; ++i)
            s = std::max(s, std::abs(a.at(i, j) - b.at(i, j)));
    return s;
}
} // namespace

TEST_CASE("zero forcing gives the zero solution") {
    const JacobiGrid g = make_jacobi_grid(32);
    const WeightedField f = sample_field(g, [](double, double) { return 0.0; }, 4);
    const WeightedField h = dirichlet_solve(profile(), f);
    for (double v : h.values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("nonpositive forcing gives a nonnegative solution at every node") {
    const JacobiGrid g = make_jacobi_grid(32);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uni(0, 1);
    WeightedField f = sample_field(
        g, [&](double r, double th) { return -uni(rng) * std::exp(-0.1 * r) * (1 + th); }, 4);
    const WeightedField h = dirichlet_solve(profile(), f);
    double hmin = 1e300;
    for (double v : h.values) hmin = std::min(hmin, v);
    CHECK(hmin >= 0);
}

TEST_CASE("solve is linear in the forcing") {
    const JacobiGrid g = make_jacobi_grid(32);
    const WeightedField f1 = sample_field(
        g, [](double r, double) { return -1.0 / (1 + r * r * r * r); }, 4);
    const WeightedField f2 = sample_field(
        g, [](double r, double th) { return std::cos(th) / (1 + r * r * r); }, 3);
    WeightedField f12 = f1;
    for (size_t i = 0; i < f12.values.size(); ++i) f12.values[i] += f2.values[i];
    const WeightedField h1 = dirichlet_solve(profile(), f1);
    const WeightedField h2 = dirichlet_solve(profile(), f2);
    const WeightedField h12 = dirichlet_solve(profile(), f12);
    double err = 0;
    for (size_t i = 0; i < h12.values.size(); ++i)
        err = std::max(err, std::abs(h12.values[i] - h1.values[i] - h2.values[i]));
    CHECK(err < 1e-9);
}

TEST_CASE("expanding-domain sweep contracts on the inner region") {
    const WeightedField h32 = solve_decay_rhs(32, 4.125);
    const WeightedField h64 = solve_decay_rhs(64, 4.125);
    const WeightedField h128 = solve_decay_rhs(128, 4.125);
    const double d1 = supdiff(h32, h64, 16);
    const double d2 = supdiff(h64, h128, 16);
    CHECK(d1 > 0);
    CHECK(d2 > 0);
    CHECK(d1 / d2 >= 2.0); // measured ~5.2 with the decay-matched outer ring
}

TEST_CASE("resolving the singular curvature line breaks positive definiteness") {
    const JacobiGrid g = make_jacobi_grid(64, 32, 96);
    const WeightedField f = sample_field(
        g, [](double r, double) { return -1.0 / (1 + std::pow(r, 4.125)); }, 4.125);
    CHECK_THROWS_AS(dirichlet_solve(profile(), f), IndefiniteOperator);
}

TEST_CASE("pointwise residual matches the operator away from the diagonal") {
    // J of the translation mode 1/sqrt(sigma) vanishes identically only for a
    // minimal graph; for the model it decays like the mean-curvature defect.
    const JacobiGrid g = make_jacobi_grid(64, 16, 48);
    const WeightedField h = sample_field(
        g, [](double r, double th) { return 1.0 / std::sqrt(sigma_of(r, th)); }, 2);
    const WeightedField res = jacobi_residual(profile(), h);
    double band = 0;
    for (int j = 0; j < g.nt(); ++j) {
        if (std::abs(g.th[j] - kPi / 4) < 0.3) continue;
        if (g.th[j] < 0.3 || g.th[j] > kPi / 2 - 0.3) continue;
        for (int i = 0; i < g.nr(); ++i)
            if (g.r[i] >= 4 && g.r[i] <= 32) band = std::max(band, std::abs(res.at(i, j)));
    }
    CHECK(band < 1e-3);
    CHECK(band > 0);
}

TEST_CASE("type-1 supersolution certificate") {
    const Type1Result t1 = build_type1(profile(), 0.125);
    CHECK(t1.cert.kind == "type1");
    CHECK(t1.cert.epsilon == doctest::Approx(0.125));
    CHECK(t1.cert.margin_min >= 0);
    CHECK(t1.cert.sample_count >= 10000);
    CHECK(t1.cert.norms.at("h_min") > 0);
    CHECK(t1.cert.norms.at("h_over_h0_min") > 0);
    CHECK(std::isfinite(t1.cert.norms.at("h")));
    CHECK(std::isfinite(t1.cert.norms.at("Dh")));
    CHECK(std::isfinite(t1.cert.norms.at("D2h")));
    CHECK(t1.cert.norms.at("sweep_diff1") / t1.cert.norms.at("sweep_diff2") >= 2.0);
    double hmin = 1e300;
    for (double v : t1.h.values) hmin = std::min(hmin, v);
    CHECK(hmin > 0);
}

TEST_CASE("type-1 certificate is bit-for-bit reproducible") {
    const Type1Result a = build_type1(profile(), 0.125);
    const Type1Result b = build_type1(profile(), 0.125);
    CHECK(a.cert.margin_min == b.cert.margin_min);
    CHECK(a.cert.norms.at("h") == b.cert.norms.at("h"));
    CHECK(a.h.values == b.h.values);
}

TEST_CASE("type-1 rejects bad parameters") {
    CHECK_THROWS_AS(build_type1(profile(), 0.0), DomainError);
    CHECK_THROWS_AS(build_type1(profile(), 1.5), DomainError);
}

TEST_CASE("type-2 supersolution certificate and angular profile") {
    const Type2Result t2 = build_type2(profile(), 0.625, 0.125);
    CHECK(t2.cert.kind == "type2");
    CHECK(t2.cert.margin_min >= 0);
    CHECK(t2.a0 > 0);
    CHECK(std::isfinite(t2.cert.norms.at("weakhbound_C")));
    CHECK(std::isfinite(t2.cert.norms.at("diag_branch")));
    CHECK(std::isfinite(t2.cert.norms.at("refinedecay")));
    CHECK(t2.q2.size() == size_t(t2.h.grid.nt()));
    // q2 is nonnegative and even about the diagonal (the diagonal node keeps
    // the 1/(1+r^{2+eps}) correction branch, so it need not vanish)
    const int half = (t2.h.grid.nt() - 1) / 2;
    for (double q : t2.q2) CHECK(q >= -1e-10);
    CHECK(t2.q2[half + 8] == doctest::Approx(t2.q2[half - 8]).epsilon(0.05));
}

TEST_CASE("type-2 rejects tau outside (1/2, 2/3)") {
    CHECK_THROWS_AS(build_type2(profile(), 0.45, 0.125), DomainError);
    CHECK_THROWS_AS(build_type2(profile(), 0.7, 0.125), DomainError);
}

TEST_CASE("admissible window is exact rational arithmetic") {
    const RationalWindow w = admissible_window({1, 2}, {1, 8}, {5, 8});
    CHECK(w.low == Rational(-2));
    CHECK(w.mid == Rational(-20, 11));
    CHECK(w.high == Rational(-29, 16));

    PatchParams good;
    good.alpha1 = Rational(-363, 200); // -1.815 in (-20/11, -29/16)
    good.alpha2 = Rational(-39, 20);   // -1.95 in [-2, -20/11)
    CHECK_NOTHROW(validate_window(good));

    PatchParams equal = good;
    equal.alpha2 = equal.alpha1;
    CHECK_THROWS_AS(validate_window(equal), WindowViolation);

    PatchParams a1_at_mid = good;
    a1_at_mid.alpha1 = w.mid;
    CHECK_THROWS_AS(validate_window(a1_at_mid), WindowViolation);

    PatchParams a1_at_high = good;
    a1_at_high.alpha1 = w.high;
    CHECK_THROWS_AS(validate_window(a1_at_high), WindowViolation);

    PatchParams a2_at_mid = good;
    a2_at_mid.alpha2 = w.mid;
    CHECK_THROWS_AS(validate_window(a2_at_mid), WindowViolation);

    PatchParams a2_low = good;
    a2_low.alpha2 = Rational(-201, 100);
    CHECK_THROWS_AS(validate_window(a2_low), WindowViolation);

    PatchParams a2_at_low = good;
    a2_at_low.alpha2 = w.low; // -2 itself is admissible
    CHECK_NOTHROW(validate_window(a2_at_low));
}

TEST_CASE("patched barrier: ordering gate and certified margins") {
    const Type2Result t2 = build_type2(profile(), 0.625, 0.125);
    PatchParams pp;
    pp.alpha1 = Rational(-363, 200);
    pp.alpha2 = Rational(-39, 20);

    // too-small r0 fails the region ordering, the next octave certifies
    CHECK_THROWS_AS(patch_supersolutions(profile(), t2, pp, 2), OrderingFailure);
    const PatchResult pr = patch_supersolutions(profile(), t2, pp, 4);
    CHECK(pr.cert.kind == "patched");
    CHECK(pr.cert.margin_min >= 0);
    CHECK(pr.cert.r0 == 4);
    CHECK(pr.cert.sample_count >= 30000);
    CHECK(pr.cert.norms.at("K") > 0);
    CHECK(pr.cert.norms.at("a0") == doctest::Approx(t2.a0));
    double hmin = 1e300;
    for (double v : pr.h.values) hmin = std::min(hmin, v);
    CHECK(hmin > 0);

    const PatchResult again = patch_supersolutions(profile(), t2, pp, 4);
    CHECK(again.cert.margin_min == pr.cert.margin_min);
}

TEST_CASE("weighted norm of 1/(1+r) with weight exponent 1 is exactly 1") {
    const JacobiGrid g = make_jacobi_grid(128);
    const WeightedField f = sample_field(
        g, [](double r, double) { return 1.0 / (1 + r); }, 1);
    CHECK(f.weighted_norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a-priori ratio is stable across expanding domains") {
    double ratios[3];
    int k = 0;
    for (double R : {32.0, 64.0, 128.0}) {
        const JacobiGrid g = make_jacobi_grid(R);
        const WeightedField f = sample_field(
            g, [](double r, double) { return -1.0 / (1 + std::pow(r, 4.125)); }, 4.125);
        const WeightedField h = dirichlet_solve(profile(), f);
        const NormReport rep = norms_and_diagnostics(profile(), h, f, 2.125);
        CHECK(std::isfinite(rep.holder));
        ratios[k++] = rep.apriori_ratio;
    }
    for (int i = 1; i < 3; ++i) {
        CHECK(ratios[i] / ratios[0] < 2.0);
        CHECK(ratios[0] / ratios[i] < 2.0);
    }
}

TEST_CASE("h/h0 attains its annulus minima on annulus boundaries") {
    const Type1Result t1 = build_type1(profile(), 0.125);
    const JacobiGrid g = t1.h.grid;
    const WeightedField f = sample_field(
        g, [](double r, double) { return -1.05 / (1 + std::pow(r, 4.125)); }, 4.125);
    const NormReport rep = norms_and_diagnostics(profile(), t1.h, f, 2.125);
    CHECK(rep.ratio_min_on_boundary);
}

TEST_CASE("norms reject mismatched grids") {
    const JacobiGrid ga = make_jacobi_grid(32), gb = make_jacobi_grid(64);
    const WeightedField h = sample_field(ga, [](double, double) { return 1.0; }, 0);
    const WeightedField f = sample_field(gb, [](double, double) { return 1.0; }, 0);
    CHECK_THROWS_AS(norms_and_diagnostics(profile(), h, f, 1), DomainError);
}
