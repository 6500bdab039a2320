#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fblab/errors.hpp"
#include "fblab/mse.hpp"

#include <cmath>
#include <memory>
#include <sstream>

using namespace fblab;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::shared_ptr<const AngularProfile> profile() {
    static auto p = std::make_shared<const AngularProfile>(solve_angular_profile(1e-8));
    return p;
}

const GraphSolution& sol65() {
    static GraphSolution s = solve_bdgg(profile(), 20.0, 65, 1e-8);
    return s;
}
} // namespace

TEST_CASE("n=65 R=20 converges fast") {
    const auto& s = sol65();
    CHECK(s.residual_max < 1e-8);
    CHECK(s.newton_iters <= 30);
}

TEST_CASE("diagonal vanishes exactly and reflection is exact") {
    const auto& s = sol65();
    const int n = s.grid.n;
    for (int i = 0; i < n; ++i) CHECK(s.at(i, i) == 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) CHECK(s.at(i, j) + s.at(j, i) == 0.0);
}

TEST_CASE("solution refines the model height from above") {
    const auto& s = sol65();
    const int n = s.grid.n;
    const double h = s.grid.spacing;
    for (int i = 1; i < n - 1; ++i)
        for (int j = 0; j < i; ++j)
            CHECK(s.at(i, j) >= s.model_height(i * h, j * h) - 1e-8);
}

TEST_CASE("discrete mean curvature is residual-small and odd") {
    const auto& s = sol65();
    const int n = s.grid.n;
    double worst = 0, worst_sym = 0;
    for (int i = 4; i < n - 4; i += 3)
        for (int j = 1; j < i; j += 3) {
            const double a = discrete_h1(s, i, j), b = discrete_h1(s, j, i);
            worst = std::max(worst, std::abs(a));
            worst_sym = std::max(worst_sym, std::abs(a + b));
        }
    CHECK(worst <= 10 * s.residual_max);
    CHECK(worst_sym < 1e-12);
}

TEST_CASE("curvature report") {
    const auto rep = hl_decay_report(sol65());
    CHECK(rep.h1_max <= 10 * sol65().residual_max);
    CHECK(std::isfinite(rep.sup_a2r2));
    MESSAGE("sup (1+r^2)|A|^2 = ", rep.sup_a2r2, ", sup (1+r^2)|H_2| = ", rep.sup_hl[1]);
}

TEST_CASE("far-field curvatures match the model graph within 10%") {
    const auto& s = sol65();
    const double h = s.grid.spacing;
    // node near r = 0.7 R
    const int i = 44, j = 20;
    const double u = i * h, v = j * h;
    const double r = std::hypot(u, v), th = std::atan2(v, u);
    const auto c = curvature_at(s, i, j);
    const auto cm = curvature_spectrum(*s.profile, {r, kPi / 2 - th});
    CHECK(c.A2() == doctest::Approx(cm.A2()).epsilon(0.1));
    // mu blocks swap under the (u,v) exchange used to mirror the chart
    CHECK(std::abs(c.mu1) == doctest::Approx(std::abs(cm.mu2)).epsilon(0.1));
    CHECK(std::abs(c.mu2) == doctest::Approx(std::abs(cm.mu1)).epsilon(0.1));
    const double l1 = std::max(std::abs(c.lam1), std::abs(c.lam2));
    const double l2 = std::min(std::abs(c.lam1), std::abs(c.lam2));
    const double m1 = std::max(std::abs(cm.lam1), std::abs(cm.lam2));
    const double m2 = std::min(std::abs(cm.lam1), std::abs(cm.lam2));
    CHECK(l1 == doctest::Approx(m1).epsilon(0.1));
    CHECK(l2 == doctest::Approx(m2).epsilon(0.1));
}

TEST_CASE("refinement ratio is finite and grid-stable") {
    const auto r65 = verify_refinement(sol65(), 0.5);
    CHECK(r65.finite);
    CHECK(r65.sup_ratio >= 0);
    GraphSolution s129 = solve_bdgg(profile(), 20.0, 129, 1e-8);
    GraphSolution s257 = solve_bdgg(profile(), 20.0, 257, 1e-8);
    const auto r129 = verify_refinement(s129, 0.5);
    const auto r257 = verify_refinement(s257, 0.5);
    CHECK(r129.finite);
    CHECK(r257.finite);
    MESSAGE("sup ratio n=129: ", r129.sup_ratio, ", n=257: ", r257.sup_ratio);
    CHECK(r257.sup_ratio < 2 * r129.sup_ratio + 1e-9);
    CHECK(r129.sup_ratio < 2 * r257.sup_ratio + 1e-9);

    SUBCASE("probe-point convergence order under refinement") {
        GraphSolution s33 = solve_bdgg(profile(), 20.0, 33, 1e-8);
        const double f33 = s33.at(16, 8), f65 = sol65().at(32, 16), f129 = s129.at(64, 32);
        const double d1 = std::abs(f33 - f65), d2 = std::abs(f65 - f129);
        const double order = std::log2(d1 / d2);
        MESSAGE("probe convergence order = ", order);
        CHECK(order >= 1.7);
    }
}

TEST_CASE("sigma near 1 degrades with domain size") {
    GraphSolution s40 = solve_bdgg(profile(), 40.0, 129, 1e-8);
    const auto a = verify_refinement(sol65(), 0.99);
    const auto b = verify_refinement(s40, 0.99);
    MESSAGE("sigma=0.99 sup at R=20: ", a.sup_ratio, ", R=40: ", b.sup_ratio);
    CHECK(b.sup_ratio > a.sup_ratio);
}

TEST_CASE("bicubic evaluation is consistent with nodes and gradients") {
    const auto& s = sol65();
    const double h = s.grid.spacing;
    CHECK(s.eval(10 * h, 4 * h) == doctest::Approx(s.at(10, 4)).epsilon(1e-12));
    double fu, fv;
    s.eval_grad(10.3 * h, 4.6 * h, fu, fv);
    const double d = 1e-5;
    const double fu_fd = (s.eval(10.3 * h + d, 4.6 * h) - s.eval(10.3 * h - d, 4.6 * h)) / (2 * d);
    const double fv_fd = (s.eval(10.3 * h, 4.6 * h + d) - s.eval(10.3 * h, 4.6 * h - d)) / (2 * d);
    CHECK(fu == doctest::Approx(fu_fd).epsilon(1e-6));
    CHECK(fv == doctest::Approx(fv_fd).epsilon(1e-6));
}

TEST_CASE("csv export shape") {
    std::ostringstream os;
    sol65().export_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "u,v,F");
    size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == size_t(65) * 65);
}

TEST_CASE("preconditions rejected") {
    CHECK_THROWS_AS(solve_bdgg(profile(), 20.0, 17, 1e-8), DomainError);
    CHECK_THROWS_AS(solve_bdgg(profile(), 5.0, 65, 1e-8), DomainError);
    CHECK_THROWS_AS(verify_refinement(sol65(), 1.5), DomainError);
    CHECK_THROWS_AS(curvature_at(sol65(), 1, 0), BoundaryError);
}
