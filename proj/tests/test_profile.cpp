#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fblab/errors.hpp"
#include "fblab/profile.hpp"

#include <cmath>
#include <sstream>

using namespace fblab;

namespace {
constexpr double kPi = 3.14159265358979323846;

const AngularProfile& profile() {
    static AngularProfile p = solve_angular_profile(1e-8);
    return p;
}
} // namespace

TEST_CASE("pinned values at the cusp") {
    const auto& p = profile();
    CHECK(p.eval_g(kPi / 4) == 0.0);
    CHECK(p.eval_dg(kPi / 4) == 1.0);
    CHECK(p.eval_ddg(kPi / 4) == 0.0);
}

TEST_CASE("endpoint slope consistency") {
    const auto& p = profile();
    CHECK(p.dg_end_mismatch < 1e-6);
    // dg(pi/2) = 0 enforced by the even endpoint series
    CHECK(std::abs(p.eval_dg(kPi / 2)) < 1e-12);
}

TEST_CASE("shooting parameters") {
    const auto& p = profile();
    CHECK(p.b_frac == doctest::Approx(0.606084718979697).epsilon(2e-6));
    CHECK(p.g_end == doctest::Approx(1.053674585666909).epsilon(1e-6));
}

TEST_CASE("interior sample values") {
    const auto& p = profile();
    CHECK(p.eval_g(0.9) == doctest::Approx(0.168291258529934).epsilon(1e-7));
    CHECK(p.eval_dg(0.9) == doctest::Approx(1.686884677339736).epsilon(1e-7));
    CHECK(p.eval_g(1.0) == doctest::Approx(0.346895582137310).epsilon(1e-7));
    CHECK(p.eval_dg(1.0) == doctest::Approx(1.853822595652299).epsilon(1e-7));
    CHECK(p.eval_g(1.2) == doctest::Approx(0.709816421020862).epsilon(1e-7));
    CHECK(p.eval_dg(1.2) == doctest::Approx(1.665705716809349).epsilon(1e-7));
    CHECK(p.eval_g(1.4) == doctest::Approx(0.974679601842368).epsilon(1e-7));
    CHECK(p.eval_dg(1.4) == doctest::Approx(0.905392085568357).epsilon(1e-7));
}

TEST_CASE("odd reflection identity at paired nodes") {
    const auto& p = profile();
    const size_t n = p.theta_grid.size();
    REQUIRE(n % 2 == 1);
    for (size_t i = 0; i < n; ++i) {
        CHECK(p.g[i] + p.g[n - 1 - i] == 0.0);
        CHECK(p.dg[i] - p.dg[n - 1 - i] == 0.0);
    }
}

TEST_CASE("residual below tolerance") {
    const auto& p = profile();
    CHECK(p.residual_max <= 1e-8);
    CHECK(p.tolerance == 1e-8);
}

TEST_CASE("ODE residual is scale invariant") {
    // g -> c g leaves the flux-form residual unchanged
    for (double c : {0.5, 2.0, 17.0}) {
        const double r1 = profile_ode_residual(1.1, 0.3, 1.2, -0.7);
        const double r2 = profile_ode_residual(1.1, c * 0.3, c * 1.2, c * -0.7);
        CHECK(r1 == doctest::Approx(r2).epsilon(1e-13));
    }
}

TEST_CASE("evaluators are internally consistent") {
    const auto& p = profile();
    for (double th : {0.85, 1.05, 1.25, 1.45}) {
        const double h = 1e-6;
        const double fd_dg = (p.eval_g(th + h) - p.eval_g(th - h)) / (2 * h);
        const double fd_ddg = (p.eval_dg(th + h) - p.eval_dg(th - h)) / (2 * h);
        CHECK(p.eval_dg(th) == doctest::Approx(fd_dg).epsilon(1e-6));
        CHECK(p.eval_ddg(th) == doctest::Approx(fd_ddg).epsilon(1e-4));
    }
}

TEST_CASE("csv export") {
    const auto& p = profile();
    std::ostringstream os;
    p.export_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "theta,g,dg,ddg");
    size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == p.theta_grid.size());
}

TEST_CASE("bad tolerance rejected") {
    CHECK_THROWS_AS(solve_angular_profile(0.0), Error);
    CHECK_THROWS_AS(solve_angular_profile(1e-3), Error);
}
