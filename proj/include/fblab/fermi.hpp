#pragma once
#include "fblab/mse.hpp"
#include "fblab/profile.hpp"

#include <array>
#include <memory>
#include <ostream>

namespace fblab {

// Point of the reduced 3-D slice (u, v, x9); by block-radial symmetry every
// ambient point can be rotated into the slice with u, v >= 0, and nearest
// surface points stay in the slice.
struct SlicePoint {
    double u = 0, v = 0, t = 0;
};

// Abstract graph surface x9 = F(u, v) over the open quadrant, with the upward
// unit normal (nu . e9 > 0). Curvature sign convention: a bowl (sphere from
// below) has positive principal curvatures; then H_{Gamma(z)} = sum k_i /
// (1 - k_i z) for the level surface at signed distance z along nu.
struct SurfaceSampler {
    virtual ~SurfaceSampler() = default;
    virtual double height(double u, double v) const = 0;
    virtual void gradient(double u, double v, double& fu, double& fv) const = 0;
    virtual void hessian(double u, double v, double& fuu, double& fuv, double& fvv) const = 0;
    // F_u/u and F_v/v with their axis limits (the mu-block curvature ratios)
    virtual void mu_ratios(double u, double v, double& ru, double& rv) const;
    virtual double chart_radius() const = 0;

    // ambient position, unit upward normal, eight principal curvatures
    SlicePoint position(double u, double v) const;
    void normal(double u, double v, double& nu, double& nv, double& nt) const;
    std::array<double, 8> curvatures(double u, double v) const;
};

struct PlaneSampler : SurfaceSampler {
    double c;
    explicit PlaneSampler(double height_) : c(height_) {}
    double height(double, double) const override { return c; }
    void gradient(double, double, double& fu, double& fv) const override { fu = fv = 0; }
    void hessian(double, double, double& a, double& b, double& d) const override { a = b = d = 0; }
    void mu_ratios(double, double, double& ru, double& rv) const override { ru = rv = 0; }
    double chart_radius() const override { return 1e9; }
};

// lower hemisphere of the radius-R sphere centered at the origin: the upward
// normal points at the center, all principal curvatures are 1/R
struct SphereSampler : SurfaceSampler {
    double R;
    explicit SphereSampler(double radius) : R(radius) {}
    double height(double u, double v) const override;
    void gradient(double u, double v, double& fu, double& fv) const override;
    void hessian(double u, double v, double& fuu, double& fuv, double& fvv) const override;
    void mu_ratios(double u, double v, double& ru, double& rv) const override;
    double chart_radius() const override { return 0.95 * R; }
};

// the model graph scaled by alpha: F_alpha(u,v) = F_inf(alpha u, alpha v)/alpha
struct ModelSampler : SurfaceSampler {
    std::shared_ptr<const AngularProfile> profile;
    double alpha;
    ModelSampler(std::shared_ptr<const AngularProfile> p, double a);
    double height(double u, double v) const override;
    void gradient(double u, double v, double& fu, double& fv) const override;
    void hessian(double u, double v, double& fuu, double& fuv, double& fvv) const override;
    void mu_ratios(double u, double v, double& ru, double& rv) const override;
    double chart_radius() const override { return 1e9; }
};

// the discrete BdGG solution through its bicubic patches
struct SolutionSampler : SurfaceSampler {
    std::shared_ptr<const GraphSolution> sol;
    explicit SolutionSampler(std::shared_ptr<const GraphSolution> s) : sol(std::move(s)) {}
    double height(double u, double v) const override { return sol->eval(u, v); }
    void gradient(double u, double v, double& fu, double& fv) const override {
        sol->eval_grad(u, v, fu, fv);
    }
    void hessian(double u, double v, double& fuu, double& fuv, double& fvv) const override {
        sol->eval_hess(u, v, fuu, fuv, fvv);
    }
    double chart_radius() const override { return sol->grid.R; }
};

struct BandPoint {
    double yu = 0, yv = 0; // chart coordinates of the foot point
    double z = 0;          // signed distance, positive above the graph
};

struct BandConfig {
    double alpha = 1.0;
    double half_width = 2.0;
};

// nearest-point projection: Newton on the chart seeded by the vertical
// projection, coarse multi-start fallback
BandPoint to_fermi(const SlicePoint& x, const SurfaceSampler& s, const BandConfig& cfg);
SlicePoint from_fermi(const BandPoint& b, const SurfaceSampler& s);

struct LevelCurvature {
    double value = 0;
    double tail_bound = 0; // geometric remainder bound (series mode only)
};
// series_order = 0: exact sum k_i/(1 - k_i z); series_order >= 2: truncated
// sum_{2<=l<=order} z^{l-1} H_l with the dropped-tail bound (including |H_1|)
LevelCurvature level_mean_curvature(const SurfaceSampler& s, double u, double v, double z,
                                    int series_order = 0);

struct LaplacianPair {
    double decomposition = 0; // Delta_{Gamma(z)} f + d2f/dz2 - H_{Gamma(z)} df/dz
    double ambient_fd = 0;    // centered ambient finite differences
};
// f is a band field f(yu, yv, z); chart_h / z_h are the stencil spacings
template <class F>
LaplacianPair ambient_laplacian(const F& f, const BandPoint& b, const SurfaceSampler& s,
                                const BandConfig& cfg, double chart_h, double z_h);

struct InjectivityReport {
    bool pass = false;
    double max_safe_width = 0; // largest passing dyadic width <= requested
    long samples = 0;
};
// Samples band points and verifies each round-trips to its generating foot.
// Chart points within diagonal_guard of the symmetry diagonal are skipped:
// the odd reflection there folds the nearest-point map at any width, and that
// wedge is covered separately by the barrier guard tube.
InjectivityReport check_injectivity(const SurfaceSampler& s, double half_width, long samples,
                                    unsigned seed = 1234, double diagonal_guard = 0.05);

void export_band_csv(std::ostream& os, const SurfaceSampler& s, const BandConfig& cfg,
                     long samples, unsigned seed = 1234);

// implementation detail shared by the template: the decomposition route at a
// band point for a type-erased field
namespace detail {
// tangential piece only: Delta_{Gamma(z)} f at fixed z (for callers whose
// z-dependence is known in closed form)
double lap_tangential(double (*call)(const void*, double, double, double), const void* ctx,
                      const BandPoint& b, const SurfaceSampler& s, double chart_h);
double lap_decomposition(double (*call)(const void*, double, double, double), const void* ctx,
                         const BandPoint& b, const SurfaceSampler& s, double chart_h, double z_h);
double lap_ambient_fd(double (*call)(const void*, double, double, double), const void* ctx,
                      const BandPoint& b, const SurfaceSampler& s, const BandConfig& cfg,
                      double chart_h);
} // namespace detail

template <class F>
LaplacianPair ambient_laplacian(const F& f, const BandPoint& b, const SurfaceSampler& s,
                                const BandConfig& cfg, double chart_h, double z_h) {
    auto call = [](const void* ctx, double yu, double yv, double z) {
        return (*static_cast<const F*>(ctx))(yu, yv, z);
    };
    LaplacianPair out;
    out.decomposition = detail::lap_decomposition(call, &f, b, s, chart_h, z_h);
    out.ambient_fd = detail::lap_ambient_fd(call, &f, b, s, cfg, chart_h);
    return out;
}

} // namespace fblab
