#pragma once
#include "fblab/geometry.hpp"
#include "fblab/profile.hpp"

#include <memory>
#include <ostream>
#include <vector>

namespace fblab {

// Uniform n x n node grid on [0,R]^2; the unknowns live on the lower
// triangle {0 <= v < u < R} and the solution is extended by the odd
// reflection F(u,v) = -F(v,u).
struct QuadrantGrid {
    int n = 0;
    double R = 0;
    double spacing = 0;
};

struct GraphSolution {
    QuadrantGrid grid;
    std::vector<double> F; // row-major, F[j*n+i] at (u,v) = (i,j)*spacing
    double residual_max = 0;
    int newton_iters = 0;
    std::vector<double> energy_track; // energy after each accepted Newton step
    std::shared_ptr<const AngularProfile> profile;

    double at(int i, int j) const { return F[size_t(j) * grid.n + i]; }
    double u_of(int i) const { return grid.spacing * i; }

    // model height with the F >= 0 on {u >= v} convention
    double model_height(double u, double v) const;

    // C^1 bicubic evaluation anywhere in the open quadrant (0,R)^2
    double eval(double u, double v) const;
    void eval_grad(double u, double v, double& fu, double& fv) const;
    void eval_hess(double u, double v, double& fuu, double& fuv, double& fvv) const;

    void export_csv(std::ostream& os) const;
};

GraphSolution solve_bdgg(std::shared_ptr<const AngularProfile> profile, double R, int n,
                         double tol);

struct RefinementReport {
    double sup_ratio = 0;   // sup (F - Finf) r^sigma / min(Finf, 1)
    double r_lo = 0, r_hi = 0;
    bool finite = false;
};
RefinementReport verify_refinement(const GraphSolution& sol, double sigma_trial);

// Curvatures of the solution graph at a grid node (grid-index arguments).
CurvatureSpectrum curvature_at(const GraphSolution& sol, int i, int j);

// Conservative discrete mean curvature div(u^3 v^3 grad F / W) / (u^3 v^3)
// at a grid node; equals the solver's normalized residual on unknowns.
double discrete_h1(const GraphSolution& sol, int i, int j);

struct HlDecayReport {
    double sup_hl[4] = {0, 0, 0, 0}; // sup (1+r^l)|H_l|, l = 1..4
    double sup_a2r2 = 0;             // sup (1+r^2)|A|^2
    double h1_max = 0;               // plain sup |H_1|
};
HlDecayReport hl_decay_report(const GraphSolution& sol);

} // namespace fblab
