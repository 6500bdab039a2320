#pragma once
#include <ostream>
#include <vector>

namespace fblab {

// Angular profile g(theta) of the model graph F(r,theta) = r^3 g(theta).
// g solves the reduced equation
//   21 g sin^3(2t)/S + (g' sin^3(2t)/S)' = 0,   S = sqrt(9 g^2 + g'^2),
// on [pi/4, pi/2] with g(pi/4)=0, g'(pi/4)=1, g'(pi/2)=0, extended oddly
// about pi/4.  The equation is degenerate at both ends: at pi/4 the local
// solution family carries a fractional t^(4/3) branch with free coefficient
// b, at pi/2 the regular branch is an even power series with free scale A.
// Both parameters are fixed by two-sided integration matched mid-interval.
struct AngularProfile {
    std::vector<double> theta_grid; // uniform export grid on [0, pi/2]
    std::vector<double> g, dg, ddg; // values at theta_grid nodes

    double b_frac = 0;        // coefficient of the t^(4/3) branch at pi/4
    double g_end = 0;         // A = g(pi/2)
    double dg_end_mismatch = 0; // slope consistency value at the match point
    double residual_max = 0;  // sup ODE residual at off-node probe angles
    double tolerance = 0;

    double eval_g(double theta) const;
    double eval_dg(double theta) const;
    double eval_ddg(double theta) const; // ddg(pi/4) := 0 (odd limit)

    void export_csv(std::ostream& os) const;

    // internal solution storage: matched half-profile on [pi/4, pi/2]
    struct Segment {
        std::vector<double> theta, g, dg;
    };
    Segment seg_lo, seg_hi; // [pi/4+t_ser, theta_c], [theta_c, pi/2-psi_ser]
    double t_ser = 0, psi_ser = 0, theta_c = 0;
};

AngularProfile solve_angular_profile(double tolerance);

// ODE residual of the original flux form at theta, given (g, dg, ddg).
double profile_ode_residual(double theta, double g, double dg, double ddg);

} // namespace fblab
