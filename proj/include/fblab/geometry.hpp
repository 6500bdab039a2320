#pragma once
#include "fblab/profile.hpp"

#include <functional>
#include <vector>

namespace fblab {

struct ChartPoint {
    double r = 0, theta = 0;
};

struct MetricBlocks {
    double g2[2][2];     // 2x2 block in (r, theta)
    double g2_inv[2][2]; // its inverse
    double sym_u, sym_v; // angular factors r^2 cos^2, r^2 sin^2
    double sigma;        // 1 + r^4 (9 g^2 + g'^2) = 1 + |grad F|^2
};

struct CurvatureSpectrum {
    double mu1 = 0, mu2 = 0; // multiplicity 3 each
    double lam1 = 0, lam2 = 0;

    double H(int l) const; // sum of k_i^l over all 8 curvatures
    double A2() const { return H(2); }
    double max_abs() const;
};

double model_height(const AngularProfile& p, const ChartPoint& q); // F = r^3 g

MetricBlocks metric_blocks(const AngularProfile& p, const ChartPoint& q);
CurvatureSpectrum curvature_spectrum(const AngularProfile& p, const ChartPoint& q);

// H_{inf,3} via the closed grouping (mu1+mu2)(...)+(lam1+lam2)(...).
double h3_closed_form(const CurvatureSpectrum& c);
// mu1+mu2 via the closed form (r/sqrt(sigma))(6g + 2 g' cot 2theta).
double mu_sum_closed_form(const AngularProfile& p, const ChartPoint& q);

// Pointwise residual of the homogenized equation div(grad F/|grad F|) = 0
// for the solved profile, evaluated analytically.
double homogenized_divergence(const AngularProfile& p, const ChartPoint& q);

// Graph mean curvature H[F_inf] = (grad F/|grad F|) . grad Q / Q^2 with
// Q = sqrt(1+|grad F|^2) (|grad F| + sqrt(1+|grad F|^2)).
double graph_mean_curvature(const AngularProfile& p, const ChartPoint& q);

// Same H[.] operator applied to an arbitrary axisymmetric field f(u,v) by
// centered finite differences (exactly zero for linear fields).
double graph_mean_curvature_fd(const std::function<double(double, double)>& f, double u, double v,
                               double h);

// Log-log decay slope fit of |H[F_inf]| over r in [r0, r1] at fixed theta.
double hf_decay_slope(const AngularProfile& p, double theta, double r0, double r1, int npts);

struct IntrinsicDerivs {
    double grad_mag;
    double hess_mag;
};

// |D h| and |D^2 h| on Gamma_inf for an axisymmetric field via the explicit
// Christoffel symbols; finite differences of the callable with step fd.
IntrinsicDerivs intrinsic_derivatives(const AngularProfile& p,
                                      const std::function<double(double, double)>& h,
                                      const ChartPoint& q, double fd);

// Majorant forms of the intrinsic-derivative bounds (gradient and hessian),
// given the chart-partial sups hr, ht of the field near q.
double grad_bound_majorant(const ChartPoint& q, double hr, double ht);
double hess_bound_majorant(const ChartPoint& q, double hr, double ht, double hrr, double hrt,
                           double htt);

// Laplace-Beltrami data for axisymmetric fields on Gamma_inf:
// Delta f = grr f_rr + 2 grt f_rt + gtt f_tt + Cr f_r + Ct f_t,
// area density B = r^7 sqrt(sigma) sin^3(2 theta).
struct LBCoeffs {
    double grr, grt, gtt;
    double Cr, Ct;
    double B;
    double A2; // |A_inf|^2 potential
};
LBCoeffs lb_coeffs(const AngularProfile& p, const ChartPoint& q);

double laplace_beltrami(const AngularProfile& p, const std::function<double(double, double)>& f,
                        const ChartPoint& q, double fd_r, double fd_t);
double jacobi_apply(const AngularProfile& p, const std::function<double(double, double)>& f,
                    const ChartPoint& q, double fd_r, double fd_t);

} // namespace fblab
