#pragma once
#include "fblab/geometry.hpp"

#include <boost/rational.hpp>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace fblab {

// Tensor grid on the model graph chart: geometric spacing in r on
// [r_min, R], theta graded toward the diagonal (power grading about pi/4,
// symmetric, with nodes exactly at 0, pi/4, pi/2).
struct JacobiGrid {
    double r_min = 0, R = 0;
    std::vector<double> r;
    std::vector<double> th;
    int nr() const { return int(r.size()); }
    int nt() const { return int(th.size()); }
    size_t index(int i, int j) const { return size_t(j) * r.size() + i; }
};

JacobiGrid make_jacobi_grid(double R, int per_octave = 12, int half_nt = 32, double grading = 2.0,
                            double r_min = 0.05);

// Axisymmetric field on the grid with weighted-norm bookkeeping:
// ||f||_{k,inf} = sup (1 + r^k) |f|.
struct WeightedField {
    JacobiGrid grid;
    std::vector<double> values;
    double decay_exponent = 0;

    double at(int i, int j) const { return values[grid.index(i, j)]; }
    double& at(int i, int j) { return values[grid.index(i, j)]; }
    double weighted_norm() const { return weighted_norm(decay_exponent); }
    double weighted_norm(double k) const;
    double eval(double r, double theta) const; // bilinear (log r x graded theta)
};

WeightedField sample_field(const JacobiGrid& g, const std::function<double(double, double)>& f,
                           double decay_exponent);

// Q1 finite-element solve of J h = Delta_Gamma h + |A|^2 h = f on
// [r_min, R] x [0, pi/2], natural at the poles and inner ring, and a
// decay-matched flux condition d_r h = -(sigma_r / 2 sigma) h at r = R (the
// slow translation mode 1/sqrt(sigma) satisfies it exactly, so expanding-R
// sweeps converge at the interior rate instead of stalling at O(R^-eps)).
// The assembled operator (stiffness minus |A|^2 mass) must be positive
// definite; at resolutions fine enough to resolve the singular |A|^2
// diagonal line it loses that sign structure and IndefiniteOperator is
// thrown.
WeightedField dirichlet_solve(const AngularProfile& p, const WeightedField& f);

// Pointwise J h at grid nodes by non-uniform finite differences of the nodal
// values (boundary nodes and pole rows carry 0).
WeightedField jacobi_residual(const AngularProfile& p, const WeightedField& h);

struct SupersolutionCertificate {
    std::string kind; // "type1" | "type2" | "patched"
    double epsilon = 0, tau = 0, delta = 0, alpha1 = 0, alpha2 = 0, r0 = 0;
    double margin_min = 0; // smallest -J h - RHS over the sample set
    long sample_count = 0;
    std::map<std::string, double> norms;
};

struct Type1Result {
    WeightedField h;
    SupersolutionCertificate cert;
};
// Solves J h = -slack/(1 + r^{4+eps}) with an expanding-R sweep; certifies
// positivity, the supersolution margin, and the weighted norms.
Type1Result build_type1(const AngularProfile& p, double epsilon, double R = 128,
                        double slack = 1.05);

struct Type2Result {
    WeightedField h;
    SupersolutionCertificate cert;
    std::vector<double> q2;  // recovered angular profile q2(theta) on grid.th
    double a0 = 0, a2 = 0;   // fitted leading expansion q2 = t^tau (a0 + a2 t^2)
};
Type2Result build_type2(const AngularProfile& p, double tau, double epsilon, double R = 128,
                        double slack = 1.05);

using Rational = boost::rational<long long>;

struct PatchParams {
    Rational delta{1, 2}, epsilon{1, 8}, tau{5, 8};
    Rational alpha1, alpha2;
};

// Exact window of admissible exponents: -2 <= a2 < -(2+d)/(2-t) < a1 < (-3-e-d)/2.
struct RationalWindow {
    Rational low;  // -2
    Rational mid;  // -(2+delta)/(2-tau)
    Rational high; // (-3-epsilon-delta)/2
};
RationalWindow admissible_window(const Rational& delta, const Rational& epsilon,
                                 const Rational& tau);
void validate_window(const PatchParams& params); // throws WindowViolation

struct PatchResult {
    WeightedField h; // min(h1, h2) sampled on a grid over [r0, R]
    SupersolutionCertificate cert;
};
// Builds h1 = (theta-pi/4)^2 r^{3+delta}/sqrt(sigma) and h2 from the type-2
// angular profile, both corrected by a type-1 tail, and certifies the region
// ordering and the supersolution margins on samples with r > r0.
PatchResult patch_supersolutions(const AngularProfile& p, const Type2Result& t2,
                                 const PatchParams& params, double r0);

struct NormReport {
    double norm_h = 0;       // ||h||_{k,inf}
    double norm_dh = 0;      // ||D h||_{k+1,inf} (intrinsic, FD surrogate)
    double norm_d2h = 0;     // ||D^2 h||_{k+2,inf}
    double holder = 0;       // sampled C^{1/2} seminorm surrogate at scale 1+r
    double apriori_ratio = 0;       // (norm_dh + norm_d2h)/(||h||_k + ||f||_{k+2})
    bool ratio_min_on_boundary = 0; // h/h0 attains annulus minima on boundaries
};
NormReport norms_and_diagnostics(const AngularProfile& p, const WeightedField& h,
                                 const WeightedField& f, double k);

} // namespace fblab
