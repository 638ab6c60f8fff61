#pragma once
// Reaction term f acting pointwise (Nemytskii operator), its one-sided
// dissipativity and growth certificates, and the contraction rate derived
// from the model constants.

#include <string>
#include <vector>

#include "srdlab/spectral_field.hpp"

namespace srd {

enum class LipKind { none, sin_scaled, rational, constant };

// bounded Lipschitz additions: c sin(x), c x/(1+x^2), or a constant c
struct LipschitzPart {
  LipKind kind = LipKind::none;
  double scale = 0.0;

  double eval(double x) const;
  double slope_bound() const;  // sup |derivative|
};

struct DriftSpec {
  // a[i] multiplies x^i; empty means zero reaction. When nonempty the length
  // is q (degree q-1), the leading coefficient is negative and q-1 is odd.
  std::vector<double> poly_coeffs;
  LipschitzPart lip;
  double L_f = 0.0;        // one-sided Lipschitz constant
  double theta_diss = 0.0; // dissipativity weight, > 0
  double q = 2.0;          // dissipativity exponent, >= 2
  double L_f_prime = 0.0;  // growth constant, > 0

  double f(double x) const;
  bool zero_reaction() const { return poly_coeffs.empty() && lip.kind == LipKind::none; }
};

// validates shape and both certificate grids; throws ConfigError on failure
DriftSpec make_drift(std::vector<double> poly, LipschitzPart lip, double L_f,
                     double theta_diss, double q, double L_f_prime);

struct GridCheckReport {
  bool pass = false;
  double worst_margin = 0.0;  // most negative scaled slack seen
  double xi = 0.0, eta = 0.0; // pair realizing it
  std::string note;
};

// (f(xi)-f(eta))(xi-eta) <= L_f (xi-eta)^2 - theta_diss |xi-eta|^q over the
// pair grid [-radius, radius]^2 with the given step, plus a leading-term
// check beyond the grid; slack is measured relative to the term magnitudes
GridCheckReport validate_dissipativity(const DriftSpec& d, double radius,
                                       double step);

// |f(xi)-f(eta)| <= L_f_prime (1+|xi|^{q-2}+|eta|^{q-2}) |xi-eta|
GridCheckReport validate_growth(const DriftSpec& d, double radius, double step);

// contraction rate: -L_f plus the indicator-weighted Poincare contributions
double compute_lambda(double L_f, double theta_diss, double q, double p,
                      double lambda_1);

struct DimensionCheck {
  bool pass = false;
  bool vacuous = false;  // q <= 2: no constraint
  double bound = 0.0;    // d < 2p(q+p-2)/((p-1)(q-2)) when q > 2
  std::string note;
};
DimensionCheck check_dimension_condition(int d_dim, double p, double q);

PhysicalField apply_nemytskii(const DriftSpec& d, const PhysicalField& v);

}  // namespace srd
