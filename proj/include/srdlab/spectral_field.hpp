#pragma once
// Dirichlet sine-spectral representation of scalar fields on (0,1).
// Basis e_k = sqrt(2) sin(k pi xi) with eigenvalue lambda_k = pi^2 k^2 of the
// negative Laplacian. Collocation uses the interior nodes xi_j = j/(n_quad+1),
// on which the first n_quad sine modes are exactly orthogonal, so analysis
// inverts synthesis to rounding error whenever n_quad >= n_modes.

#include <memory>
#include <vector>

#include "srdlab/common.hpp"

namespace srd {

struct GridSpec {
  int n_modes = 0;
  int n_quad = 0;

  GridSpec(int modes, int quad);

  double eigenvalue(int k) const;  // k = 1..n_modes
  double node(int j) const;        // j = 1..n_quad
  double cell() const;             // node spacing 1/(n_quad+1)

  bool operator==(const GridSpec&) const = default;
};

struct SpectralField {
  GridSpec grid;
  std::vector<double> c;  // c[k-1] multiplies e_k

  explicit SpectralField(const GridSpec& g);
  SpectralField(const GridSpec& g, std::vector<double> coeffs);
};

struct PhysicalField {
  GridSpec grid;
  std::vector<double> v;  // values at the interior nodes

  explicit PhysicalField(const GridSpec& g);
  PhysicalField(const GridSpec& g, std::vector<double> values);
};

// Precomputed synthesis/analysis tables for one grid. The node set is
// symmetric about 1/2 and sin(k pi (1-xi)) = (-1)^{k+1} sin(k pi xi), so odd
// and even modes are evaluated on half the nodes and mirrored, which halves
// the matvec work. A process-wide cache shares plans between callers; the
// methods are const and safe to use from many threads.
class SineTransform {
 public:
  explicit SineTransform(const GridSpec& g);

  const GridSpec& grid() const { return grid_; }

  void synthesize(const double* coeff, double* values) const;
  void analyze(const double* values, double* coeff) const;
  // values of the spatial derivative (cosine series)
  void synthesize_derivative(const double* coeff, double* values) const;

 private:
  GridSpec grid_;
  int half_ = 0;     // floor(n_quad/2)
  bool mid_ = false; // n_quad odd: node at xi = 1/2
  int n_odd_ = 0, n_even_ = 0;
  std::vector<double> syn_odd_, syn_even_;  // node-major, half x n_odd/even
  std::vector<double> mid_row_;             // odd modes at xi = 1/2
  std::vector<double> ana_odd_, ana_even_;  // mode-major, n_odd/even x half
  std::vector<double> cos_full_;            // node-major, n_quad x n_modes
};

std::shared_ptr<const SineTransform> transform_plan(const GridSpec& g);

PhysicalField to_physical(const SpectralField& u);
SpectralField to_spectral(const PhysicalField& v);

// L^p norm over (0,1) by node quadrature with the known zero boundary values;
// p >= 1, p = inf (pass infinity) gives the max over nodes
double lp_norm(const PhysicalField& v, double p);
double lp_norm(const SpectralField& u, double p);

// Euclidean norm of the coefficients; equals lp_norm(u, 2) up to quadrature
// accuracy and costs no transform
double l2_coeff_norm(const SpectralField& u);

// Fractional Sobolev (Slobodeckij) norm of order beta in (0,1):
// ( ||u||_p^p + double-sum over node pairs of |u(xi)-u(eta)|^p/|xi-eta|^{1+beta p}
//   + near-diagonal correction from the derivative ) ^ {1/p}.
// The excluded band |xi-eta| < cell is restored analytically: on it
// |u(xi)-u(eta)| ~ |u'| |xi-eta|, and the band integral of
// |u'|^p |xi-eta|^{p-1-beta p} equals |u'|^p 2 h^{p(1-beta)}/(p(1-beta)).
double sobolev_slobodeckij_norm(const SpectralField& u, double beta, double p);

// (-Laplacian)^s, any real s: multiplies mode k by lambda_k^s
SpectralField apply_laplacian_power(const SpectralField& u, double s);

// heat semigroup e^{t Laplacian}, t >= 0
SpectralField heat_semigroup(const SpectralField& u, double t);

}  // namespace srd
