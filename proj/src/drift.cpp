#include "srdlab/drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace srd {

double LipschitzPart::eval(double x) const {
  switch (kind) {
    case LipKind::none: return 0.0;
    case LipKind::sin_scaled: return scale * std::sin(x);
    case LipKind::rational: return scale * x / (1.0 + x * x);
    case LipKind::constant: return scale;
  }
  return 0.0;
}

double LipschitzPart::slope_bound() const {
  switch (kind) {
    case LipKind::none: return 0.0;
    case LipKind::sin_scaled: return std::abs(scale);
    case LipKind::rational: return std::abs(scale);  // |d/dx x/(1+x^2)| <= 1
    case LipKind::constant: return 0.0;
  }
  return 0.0;
}

double DriftSpec::f(double x) const {
  double acc = 0.0;
  for (std::size_t i = poly_coeffs.size(); i-- > 0;)
    acc = acc * x + poly_coeffs[i];
  return acc + lip.eval(x);
}

namespace {

double pow_q(double a, double q) {
  if (q == 2.0) return a * a;
  if (q == 4.0) {
    double s = a * a;
    return s * s;
  }
  return std::pow(a, q);
}

void shape_check(const DriftSpec& d) {
  if (!(d.theta_diss > 0.0))
    throw ConfigError("drift: theta_diss must be positive");
  if (!(d.L_f_prime > 0.0))
    throw ConfigError("drift: L_f_prime must be positive");
  if (!(d.q >= 2.0)) throw ConfigError("drift: q must be >= 2");
  if (!std::isfinite(d.L_f)) throw ConfigError("drift: L_f must be finite");
  if (d.poly_coeffs.empty()) return;  // zero reaction, no shape constraint
  double qr = std::round(d.q);
  if (std::abs(d.q - qr) > 1e-9)
    throw ConfigError("drift: polynomial reaction needs integer q");
  if (d.poly_coeffs.size() != static_cast<std::size_t>(qr))
    throw ConfigError("drift: poly_coeffs must have length q (degree q-1)");
  int deg = static_cast<int>(qr) - 1;
  if (deg % 2 == 0)
    throw ConfigError("drift: polynomial degree q-1 must be odd");
  if (!(d.poly_coeffs.back() < 0.0))
    throw ConfigError("drift: leading coefficient must be negative");
  for (double a : d.poly_coeffs)
    if (!std::isfinite(a)) throw ConfigError("drift: nonfinite coefficient");
}

// asymptotic certificates beyond the scan radius
bool tail_dissipative(const DriftSpec& d, std::string* note) {
  double a1 = d.poly_coeffs.size() >= 2 ? d.poly_coeffs[1] : 0.0;
  if (d.q == 2.0 || d.poly_coeffs.size() <= 2) {
    // affine-plus-bounded case: pairwise slope must not exceed L_f - theta
    double slope = a1 + d.lip.slope_bound();
    if (slope <= d.L_f - d.theta_diss + 1e-12) return true;
    *note = "slope exceeds L_f - theta_diss in the tail";
    return false;
  }
  // leading term: (xi^{q-1}-eta^{q-1})(xi-eta) >= 2^{2-q}|xi-eta|^q, with the
  // minimum attained at eta = -xi
  double lead = std::abs(d.poly_coeffs.back());
  double cq = std::pow(2.0, 2.0 - d.q);
  if (d.theta_diss <= lead * cq * (1.0 + 1e-12)) return true;
  *note = "theta_diss exceeds the leading-term dissipation in the tail";
  return false;
}

bool tail_growth(const DriftSpec& d, std::string* note) {
  double a1 = d.poly_coeffs.size() >= 2 ? d.poly_coeffs[1] : 0.0;
  if (d.q == 2.0 || d.poly_coeffs.size() <= 2) {
    double slope = std::abs(a1) + d.lip.slope_bound();
    if (slope <= d.L_f_prime * (1.0 + 1e-12)) return true;
    *note = "Lipschitz slope exceeds L_f_prime in the tail";
    return false;
  }
  // |xi^{q-1}-eta^{q-1}| <= (q-1) max^{q-2} |xi-eta| <= (q-1)(|xi|^{q-2}+|eta|^{q-2})|xi-eta|
  double lead = std::abs(d.poly_coeffs.back());
  if (lead * (d.q - 1.0) <= d.L_f_prime * (1.0 + 1e-12)) return true;
  *note = "leading growth exceeds L_f_prime in the tail";
  return false;
}

}  // namespace

GridCheckReport validate_dissipativity(const DriftSpec& d, double radius,
                                       double step) {
  if (!(radius > 0.0) || !(step > 0.0))
    throw DomainError("validate_dissipativity: radius and step must be positive");
  GridCheckReport rep;
  const int n = static_cast<int>(std::floor(2.0 * radius / step)) + 1;
  std::vector<double> xs(static_cast<std::size_t>(n)), fs(xs.size());
  for (int i = 0; i < n; ++i) {
    xs[static_cast<std::size_t>(i)] = -radius + i * step;
    fs[static_cast<std::size_t>(i)] = d.f(xs[static_cast<std::size_t>(i)]);
  }
  double worst = 0.0, wxi = 0.0, weta = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)];
      const double lhs = (fs[static_cast<std::size_t>(i)] - fs[static_cast<std::size_t>(j)]) * dx;
      const double rhs = d.L_f * dx * dx - d.theta_diss * pow_q(std::abs(dx), d.q);
      const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
      const double margin = (rhs - lhs) / scale;
      if (margin < worst) {
        worst = margin;
        wxi = xs[static_cast<std::size_t>(i)];
        weta = xs[static_cast<std::size_t>(j)];
      }
    }
  }
  rep.worst_margin = worst;
  rep.xi = wxi;
  rep.eta = weta;
  std::string tail_note;
  bool tail_ok = tail_dissipative(d, &tail_note);
  rep.pass = worst >= -1e-12 && tail_ok;
  if (!rep.pass) {
    std::ostringstream os;
    if (worst < -1e-12)
      os << "grid violation at (" << wxi << ", " << weta << "), scaled margin "
         << worst;
    if (!tail_ok) os << (os.str().empty() ? "" : "; ") << tail_note;
    rep.note = os.str();
  }
  return rep;
}

GridCheckReport validate_growth(const DriftSpec& d, double radius, double step) {
  if (!(radius > 0.0) || !(step > 0.0))
    throw DomainError("validate_growth: radius and step must be positive");
  GridCheckReport rep;
  const int n = static_cast<int>(std::floor(2.0 * radius / step)) + 1;
  std::vector<double> xs(static_cast<std::size_t>(n)), fs(xs.size()), gs(xs.size());
  for (int i = 0; i < n; ++i) {
    const double x = -radius + i * step;
    xs[static_cast<std::size_t>(i)] = x;
    fs[static_cast<std::size_t>(i)] = d.f(x);
    gs[static_cast<std::size_t>(i)] = pow_q(std::abs(x), d.q - 2.0);
  }
  double worst = 0.0, wxi = 0.0, weta = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = std::abs(xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)]);
      const double lhs = std::abs(fs[static_cast<std::size_t>(i)] - fs[static_cast<std::size_t>(j)]);
      const double rhs = d.L_f_prime *
                         (1.0 + gs[static_cast<std::size_t>(i)] + gs[static_cast<std::size_t>(j)]) * dx;
      const double scale = std::max({1.0, lhs, rhs});
      const double margin = (rhs - lhs) / scale;
      if (margin < worst) {
        worst = margin;
        wxi = xs[static_cast<std::size_t>(i)];
        weta = xs[static_cast<std::size_t>(j)];
      }
    }
  }
  rep.worst_margin = worst;
  rep.xi = wxi;
  rep.eta = weta;
  std::string tail_note;
  bool tail_ok = tail_growth(d, &tail_note);
  rep.pass = worst >= -1e-12 && tail_ok;
  if (!rep.pass) {
    std::ostringstream os;
    if (worst < -1e-12)
      os << "grid violation at (" << wxi << ", " << weta << "), scaled margin "
         << worst;
    if (!tail_ok) os << (os.str().empty() ? "" : "; ") << tail_note;
    rep.note = os.str();
  }
  return rep;
}

DriftSpec make_drift(std::vector<double> poly, LipschitzPart lip, double L_f,
                     double theta_diss, double q, double L_f_prime) {
  DriftSpec d;
  d.poly_coeffs = std::move(poly);
  d.lip = lip;
  d.L_f = L_f;
  d.theta_diss = theta_diss;
  d.q = q;
  d.L_f_prime = L_f_prime;
  shape_check(d);
  auto diss = validate_dissipativity(d, 50.0, 0.05);
  if (!diss.pass)
    throw ConfigError("drift: dissipativity certificate failed: " + diss.note);
  auto grow = validate_growth(d, 50.0, 0.05);
  if (!grow.pass)
    throw ConfigError("drift: growth certificate failed: " + grow.note);
  return d;
}

double compute_lambda(double L_f, double theta_diss, double q, double p,
                      double lambda_1) {
  double lam = -L_f;
  if (q == 2.0 && p != 2.0) lam += theta_diss;
  if (q != 2.0 && p == 2.0) lam += lambda_1;
  if (q == 2.0 && p == 2.0) lam += lambda_1 + theta_diss;
  return lam;
}

DimensionCheck check_dimension_condition(int d_dim, double p, double q) {
  if (!(p > 1.0)) throw DomainError("dimension condition: p must exceed 1");
  DimensionCheck out;
  if (q <= 2.0) {
    out.pass = true;
    out.vacuous = true;
    out.bound = std::numeric_limits<double>::infinity();
    out.note = "q <= 2 imposes no dimension constraint";
    return out;
  }
  out.bound = 2.0 * p * (q + p - 2.0) / ((p - 1.0) * (q - 2.0));
  out.pass = static_cast<double>(d_dim) < out.bound;
  out.note = out.pass ? "dimension below threshold" : "dimension too large";
  return out;
}

PhysicalField apply_nemytskii(const DriftSpec& d, const PhysicalField& v) {
  PhysicalField out(v.grid);
  for (std::size_t j = 0; j < v.v.size(); ++j) out.v[j] = d.f(v.v[j]);
  return out;
}

}  // namespace srd
