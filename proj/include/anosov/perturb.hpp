#pragma once

#include "anosov/geometry.hpp"
#include "anosov/sections.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace anosov {

struct BumpOptions {
  double b = 32.0;
  int R = 14;
  double tau_star = 0.1;      // bumps sit at chart height 4 tau* +- 1.5 tau*
  double min_transverse = 16; // lower bound for the y-scale, keeps the support embedded for small b^{1/R}
  int cheb_degree = 64;       // chart functions S, G along the unstable curve
  CurveOptions curve;
};

// Flow-box chart around W^u(p) and the bump functions phi_j built in it.
//   base point  w_p + S(x) e_u + c e_s,  y = sy S'(x) det[e_u e_s] c,   lifted height G(x) + z
// x is the intrinsic parameter on W^u(p), chart(w^u_p(x)) = (x, 0, 0), dx dy dz is the
// Lebesgue volume, and z is flow time when the model has no time change.
// phi_j = -amp chi((z - 4 tau*) / tau*) h0(beta (x - s_j), beta_y y) with h0 = Y chi(|(X, Y)|),
// beta = b^{1/R}, beta_y = max(beta, min_transverse), amp = 1 / (b beta_y).
class BumpFamily {
public:
  BumpFamily(const FlowModel& m, const Point3& p, const BumpOptions& opts = {});

  struct Preimage {
    double x = 0.0, y = 0.0;
    double offset = 0.0;       // chart z = zeta + offset - g for the fiber height zeta
    double g = 0.0, dg = 0.0;  // G(x), G'(x)
    Vec2 dx, dy, doffset;      // derivatives in the fiber base point
  };
  // chart preimages over the fiber base w inside the bump region with chart z able to reach (zlo, zhi)
  void preimages(const Vec2& w, std::vector<Preimage>& out) const { enumerate(w, z_lo(), z_hi(), out); }
  void enumerate(const Vec2& w, double zlo, double zhi, std::vector<Preimage>& out) const;

  // phi_j at a point, and its gradient in fundamental-domain coordinates
  double bump_value(int j, const Point3& q) const;
  Vec3 bump_gradient(int j, const Point3& q) const;

  // chart (x, y, z) of q with z in [-tau*, 6 tau*] closest to 4 tau*; false when q is outside the chart
  bool chart_coordinates(const Point3& q, Vec3& xyz) const;
  // lifted chart point back on M
  Point3 chart_point(double x, double y, double z) const;

  const FlowModel& model() const { return model_; }
  const Point3& anchor() const { return p_; }
  std::uint64_t id() const { return id_; }
  double b() const { return b_; }
  int R() const { return R_; }
  double beta() const { return beta_; }      // b^{1/R}
  double beta_y() const { return beta_y_; }
  int count() const { return count_; }       // ceil(b^{1/R})
  double s(int j) const { return -1.0 + (2.0 * j - 1.0) / beta_; }
  double tau_star() const { return tau_star_; }
  double a0() const { return a0_; }          // int chi(z / tau*) dz
  double amplitude() const { return 1.0 / (b_ * beta_y_); }
  double h0_sup() const { return h0_sup_; }
  int multiplicity() const { return mult_; } // max overlapping preimages of one bump (sampled)
  double chart_residual() const { return residual_; }
  double J_lo(int j) const { return std::max(-1.0, s(j) - 1.0 / beta_); }
  double J_hi(int j) const { return std::min(1.0, s(j) + 1.0 / beta_); }
  // J(j-1) u J(j) u J(j+1) stays away from the endpoints -1 and 1
  bool admissible(int j) const;
  std::vector<int> admissible_indices(bool even) const;

  double S(double x) const;
  double dS(double x) const;
  double ddS(double x) const;
  double G(double x) const;
  double dG(double x) const;
  double chart_sign() const { return sy_; }
  // a_j(phi0) = a0^{-1} int (1 + phi0(f^t q_j))^{-2} chi(t / tau*) dt, q_j = f^{4 tau*}(w^u_p(s_j))
  double analytic_coefficient(int j) const;

  // h0(beta (x - s_j), beta_y y) with x- and y-derivatives
  double profile(double x, double y, int j, double* dx = nullptr, double* dy = nullptr) const;
  double x_lo() const { return x_lo_; }
  double x_hi() const { return x_hi_; }
  double y_max() const { return 1.5 / beta_y_; }
  double z_lo() const { return 2.5 * tau_star_; }
  double z_hi() const { return 5.5 * tau_star_; }

private:
  double inverse_S(double a) const;
  int sampled_multiplicity() const;

  FlowModel model_;
  Point3 p_;
  std::uint64_t id_;
  double b_;
  int R_;
  double beta_, beta_y_;
  int count_;
  double tau_star_, a0_ = 0.0, h0_sup_ = 0.0;
  Vec2 wp_, eu_, es_, ustar_, sstar_;
  double det_ = 0.0, sy_ = 1.0;
  double L_ = 0.0, x_lo_ = 0.0, x_hi_ = 0.0;
  double a_lo_ = 0.0, a_hi_ = 0.0, g_min_ = 0.0, g_max_ = 0.0, ds_min_ = 0.0;
  double residual_ = 0.0;
  int mult_ = 1;
  std::vector<double> cS_, cdS_, cddS_, cG_, cdG_;
  std::vector<double> table_a_;  // S on a uniform x-grid of [x_lo, x_hi], for bracketing
};

using FamilyPtr = std::shared_ptr<const BumpFamily>;
FamilyPtr make_bump_family(const FlowModel& m, const Point3& p, const BumpOptions& opts = {});

// sum_j t_j phi_j as an additive time-change term
class BumpTerm final : public TimeChangeTerm {
public:
  BumpTerm(FamilyPtr family, std::vector<double> t);  // t[j-1] multiplies phi_j
  double value(const Point3& p) const override;
  Vec3 gradient(const Point3& p) const override;
  void fiber_windows(const Vec2& w, double roof, std::vector<Interval>& out) const override;
  double sup_bound() const override;
  std::string describe() const override;
  void fiber_values(const Vec2& w, const double* z, std::size_t n, double* val, Vec2* dw) const override;

private:
  // value (and w- and zeta-derivatives) from the cached preimages of w
  void eval(const Vec2& w, const double* z, std::size_t n, double* val, Vec2* dw, double* dz) const;
  FamilyPtr fam_;
  std::vector<double> t_;
};

// Flow of (1 + phi_0 + sum t_j phi_j) v; t has one entry per bump, each in [-4, 4].
FlowModel bump_timechange(const FamilyPtr& family, const std::vector<double>& t);

struct ResponseOptions {
  int grid = 129;  // uniform tau nodes on [-1, 1]
  SplitOptions split;
  CurveOptions curve;
};

struct TemplateResponse {
  int j = 0;
  std::vector<double> t, tau;
  std::vector<std::vector<double>> delta;  // delta[i][k]: change of the fixed-frame template at t[i], tau[k]
  std::vector<double> slope;               // LS slope of b * delta in t at each tau
  double slope_j = 0.0;                    // mean slope over J(j)
  double analytic = 0.0;                   // a_j(phi0)
  double ratio = 0.0;                      // slope_j / (a0 * a_j)
  double near_mass = 0.0, far_mass = 0.0;  // L1 mass at the largest |t| on J(j-1..j+1) and the worst distant window
  double locality = 0.0;                   // near_mass / far_mass
  double linearity = 0.0;                  // max linear-fit residual / response range over J(j)
};

// Change of the s-template at the anchor under t_j phi_j, in the unperturbed frames (E_u, perp).
TemplateResponse template_response(const FamilyPtr& family, int j, const std::vector<double>& t_grid,
                                   const ResponseOptions& opts = {});

}  // namespace anosov
