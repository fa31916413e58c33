#pragma once

#include "anosov/core.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace anosov {

using cplx = std::complex<double>;

struct Axis {
  int n = 0;
  double lo = 0.0, h = 1.0;
  double at(int i) const { return lo + i * h; }
  double hi() const { return lo + (n - 1) * h; }
  bool operator==(const Axis&) const = default;
};

// Uniform grids for the partial Bargmann sandbox. The same 1-d axis is used for both
// transverse coordinates (x', y'), both w components and both xi components. z is periodic
// with period z.n * z.h and eta runs over its DFT dual, eta_k = 2 pi (k - n/2) / (n h).
struct BargmannGrid {
  Axis x, z, w, xi;
  int eta_count() const { return z.n; }
  double eta(int k) const { return two_pi * (k - z.n / 2) / (z.n * z.h); }
  double deta() const { return two_pi / (z.n * z.h); }
  int block() const { return w.n * xi.n; }  // nodes (w_i, xi_i) of one coordinate pair
  double space_weight() const { return x.h * x.h * z.h; }
  double phase_weight() const { return w.h * w.h * xi.h * xi.h * deta(); }
  void validate() const;
  bool operator==(const BargmannGrid&) const = default;
};

// z step 1, |eta| <= pi: resolves the z-integral of unit Gaussians to ~1e-9
BargmannGrid transform_grid();
// finer w step: the sampled packets keep their frame bound within 1e-8 of 1 up to |eta| = pi
BargmannGrid linear_grid();
// z step 1.6, |eta| <= 1.96: narrower packets in xi, so a cheaper block for kernel-level checks
BargmannGrid projector_grid();

// u(x'_i, y'_j, z_k) stored as slices[k](i, j)
struct SpaceFunction {
  BargmannGrid grid;
  std::vector<Eigen::MatrixXcd> slices;
  double norm() const;
  cplx inner(const SpaceFunction& o) const;  // <this, o>, conjugate-linear in this
};

// V(w, xi, eta_k) stored as blocks[k](p, q), p = i_w1 * xi.n + i_xi1, q = i_w2 * xi.n + i_xi2
struct PhaseGridFunction {
  BargmannGrid grid;
  std::vector<Eigen::MatrixXcd> blocks;
  double norm() const;
  cplx inner(const PhaseGridFunction& o) const;
  cplx at(int k, int iw1, int ixi1, int iw2, int ixi2) const {
    return blocks[k](iw1 * grid.xi.n + ixi1, iw2 * grid.xi.n + ixi2);
  }
};

SpaceFunction sample_space(const BargmannGrid& g, const std::function<cplx(double, double, double)>& f);
SpaceFunction zero_space(const BargmannGrid& g);
PhaseGridFunction zero_phase(const BargmannGrid& g);
PhaseGridFunction random_phase(const BargmannGrid& g, std::uint64_t seed, double w_core, double xi_core);

// trapezoid discretization of int conj(phi_{w,xi,eta}(w', z')) u(w', z') dw' dz' with
// phi = 2^{-3/2} pi^{-2} <eta>^{1/2} exp(i eta z' + i xi.(w' - w/2) - <eta> |w' - w|^2 / 2)
PhaseGridFunction bargmann_fwd(const SpaceFunction& u);
// exact discrete adjoint for the weighted inner products
SpaceFunction bargmann_adj(const PhaseGridFunction& v);

enum class ProjectorPath { composition, kernel };
// B B*, either through the transverse grid or with the closed-form kernel
//   (2 pi)^{-2} exp(i (xi'.w - xi.w') / 2 - <eta> |w - w'|^2 / 4 - |xi - xi'|^2 / (4 <eta>)) delta(eta - eta')
PhaseGridFunction projector_apply(const PhaseGridFunction& v, ProjectorPath path = ProjectorPath::composition);

// Partitions of unity on phase space, built from chi(s) = 1 on |s| <= 1, 0 on |s| >= 3/2.
double cutoff_chi(double s);
double q_omega(int omega, double eta);               // integer translates, normalized
double chi_sign(int sign, const Vec2& v);            // chi_+ = 1 on |x| >= 2|y|, chi_- = 1 - chi_+
double chi_dyadic(int m, const Vec2& v);             // m >= 0
double psi_aniso(int m, const Vec2& v);              // chi_{sgn m} chi_{|m|}
struct PartitionWeights {
  double q = 0.0, chi_plus = 0.0, chi_minus = 0.0, chi_m = 0.0, psi_m = 0.0;
};
PartitionWeights phase_partition(int omega, int m, double eta, const Vec2& v);

struct AnisoComponent {
  int omega = 0, m = 0;
  double l2 = 0.0;
};
struct AnisoComponents {
  double alpha0 = 0.125;
  std::vector<AnisoComponent> items;
};
// (sum e^{alpha0 m} |u_j|^2)^{1/2}
double aniso_norm(const AnisoComponents& c);
std::vector<double> aniso_contributions(const AnisoComponents& c);
// u_{omega,m} = q_omega(eta) psi_m(<omega>^{-1/2} xi / xi_scale) V
AnisoComponents aniso_decompose(const PhaseGridFunction& v, double xi_scale = 1.0, double alpha0 = 0.125);

// A(x, y, z) = (lambda x, lambda_t y, z + varpi.(x, y) + beta x y)
struct LinearModel {
  double lambda = 1.0, lambda_t = 1.0;
  Vec2 varpi = Vec2::Zero();
  double beta = 0.0;
};

// q_omega(eta) chi(|w| / w_radius) psi_m(<omega>^{-1/2} xi / xi_scale)
struct PhaseCutoff {
  int omega = 0, m = 0;
  double w_radius = 1.0, xi_scale = 1.0;
  double value(const Vec2& w, const Vec2& xi, double eta) const;
};

// kernel of the linear-model transfer operator B((B* .) o A^{-1}) between two phase nodes at one eta,
// without quadrature weights (closed-form complex Gaussian integral)
cplx linear_kernel(const LinearModel& A, double eta, const Vec2& w, const Vec2& xi, const Vec2& w0, const Vec2& xi0);

// dense matrix of M(out) A M(in) on one eta node, restricted to the cutoff supports,
// scaled so that its 2-norm is the operator norm on the weighted grid
struct DenseBlock {
  Eigen::MatrixXcd M;
  std::vector<int> in_nodes, out_nodes;  // flattened (iw1, ixi1, iw2, ixi2) indices
};
DenseBlock linear_model_block(const LinearModel& A, const PhaseCutoff& in, const PhaseCutoff& out,
                              const BargmannGrid& g, int eta_index);

struct NormOptions {
  int block = 4;            // random block width
  int max_iter = 80;        // Krylov steps
  double tol = 1e-10;       // relative change of the estimate between sweeps
  std::uint64_t seed = 1;
  std::size_t max_nodes = 6000;  // per-eta dense limit
};
struct NormEstimate {
  double norm = 0.0;
  double eta_at_max = 0.0;
  int iterations = 0;            // largest sweep count over the eta nodes
  std::size_t nodes = 0;         // largest dense block side
  std::vector<double> eta, per_eta;
};
// operator norm of M(out) A M(in) by randomized block Krylov iteration, eta by eta (A keeps eta);
// without cutoffs and twist the kernel splits over the two transverse directions
NormEstimate linear_model_norm(const LinearModel& A, const std::optional<PhaseCutoff>& in,
                               const std::optional<PhaseCutoff>& out, const BargmannGrid& g,
                               const NormOptions& opts = {});

// largest singular value of a dense matrix by randomized block Krylov iteration (a lower bound)
double power_norm(const Eigen::MatrixXcd& M, const NormOptions& opts, int* iterations = nullptr);

}  // namespace anosov
