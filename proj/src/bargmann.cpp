#include "anosov/bargmann.hpp"

#include "anosov/rng.hpp"
#include "anosov/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace anosov {

namespace {

constexpr cplx I1(0.0, 1.0);

double japanese(double s) { return std::sqrt(1.0 + s * s); }

Axis centered(int n, double half) {
  const double h = 2 * half / n;
  return Axis{n, -half + h / 2, h};
}
Axis closed(int n, double half) { return Axis{n, -half, 2 * half / (n - 1)}; }

// T(p, i) = f conj(phi-factor) hx for one transverse direction at one eta.
// The z-factor is the bare DFT, so f^2 carries the whole constant 2^{-3/2} pi^{-2} <eta>^{1/2}.
Eigen::MatrixXcd transverse_matrix(const BargmannGrid& g, double eta) {
  const double a = japanese(eta);
  const double f = std::pow(2.0, -0.75) / M_PI * std::pow(a, 0.25);
  Eigen::MatrixXcd T(g.block(), g.x.n);
  for (int iw = 0; iw < g.w.n; ++iw) {
    const double w = g.w.at(iw);
    for (int ix = 0; ix < g.xi.n; ++ix) {
      const double xi = g.xi.at(ix);
      const int p = iw * g.xi.n + ix;
      for (int i = 0; i < g.x.n; ++i) {
        const double x = g.x.at(i);
        T(p, i) = f * g.x.h * std::exp(cplx(-a * (x - w) * (x - w) / 2, -xi * (x - w / 2)));
      }
    }
  }
  return T;
}

void check_blocks(const PhaseGridFunction& v) {
  v.grid.validate();
  if (int(v.blocks.size()) != v.grid.eta_count())
    throw validation_error("grid_mismatch", "phase function has the wrong number of eta blocks");
  for (const auto& b : v.blocks)
    if (b.rows() != v.grid.block() || b.cols() != v.grid.block())
      throw validation_error("grid_mismatch", "phase block size does not match the grid");
}

void check_slices(const SpaceFunction& u) {
  u.grid.validate();
  if (int(u.slices.size()) != u.grid.z.n)
    throw validation_error("grid_mismatch", "space function has the wrong number of z slices");
  for (const auto& s : u.slices)
    if (s.rows() != u.grid.x.n || s.cols() != u.grid.x.n)
      throw validation_error("grid_mismatch", "space slice size does not match the grid");
}

// u has to decay inside the window, otherwise the trapezoid sums are not the integrals
void check_decay(const SpaceFunction& u) {
  double peak = 0.0, edge = 0.0;
  const int n = u.grid.x.n, nz = u.grid.z.n;
  for (int k = 0; k < nz; ++k) {
    const auto& s = u.slices[k];
    peak = std::max(peak, s.cwiseAbs().maxCoeff());
    if (k == 0 || k == nz - 1) {
      edge = std::max(edge, s.cwiseAbs().maxCoeff());
      continue;
    }
    edge = std::max({edge, s.row(0).cwiseAbs().maxCoeff(), s.row(n - 1).cwiseAbs().maxCoeff(),
                     s.col(0).cwiseAbs().maxCoeff(), s.col(n - 1).cwiseAbs().maxCoeff()});
  }
  if (edge > 1e-6 * peak)
    throw validation_error("grid_coverage", "input does not decay inside the grid window (edge/peak = " +
                                                std::to_string(peak > 0 ? edge / peak : 0.0) + ")");
}

PhaseGridFunction forward(const SpaceFunction& u) {
  const BargmannGrid& g = u.grid;
  PhaseGridFunction v;
  v.grid = g;
  v.blocks.resize(g.eta_count());
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < g.eta_count(); ++k) {
    const double eta = g.eta(k);
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(g.x.n, g.x.n);
    for (int kz = 0; kz < g.z.n; ++kz) U += (g.z.h * std::polar(1.0, -eta * g.z.at(kz))) * u.slices[kz];
    const Eigen::MatrixXcd T = transverse_matrix(g, eta);
    v.blocks[k].noalias() = T * U * T.transpose();
  }
  return v;
}

}  // namespace

void BargmannGrid::validate() const {
  for (const Axis* a : {&x, &z, &w, &xi})
    if (a->n < 2 || !(a->h > 0)) throw validation_error("grid", "every axis needs n >= 2 and h > 0");
  if (z.n % 2) throw validation_error("grid", "z axis needs an even node count");
  if (w.lo < x.lo || w.hi() > x.hi()) throw validation_error("grid_coverage", "w range must lie inside the x' range");
}

BargmannGrid transform_grid() {
  return BargmannGrid{centered(96, 10.0), Axis{12, -5.5, 1.0}, closed(30, 7.0), closed(34, 12.0)};
}

BargmannGrid linear_grid() {
  return BargmannGrid{centered(96, 10.0), Axis{12, -5.5, 1.0}, closed(36, 7.0), closed(34, 12.0)};
}

BargmannGrid projector_grid() {
  return BargmannGrid{centered(84, 10.0), Axis{8, -5.6, 1.6}, closed(36, 8.5), closed(28, 11.0)};
}

double SpaceFunction::norm() const {
  double s = 0.0;
  for (const auto& m : slices) s += m.squaredNorm();
  return std::sqrt(s * grid.space_weight());
}

cplx SpaceFunction::inner(const SpaceFunction& o) const {
  if (!(grid == o.grid)) throw validation_error("grid_mismatch", "inner product of functions on different grids");
  cplx s = 0.0;
  for (std::size_t k = 0; k < slices.size(); ++k) s += (slices[k].conjugate().cwiseProduct(o.slices[k])).sum();
  return s * grid.space_weight();
}

double PhaseGridFunction::norm() const {
  double s = 0.0;
  for (const auto& m : blocks) s += m.squaredNorm();
  return std::sqrt(s * grid.phase_weight());
}

cplx PhaseGridFunction::inner(const PhaseGridFunction& o) const {
  if (!(grid == o.grid)) throw validation_error("grid_mismatch", "inner product of functions on different grids");
  cplx s = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) s += (blocks[k].conjugate().cwiseProduct(o.blocks[k])).sum();
  return s * grid.phase_weight();
}

SpaceFunction sample_space(const BargmannGrid& g, const std::function<cplx(double, double, double)>& f) {
  g.validate();
  SpaceFunction u;
  u.grid = g;
  u.slices.assign(g.z.n, Eigen::MatrixXcd(g.x.n, g.x.n));
  for (int k = 0; k < g.z.n; ++k)
    for (int i = 0; i < g.x.n; ++i)
      for (int j = 0; j < g.x.n; ++j) u.slices[k](i, j) = f(g.x.at(i), g.x.at(j), g.z.at(k));
  return u;
}

SpaceFunction zero_space(const BargmannGrid& g) {
  g.validate();
  SpaceFunction u;
  u.grid = g;
  u.slices.assign(g.z.n, Eigen::MatrixXcd::Zero(g.x.n, g.x.n));
  return u;
}

PhaseGridFunction zero_phase(const BargmannGrid& g) {
  g.validate();
  PhaseGridFunction v;
  v.grid = g;
  v.blocks.assign(g.eta_count(), Eigen::MatrixXcd::Zero(g.block(), g.block()));
  return v;
}

PhaseGridFunction random_phase(const BargmannGrid& g, std::uint64_t seed, double w_core, double xi_core) {
  PhaseGridFunction v = zero_phase(g);
  const int P = g.block();
  std::vector<double> taper(P);
  for (int iw = 0; iw < g.w.n; ++iw)
    for (int ix = 0; ix < g.xi.n; ++ix)
      taper[iw * g.xi.n + ix] = std::exp(-std::pow(g.w.at(iw) / w_core, 8) - std::pow(g.xi.at(ix) / xi_core, 8));
  for (int k = 0; k < g.eta_count(); ++k) {
    for (int p = 0; p < P; ++p) {
      for (int q = 0; q < P; ++q) {
        const std::uint64_t c = (std::uint64_t(k) * P + p) * P + q;
        const double u1 = 1.0 - rng::uniform(seed, c, 0), u2 = rng::uniform(seed, c, 1);
        v.blocks[k](p, q) = std::polar(std::sqrt(-2 * std::log(u1)), two_pi * u2) * (taper[p] * taper[q]);
      }
    }
  }
  return v;
}

PhaseGridFunction bargmann_fwd(const SpaceFunction& u) {
  check_slices(u);
  check_decay(u);
  return forward(u);
}

SpaceFunction bargmann_adj(const PhaseGridFunction& v) {
  check_blocks(v);
  const BargmannGrid& g = v.grid;
  std::vector<Eigen::MatrixXcd> S(g.eta_count());
  const double scale = g.w.h * g.xi.h / g.x.h;
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < g.eta_count(); ++k) {
    const Eigen::MatrixXcd G = transverse_matrix(g, g.eta(k)).adjoint() * scale;
    S[k].noalias() = G * v.blocks[k] * G.transpose();
  }
  SpaceFunction u = zero_space(g);
  for (int kz = 0; kz < g.z.n; ++kz)
    for (int k = 0; k < g.eta_count(); ++k) u.slices[kz] += (g.deta() * std::polar(1.0, g.eta(k) * g.z.at(kz))) * S[k];
  return u;
}

PhaseGridFunction projector_apply(const PhaseGridFunction& v, ProjectorPath path) {
  check_blocks(v);
  if (path == ProjectorPath::composition) return forward(bargmann_adj(v));
  const BargmannGrid& g = v.grid;
  PhaseGridFunction out;
  out.grid = g;
  out.blocks.resize(g.eta_count());
  const int P = g.block();
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < g.eta_count(); ++k) {
    const double a = japanese(g.eta(k));
    // one transverse factor of the kernel, with the quadrature weight of the source node
    Eigen::MatrixXcd K(P, P);
    for (int p = 0; p < P; ++p) {
      const double w = g.w.at(p / g.xi.n), xi = g.xi.at(p % g.xi.n);
      for (int q = 0; q < P; ++q) {
        const double w0 = g.w.at(q / g.xi.n), xi0 = g.xi.at(q % g.xi.n);
        const double re = -a * (w - w0) * (w - w0) / 4 - (xi - xi0) * (xi - xi0) / (4 * a);
        K(p, q) = std::exp(cplx(re, (xi0 * w - xi * w0) / 2)) * (g.w.h * g.xi.h / two_pi);
      }
    }
    out.blocks[k].noalias() = K * v.blocks[k] * K.transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// partitions of unity

double cutoff_chi(double s) { return smooth::poly_plateau(s); }

double q_omega(int omega, double eta) {
  // b(s) = chi(3s/2) lives on [-1, 1] and is 1 on [-2/3, 2/3], so the translates sum to >= 1
  const auto b = [](double s) { return cutoff_chi(1.5 * s); };
  const int k0 = int(std::floor(eta));
  double sum = 0.0;
  for (int k = k0 - 1; k <= k0 + 2; ++k) sum += b(eta - k);
  return b(eta - omega) / sum;
}

double chi_sign(int sign, const Vec2& v) {
  const double ax = std::abs(v.x()), ay = std::abs(v.y());
  const double plus = ax + ay == 0.0 ? 1.0 : 1.0 - smooth::smoothstep7(3.0 * (ay / (ax + ay) - 1.0 / 3.0));
  return sign > 0 ? plus : 1.0 - plus;
}

double chi_dyadic(int m, const Vec2& v) {
  if (m < 0) throw validation_error("m", "dyadic index must be >= 0");
  const double r = v.norm();
  if (m == 0) return cutoff_chi(r);
  return cutoff_chi(std::exp(-m) * r) - cutoff_chi(std::exp(-m + 1) * r);
}

double psi_aniso(int m, const Vec2& v) {
  if (m == 0) return chi_dyadic(0, v);
  return chi_sign(m > 0 ? 1 : -1, v) * chi_dyadic(std::abs(m), v);
}

PartitionWeights phase_partition(int omega, int m, double eta, const Vec2& v) {
  PartitionWeights p;
  p.q = q_omega(omega, eta);
  p.chi_plus = chi_sign(1, v);
  p.chi_minus = chi_sign(-1, v);
  p.chi_m = chi_dyadic(std::abs(m), v);
  p.psi_m = psi_aniso(m, v);
  return p;
}

std::vector<double> aniso_contributions(const AnisoComponents& c) {
  std::vector<double> out;
  for (const auto& u : c.items) out.push_back(std::exp(c.alpha0 * u.m) * u.l2 * u.l2);
  return out;
}

double aniso_norm(const AnisoComponents& c) {
  double s = 0.0;
  for (double x : aniso_contributions(c)) s += x;
  return std::sqrt(s);
}

AnisoComponents aniso_decompose(const PhaseGridFunction& v, double xi_scale, double alpha0) {
  check_blocks(v);
  const BargmannGrid& g = v.grid;
  std::map<std::pair<int, int>, double> acc;
  const double xi_max = std::hypot(std::max(-g.xi.lo, g.xi.hi()), std::max(-g.xi.lo, g.xi.hi()));
  for (int k = 0; k < g.eta_count(); ++k) {
    const double eta = g.eta(k);
    for (int omega = int(std::floor(eta)) - 1; omega <= int(std::floor(eta)) + 2; ++omega) {
      const double q = q_omega(omega, eta);
      if (q == 0.0) continue;
      const double s = xi_scale * std::sqrt(japanese(omega));
      const int M = int(std::ceil(std::log(std::max(1.0, xi_max / s)))) + 2;
      for (int p = 0; p < g.block(); ++p) {
        for (int r = 0; r < g.block(); ++r) {
          const double a2 = std::norm(v.blocks[k](p, r));
          if (a2 == 0.0) continue;
          const Vec2 xi(g.xi.at(p % g.xi.n), g.xi.at(r % g.xi.n));
          for (int m = -M; m <= M; ++m) {
            const double psi = psi_aniso(m, xi / s);
            if (psi != 0.0) acc[{omega, m}] += q * q * psi * psi * a2;
          }
        }
      }
    }
  }
  AnisoComponents c;
  c.alpha0 = alpha0;
  for (const auto& [key, s2] : acc) c.items.push_back({key.first, key.second, std::sqrt(s2 * g.phase_weight())});
  return c;
}

// ---------------------------------------------------------------------------------------------
// linear model

double PhaseCutoff::value(const Vec2& w, const Vec2& xi, double eta) const {
  const double q = q_omega(omega, eta);
  if (q == 0.0) return 0.0;
  return q * cutoff_chi(w.norm() / w_radius) * psi_aniso(m, xi / (xi_scale * std::sqrt(japanese(omega))));
}

namespace {

void check_model(const LinearModel& A) {
  if (!(A.lambda > 0) || !(A.lambda_t > 0)) throw validation_error("linear_model", "lambda and lambda~ must be positive");
  if (std::abs(A.lambda * A.lambda_t - 1.0) > 1e-12)
    throw validation_error("volume", "lambda * lambda~ must be 1 (volume preserving)");
}

// one transverse direction: int conj(g_{w,xi}(X)) g_{w0,xi0}(X / l) e^{-i eta varpi X / l} dX
cplx kernel_1d(double a, double l, double eta, double varpi, double w, double xi, double w0, double xi0, cplx* b_out,
               double* q_out, cplx* c_out) {
  const double q = a * (1 + 1 / (l * l));
  const cplx b = cplx(a * w, -xi) + cplx(a * w0, xi0 - eta * varpi) / l;
  const cplx c = cplx(-a * (w * w + w0 * w0) / 2, (xi * w - xi0 * w0) / 2);
  if (b_out) {
    *b_out = b;
    *q_out = q;
    *c_out = c;
    return 0.0;
  }
  return std::sqrt(two_pi / q) * std::exp(b * b / (2 * q) + c);
}

struct SupportBox {
  double w, xi;  // radii
};

SupportBox support(const PhaseCutoff& c) {
  const double s = c.xi_scale * std::sqrt(japanese(c.omega)) * 1.5 * (c.m == 0 ? 1.0 : std::exp(std::abs(c.m)));
  return {1.5 * c.w_radius, s};
}

void check_support(const PhaseCutoff& c, const BargmannGrid& g) {
  const SupportBox s = support(c);
  const double wr = std::min(-g.w.lo, g.w.hi()), xr = std::min(-g.xi.lo, g.xi.hi());
  if (s.w > wr || s.xi > xr)
    throw validation_error("grid_coverage", "cutoff support does not fit in the phase grid");
}

}  // namespace

cplx linear_kernel(const LinearModel& A, double eta, const Vec2& w, const Vec2& xi, const Vec2& w0, const Vec2& xi0) {
  check_model(A);
  const double a = japanese(eta);
  cplx b1, b2, c1, c2;
  double q1, q2;
  kernel_1d(a, A.lambda, eta, A.varpi.x(), w.x(), xi.x(), w0.x(), xi0.x(), &b1, &q1, &c1);
  kernel_1d(a, A.lambda_t, eta, A.varpi.y(), w.y(), xi.y(), w0.y(), xi0.y(), &b2, &q2, &c2);
  // quadratic form [[q1, i gamma], [i gamma, q2]]; its determinant q1 q2 + gamma^2 is real positive
  const double gamma = eta * A.beta / (A.lambda * A.lambda_t);
  const double det = q1 * q2 + gamma * gamma;
  const cplx bQb = (q2 * b1 * b1 - 2.0 * I1 * gamma * b1 * b2 + q1 * b2 * b2) / det;
  const cplx integral = two_pi / std::sqrt(det) * std::exp(bQb / 2.0 + c1 + c2);
  return a / (4 * M_PI * M_PI * M_PI) * integral;
}

DenseBlock linear_model_block(const LinearModel& A, const PhaseCutoff& in, const PhaseCutoff& out,
                              const BargmannGrid& g, int eta_index) {
  check_model(A);
  g.validate();
  check_support(in, g);
  check_support(out, g);
  const double eta = g.eta(eta_index);
  const int nx = g.xi.n, P = g.block();
  const auto node = [&](int n, Vec2& w, Vec2& xi) {
    const int p = n / P, q = n % P;
    w = Vec2(g.w.at(p / nx), g.w.at(q / nx));
    xi = Vec2(g.xi.at(p % nx), g.xi.at(q % nx));
  };
  DenseBlock B;
  std::vector<double> vin, vout;
  for (int n = 0; n < P * P; ++n) {
    Vec2 w, xi;
    node(n, w, xi);
    const double ci = in.value(w, xi, eta), co = out.value(w, xi, eta);
    if (ci != 0.0) {
      B.in_nodes.push_back(n);
      vin.push_back(ci);
    }
    if (co != 0.0) {
      B.out_nodes.push_back(n);
      vout.push_back(co);
    }
  }
  const double h4 = g.w.h * g.w.h * g.xi.h * g.xi.h;
  B.M.resize(B.out_nodes.size(), B.in_nodes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(B.out_nodes.size()); ++i) {
    Vec2 w, xi;
    node(B.out_nodes[i], w, xi);
    for (std::size_t j = 0; j < B.in_nodes.size(); ++j) {
      Vec2 w0, xi0;
      node(B.in_nodes[j], w0, xi0);
      B.M(i, j) = vout[i] * linear_kernel(A, eta, w, xi, w0, xi0) * (h4 * vin[j]);
    }
  }
  return B;
}

double power_norm(const Eigen::MatrixXcd& M, const NormOptions& opts, int* iterations) {
  if (M.size() == 0) {
    if (iterations) *iterations = 0;
    return 0.0;
  }
  // Randomized block Krylov: powers of M^H M applied to a random block, Rayleigh-Ritz on the span.
  // Plain subspace iteration stalls on the near-continuous top of the spectrum of cut-off projectors.
  const int n = int(M.cols()), k = std::min<int>(opts.block, n);
  Eigen::MatrixXcd X(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) {
      const double u1 = 1.0 - rng::uniform(opts.seed, i, j, 0), u2 = rng::uniform(opts.seed, i, j, 1);
      X(i, j) = std::polar(std::sqrt(-2 * std::log(u1)), two_pi * u2);
    }
  const auto orth = [n](const Eigen::MatrixXcd& Y) -> Eigen::MatrixXcd {
    return Eigen::HouseholderQR<Eigen::MatrixXcd>(Y).householderQ() * Eigen::MatrixXcd::Identity(n, Y.cols());
  };
  Eigen::MatrixXcd Q = orth(X), MQ = M * Q;
  double est = 0.0;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const Eigen::MatrixXcd G = MQ.adjoint() * MQ;
    const double e = std::sqrt(std::max(0.0, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(G).eigenvalues().maxCoeff()));
    const bool done = it > 0 && std::abs(e - est) <= opts.tol * e;
    est = e;
    if (done || Q.cols() + k > n) break;
    Eigen::MatrixXcd Y = M.adjoint() * MQ.rightCols(k);
    for (int pass = 0; pass < 2; ++pass) Y -= Q * (Q.adjoint() * Y);
    if (Y.norm() <= 1e-12 * std::max(1.0, est * est)) break;  // invariant subspace reached
    Y = orth(Y);
    Q.conservativeResize(Eigen::NoChange, Q.cols() + k);
    Q.rightCols(k) = Y;
    MQ.conservativeResize(Eigen::NoChange, MQ.cols() + k);
    MQ.rightCols(k) = M * Y;
  }
  if (iterations) *iterations = it + 1;
  return est;
}

NormEstimate linear_model_norm(const LinearModel& A, const std::optional<PhaseCutoff>& in,
                               const std::optional<PhaseCutoff>& out, const BargmannGrid& g, const NormOptions& opts) {
  check_model(A);
  g.validate();
  NormEstimate r;
  const bool split = !in && !out && A.beta == 0.0;
  if (!split && (!in || !out))
    throw validation_error("dense_size", "the twisted model needs input and output cutoffs to bound the dense block");
  for (int k = 0; k < g.eta_count(); ++k) {
    const double eta = g.eta(k);
    if (!split && (q_omega(in->omega, eta) == 0.0 || q_omega(out->omega, eta) == 0.0)) continue;
    NormOptions o = opts;
    o.seed = rng::hash(opts.seed, std::uint64_t(k));
    double nrm = 0.0;
    int its = 0;
    if (split) {
      // no twist: the kernel is a tensor product of the two transverse factors
      const double a = japanese(eta), f = std::sqrt(a / (4 * M_PI * M_PI * M_PI)) * g.w.h * g.xi.h;
      const int P = g.block();
      nrm = 1.0;
      const bool same = A.lambda == A.lambda_t && A.varpi.x() == A.varpi.y();
      for (int d = 0; d < 2; ++d) {
        if (d == 1 && same) {
          nrm *= nrm;
          break;
        }
        const double l = d == 0 ? A.lambda : A.lambda_t, vp = A.varpi[d];
        Eigen::MatrixXcd K(P, P);
        for (int p = 0; p < P; ++p)
          for (int q = 0; q < P; ++q)
            K(p, q) = f * kernel_1d(a, l, eta, vp, g.w.at(p / g.xi.n), g.xi.at(p % g.xi.n), g.w.at(q / g.xi.n),
                                    g.xi.at(q % g.xi.n), nullptr, nullptr, nullptr);
        int it = 0;
        nrm *= power_norm(K, o, &it);
        its = std::max(its, it);
      }
      r.nodes = std::max<std::size_t>(r.nodes, P);
    } else {
      const DenseBlock B = linear_model_block(A, *in, *out, g, k);
      const std::size_t side = std::max(B.in_nodes.size(), B.out_nodes.size());
      if (side > opts.max_nodes)
        throw validation_error("dense_size", "cutoff support has " + std::to_string(side) + " nodes per eta, limit " +
                                                 std::to_string(opts.max_nodes));
      nrm = power_norm(B.M, o, &its);
      r.nodes = std::max(r.nodes, side);
    }
    r.eta.push_back(eta);
    r.per_eta.push_back(nrm);
    r.iterations = std::max(r.iterations, its);
    if (nrm > r.norm) {
      r.norm = nrm;
      r.eta_at_max = eta;
    }
  }
  return r;
}

}  // namespace anosov
