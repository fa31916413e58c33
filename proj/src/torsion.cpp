#include "anosov/torsion.hpp"

#include <algorithm>
#include <cmath>

namespace anosov {

DaggerProfile dagger_profile(const FlowModel& m, const Point3& q, double delta, const TorsionOptions& o) {
  if (!(delta > 0.0 && delta <= 1.0)) throw validation_error("delta", "delta must lie in (0, 1]");
  if (delta < o.min_delta) throw validation_error("delta", "delta below the supported minimum scale");
  if (o.nodes < 5 || o.nodes % 2 == 0) throw validation_error("nodes", "torsion node count must be odd and >= 5");
  const SectionOptions& so = o.sections;

  // q-nodes: the fit grid on (-delta, delta) plus the endpoints needed by the straight section
  DaggerProfile d;
  const int n = o.nodes;
  for (int j = 0; j < n; ++j) d.tau.push_back(delta * (-1.0 + 2.0 * j / (n - 1)));
  d.tau[(n - 1) / 2] = 0.0;
  std::vector<double> qn = d.tau;
  if (delta < 1.0) {
    qn.push_back(-1.0);
    qn.push_back(1.0);
  } else {
    qn.front() = -1.0;
    qn.back() = 1.0;
  }
  const StraightSection sq = straight_section(m, q, qn, so);
  const int mid = (n - 1) / 2;

  d.psi.assign(n, 0.0);
  if (delta < 1.0) {
    const Vec3 e = sq.curve.tangents[mid];
    d.t = time_for_expansion(m, q, e, 1.0 / delta);
    Mat3 J0;
    const Point3 p = flow_with_jacobian(m, q, d.t, J0);
    // p-nodes are the images tau / delta; orientation of the flowed curve decides the sign
    const Vec3 ep = orient(local_unstable(m, p, so.curve).e);
    const double eps = (J0 * e).dot(ep) >= 0 ? 1.0 : -1.0;
    std::vector<double> pn(n);
    for (int j = 0; j < n; ++j) pn[j] = eps * d.tau[j] / delta;
    pn[mid] = 0.0;
    pn.front() = -eps;
    pn.back() = eps;
    const StraightSection sp = straight_section(m, p, pn, so);
    const double sg = sq.sign * sp.sign * eps;

    for (int j = 0; j < n; ++j) {
      const Point3& x = sq.curve.points[j];
      const Vec3 w = sq.curve.tangents[j] / sq.curve.factor[j];
      Mat3 J;
      const Point3 y = flow_with_jacobian(m, x, d.t, J);
      const Covector pulled = J.transpose() * reference_covector(m, y, J * w, so.reference);
      const double X = perp_coefficient(m, x, pulled - sq.ref[j], sq.perp[j]);
      d.psi[j] = X + sg * delta * sp.psi[j] - sq.psi[j];
    }
  }

  // affine fit on the middle part
  Eigen::MatrixXd M(0, 2);
  std::vector<int> idx;
  for (int j = 0; j < n; ++j)
    if (std::abs(d.tau[j]) <= o.fit_fraction * delta * (1.0 + 1e-12)) idx.push_back(j);
  M.resize(idx.size(), 2);
  Eigen::VectorXd Y(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    M(k, 0) = d.tau[idx[k]];
    M(k, 1) = 1.0;
    Y(k) = d.psi[idx[k]];
  }
  const Eigen::Vector2d c = M.colPivHouseholderQr().solve(Y);
  d.slope = c(0);
  d.intercept = c(1);
  for (std::size_t k = 0; k < idx.size(); ++k)
    d.affine_residual = std::max(d.affine_residual, std::abs(Y(k) - c(0) * M(k, 0) - c(1)));
  return d;
}

double torsion_s(const FlowModel& m, const Point3& q, double delta, const TorsionOptions& o, double* res) {
  const DaggerProfile d = dagger_profile(m, q, delta, o);
  if (res) *res = d.affine_residual;
  return delta == 1.0 ? 0.0 : d.slope;
}

double torsion_u(const FlowModel& m, const Point3& q, double delta, const TorsionOptions& o, double* res) {
  return torsion_s(time_reversed(m), q, delta, o, res);
}

TorsionReport torsions_and_delta(const FlowModel& m, const Point3& q, double delta, const TorsionOptions& o) {
  TorsionReport r;
  r.point = q;
  r.delta_scale = delta;
  double rs = 0.0, ru = 0.0;
  r.tor_s = torsion_s(m, q, delta, o, &rs);
  r.tor_u = torsion_u(m, q, delta, o, &ru);
  r.delta_value = r.tor_u - r.tor_s;
  r.affine_residual = std::max(rs, ru);
  return r;
}

}  // namespace anosov
