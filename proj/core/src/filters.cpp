#include "mbdf/filters.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mbdf {

namespace {

RMatrix pseudo_inverse(const RMatrix& a) {
  Eigen::JacobiSVD<RMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  RVector inv = RVector::Zero(sv.size());
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (smax > 0 && sv(k) > kPinvTolerance * smax) inv(k) = 1.0 / sv(k);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

RMatrix permutation_matrix(std::span<const int> perm) {
  const auto n = static_cast<Eigen::Index>(perm.size());
  RMatrix p = RMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) p(k, perm[k]) = 1.0;
  return p;
}

double gamma_for(double beta) {
  if (beta == 0.0) return 0.0;
  if (beta == 1.0) return 1.0;
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

RMatrix projection_matrix(const RMatrix& s) {
  if (s.rows() != s.cols()) throw InputShapeError("projection_matrix: shape must be square");
  if (s.isDiagonal(0.0)) {
    // Exact for 0/1 diagonal patterns, keeps the constrained taps at exactly zero.
    RMatrix pi = RMatrix::Zero(s.rows(), s.cols());
    for (Eigen::Index k = 0; k < s.rows(); ++k) pi(k, k) = s(k, k) == 0.0 ? 1.0 : 0.0;
    return pi;
  }
  const RMatrix g = s.transpose() * s;
  const Eigen::Index n = s.cols();
  RMatrix pi = RMatrix::Identity(n, n) - pseudo_inverse(g) * g;
  // Clean rounding so that Pi is symmetric to machine precision.
  return 0.5 * (pi + pi.transpose());
}

std::vector<ShapeConstraint> sic_shapes(int n_t, SicShapeRule rule) {
  if (n_t < 1) throw ParameterError("sic_shapes: N_T must be positive");
  std::vector<ShapeConstraint> out;
  out.reserve(n_t);
  for (int j = 1; j <= n_t; ++j) {
    RMatrix s = RMatrix::Zero(n_t, n_t);
    if (rule == SicShapeRule::printed) {
      for (int k = n_t - j + 1; k < n_t; ++k) s(k, k) = 1.0;
    } else {
      for (int k = j - 1; k < n_t; ++k) s(k, k) = 1.0;
    }
    out.push_back({std::move(s), j - 1, 0});
  }
  return out;
}

bool is_permutation(std::span<const int> perm, int n) {
  if (static_cast<int>(perm.size()) != n) return false;
  std::vector<bool> seen(n, false);
  for (int v : perm) {
    if (v < 0 || v >= n || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

std::vector<ShapeConstraint> permuted_shapes(int n_t, int branch, std::span<const int> perm,
                                             SicShapeRule rule) {
  if (!is_permutation(perm, n_t)) throw ParameterError("permuted_shapes: invalid permutation");
  const RMatrix p = permutation_matrix(perm);
  auto base = sic_shapes(n_t, rule);
  for (int j = 0; j < n_t; ++j) {
    base[j].matrix = p.transpose() * base[j].matrix * p;
    base[j].stream = perm[j];
    base[j].branch = branch;
  }
  return base;
}

std::vector<ShapeConstraint> pic_shapes(int n_t, PicShapeRule rule) {
  if (n_t < 1) throw ParameterError("pic_shapes: N_T must be positive");
  std::vector<ShapeConstraint> out;
  for (int j = 0; j < n_t; ++j) {
    RMatrix s = RMatrix::Zero(n_t, n_t);
    if (rule == PicShapeRule::printed) {
      s.setIdentity();
      s(j, j) = 0.0;
    } else {
      s(j, j) = 1.0;
    }
    out.push_back({std::move(s), j, 0});
  }
  return out;
}

std::vector<int> identity_ordering(int n_t) {
  std::vector<int> o(n_t);
  for (int k = 0; k < n_t; ++k) o[k] = k;
  return o;
}

void BranchSpec::validate() const {
  const int n = n_t();
  if (n < 1) throw ConfigError("branch spec: empty ordering");
  if (!is_permutation(ordering, n)) throw ConfigError("branch spec: ordering is not a permutation");
  if (static_cast<int>(shapes.size()) != n || static_cast<int>(projections.size()) != n ||
      static_cast<int>(beta.size()) != n)
    throw ConfigError("branch spec: per-stream vectors must have N_T entries");
  for (int j = 0; j < n; ++j) {
    if (shapes[j].matrix.rows() != n || shapes[j].matrix.cols() != n ||
        projections[j].rows() != n || projections[j].cols() != n)
      throw ConfigError("branch spec: shape/projection must be N_T x N_T");
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) {
        const double v = shapes[j].matrix(a, b);
        if (v != 0.0 && v != 1.0) throw ConfigError("branch spec: shape entries must be 0 or 1");
      }
    if (!(beta[j] >= 0.0 && beta[j] <= 1.0)) throw ConfigError("branch spec: beta outside [0, 1]");
  }
}

namespace {

BranchSpec assemble(std::span<const int> ordering, std::vector<ShapeConstraint> by_position,
                    double beta) {
  const int n = static_cast<int>(ordering.size());
  BranchSpec spec;
  spec.ordering.assign(ordering.begin(), ordering.end());
  spec.shapes.resize(n);
  spec.projections.resize(n);
  spec.beta.assign(n, beta);
  spec.gamma.assign(n, gamma_for(beta));
  for (auto& s : by_position) {
    const int stream = s.stream;
    spec.projections[stream] = projection_matrix(s.matrix);
    spec.shapes[stream] = std::move(s);
  }
  spec.validate();
  return spec;
}

}  // namespace

BranchSpec make_sic_branch(std::span<const int> ordering, int branch, double beta,
                           SicShapeRule rule) {
  const int n = static_cast<int>(ordering.size());
  if (!is_permutation(ordering, n)) throw ConfigError("make_sic_branch: invalid ordering");
  return assemble(ordering, permuted_shapes(n, branch, ordering, rule), beta);
}

BranchSpec make_pic_branch(std::span<const int> ordering, int branch, double beta,
                           PicShapeRule rule) {
  const int n = static_cast<int>(ordering.size());
  if (!is_permutation(ordering, n)) throw ConfigError("make_pic_branch: invalid ordering");
  auto shapes = pic_shapes(n, rule);
  for (auto& s : shapes) s.branch = branch;
  return assemble(ordering, std::move(shapes), beta);
}

std::vector<BranchSpec> make_sic_branches(const std::vector<std::vector<int>>& orderings,
                                          double beta, SicShapeRule rule) {
  std::vector<BranchSpec> specs;
  specs.reserve(orderings.size());
  for (std::size_t l = 0; l < orderings.size(); ++l)
    specs.push_back(make_sic_branch(orderings[l], static_cast<int>(l), beta, rule));
  return specs;
}

SecondOrderStats perfect_feedback_stats(const CMatrix& h, double sigma_s2, double sigma_n2) {
  SecondOrderStats st;
  const Eigen::Index n_r = h.rows(), n_t = h.cols();
  st.R = sigma_s2 * h * h.adjoint() + sigma_n2 * CMatrix::Identity(n_r, n_r);
  st.Q = sigma_s2 * h;
  st.p = sigma_s2 * h;
  st.t = CMatrix::Zero(n_t, n_t);
  st.sigma_s2 = sigma_s2;
  st.sigma_n2 = sigma_n2;
  return st;
}

FilterBank::FilterBank(Eigen::Index n_r, Eigen::Index n_t, int branches)
    : n_r_(n_r), n_t_(n_t), branches_(branches) {
  const auto count = static_cast<std::size_t>(n_t) * static_cast<std::size_t>(branches);
  w_.assign(count, CVector::Zero(n_r));
  f_.assign(count, CVector::Zero(n_t));
}

CMatrix hermitian_inverse(const CMatrix& a, OpCounter* ops) {
  const Eigen::Index n = a.rows();
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) {
    Eigen::JacobiSVD<CMatrix> svd(a);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1)
                                             : std::numeric_limits<double>::infinity();
    throw NumericalError("matrix is not Hermitian positive definite (condition number " +
                         std::to_string(cond) + ")");
  }
  // Cholesky plus n triangular solve pairs.
  ops::mul(ops, static_cast<std::uint64_t>(n * n * n));
  ops::add(ops, static_cast<std::uint64_t>(n * n * n));
  CMatrix inv = llt.solve(CMatrix::Identity(n, n));
  return 0.5 * (inv + inv.adjoint());
}

namespace {

void check_specs(std::span<const BranchSpec> specs, Eigen::Index n_t) {
  if (specs.empty()) throw ConfigError("filter design: no branches");
  for (const auto& s : specs) {
    if (s.n_t() != n_t) throw ConfigError("filter design: branch spec has wrong N_T");
  }
}

}  // namespace

FilterBank design_statistical(const SecondOrderStats& stats, std::span<const BranchSpec> specs,
                              int iterations, OpCounter* ops) {
  const Eigen::Index n_r = stats.R.rows(), n_t = stats.Q.cols();
  check_specs(specs, n_t);
  if (iterations < 1) throw ParameterError("design_statistical: need at least one iteration");
  const CMatrix r_inv = hermitian_inverse(stats.R, ops);
  const CMatrix q_h = stats.Q.adjoint();
  FilterBank bank(n_r, n_t, static_cast<int>(specs.size()));
  for (int l = 0; l < static_cast<int>(specs.size()); ++l) {
    const auto& spec = specs[l];
    for (Eigen::Index j = 0; j < n_t; ++j) {
      const double c = spec.beta[j] / stats.sigma_s2;
      const CMatrix pi = spec.projections[j].cast<cplx>();
      CVector f = CVector::Zero(n_t);
      CVector w;
      for (int it = 0; it < iterations; ++it) {
        w = r_inv * (stats.p.col(j) + stats.Q * f);
        f = c * (pi * (q_h * w - stats.t.col(j)));
        ops::matvec(ops, n_r, n_t);
        ops::matvec(ops, n_r, n_r);
        ops::matvec(ops, n_t, n_r);
        ops::matvec(ops, n_t, n_t);
        ops::mul(ops, n_t);
      }
      bank.w(j, l) = std::move(w);
      bank.f(j, l) = std::move(f);
    }
  }
  return bank;
}

FilterBank design_closed_form(const SecondOrderStats& stats, std::span<const BranchSpec> specs) {
  const Eigen::Index n_r = stats.R.rows(), n_t = stats.Q.cols();
  check_specs(specs, n_t);
  const CMatrix q_h = stats.Q.adjoint();
  FilterBank bank(n_r, n_t, static_cast<int>(specs.size()));
  for (int l = 0; l < static_cast<int>(specs.size()); ++l) {
    const auto& spec = specs[l];
    for (Eigen::Index j = 0; j < n_t; ++j) {
      const double c = spec.beta[j] / stats.sigma_s2;
      const CMatrix pi = spec.projections[j].cast<cplx>();
      const CMatrix inner = stats.R - c * stats.Q * pi * q_h;
      Eigen::FullPivLU<CMatrix> lu(inner);
      if (!lu.isInvertible()) throw NumericalError("design_closed_form: singular inner matrix");
      CVector w = lu.solve(stats.p.col(j) - c * stats.Q * (pi * stats.t.col(j)));
      CVector f = c * (pi * (q_h * w - stats.t.col(j)));
      bank.w(j, l) = std::move(w);
      bank.f(j, l) = std::move(f);
    }
  }
  return bank;
}

FilterBank design_perfect_feedback(const CMatrix& h, double noise_variance,
                                   std::span<const BranchSpec> specs, double sigma_s2,
                                   int iterations, OpCounter* ops) {
  const Eigen::Index n_r = h.rows(), n_t = h.cols();
  check_specs(specs, n_t);
  if (iterations < 1) throw ParameterError("design_perfect_feedback: need at least one iteration");
  if (noise_variance < 0) throw ParameterError("design_perfect_feedback: negative noise variance");
  const CMatrix a = h * h.adjoint() + (noise_variance / sigma_s2) * CMatrix::Identity(n_r, n_r);
  const CMatrix a_inv = hermitian_inverse(a, ops);
  // A^-1 H is shared by every (j, l): w = (A^-1 H)(delta_j + f).
  const CMatrix g = a_inv * h;
  const CMatrix h_h = h.adjoint();
  FilterBank bank(n_r, n_t, static_cast<int>(specs.size()));
  for (int l = 0; l < static_cast<int>(specs.size()); ++l) {
    const auto& spec = specs[l];
    for (Eigen::Index j = 0; j < n_t; ++j) {
      const CMatrix pi = spec.projections[j].cast<cplx>();
      CVector f = CVector::Zero(n_t);
      CVector w;
      for (int it = 0; it < iterations; ++it) {
        CVector d = f;
        d(j) += 1.0;
        w = g * d;
        f = spec.beta[j] * (pi * (h_h * w));
        ops::matvec(ops, n_r, n_t);
        ops::matvec(ops, n_t, n_r);
        ops::matvec(ops, n_t, n_t);
        ops::mul(ops, n_t);
      }
      bank.w(j, l) = std::move(w);
      bank.f(j, l) = std::move(f);
    }
  }
  return bank;
}

double mmse_value(const CVector& w, const CVector& f, const SecondOrderStats& stats,
                  Eigen::Index j) {
  const cplx wrw = w.dot(stats.R * w);  // Eigen's dot conjugates the left operand
  const cplx tf = stats.t.col(j).dot(f);
  return stats.sigma_s2 - wrw.real() + 2.0 * tf.real() + stats.sigma_s2 * f.squaredNorm();
}

double mse_value(const CVector& w, const CVector& f, const SecondOrderStats& stats,
                 Eigen::Index j) {
  const cplx wp = w.dot(stats.p.col(j));
  const cplx wrw = w.dot(stats.R * w);
  const cplx wqf = w.dot(stats.Q * f);
  const cplx ft = f.dot(stats.t.col(j));
  return stats.sigma_s2 - 2.0 * wp.real() + wrw.real() - 2.0 * wqf.real() + 2.0 * ft.real() +
         stats.sigma_s2 * f.squaredNorm();
}

double immse_metric(cplx s_hat, const CVector& w, const CVector& f, const CVector& r,
                    const CVector& s_dec) {
  return immse_from_outputs(ImmseForm::reduced, s_hat, w.dot(r), f.dot(s_dec));
}

double immse_full(cplx s_hat, const CVector& w, const CVector& f, const CVector& r,
                  const CVector& s_dec) {
  return immse_from_outputs(ImmseForm::full, s_hat, w.dot(r), f.dot(s_dec));
}

}  // namespace mbdf
