#include "mbdf/adaptive.hpp"

namespace mbdf {

RlsState RlsState::init(Eigen::Index n_r, Eigen::Index n_t, double lambda, double init_scale) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("rls: lambda must lie in [0, 1]");
  if (!(init_scale > 0.0)) throw ParameterError("rls: initial scale must be positive");
  RlsState st;
  st.r_inv = init_scale * CMatrix::Identity(n_r, n_r);
  st.q_hat = CMatrix::Zero(n_r, n_t);
  st.p_hat = CMatrix::Zero(n_r, n_t);
  st.lambda = lambda;
  st.init_scale = init_scale;
  return st;
}

void rls_covariance_update(RlsState& st, const CVector& r, OpCounter* ops) {
  const Eigen::Index n = st.r_inv.rows();
  if (r.size() != n) throw InputShapeError("rls_covariance_update: wrong received vector size");
  if (st.lambda == 0.0) {
    // Degenerate memory: only the newest outer product, regularised by the initial term.
    st.r_inv = (r * r.adjoint() + CMatrix::Identity(n, n) / st.init_scale).inverse();
  } else {
    const double li = 1.0 / st.lambda;
    const CVector u = li * (st.r_inv * r);
    const cplx den = 1.0 + r.dot(u);
    const CVector k = u / den;
    // r^H P = (P r)^H for Hermitian P.
    st.r_inv = li * st.r_inv - k * u.adjoint();
    st.r_inv = 0.5 * (st.r_inv + st.r_inv.adjoint()).eval();
    ops::matvec(ops, n, n);
    ops::mul(ops, static_cast<std::uint64_t>(3 * n + n * n + 2));
    ops::add(ops, static_cast<std::uint64_t>(n + n * n));
  }
  st.weight = st.lambda * st.weight + 1.0;
  ++st.updates;
}

void rls_stats_update(RlsState& st, const CVector& r, const CVector& s, OpCounter* ops) {
  if (r.size() != st.q_hat.rows() || s.size() != st.q_hat.cols())
    throw InputShapeError("rls_stats_update: dimension mismatch");
  st.q_hat = st.lambda * st.q_hat + r * s.adjoint();
  st.p_hat = st.lambda * st.p_hat + r * s.adjoint();
  const auto nm = static_cast<std::uint64_t>(r.size() * s.size());
  ops::mul(ops, 2 * nm);
  ops::add(ops, nm);
}

const FilterBank& adaptive_filter_update(RlsState& st, std::span<const BranchSpec> specs,
                                         AdaptiveForm form, double sigma_s2, OpCounter* ops) {
  const Eigen::Index n_r = st.r_inv.rows(), n_t = st.q_hat.cols();
  if (specs.empty()) throw ConfigError("adaptive_filter_update: no branches");
  const int n_l = static_cast<int>(specs.size());
  if (st.filters.n_t() != n_t || st.filters.n_r() != n_r || st.filters.branches() != n_l)
    st.filters = FilterBank(n_r, n_t, n_l);
  if (form == AdaptiveForm::channel && !st.h_hat)
    throw ConfigError("adaptive_filter_update: channel form needs a channel estimate");
  const double weight = st.weight > 0.0 ? st.weight : 1.0;

  if (form == AdaptiveForm::channel) {
    const CMatrix& h = *st.h_hat;
    const CMatrix g = (weight * sigma_s2) * (st.r_inv * h);
    const CMatrix h_h = h.adjoint();
    ops::mul(ops, static_cast<std::uint64_t>(n_r * n_r * n_t));
    for (int l = 0; l < n_l; ++l) {
      for (Eigen::Index j = 0; j < n_t; ++j) {
        CVector d = st.filters.f(j, l);
        d(j) += 1.0;
        CVector w = g * d;
        st.filters.f(j, l) = specs[l].beta[j] * (specs[l].projections[j].cast<cplx>() * (h_h * w));
        st.filters.w(j, l) = std::move(w);
        ops::matvec(ops, n_r, n_t);
        ops::matvec(ops, n_t, n_r);
        ops::matvec(ops, n_t, n_t);
        ops::mul(ops, n_t);
      }
    }
  } else {
    const CMatrix q_h = st.q_hat.adjoint();
    for (int l = 0; l < n_l; ++l) {
      for (Eigen::Index j = 0; j < n_t; ++j) {
        CVector w = st.r_inv * (st.p_hat.col(j) + st.q_hat * st.filters.f(j, l));
        const double c = specs[l].beta[j] / (sigma_s2 * weight);
        st.filters.f(j, l) = c * (specs[l].projections[j].cast<cplx>() * (q_h * w));
        st.filters.w(j, l) = std::move(w);
        ops::matvec(ops, n_r, n_t);
        ops::matvec(ops, n_r, n_r);
        ops::matvec(ops, n_t, n_r);
        ops::matvec(ops, n_t, n_t);
        ops::mul(ops, n_t);
      }
    }
  }
  return st.filters;
}

RlsChannelEstimator::RlsChannelEstimator(Eigen::Index n_r, Eigen::Index n_t, double lambda,
                                         double init)
    : lambda_(lambda),
      c_(CMatrix::Zero(n_r, n_t)),
      p_(init * CMatrix::Identity(n_t, n_t)),
      h_hat_(CMatrix::Zero(n_r, n_t)) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ParameterError("rls channel: lambda must lie in (0, 1]");
  if (!(init > 0.0)) throw ParameterError("rls channel: initial scale must be positive");
}

std::uint64_t RlsChannelEstimator::multiplications(Eigen::Index n_r, Eigen::Index n_t) {
  const auto r = static_cast<std::uint64_t>(n_r), t = static_cast<std::uint64_t>(n_t);
  return r * t * t + 4 * t * t + 2 * t * r + 2 * t + 2;
}

const CMatrix& RlsChannelEstimator::update(const CVector& r, const CVector& s, OpCounter* ops) {
  const Eigen::Index n_r = c_.rows(), n_t = c_.cols();
  if (r.size() != n_r || s.size() != n_t) throw InputShapeError("rls channel: dimension mismatch");
  const auto R = static_cast<std::uint64_t>(n_r), T = static_cast<std::uint64_t>(n_t);

  // C <- lambda C + r s^H
  c_ = lambda_ * c_ + r * s.adjoint();
  ops::mul(ops, 2 * R * T);
  ops::add(ops, R * T);

  const double li = 1.0 / lambda_;
  ops::mul(ops, 1);
  const CMatrix lp = li * p_;
  ops::mul(ops, T * T);
  const CVector u = lp * s;
  ops::matvec(ops, T, T);
  const CVector v = s.adjoint() * lp;  // row vector s^H (lambda^-1 P), stored as a column
  ops::matvec(ops, T, T);
  const cplx den = 1.0 + s.dot(u);
  ops::dot(ops, T);
  ops::add(ops, 1);
  const cplx inv_den = 1.0 / den;
  ops::mul(ops, 1);
  const CVector k = u * inv_den;
  ops::mul(ops, T);
  p_ = lp - k * v.transpose();
  ops::mul(ops, T * T);
  ops::add(ops, T * T);

  h_hat_ = c_ * p_;
  ops::mul(ops, R * T * T);
  if (T > 0) ops::add(ops, R * T * (T - 1));
  return h_hat_;
}

namespace {

double kind_beta(const DetectorConfig& cfg) {
  switch (cfg.kind) {
    case DetectorKind::linear: return 0.0;
    case DetectorKind::sic:
    case DetectorKind::df: return 1.0;
    default: return cfg.beta;
  }
}

}  // namespace

AdaptiveReceiver::AdaptiveReceiver(AdaptiveConfig cfg, Constellation c, Eigen::Index n_r,
                                   Eigen::Index n_t, double noise_variance)
    : cfg_(cfg),
      c_(std::move(c)),
      noise_variance_(noise_variance),
      st_(RlsState::init(n_r, n_t, cfg.lambda, cfg.init_scale)),
      est_(n_r, n_t, cfg.lambda) {
  cfg_.detector.validate();
  if (cfg_.detector.kind == DetectorKind::ml)
    throw ConfigError("adaptive receiver: ml has no adaptive form");
  if (cfg_.reorder_interval == 0) throw ConfigError("adaptive receiver: reorder interval must be positive");
  if (cfg_.detector.kind == DetectorKind::linear) {
    specs_.push_back(make_pic_branch(identity_ordering(static_cast<int>(n_t)), 0, 0.0));
  } else {
    specs_ = make_sic_branches(fixed_orderings(static_cast<int>(n_t), cfg_.detector.branches),
                               kind_beta(cfg_.detector), cfg_.detector.shape_rule);
  }
  sel_.immse = cfg_.detector.immse;
  sel_.energy = cfg_.detector.energy;
  sel_.sigma_s2 = c_.average_energy();
  st_.h_hat = est_.estimate();
  st_.filters = FilterBank(n_r, n_t, static_cast<int>(specs_.size()));
}

void AdaptiveReceiver::reorder() {
  const auto& cfg = cfg_.detector;
  if (cfg.kind == DetectorKind::linear || cfg.kind == DetectorKind::df) return;
  const CMatrix& h = est_.estimate();
  std::vector<std::vector<int>> orders;
  if (cfg.kind == DetectorKind::sic) {
    orders = order_suboptimal(stream_mmse(h, noise_variance_), 1);
  } else if (cfg.ordering == OrderingMode::optimal) {
    orders = order_optimal(h, noise_variance_, cfg.branches, cfg.beta, cfg.shape_rule);
  } else if (cfg.ordering == OrderingMode::suboptimal) {
    orders = order_suboptimal(stream_mmse(h, noise_variance_), cfg.branches);
  } else {
    return;
  }
  specs_ = make_sic_branches(orders, kind_beta(cfg), cfg.shape_rule);
}

CVector AdaptiveReceiver::step(const CVector& r, const CVector* known, OpCounter* ops,
                               OpCounter* channel_ops) {
  rls_covariance_update(st_, r, ops);

  DetectionResult det;
  switch (cfg_.detector.kind) {
    case DetectorKind::linear: det = detect_linear(r, st_.filters, c_, ops); break;
    case DetectorKind::sic:
    case DetectorKind::df: det = detect_sic(r, st_.filters, specs_[0], c_, ops); break;
    default: det = detect_mb_mmse_df(r, st_.filters, specs_, c_, sel_, ops); break;
  }
  const CVector& ref = known ? *known : det.symbols;
  rls_stats_update(st_, r, ref, ops);
  st_.h_hat = est_.update(r, ref, channel_ops ? channel_ops : ops);
  ++index_;
  if (index_ % cfg_.reorder_interval == 0) reorder();
  adaptive_filter_update(st_, specs_, cfg_.form, sel_.sigma_s2, ops);
  return det.symbols;
}

}  // namespace mbdf
