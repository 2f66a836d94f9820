#pragma once

// Recursive least-squares tracking of R^-1, Q and p_j, recursive filter
// updates and an RLS channel estimator for the adaptive receiver.

#include <optional>
#include <vector>

#include "mbdf/detectors.hpp"
#include "mbdf/filters.hpp"
#include "mbdf/op_counter.hpp"
#include "mbdf/sysmodel.hpp"

namespace mbdf {

inline constexpr double kDefaultLambda = 0.998;
inline constexpr double kDefaultRinvInit = 1e-2;  // R_hat^-1[0] = 1e-2 I
inline constexpr std::size_t kDefaultTrainingLen = 50;
inline constexpr std::size_t kDefaultReorderInterval = 50;

struct RlsState {
  CMatrix r_inv;  // N_R x N_R
  CMatrix q_hat;  // N_R x N_T
  CMatrix p_hat;  // N_R x N_T, column j is p_hat_j
  double lambda = kDefaultLambda;
  double init_scale = kDefaultRinvInit;
  // sum_k lambda^k over the processed samples; R_hat^-1 tracks (weight * R)^-1.
  double weight = 0.0;
  std::size_t updates = 0;
  FilterBank filters;
  std::optional<CMatrix> h_hat;

  static RlsState init(Eigen::Index n_r, Eigen::Index n_t, double lambda = kDefaultLambda,
                       double init_scale = kDefaultRinvInit);
};

// k = lambda^-1 P r / (1 + lambda^-1 r^H P r), P <- lambda^-1 P - lambda^-1 k r^H P,
// then P <- (P + P^H) / 2.
void rls_covariance_update(RlsState& st, const CVector& r, OpCounter* ops = nullptr);

// Q_hat <- lambda Q_hat + r s^H and p_hat_j <- lambda p_hat_j + r s_j^*, with s
// the selected decisions (or the known symbols during training).
void rls_stats_update(RlsState& st, const CVector& r, const CVector& s, OpCounter* ops = nullptr);

// channel: w = weight * R_hat^-1 H_hat (delta_j + f), f = beta Pi H_hat^H w.
// cross_correlation: w = R_hat^-1 (p_hat_j + Q_hat f),
//                    f = (beta / sigma_s^2) Pi Q_hat^H w / weight.
// One alternating pass per call starting from the filters held in st.
enum class AdaptiveForm { channel, cross_correlation };

const FilterBank& adaptive_filter_update(RlsState& st, std::span<const BranchSpec> specs,
                                         AdaptiveForm form = AdaptiveForm::channel,
                                         double sigma_s2 = 1.0, OpCounter* ops = nullptr);

// Exponentially weighted least squares H_hat = C P with C = sum lambda^k r s^H
// and P = (sum lambda^k s s^H)^-1 tracked by the inversion lemma.
class RlsChannelEstimator {
 public:
  static constexpr double kDefaultInit = 1e8;  // P[0] = kDefaultInit * I

  RlsChannelEstimator(Eigen::Index n_r, Eigen::Index n_t, double lambda = kDefaultLambda,
                      double init = kDefaultInit);

  const CMatrix& update(const CVector& r, const CVector& s, OpCounter* ops = nullptr);
  const CMatrix& estimate() const { return h_hat_; }
  double lambda() const { return lambda_; }

  // Multiplications per update: N_R N_T^2 + 4 N_T^2 + 2 N_T N_R + 2 N_T + 2.
  static std::uint64_t multiplications(Eigen::Index n_r, Eigen::Index n_t);

 private:
  double lambda_;
  CMatrix c_, p_, h_hat_;
};

struct AdaptiveConfig {
  DetectorConfig detector;
  double lambda = kDefaultLambda;
  double init_scale = kDefaultRinvInit;
  std::size_t training_len = kDefaultTrainingLen;
  std::size_t reorder_interval = kDefaultReorderInterval;
  AdaptiveForm form = AdaptiveForm::channel;
};

// Symbol-by-symbol adaptive receiver. The caller passes the known symbols
// while training and nullptr afterwards (decision-directed mode). Orderings
// are recomputed every reorder_interval symbols from the channel estimate.
class AdaptiveReceiver {
 public:
  AdaptiveReceiver(AdaptiveConfig cfg, Constellation c, Eigen::Index n_r, Eigen::Index n_t,
                   double noise_variance);

  // Detects one received vector; known is the training symbol when in training.
  // Channel-estimator operations go to channel_ops when given, else to ops.
  CVector step(const CVector& r, const CVector* known, OpCounter* ops = nullptr,
               OpCounter* channel_ops = nullptr);

  const RlsState& state() const { return st_; }
  const std::vector<BranchSpec>& specs() const { return specs_; }

 private:
  void reorder();

  AdaptiveConfig cfg_;
  Constellation c_;
  double noise_variance_;
  RlsState st_;
  RlsChannelEstimator est_;
  std::vector<BranchSpec> specs_;
  SelectionOptions sel_;
  std::size_t index_ = 0;
};

}  // namespace mbdf
