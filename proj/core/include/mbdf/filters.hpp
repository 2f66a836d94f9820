#pragma once

// Constrained MMSE feedforward / feedback filter pairs.
//
// For stream j and branch l the receiver forms
//   z_{j,l} = w_{j,l}^H r - f_{j,l}^H s_l
// where the feedback filter f_{j,l} is restricted by a 0/1 shape matrix
// S_{j,l} (S f = 0) and scaled by beta_{j,l} in [0, 1]. The projection
// Pi_{j,l} = I - S^+ S maps any feedback vector into the admissible set.

#include <span>
#include <vector>

#include "mbdf/op_counter.hpp"
#include "mbdf/types.hpp"

namespace mbdf {

inline constexpr double kDefaultBeta = 0.65;
inline constexpr int kDefaultDesignIterations = 2;
// Singular values below this fraction of the largest one are treated as zero.
inline constexpr double kPinvTolerance = 1e-12;

struct ShapeConstraint {
  RMatrix matrix;  // N_T x N_T, entries in {0, 1}
  int stream = 0;  // stream the constraint belongs to (0-based)
  int branch = 0;  // branch index (0-based)
};

// How the successive-cancellation pattern is laid out.
//
// cancel_detected (default): the stream detected at position p may feed back
//   only the streams detected at positions 1..p-1, i.e.
//   S_p = blockdiag(0_{p-1}, I_{N_T-p+1}). This is the block pattern
//   blockdiag(0_{N_T-j+1}, I_{j-1}) with its stream index counted from the
//   last detected stream, plus the own-stream tap forced to zero.
// printed: blockdiag(0_{N_T-j+1}, I_{j-1}) verbatim (S_1 = 0, vacuous).
enum class SicShapeRule { cancel_detected, printed };

// Pi = I - (S^H S)^+ (S^H S); Hermitian and idempotent for any S.
RMatrix projection_matrix(const RMatrix& s);
inline RMatrix projection_matrix(const ShapeConstraint& s) { return projection_matrix(s.matrix); }

// Shapes for branch 1 in detection-position order (entry j is position j).
std::vector<ShapeConstraint> sic_shapes(int n_t, SicShapeRule rule = SicShapeRule::cancel_detected);

// S_{j,l} = P^T S_{j,1} P, where P maps stream indices to positions
// ((P x)_p = x_{perm[p]}). Entry j belongs to stream perm[j].
std::vector<ShapeConstraint> permuted_shapes(int n_t, int branch, std::span<const int> perm,
                                             SicShapeRule rule = SicShapeRule::cancel_detected);

// cancel_others (default): S_j = diag(delta_j), so f may feed back every
//   stream except j and Pi_j = I - diag(delta_j).
// printed: S_j = I - diag(delta_j) verbatim, which leaves only the own tap
//   (Pi_j = diag(delta_j)).
enum class PicShapeRule { cancel_others, printed };

std::vector<ShapeConstraint> pic_shapes(int n_t, PicShapeRule rule = PicShapeRule::cancel_others);

bool is_permutation(std::span<const int> perm, int n);

struct BranchSpec {
  std::vector<int> ordering;            // ordering[p] = stream detected at position p
  std::vector<ShapeConstraint> shapes;  // indexed by stream
  std::vector<RMatrix> projections;     // indexed by stream
  std::vector<double> beta;             // indexed by stream
  // Stored for reference only; there is no closed-form map from beta to gamma
  // except gamma = 0 <-> beta = 0 and gamma = 1 <-> beta = 1 (NaN otherwise).
  std::vector<double> gamma;

  int n_t() const { return static_cast<int>(ordering.size()); }
  // Throws ConfigError on any broken invariant.
  void validate() const;
};

BranchSpec make_sic_branch(std::span<const int> ordering, int branch, double beta,
                           SicShapeRule rule = SicShapeRule::cancel_detected);
BranchSpec make_pic_branch(std::span<const int> ordering, int branch, double beta,
                           PicShapeRule rule = PicShapeRule::cancel_others);
std::vector<BranchSpec> make_sic_branches(const std::vector<std::vector<int>>& orderings,
                                          double beta,
                                          SicShapeRule rule = SicShapeRule::cancel_detected);

std::vector<int> identity_ordering(int n_t);

struct SecondOrderStats {
  CMatrix R;  // N_R x N_R, E[r r^H]
  CMatrix Q;  // N_R x N_T, E[r s_hat^H]
  CMatrix p;  // N_R x N_T, column j is E[r s_j^*]
  CMatrix t;  // N_T x N_T, column j is E[s_hat s_j^*]
  double sigma_s2 = 1.0;
  double sigma_n2 = 0.0;
};

// R = sigma_s^2 H H^H + sigma_n^2 I, Q = sigma_s^2 H, p_j = sigma_s^2 H delta_j, t_j = 0.
SecondOrderStats perfect_feedback_stats(const CMatrix& h, double sigma_s2, double sigma_n2);

class FilterBank {
 public:
  FilterBank() = default;
  FilterBank(Eigen::Index n_r, Eigen::Index n_t, int branches);

  Eigen::Index n_r() const { return n_r_; }
  Eigen::Index n_t() const { return n_t_; }
  int branches() const { return branches_; }

  CVector& w(Eigen::Index j, int l) { return w_[index(j, l)]; }
  const CVector& w(Eigen::Index j, int l) const { return w_[index(j, l)]; }
  CVector& f(Eigen::Index j, int l) { return f_[index(j, l)]; }
  const CVector& f(Eigen::Index j, int l) const { return f_[index(j, l)]; }

 private:
  std::size_t index(Eigen::Index j, int l) const {
    return static_cast<std::size_t>(l) * static_cast<std::size_t>(n_t_) +
           static_cast<std::size_t>(j);
  }

  Eigen::Index n_r_ = 0, n_t_ = 0;
  int branches_ = 0;
  std::vector<CVector> w_, f_;
};

// Hermitian inverse via Cholesky; throws NumericalError carrying the
// 2-norm condition number when the factorization fails.
CMatrix hermitian_inverse(const CMatrix& a, OpCounter* ops = nullptr);

// Alternates w = R^-1 (p_j + Q f) and f = (beta / sigma_s^2) Pi (Q^H w - t_j)
// starting from f = 0, with one R^-1 shared by every stream and branch.
FilterBank design_statistical(const SecondOrderStats& stats, std::span<const BranchSpec> specs,
                              int iterations = kDefaultDesignIterations,
                              OpCounter* ops = nullptr);

// Fixed point of the alternation, one inverse per (j, l):
//   w = (R - (beta/sigma_s^2) Q Pi Q^H)^-1 (p_j - (beta/sigma_s^2) Q Pi t_j)
//   f = (beta/sigma_s^2) Pi (Q^H w - t_j)
FilterBank design_closed_form(const SecondOrderStats& stats, std::span<const BranchSpec> specs);

// Perfect-feedback specialisation:
//   w = (H H^H + sigma_n^2/sigma_s^2 I)^-1 H (delta_j + f),  f = beta Pi H^H w.
FilterBank design_perfect_feedback(const CMatrix& h, double noise_variance,
                                   std::span<const BranchSpec> specs, double sigma_s2 = 1.0,
                                   int iterations = kDefaultDesignIterations,
                                   OpCounter* ops = nullptr);

// sigma_s^2 - w^H R w + t_j^H f + f^H t_j + sigma_s^2 f^H f. Exact for filters
// satisfying w = R^-1 (p_j + Q f).
double mmse_value(const CVector& w, const CVector& f, const SecondOrderStats& stats,
                  Eigen::Index j);

// E|s_j - w^H r + f^H s_hat|^2 expanded in the second-order statistics; valid
// for any filter pair.
double mse_value(const CVector& w, const CVector& f, const SecondOrderStats& stats,
                 Eigen::Index j);

enum class ImmseForm { reduced, full };

// |s|^2 - |w^H r|^2 + |f^H s_dec|^2 (three-term instantaneous metric, R_hat = r r^H).
double immse_metric(cplx s_hat, const CVector& w, const CVector& f, const CVector& r,
                    const CVector& s_dec);
// |s - w^H r + f^H s_dec|^2.
double immse_full(cplx s_hat, const CVector& w, const CVector& f, const CVector& r,
                  const CVector& s_dec);

// Same metrics from precomputed w^H r and f^H s_dec.
inline double immse_from_outputs(ImmseForm form, cplx s_hat, cplx wr, cplx fs) {
  if (form == ImmseForm::full) return std::norm(s_hat - wr + fs);
  return std::norm(s_hat) - std::norm(wr) + std::norm(fs);
}

}  // namespace mbdf
