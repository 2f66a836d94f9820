#pragma once

// Hard-decision detectors: exhaustive ML, linear MMSE, MMSE-SIC, MMSE-DF and
// the multi-branch MMSE decision-feedback detector with its ordering rules.

#include <string>
#include <string_view>
#include <vector>

#include "mbdf/filters.hpp"
#include "mbdf/op_counter.hpp"
#include "mbdf/sysmodel.hpp"
#include "mbdf/types.hpp"

namespace mbdf {

enum class DetectorKind { ml, linear, sic, df, mbdf };
enum class OrderingMode { optimal, suboptimal, fixed };
// Energy term |s|^2 of the instantaneous metric: |Q(z)|^2 of the candidate,
// or the nominal sigma_s^2.
enum class SymbolEnergy { candidate, nominal };

std::string to_string(DetectorKind k);
std::string to_string(OrderingMode m);
DetectorKind detector_kind_from_string(std::string_view s);
OrderingMode ordering_mode_from_string(std::string_view s);

inline constexpr int kMlMaxBits = 24;

struct DetectorConfig {
  DetectorKind kind = DetectorKind::mbdf;
  int branches = 4;  // L
  int stages = 1;    // M
  OrderingMode ordering = OrderingMode::suboptimal;
  double beta = kDefaultBeta;
  SicShapeRule shape_rule = SicShapeRule::cancel_detected;
  ImmseForm immse = ImmseForm::reduced;
  SymbolEnergy energy = SymbolEnergy::candidate;
  int design_iterations = kDefaultDesignIterations;

  // Throws ConfigError: L >= 1, M >= 1, L == 1 unless kind is mbdf, beta in [0, 1].
  void validate() const;
};

struct SelectionOptions {
  ImmseForm immse = ImmseForm::reduced;
  SymbolEnergy energy = SymbolEnergy::candidate;
  double sigma_s2 = 1.0;
};

struct DetectionResult {
  CVector symbols;                 // N_T decisions
  std::vector<int> chosen_branch;  // per stream, 0-based branch index
  CMatrix soft;                    // N_T x L, z_{j,l}
  RMatrix metric;                  // N_T x L, instantaneous metric per candidate
};

// argmin over A^{N_T} of ||r - H s||^2. Refuses with SearchSpaceError when
// C * N_T exceeds kMlMaxBits.
DetectionResult detect_ml(const CVector& r, const CMatrix& h, const Constellation& c,
                          OpCounter* ops = nullptr);

// Each branch detects its streams in order, z_{j,l} = w^H r - f^H s_l with
// s_l holding that branch's earlier slices (undetected entries start at
// Q(w^H r)); per stream the branch with the smallest metric wins.
DetectionResult detect_mb_mmse_df(const CVector& r, const FilterBank& bank,
                                  std::span<const BranchSpec> specs, const Constellation& c,
                                  const SelectionOptions& opts = {}, OpCounter* ops = nullptr);

// Successive cancellation over a single branch: the stream at position p
// subtracts only the streams detected at positions < p.
DetectionResult detect_sic(const CVector& r, const FilterBank& bank, const BranchSpec& spec,
                           const Constellation& c, OpCounter* ops = nullptr);
// Conventional DF: same loop as detect_sic, intended for a fixed ordering.
DetectionResult detect_df(const CVector& r, const FilterBank& bank, const BranchSpec& spec,
                          const Constellation& c, OpCounter* ops = nullptr);
// Q(w_j^H r) per stream from branch 0.
DetectionResult detect_linear(const CVector& r, const FilterBank& bank, const Constellation& c,
                              OpCounter* ops = nullptr);

// Reverse-diagonal permutation matrix T (ones on the anti-diagonal).
RMatrix reversal_matrix(int n);

// Stage 1 is detect_mb_mmse_df. Every later stage starts each branch from the
// previous stage's decisions and re-detects the streams in the reverse of the
// branch ordering with the parallel-cancellation filters of later_bank.
DetectionResult multi_stage(const CVector& r, const FilterBank& bank,
                            std::span<const BranchSpec> specs, const FilterBank& later_bank,
                            std::span<const BranchSpec> later_specs, const Constellation& c,
                            int stages, const SelectionOptions& opts = {},
                            OpCounter* ops = nullptr);

// MMSE_j = sigma_s^2 - sigma_s^4 h_j^H R^-1 h_j with R = sigma_s^2 H H^H + sigma_n^2 I.
std::vector<double> stream_mmse(const CMatrix& h, double noise_variance, double sigma_s2 = 1.0);

// Branch 1 sorts by increasing MMSE. Branch l >= 2 opens with the (l/2)-th
// largest MMSE for even l and with position 1 + (l-1)/2 of branch 1 for odd l,
// then repeatedly picks argmax_n sum_q |MMSE_n - MMSE_{picked q}|. Duplicate
// orderings move to the next opening stream, then to the next unused
// permutation in lexicographic order. Ties go to the lowest stream index.
std::vector<std::vector<int>> order_suboptimal(std::span<const double> mmse, int branches);

inline constexpr int kOptimalOrderingMaxStreams = 5;

// Sum over streams of the exact MSE of the designed filters for one ordering.
double ordering_cost(const CMatrix& h, double noise_variance, std::span<const int> ordering,
                     double beta, SicShapeRule rule = SicShapeRule::cancel_detected,
                     int iterations = kDefaultDesignIterations);

// The L orderings with the smallest summed MMSE (distinct, ties by
// lexicographic order). The objective is additive over branches, so this is
// also the joint minimiser.
std::vector<std::vector<int>> order_optimal(const CMatrix& h, double noise_variance,
                                            int branches, double beta,
                                            SicShapeRule rule = SicShapeRule::cancel_detected);
// Joint search over all L-subsets of permutations; N_T <= 3 only.
std::vector<std::vector<int>> order_optimal_joint(const CMatrix& h, double noise_variance,
                                                  int branches, double beta,
                                                  SicShapeRule rule = SicShapeRule::cancel_detected);

// Identity, cyclic shifts, the reversal and its shifts, then remaining
// permutations in lexicographic order.
std::vector<std::vector<int>> fixed_orderings(int n_t, int branches);

std::vector<std::vector<int>> all_permutations(int n);

// Holds the per-channel state (orderings, shapes, filters) of one detector.
class Receiver {
 public:
  Receiver(DetectorConfig cfg, Constellation c);

  // Orders the streams and designs the filters for a block of symbols.
  void prepare(const CMatrix& h, double noise_variance, OpCounter* ops = nullptr);
  DetectionResult detect(const CVector& r, OpCounter* ops = nullptr) const;

  const DetectorConfig& config() const { return cfg_; }
  const Constellation& constellation() const { return c_; }
  const std::vector<BranchSpec>& specs() const { return specs_; }
  const FilterBank& bank() const { return bank_; }

 private:
  DetectorConfig cfg_;
  Constellation c_;
  SelectionOptions sel_;
  CMatrix h_;
  std::vector<BranchSpec> specs_, later_specs_;
  FilterBank bank_, later_bank_;
  bool ready_ = false;
};

}  // namespace mbdf
