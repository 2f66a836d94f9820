#pragma once

// Rate-1/2 convolutional code, interleaving, MAP decoding and the soft
// demapping pieces of the iterative detection-and-decoding receiver.
//
// LLRs are log P(bit = 0) / P(bit = 1) throughout.

#include <cstdint>
#include <span>
#include <vector>

#include "mbdf/detectors.hpp"
#include "mbdf/sysmodel.hpp"
#include "mbdf/types.hpp"

namespace mbdf {

inline constexpr double kLlrClamp = 50.0;
inline constexpr double kVarianceFloor = 1e-6;
inline constexpr std::size_t kMinModelSamples = 20;
inline constexpr int kDefaultTurboIterations = 5;

using Bits = std::vector<std::uint8_t>;

// Feedforward [7, 5] octal code, constraint length 3, flushed with two zeros.
// State (s1, s2) holds the last two inputs; outputs are u^s1^s2 and u^s2.
struct ConvCode {
  static constexpr int kStates = 4;
  static constexpr int kMemory = 2;
  static constexpr int kOutputs = 2;

  // Next state and the two output bits for input u in state s (s = 2*s1 + s2).
  static int next_state(int s, int u) { return (u << 1) | (s >> 1); }
  static int output(int s, int u, int k) {
    const int s1 = (s >> 1) & 1, s2 = s & 1;
    return k == 0 ? (u ^ s1 ^ s2) : (u ^ s2);
  }
  static std::size_t coded_length(std::size_t info) { return kOutputs * (info + kMemory); }
};

// k info bits -> 2(k + 2) coded bits.
Bits conv_encode(std::span<const std::uint8_t> info);

// Uniform random permutation of 0..n-1.
std::vector<std::size_t> make_interleaver(std::size_t n, Rng& rng);

// out[k] = in[perm[k]]
template <typename T>
std::vector<T> interleave(std::span<const T> in, std::span<const std::size_t> perm) {
  if (in.size() != perm.size()) throw InputShapeError("interleave: length mismatch");
  std::vector<T> out(in.size());
  for (std::size_t k = 0; k < perm.size(); ++k) out[k] = in[perm[k]];
  return out;
}

// out[perm[k]] = in[k]
template <typename T>
std::vector<T> deinterleave(std::span<const T> in, std::span<const std::size_t> perm) {
  if (in.size() != perm.size()) throw InputShapeError("deinterleave: length mismatch");
  std::vector<T> out(in.size());
  for (std::size_t k = 0; k < perm.size(); ++k) out[perm[k]] = in[k];
  return out;
}

struct BcjrOutput {
  std::vector<double> posterior;  // Lambda_2 per coded bit
  std::vector<double> extrinsic;  // lambda_2 = Lambda_2 - input
  std::vector<double> info;       // a posteriori LLR of each info bit (tail excluded)
};

// Log-domain forward-backward over the terminated 4-state trellis.
BcjrOutput bcjr_decode(std::span<const double> llr_in);

struct ScalarOutputModel {
  cplx v{1.0, 0.0};
  double xi_var = 1.0;
};

// V = mean(s^* z) / sigma_s^2, var = mean |z - V s|^2 (floored). With fewer
// than min_samples samples the previous model is returned unchanged.
ScalarOutputModel estimate_output_model(std::span<const cplx> z, std::span<const cplx> ref,
                                        double sigma_s2 = 1.0,
                                        const ScalarOutputModel& previous = {},
                                        std::size_t min_samples = kMinModelSamples);

// exact: log-sum-exp; maxlog: max; literal: exact without the priors of the
// other bits of the symbol.
enum class DemapMode { exact, maxlog, literal };

// lambda_1[b] = log sum_{S: b=0} exp(-|z - V S|^2 / (2 var) + prior terms of the other bits)
//             - log sum_{S: b=1} (...), clamped to +-kLlrClamp.
std::vector<double> extrinsic_llr(cplx z, const ScalarOutputModel& model,
                                  std::span<const double> priors, const Constellation& c,
                                  DemapMode mode = DemapMode::exact);

// signed: argmax_l lambda_l (as printed); magnitude: argmax_l |lambda_l|.
// Ties go to the lowest branch.
enum class SelectMode { signed_value, magnitude };

struct Selected {
  double value = 0.0;
  int branch = 0;
};
Selected select_llr(std::span<const double> per_branch, SelectMode mode = SelectMode::signed_value);

// E[a] under independent bit priors.
cplx soft_symbol_estimate(std::span<const double> priors, const Constellation& c);

struct TurboConfig {
  int iterations = kDefaultTurboIterations;
  DemapMode demap = DemapMode::exact;
  SelectMode select = SelectMode::signed_value;
  std::size_t min_samples = kMinModelSamples;
  // Feedback scaling of the parallel-cancellation filters fed with soft symbols.
  double soft_beta = kDefaultBeta;
};

struct CodedPacket {
  BitMatrix info;   // N_T x k
  BitMatrix coded;  // N_T x 2(k + 2), interleaved order
  std::vector<std::vector<std::size_t>> interleavers;
  CMatrix symbols;  // N_T x Q
};

// Q symbols per stream carry k = Q C / 2 - 2 info bits per stream.
CodedPacket make_coded_packet(Eigen::Index n_t, std::size_t symbols_per_stream,
                              const Constellation& c, Rng& rng);

struct TurboResult {
  std::vector<BitMatrix> decoded;          // per iteration, N_T x k
  std::vector<std::uint64_t> bit_errors;   // per iteration, against packet.info
};

// Iteration 1 runs the hard-decision branch receiver; later iterations feed
// decoder soft symbols to parallel-cancellation filters. r is N_R x Q.
TurboResult turbo_receive(const CMatrix& r, const CMatrix& h, double noise_variance,
                          const CodedPacket& packet, const DetectorConfig& detector,
                          const Constellation& c, const TurboConfig& cfg = {},
                          OpCounter* ops = nullptr);

}  // namespace mbdf
