#pragma once

// Extrinsic information transfer of the soft detection stage.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mbdf/codec.hpp"
#include "mbdf/filters.hpp"
#include "mbdf/sysmodel.hpp"

namespace mbdf {

// Mutual information between a bit and an LLR L ~ N(sigma^2/2 x, sigma^2), x = +-1.
double j_function(double sigma);
// Inverse of j_function by bisection; I >= 1 maps to kMaxPriorSigma.
double j_inverse(double mutual_information);
inline constexpr double kMaxPriorSigma = 40.0;

// Histogram estimate of I(b; L) with equiprobable bits.
double mutual_information_histogram(std::span<const std::uint8_t> bits,
                                    std::span<const double> llrs, int bins = 100);

// Prior LLRs with I(b; L) = J(sigma): L = (sigma^2 / 2) (1 - 2 b) + sigma n.
std::vector<double> gaussian_priors(std::span<const std::uint8_t> bits, double sigma, Rng& rng);

struct ExitConfig {
  int n_t = 4;
  int n_r = 4;
  std::string constellation = "qpsk";
  double soft_beta = kDefaultBeta;
  DemapMode demap = DemapMode::exact;
  std::size_t symbols = 20000;  // per stream, over all channel blocks
  std::size_t block_len = 100;  // symbols per channel realization
  std::uint64_t seed = 1;

  void validate() const;
};

struct ExitPoint {
  double i_a = 0.0;
  double i_e = 0.0;
};

// One soft parallel-cancellation pass per I_A value. The output model is
// estimated against the transmitted symbols.
std::vector<ExitPoint> exit_chart(const ExitConfig& cfg, double snr_db,
                                  std::span<const double> i_a_grid);

}  // namespace mbdf
