#pragma once

// Monte Carlo BER sweeps.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mbdf/adaptive.hpp"
#include "mbdf/codec.hpp"
#include "mbdf/detectors.hpp"
#include "mbdf/op_counter.hpp"

namespace mbdf {

struct StopRule {
  std::uint64_t min_bit_errors = 200;
  std::uint64_t max_bits = 2'000'000;
};

struct SimConfig {
  int n_t = 4;
  int n_r = 4;
  std::string constellation = "qpsk";
  std::vector<double> snr_db{0, 4, 8, 12, 16};
  DetectorConfig detector;
  ChannelMode channel = ChannelMode::block_fading;
  double doppler = 1e-4;  // f_D T, time-varying mode
  std::size_t packet_len = 500;   // Q symbols per stream
  std::size_t training_len = 50;  // N_Tr, excluded from the BER
  bool coded = false;
  int iterations = kDefaultTurboIterations;
  double lambda = kDefaultLambda;
  std::uint64_t seed = 1;
  StopRule stop;
  unsigned threads = 0;  // 0: one worker per hardware thread

  // Throws ConfigError on any invalid or infeasible combination.
  void validate() const;
};

struct BerPoint {
  double snr_db = 0.0;
  double noise_variance = 0.0;
  std::uint64_t bits = 0;
  std::uint64_t bit_errors = 0;
  std::uint64_t frame_errors = 0;
  std::uint64_t packets = 0;
  double ber = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  // Coded runs: bit errors after each decoding iteration (bits is shared).
  std::vector<std::uint64_t> iteration_errors;
  OpCounter ops;
  std::uint64_t vectors = 0;
};

struct BerReport {
  SimConfig config;
  std::string config_hash;
  std::vector<BerPoint> points;
};

// 95% normal-approximation interval for the error rate from per-packet
// error counts. The variance is the larger of the Bernoulli variance and the
// packet-level (clustered) variance; with zero errors the interval is [0, 3/n].
struct Interval {
  double low = 0.0, high = 0.0;
};
Interval ber_interval(std::span<const std::uint64_t> packet_errors,
                      std::span<const std::uint64_t> packet_bits);

// Seed of the generator for SNR point `index`.
std::uint64_t point_seed(std::uint64_t master, std::size_t index);

// sigma^2 for an SNR grid point; +inf dB gives a noiseless channel.
double noise_for(const SimConfig& cfg, double snr_db);

BerPoint run_ber_point(const SimConfig& cfg, std::size_t index);
BerReport run_ber_sweep(const SimConfig& cfg);

// Negated least-squares slope of log10(BER) against SNR_dB / 10 over the
// points in [snr_lo, snr_hi] with 0 < BER < 1e-2. Throws ParameterError with
// fewer than three usable points.
double diversity_slope(const BerReport& report,
                       double snr_lo = -std::numeric_limits<double>::infinity(),
                       double snr_hi = std::numeric_limits<double>::infinity());
double diversity_slope(std::span<const double> snr_db, std::span<const double> ber);

// SNR at which the curve crosses `target`, by linear interpolation of log10
// BER between neighbouring points. NaN when the curve never crosses.
double snr_at_ber(std::span<const double> snr_db, std::span<const double> ber, double target);

}  // namespace mbdf
