#pragma once

// Flat-fading spatial multiplexing model: constellations, frames, channel
// draws (i.i.d. block fading and Jakes time variation) and the SNR convention.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mbdf/types.hpp"

namespace mbdf {

// Unit-energy constellation with a Gray labelling.
//
// Point k carries the label k. Bit c of a label (c = 0 is the first bit
// transmitted) is (k >> (C - 1 - c)) & 1. Bit value 0 maps to the positive
// amplitude on its axis:
//
//   BPSK   : b0             -> 1 - 2*b0
//   QPSK   : b0 b1          -> ((1 - 2*b0) + j(1 - 2*b1)) / sqrt(2)
//   16-QAM : b0 b1 | b2 b3  -> (I + jQ) / sqrt(10), each axis pair
//            00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3
//
// so QPSK "00" is (1+j)/sqrt(2). Log-likelihood ratios elsewhere in the
// library are log P(bit = 0) / P(bit = 1), i.e. positive favours the
// positive-amplitude half of the axis.
class Constellation {
 public:
  static Constellation bpsk();
  static Constellation qpsk();
  static Constellation qam16();
  // "bpsk", "qpsk", "16qam" (also "qam16").
  static Constellation from_name(std::string_view name);

  const std::string& name() const { return name_; }
  int bits_per_symbol() const { return bits_; }
  std::size_t size() const { return points_.size(); }
  std::span<const cplx> points() const { return points_; }
  cplx point(std::size_t label) const { return points_[label]; }

  // Bit c of the label of point k.
  int bit(std::size_t label, int c) const {
    return static_cast<int>((label >> (bits_ - 1 - c)) & 1U);
  }
  std::size_t label_of(std::span<const std::uint8_t> bits) const;

  // Nearest point; exact ties go to the lowest label.
  std::size_t nearest(cplx z) const;
  cplx slice(cplx z) const { return points_[nearest(z)]; }

  double average_energy() const;

 private:
  Constellation(std::string name, int bits, std::vector<cplx> points);

  std::string name_;
  int bits_ = 0;
  std::vector<cplx> points_;
};

// Bits (N_T x Q*C) to symbols (N_T x Q).
CMatrix modulate(const BitMatrix& bits, const Constellation& c);
// Symbols (N_T x Q) to bits via nearest-point slicing; inverse of modulate.
BitMatrix demap_hard(const CMatrix& symbols, const Constellation& c);

enum class ChannelMode { block_fading, time_varying };

struct ChannelRealization {
  CMatrix gains;  // N_R x N_T
  double noise_variance = 0.0;
  ChannelMode mode = ChannelMode::block_fading;
  double doppler = 0.0;  // f_D * T, time-varying mode only

  Eigen::Index n_r() const { return gains.rows(); }
  Eigen::Index n_t() const { return gains.cols(); }
};

// I.i.d. CN(0, 1) gains.
ChannelRealization random_channel(Eigen::Index n_r, Eigen::Index n_t, double noise_variance,
                                  Rng& rng);

// r = H s + n, n ~ CN(0, sigma_n^2 I).
CVector transmit(const ChannelRealization& h, const CVector& s, Rng& rng);

// Sum-of-sinusoids Rayleigh generator (one independent process per tap).
// Each tap is (X_c + j X_s) / sqrt(2) with
//   X_c(t) = sqrt(2/M) sum_n cos(2 pi f_D T t cos(a_n) + phi_n)
//   X_s(t) = sqrt(2/M) sum_n cos(2 pi f_D T t sin(a_n) + psi_n)
//   a_n    = (2 pi n - pi + theta) / (4 M)
// with uniform random phases and theta per tap. Autocorrelation at lag tau
// tends to J0(2 pi f_D T tau).
class JakesChannel {
 public:
  static constexpr int kDefaultOscillators = 32;

  JakesChannel(Eigen::Index n_r, Eigen::Index n_t, double doppler, Rng& rng,
               int oscillators = kDefaultOscillators);

  ChannelRealization at(std::size_t time_index, double noise_variance) const;
  cplx tap(Eigen::Index rx, Eigen::Index tx, std::size_t time_index) const;

  double doppler() const { return doppler_; }

 private:
  struct Tap {
    std::vector<double> cos_freq, sin_freq, phase_c, phase_s;
  };

  Eigen::Index n_r_, n_t_;
  double doppler_;
  int oscillators_;
  std::vector<Tap> taps_;
};

std::vector<ChannelRealization> jakes_sequence(double doppler, Eigen::Index n_r,
                                               Eigen::Index n_t, std::size_t length,
                                               double noise_variance, Rng& rng);

// sigma^2 = N_T sigma_s^2 / (R C 10^(snr_db / 10)).
double snr_to_noise_variance(double snr_db, int n_t, double rate, int bits_per_symbol,
                             double sigma_s2 = 1.0);

struct MimoFrame {
  BitMatrix bits;          // N_T x Q*C
  CMatrix symbols;         // N_T x Q
  std::size_t training_len = 0;  // leading columns known to the receiver
};

// Uniform random bits, the first training_len symbols form the known prefix.
MimoFrame random_frame(Eigen::Index n_t, std::size_t length, std::size_t training_len,
                       const Constellation& c, Rng& rng);

}  // namespace mbdf
