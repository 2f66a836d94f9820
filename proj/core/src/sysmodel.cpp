#include "mbdf/sysmodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace mbdf {

Constellation::Constellation(std::string name, int bits, std::vector<cplx> points)
    : name_(std::move(name)), bits_(bits), points_(std::move(points)) {}

Constellation Constellation::bpsk() { return {"bpsk", 1, {cplx(1, 0), cplx(-1, 0)}}; }

Constellation Constellation::qpsk() {
  const double a = 1.0 / std::sqrt(2.0);
  std::vector<cplx> pts(4);
  for (std::size_t k = 0; k < 4; ++k) {
    const int b0 = static_cast<int>((k >> 1) & 1U);
    const int b1 = static_cast<int>(k & 1U);
    pts[k] = cplx(a * (1 - 2 * b0), a * (1 - 2 * b1));
  }
  return {"qpsk", 2, std::move(pts)};
}

Constellation Constellation::qam16() {
  // Gray pair per axis: 00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3.
  auto level = [](int sign_bit, int mag_bit) {
    return static_cast<double>((1 - 2 * sign_bit) * (3 - 2 * mag_bit));
  };
  const double a = 1.0 / std::sqrt(10.0);
  std::vector<cplx> pts(16);
  for (std::size_t k = 0; k < 16; ++k) {
    const int b0 = static_cast<int>((k >> 3) & 1U);
    const int b1 = static_cast<int>((k >> 2) & 1U);
    const int b2 = static_cast<int>((k >> 1) & 1U);
    const int b3 = static_cast<int>(k & 1U);
    pts[k] = cplx(a * level(b0, b1), a * level(b2, b3));
  }
  return {"16qam", 4, std::move(pts)};
}

Constellation Constellation::from_name(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (n == "bpsk") return bpsk();
  if (n == "qpsk") return qpsk();
  if (n == "16qam" || n == "qam16" || n == "16-qam") return qam16();
  throw ParameterError("unknown constellation '" + std::string(name) + "'");
}

std::size_t Constellation::label_of(std::span<const std::uint8_t> bits) const {
  if (static_cast<int>(bits.size()) != bits_)
    throw InputShapeError("label_of: expected " + std::to_string(bits_) + " bits");
  std::size_t label = 0;
  for (auto b : bits) label = (label << 1) | (b & 1U);
  return label;
}

std::size_t Constellation::nearest(cplx z) const {
  std::size_t best = 0;
  double best_d = std::norm(z - points_[0]);
  for (std::size_t k = 1; k < points_.size(); ++k) {
    const double d = std::norm(z - points_[k]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

double Constellation::average_energy() const {
  double e = 0.0;
  for (const auto& p : points_) e += std::norm(p);
  return e / static_cast<double>(points_.size());
}

CMatrix modulate(const BitMatrix& bits, const Constellation& c) {
  const int C = c.bits_per_symbol();
  if (bits.cols() % C != 0)
    throw InputShapeError("modulate: " + std::to_string(bits.cols()) +
                          " bits per stream is not a multiple of " + std::to_string(C));
  const Eigen::Index q = bits.cols() / C;
  CMatrix s(bits.rows(), q);
  for (Eigen::Index j = 0; j < bits.rows(); ++j) {
    for (Eigen::Index k = 0; k < q; ++k) {
      std::size_t label = 0;
      for (int b = 0; b < C; ++b) label = (label << 1) | (bits(j, k * C + b) & 1U);
      s(j, k) = c.point(label);
    }
  }
  return s;
}

BitMatrix demap_hard(const CMatrix& symbols, const Constellation& c) {
  const int C = c.bits_per_symbol();
  BitMatrix bits(symbols.rows(), symbols.cols() * C);
  for (Eigen::Index j = 0; j < symbols.rows(); ++j) {
    for (Eigen::Index k = 0; k < symbols.cols(); ++k) {
      const std::size_t label = c.nearest(symbols(j, k));
      for (int b = 0; b < C; ++b) bits(j, k * C + b) = static_cast<std::uint8_t>(c.bit(label, b));
    }
  }
  return bits;
}

ChannelRealization random_channel(Eigen::Index n_r, Eigen::Index n_t, double noise_variance,
                                  Rng& rng) {
  if (n_r < 1 || n_t < 1) throw InputShapeError("random_channel: empty dimensions");
  if (noise_variance < 0) throw ParameterError("random_channel: negative noise variance");
  ChannelRealization h;
  h.gains.resize(n_r, n_t);
  for (Eigen::Index t = 0; t < n_t; ++t)
    for (Eigen::Index r = 0; r < n_r; ++r) h.gains(r, t) = complex_gaussian(rng, 1.0);
  h.noise_variance = noise_variance;
  return h;
}

CVector transmit(const ChannelRealization& h, const CVector& s, Rng& rng) {
  if (s.size() != h.gains.cols())
    throw InputShapeError("transmit: symbol vector has " + std::to_string(s.size()) +
                          " entries, channel expects " + std::to_string(h.gains.cols()));
  if (h.noise_variance < 0) throw ParameterError("transmit: negative noise variance");
  CVector r = h.gains * s;
  if (h.noise_variance > 0) {
    for (Eigen::Index k = 0; k < r.size(); ++k) r(k) += complex_gaussian(rng, h.noise_variance);
  }
  return r;
}

JakesChannel::JakesChannel(Eigen::Index n_r, Eigen::Index n_t, double doppler, Rng& rng,
                           int oscillators)
    : n_r_(n_r), n_t_(n_t), doppler_(doppler), oscillators_(oscillators) {
  if (!(doppler >= 0.0 && doppler < 0.5))
    throw ParameterError("jakes: normalized Doppler must lie in [0, 0.5)");
  if (oscillators < 16) throw ParameterError("jakes: at least 16 oscillators per tap");
  if (n_r < 1 || n_t < 1) throw InputShapeError("jakes: empty dimensions");

  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  const double w = 2.0 * std::numbers::pi * doppler;
  const auto m = static_cast<double>(oscillators);
  taps_.resize(static_cast<std::size_t>(n_r * n_t));
  for (auto& tap : taps_) {
    const double theta = u(rng);
    tap.cos_freq.resize(oscillators);
    tap.sin_freq.resize(oscillators);
    tap.phase_c.resize(oscillators);
    tap.phase_s.resize(oscillators);
    for (int n = 0; n < oscillators; ++n) {
      const double alpha = (2.0 * std::numbers::pi * (n + 1) - std::numbers::pi + theta) / (4.0 * m);
      tap.cos_freq[n] = w * std::cos(alpha);
      tap.sin_freq[n] = w * std::sin(alpha);
      tap.phase_c[n] = u(rng);
      tap.phase_s[n] = u(rng);
    }
  }
}

cplx JakesChannel::tap(Eigen::Index rx, Eigen::Index tx, std::size_t time_index) const {
  const auto& tap = taps_[static_cast<std::size_t>(tx * n_r_ + rx)];
  const auto t = static_cast<double>(time_index);
  double xc = 0.0, xs = 0.0;
  for (int n = 0; n < oscillators_; ++n) {
    xc += std::cos(tap.cos_freq[n] * t + tap.phase_c[n]);
    xs += std::cos(tap.sin_freq[n] * t + tap.phase_s[n]);
  }
  const double scale = std::sqrt(2.0 / oscillators_) / std::sqrt(2.0);
  return {scale * xc, scale * xs};
}

ChannelRealization JakesChannel::at(std::size_t time_index, double noise_variance) const {
  ChannelRealization h;
  h.gains.resize(n_r_, n_t_);
  for (Eigen::Index t = 0; t < n_t_; ++t)
    for (Eigen::Index r = 0; r < n_r_; ++r) h.gains(r, t) = tap(r, t, time_index);
  h.noise_variance = noise_variance;
  h.mode = ChannelMode::time_varying;
  h.doppler = doppler_;
  return h;
}

std::vector<ChannelRealization> jakes_sequence(double doppler, Eigen::Index n_r,
                                               Eigen::Index n_t, std::size_t length,
                                               double noise_variance, Rng& rng) {
  JakesChannel gen(n_r, n_t, doppler, rng);
  std::vector<ChannelRealization> seq;
  seq.reserve(length);
  for (std::size_t i = 0; i < length; ++i) seq.push_back(gen.at(i, noise_variance));
  return seq;
}

double snr_to_noise_variance(double snr_db, int n_t, double rate, int bits_per_symbol,
                             double sigma_s2) {
  if (n_t < 1) throw ParameterError("snr: N_T must be positive");
  if (!(rate > 0.0 && rate <= 1.0)) throw ParameterError("snr: code rate must lie in (0, 1]");
  if (bits_per_symbol < 1) throw ParameterError("snr: bits per symbol must be positive");
  if (!(sigma_s2 > 0.0)) throw ParameterError("snr: symbol power must be positive");
  if (!std::isfinite(snr_db)) throw ParameterError("snr: non-finite SNR");
  return n_t * sigma_s2 / (rate * bits_per_symbol * std::pow(10.0, snr_db / 10.0));
}

MimoFrame random_frame(Eigen::Index n_t, std::size_t length, std::size_t training_len,
                       const Constellation& c, Rng& rng) {
  if (training_len > length) throw InputShapeError("random_frame: training longer than frame");
  MimoFrame f;
  f.training_len = training_len;
  f.bits.resize(n_t, static_cast<Eigen::Index>(length) * c.bits_per_symbol());
  std::bernoulli_distribution coin(0.5);
  for (Eigen::Index j = 0; j < f.bits.rows(); ++j)
    for (Eigen::Index k = 0; k < f.bits.cols(); ++k) f.bits(j, k) = coin(rng) ? 1 : 0;
  f.symbols = modulate(f.bits, c);
  return f;
}

}  // namespace mbdf
