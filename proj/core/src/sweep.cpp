#include "mbdf/sweep.hpp"

#include <atomic>
#include <mutex>
#include <cmath>
#include <thread>

#include "mbdf/sim_config.hpp"

namespace mbdf {

Interval ber_interval(std::span<const std::uint64_t> packet_errors,
                      std::span<const std::uint64_t> packet_bits) {
  if (packet_errors.size() != packet_bits.size())
    throw InputShapeError("ber_interval: per-packet vectors differ in length");
  double e = 0.0, b = 0.0;
  for (std::size_t k = 0; k < packet_errors.size(); ++k) {
    e += static_cast<double>(packet_errors[k]);
    b += static_cast<double>(packet_bits[k]);
  }
  if (b == 0.0) return {0.0, 1.0};
  if (e == 0.0) return {0.0, std::min(1.0, 3.0 / b)};
  const double p = e / b;
  const double bernoulli = p * (1.0 - p) / b;
  double cluster = 0.0;
  const auto n = static_cast<double>(packet_errors.size());
  if (n > 1) {
    double ss = 0.0;
    for (std::size_t k = 0; k < packet_errors.size(); ++k) {
      const double d = static_cast<double>(packet_errors[k]) - p * static_cast<double>(packet_bits[k]);
      ss += d * d;
    }
    cluster = n / (n - 1.0) * ss / (b * b);
  }
  const double half = 1.959963984540054 * std::sqrt(std::max(bernoulli, cluster));
  return {std::max(0.0, p - half), std::min(1.0, p + half)};
}

std::uint64_t point_seed(std::uint64_t master, std::size_t index) {
  // splitmix64 finaliser over master and index.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double noise_for(const SimConfig& cfg, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  const Constellation c = Constellation::from_name(cfg.constellation);
  return snr_to_noise_variance(snr_db, cfg.n_t, cfg.coded ? 0.5 : 1.0, c.bits_per_symbol(),
                               c.average_energy());
}

void SimConfig::validate() const {
  if (n_t < 1) throw ConfigError("config: n_t must be at least 1");
  if (n_r < n_t) throw ConfigError("config: n_r must be at least n_t");
  if (snr_db.empty()) throw ConfigError("config: empty SNR grid");
  for (double s : snr_db)
    if (std::isnan(s) || (std::isinf(s) && s < 0)) throw ConfigError("config: invalid SNR value");
  if (stop.min_bit_errors < 1 || stop.max_bits < 1) throw ConfigError("config: stop rule must be positive");
  if (packet_len < 1) throw ConfigError("config: packet length must be positive");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("config: lambda must lie in (0, 1]");
  if (!(doppler >= 0.0 && doppler < 0.5)) throw ConfigError("config: doppler must lie in [0, 0.5)");
  Constellation c = [&] {
    try {
      return Constellation::from_name(constellation);
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  }();
  detector.validate();
  if (detector.kind == DetectorKind::ml && c.bits_per_symbol() * n_t > kMlMaxBits)
    throw ConfigError("config: ml search space of " + std::to_string(c.bits_per_symbol() * n_t) +
                      " bits exceeds the limit of " + std::to_string(kMlMaxBits));
  if (detector.kind == DetectorKind::mbdf) {
    if (detector.ordering == OrderingMode::optimal && n_t > kOptimalOrderingMaxStreams)
      throw ConfigError("config: optimal ordering needs n_t <= " +
                        std::to_string(kOptimalOrderingMaxStreams));
    long f = 1;
    for (int k = 2; k <= n_t && f <= detector.branches; ++k) f *= k;
    if (detector.branches > f)
      throw ConfigError("config: L exceeds the number of distinct orderings");
  }
  if (coded) {
    if (iterations < 1) throw ConfigError("config: iterations must be at least 1");
    if (detector.kind == DetectorKind::ml) throw ConfigError("config: coded mode needs a branch detector");
    if (channel != ChannelMode::block_fading)
      throw ConfigError("config: coded mode runs on block-fading channels only");
    const std::size_t bits = packet_len * static_cast<std::size_t>(c.bits_per_symbol());
    if (bits % 2 != 0 || bits / 2 <= static_cast<std::size_t>(ConvCode::kMemory))
      throw ConfigError("config: packet cannot carry a terminated codeword");
  } else {
    if (training_len >= packet_len) throw ConfigError("config: training must be shorter than the packet");
  }
  if (channel == ChannelMode::time_varying && detector.kind == DetectorKind::ml)
    throw ConfigError("config: ml has no adaptive form for time-varying channels");
}

namespace {

std::uint64_t count_bit_errors(const CVector& decided, const BitMatrix& bits, Eigen::Index col,
                               const Constellation& c) {
  const int C = c.bits_per_symbol();
  std::uint64_t e = 0;
  for (Eigen::Index j = 0; j < decided.size(); ++j) {
    const std::size_t label = c.nearest(decided(j));
    for (int b = 0; b < C; ++b)
      if (c.bit(label, b) != bits(j, col * C + b)) ++e;
  }
  return e;
}

}  // namespace

BerPoint run_ber_point(const SimConfig& cfg, std::size_t index) {
  cfg.validate();
  if (index >= cfg.snr_db.size()) throw ConfigError("run_ber_point: SNR index out of range");
  const Constellation c = Constellation::from_name(cfg.constellation);
  const int C = c.bits_per_symbol();
  BerPoint pt;
  pt.snr_db = cfg.snr_db[index];
  pt.noise_variance = noise_for(cfg, pt.snr_db);
  Rng rng(point_seed(cfg.seed, index));

  std::vector<std::uint64_t> pkt_err, pkt_bits;
  Receiver rx(cfg.detector, c);
  TurboConfig tcfg;
  tcfg.iterations = cfg.iterations;
  if (cfg.coded) pt.iteration_errors.assign(static_cast<std::size_t>(cfg.iterations), 0);

  while (pt.bit_errors < cfg.stop.min_bit_errors && pt.bits < cfg.stop.max_bits) {
    std::uint64_t errors = 0, bits = 0;
    if (cfg.coded) {
      const ChannelRealization h = random_channel(cfg.n_r, cfg.n_t, pt.noise_variance, rng);
      const CodedPacket pkt = make_coded_packet(cfg.n_t, cfg.packet_len, c, rng);
      CMatrix r(cfg.n_r, pkt.symbols.cols());
      for (Eigen::Index q = 0; q < r.cols(); ++q) r.col(q) = transmit(h, pkt.symbols.col(q), rng);
      const TurboResult res = turbo_receive(r, h.gains, pt.noise_variance, pkt, cfg.detector, c,
                                            tcfg, &pt.ops);
      for (std::size_t it = 0; it < res.bit_errors.size(); ++it)
        pt.iteration_errors[it] += res.bit_errors[it];
      errors = res.bit_errors.back();
      bits = static_cast<std::uint64_t>(pkt.info.size());
      pt.vectors += static_cast<std::uint64_t>(r.cols());
    } else if (cfg.channel == ChannelMode::block_fading) {
      const ChannelRealization h = random_channel(cfg.n_r, cfg.n_t, pt.noise_variance, rng);
      const MimoFrame frame = random_frame(cfg.n_t, cfg.packet_len, cfg.training_len, c, rng);
      rx.prepare(h.gains, pt.noise_variance, &pt.ops);
      for (auto q = static_cast<Eigen::Index>(cfg.training_len); q < frame.symbols.cols(); ++q) {
        const CVector r = transmit(h, frame.symbols.col(q), rng);
        const DetectionResult det = rx.detect(r, &pt.ops);
        errors += count_bit_errors(det.symbols, frame.bits, q, c);
        bits += static_cast<std::uint64_t>(cfg.n_t * C);
        ++pt.vectors;
      }
    } else {
      JakesChannel gen(cfg.n_r, cfg.n_t, cfg.doppler, rng);
      const MimoFrame frame = random_frame(cfg.n_t, cfg.packet_len, cfg.training_len, c, rng);
      AdaptiveConfig acfg;
      acfg.detector = cfg.detector;
      acfg.lambda = cfg.lambda;
      acfg.training_len = cfg.training_len;
      AdaptiveReceiver arx(acfg, c, cfg.n_r, cfg.n_t, pt.noise_variance);
      for (Eigen::Index q = 0; q < frame.symbols.cols(); ++q) {
        const ChannelRealization h = gen.at(static_cast<std::size_t>(q), pt.noise_variance);
        const CVector s = frame.symbols.col(q);
        const CVector r = transmit(h, s, rng);
        const bool training = q < static_cast<Eigen::Index>(cfg.training_len);
        const CVector d = arx.step(r, training ? &s : nullptr, &pt.ops);
        if (training) continue;
        errors += count_bit_errors(d, frame.bits, q, c);
        bits += static_cast<std::uint64_t>(cfg.n_t * C);
        ++pt.vectors;
      }
    }
    pt.bit_errors += errors;
    pt.bits += bits;
    pt.frame_errors += errors > 0 ? 1 : 0;
    ++pt.packets;
    pkt_err.push_back(errors);
    pkt_bits.push_back(bits);
  }
  pt.ber = pt.bits ? static_cast<double>(pt.bit_errors) / static_cast<double>(pt.bits) : 0.0;
  const Interval ci = ber_interval(pkt_err, pkt_bits);
  pt.ci_low = ci.low;
  pt.ci_high = ci.high;
  return pt;
}

BerReport run_ber_sweep(const SimConfig& cfg) {
  cfg.validate();
  BerReport rep;
  rep.config = cfg;
  rep.config_hash = config_hash(cfg);
  rep.points.resize(cfg.snr_db.size());
  unsigned workers = cfg.threads ? cfg.threads : std::max(1U, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cfg.snr_db.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t k; (k = next++) < cfg.snr_db.size();) {
      try {
        rep.points[k] = run_ber_point(cfg, k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rep;
}

double diversity_slope(std::span<const double> snr_db, std::span<const double> ber) {
  if (snr_db.size() != ber.size()) throw InputShapeError("diversity_slope: length mismatch");
  std::vector<double> x, y;
  for (std::size_t k = 0; k < ber.size(); ++k) {
    if (ber[k] > 0.0 && ber[k] < 1e-2 && std::isfinite(snr_db[k])) {
      x.push_back(snr_db[k] / 10.0);
      y.push_back(std::log10(ber[k]));
    }
  }
  if (x.size() < 3)
    throw ParameterError("diversity_slope: need at least 3 points with 0 < BER < 1e-2, have " +
                         std::to_string(x.size()));
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  if (sxx == 0.0) throw ParameterError("diversity_slope: SNR points are not distinct");
  return -sxy / sxx;
}

double diversity_slope(const BerReport& report, double snr_lo, double snr_hi) {
  std::vector<double> s, b;
  for (const auto& p : report.points) {
    if (p.snr_db < snr_lo || p.snr_db > snr_hi) continue;
    s.push_back(p.snr_db);
    b.push_back(p.ber);
  }
  return diversity_slope(s, b);
}

double snr_at_ber(std::span<const double> snr_db, std::span<const double> ber, double target) {
  if (snr_db.size() != ber.size()) throw InputShapeError("snr_at_ber: length mismatch");
  if (!(target > 0.0)) throw ParameterError("snr_at_ber: target must be positive");
  const double lt = std::log10(target);
  for (std::size_t k = 0; k + 1 < ber.size(); ++k) {
    if (!(ber[k] > 0.0) || !(ber[k + 1] > 0.0)) continue;
    const double a = std::log10(ber[k]), b = std::log10(ber[k + 1]);
    if ((a - lt) * (b - lt) <= 0.0 && a != b)
      return snr_db[k] + (lt - a) / (b - a) * (snr_db[k + 1] - snr_db[k]);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace mbdf
