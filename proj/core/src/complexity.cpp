#include "mbdf/complexity.hpp"

#include <cmath>
#include <numbers>

#include "mbdf/adaptive.hpp"

namespace mbdf {

namespace {

void check_sizes(int n_t, int n_r, int l) {
  if (n_t < 1 || n_r < 1) throw ParameterError("complexity: dimensions must be positive");
  if (l < 1) throw ParameterError("complexity: L must be at least 1");
}

// Expected lattice points visited at level k.
double lattice_points(int k) { return static_cast<double>(k); }

double ball_sum(int n_t, double radius, int shift) {
  double s = 0.0;
  for (int k = 1; k <= n_t; ++k) {
    const double kk = k;
    s += lattice_points(k + shift) * std::pow(std::numbers::pi, kk / 2.0) /
         std::tgamma(kk / 2.0 + 1.0) * std::pow(radius, kk);
  }
  return s;
}

}  // namespace

std::int64_t mbdf_rls_additions(int n_t, int n_r, int l) {
  check_sizes(n_t, n_r, l);
  const std::int64_t t = n_t, r = n_r;
  return 2 * r * r + r * t - 1 + l * (3 * r * t * t + 2 * t * t - 3 * r * t + r - t);
}

std::int64_t mbdf_rls_multiplications(int n_t, int n_r, int l) {
  check_sizes(n_t, n_r, l);
  const std::int64_t t = n_t, r = n_r;
  return 3 * r * r + 2 * r * t + 3 * r + 1 + l * (5 * r * t * t + 2 * r);
}

double sic_rls_additions(int n_r) {
  check_sizes(1, n_r, 1);
  const double r = n_r;
  return 2.0 / 3.0 * r * r * r + 11.0 / 2.0 * r * r + 4.0 * r;
}

double sic_rls_multiplications(int n_r) {
  check_sizes(1, n_r, 1);
  const double r = n_r;
  return 2.0 / 3.0 * r * r * r + 25.0 / 2.0 * r * r + 3.0 * r;
}

std::int64_t linear_rls_additions(int n_t, int n_r) {
  check_sizes(n_t, n_r, 1);
  const std::int64_t t = n_t, r = n_r;
  return t * (3 * r * r + 2 * r - 1) + 2 * r * t;
}

std::int64_t linear_rls_multiplications(int n_t, int n_r) {
  check_sizes(n_t, n_r, 1);
  const std::int64_t t = n_t, r = n_r;
  return t * (3 * r * r + 4 * r + 1);
}

std::int64_t rls_channel_additions(int n_t, int n_r) {
  check_sizes(n_t, n_r, 1);
  const std::int64_t t = n_t, r = n_r;
  return r * t * t + 4 * t * t - t;
}

std::int64_t rls_channel_multiplications(int n_t, int n_r) {
  check_sizes(n_t, n_r, 1);
  const std::int64_t t = n_t, r = n_r;
  return r * t * t + 4 * t * t + 2 * t * r + 2 * t + 2;
}

double sd_additions(int n_t, double radius) {
  check_sizes(n_t, 1, 1);
  const double t = n_t;
  return ball_sum(n_t, radius, 1) + 2.0 * t * t - t + 2.0;
}

double sd_multiplications(int n_t, double radius) {
  check_sizes(n_t, 1, 1);
  const double t = n_t;
  return ball_sum(n_t, radius, 0) + 2.0 * t * t;
}

std::vector<ComplexityRow> complexity_table(int n_t, int n_r, int l, double sd_radius) {
  check_sizes(n_t, n_r, l);
  if (!(sd_radius > 0.0)) throw ParameterError("complexity: sphere radius must be positive");
  return {
      {"MB-MMSE-DF+RLS", static_cast<double>(mbdf_rls_additions(n_t, n_r, l)),
       static_cast<double>(mbdf_rls_multiplications(n_t, n_r, l)), false},
      {"SIC+RLS", sic_rls_additions(n_r), sic_rls_multiplications(n_r), false},
      {"Linear+RLS", static_cast<double>(linear_rls_additions(n_t, n_r)),
       static_cast<double>(linear_rls_multiplications(n_t, n_r)), false},
      {"RLS channel estimation", static_cast<double>(rls_channel_additions(n_t, n_r)),
       static_cast<double>(rls_channel_multiplications(n_t, n_r)), false},
      {"SD", sd_additions(n_t, sd_radius), sd_multiplications(n_t, sd_radius), true},
  };
}

double MeasuredOps::mults_per_vector() const {
  return vectors ? static_cast<double>(detection.mults) / static_cast<double>(vectors) : 0.0;
}

double MeasuredOps::adds_per_vector() const {
  return vectors ? static_cast<double>(detection.adds) / static_cast<double>(vectors) : 0.0;
}

MeasuredOps measured_ops(const DetectorConfig& detector, int n_t, int n_r, std::size_t vectors,
                         std::uint64_t seed, double snr_db) {
  check_sizes(n_t, n_r, detector.branches);
  MeasuredOps out;
  if (vectors == 0) return out;
  Rng rng(seed);
  const Constellation c = Constellation::qpsk();
  const double nv = snr_to_noise_variance(snr_db, n_t, 1.0, c.bits_per_symbol());
  const ChannelRealization h = random_channel(n_r, n_t, nv, rng);
  AdaptiveConfig cfg;
  cfg.detector = detector;
  // Fixed orderings keep reordering cost out of the per-vector tally.
  cfg.detector.ordering = OrderingMode::fixed;
  cfg.reorder_interval = vectors + 1;
  AdaptiveReceiver rx(cfg, c, n_r, n_t, nv);
  const MimoFrame frame = random_frame(n_t, vectors, 0, c, rng);
  for (std::size_t i = 0; i < vectors; ++i) {
    const CVector s = frame.symbols.col(static_cast<Eigen::Index>(i));
    const CVector r = transmit(h, s, rng);
    rx.step(r, &s, &out.detection, &out.channel);
  }
  out.vectors = vectors;
  return out;
}

}  // namespace mbdf
