#include "mbdf/exit_chart.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mbdf/filters.hpp"

namespace mbdf {

namespace {

double log2_one_plus_exp_neg(double l) {
  const double v = l > 0 ? std::log1p(std::exp(-l)) : -l + std::log1p(std::exp(l));
  return v / std::numbers::ln2;
}

}  // namespace

double j_function(double sigma) {
  if (!(sigma >= 0.0)) throw ParameterError("j_function: sigma must be non-negative");
  if (sigma == 0.0) return 0.0;
  // E[log2(1 + e^-L)] for L ~ N(sigma^2/2, sigma^2), trapezoid over +-10 standard deviations.
  constexpr int kPoints = 4001;
  constexpr double kSpan = 10.0;
  const double h = 2.0 * kSpan / (kPoints - 1);
  double acc = 0.0;
  for (int k = 0; k < kPoints; ++k) {
    const double y = -kSpan + k * h;
    const double wgt = (k == 0 || k == kPoints - 1) ? 0.5 : 1.0;
    acc += wgt * std::exp(-0.5 * y * y) * log2_one_plus_exp_neg(sigma * sigma / 2.0 + sigma * y);
  }
  acc *= h / std::sqrt(2.0 * std::numbers::pi);
  return std::clamp(1.0 - acc, 0.0, 1.0);
}

double j_inverse(double mutual_information) {
  if (std::isnan(mutual_information)) throw ParameterError("j_inverse: NaN input");
  if (mutual_information <= 0.0) return 0.0;
  if (mutual_information >= j_function(kMaxPriorSigma)) return kMaxPriorSigma;
  double lo = 0.0, hi = kMaxPriorSigma;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (j_function(mid) < mutual_information ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double mutual_information_histogram(std::span<const std::uint8_t> bits,
                                    std::span<const double> llrs, int bins) {
  if (bits.size() != llrs.size()) throw InputShapeError("mutual information: length mismatch");
  if (bins < 2) throw ParameterError("mutual information: need at least two bins");
  if (bits.empty()) return 0.0;
  const auto [mn, mx] = std::minmax_element(llrs.begin(), llrs.end());
  const double lo = *mn, hi = *mx;
  if (hi - lo <= 0.0) return 0.0;
  std::vector<double> h0(static_cast<std::size_t>(bins), 0.0), h1(h0);
  double n0 = 0.0, n1 = 0.0;
  for (std::size_t k = 0; k < bits.size(); ++k) {
    auto b = static_cast<std::size_t>((llrs[k] - lo) / (hi - lo) * bins);
    b = std::min(b, static_cast<std::size_t>(bins - 1));
    if (bits[k]) {
      h1[b] += 1.0;
      n1 += 1.0;
    } else {
      h0[b] += 1.0;
      n0 += 1.0;
    }
  }
  if (n0 == 0.0 || n1 == 0.0) return 0.0;
  double i = 0.0;
  for (std::size_t b = 0; b < h0.size(); ++b) {
    const double p0 = h0[b] / n0, p1 = h1[b] / n1, s = p0 + p1;
    if (p0 > 0) i += 0.5 * p0 * std::log2(2.0 * p0 / s);
    if (p1 > 0) i += 0.5 * p1 * std::log2(2.0 * p1 / s);
  }
  return std::clamp(i, 0.0, 1.0);
}

std::vector<double> gaussian_priors(std::span<const std::uint8_t> bits, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw ParameterError("gaussian_priors: sigma must be non-negative");
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> out(bits.size());
  for (std::size_t k = 0; k < bits.size(); ++k) {
    const double x = bits[k] ? -1.0 : 1.0;
    out[k] = sigma * sigma / 2.0 * x + sigma * n(rng);
  }
  return out;
}

void ExitConfig::validate() const {
  if (n_t < 1 || n_r < n_t) throw ConfigError("exit: need 1 <= n_t <= n_r");
  if (block_len < kMinModelSamples) throw ConfigError("exit: block shorter than the model estimate needs");
  if (symbols < block_len) throw ConfigError("exit: fewer symbols than one block");
  if (!(soft_beta >= 0.0 && soft_beta <= 1.0)) throw ConfigError("exit: beta must lie in [0, 1]");
  try {
    Constellation::from_name(constellation);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

std::vector<ExitPoint> exit_chart(const ExitConfig& cfg, double snr_db,
                                  std::span<const double> i_a_grid) {
  cfg.validate();
  const Constellation c = Constellation::from_name(cfg.constellation);
  const int C = c.bits_per_symbol();
  const double sigma_s2 = c.average_energy();
  const double nv = std::isinf(snr_db) && snr_db > 0
                        ? 0.0
                        : snr_to_noise_variance(snr_db, cfg.n_t, 0.5, C, sigma_s2);
  const std::vector<BranchSpec> specs{make_pic_branch(identity_ordering(cfg.n_t), 0, cfg.soft_beta)};
  const std::size_t blocks = cfg.symbols / cfg.block_len;
  const auto B = static_cast<Eigen::Index>(cfg.block_len);

  std::vector<ExitPoint> out;
  for (std::size_t g = 0; g < i_a_grid.size(); ++g) {
    const double i_a = std::clamp(i_a_grid[g], 0.0, 1.0);
    const double sigma_a = j_inverse(i_a);
    std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(g)};
    Rng rng(seq);
    std::vector<std::uint8_t> all_bits;
    std::vector<double> all_llrs;
    all_bits.reserve(blocks * cfg.block_len * C * cfg.n_t);
    all_llrs.reserve(all_bits.capacity());
    for (std::size_t blk = 0; blk < blocks; ++blk) {
      const ChannelRealization h = random_channel(cfg.n_r, cfg.n_t, nv, rng);
      const MimoFrame frame = random_frame(cfg.n_t, cfg.block_len, 0, c, rng);
      RMatrix priors(cfg.n_t, B * C);
      for (Eigen::Index j = 0; j < cfg.n_t; ++j) {
        std::vector<std::uint8_t> row(static_cast<std::size_t>(B * C));
        for (Eigen::Index m = 0; m < B * C; ++m) row[m] = frame.bits(j, m);
        const auto p = gaussian_priors(row, sigma_a, rng);
        for (Eigen::Index m = 0; m < B * C; ++m) priors(j, m) = std::clamp(p[m], -kLlrClamp, kLlrClamp);
      }
      const FilterBank bank = design_closed_form(perfect_feedback_stats(h.gains, sigma_s2, nv), specs);
      CMatrix z(cfg.n_t, B);
      CVector sbar(cfg.n_t);
      for (Eigen::Index q = 0; q < B; ++q) {
        const CVector r = transmit(h, frame.symbols.col(q), rng);
        for (Eigen::Index j = 0; j < cfg.n_t; ++j) {
          const RVector p = priors.row(j).segment(q * C, C).transpose();
          sbar(j) = soft_symbol_estimate(std::span<const double>(p.data(), C), c);
        }
        for (Eigen::Index j = 0; j < cfg.n_t; ++j)
          z(j, q) = bank.w(j, 0).dot(r) - bank.f(j, 0).dot(sbar);
      }
      for (Eigen::Index j = 0; j < cfg.n_t; ++j) {
        std::vector<cplx> zs(static_cast<std::size_t>(B)), ss(zs.size());
        for (Eigen::Index q = 0; q < B; ++q) {
          zs[q] = z(j, q);
          ss[q] = frame.symbols(j, q);
        }
        const ScalarOutputModel model = estimate_output_model(zs, ss, sigma_s2);
        for (Eigen::Index q = 0; q < B; ++q) {
          const RVector p = priors.row(j).segment(q * C, C).transpose();
          const auto l = extrinsic_llr(zs[q], model, std::span<const double>(p.data(), C), c, cfg.demap);
          for (int b = 0; b < C; ++b) {
            all_bits.push_back(frame.bits(j, q * C + b));
            all_llrs.push_back(l[b]);
          }
        }
      }
    }
    out.push_back({i_a, mutual_information_histogram(all_bits, all_llrs)});
  }
  return out;
}

}  // namespace mbdf
