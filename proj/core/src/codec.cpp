#include "mbdf/codec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mbdf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double clamp_llr(double v) { return std::clamp(v, -kLlrClamp, kLlrClamp); }

}  // namespace

Bits conv_encode(std::span<const std::uint8_t> info) {
  Bits out;
  out.reserve(ConvCode::coded_length(info.size()));
  int s = 0;
  auto push = [&](int u) {
    out.push_back(static_cast<std::uint8_t>(ConvCode::output(s, u, 0)));
    out.push_back(static_cast<std::uint8_t>(ConvCode::output(s, u, 1)));
    s = ConvCode::next_state(s, u);
  };
  for (auto b : info) push(b & 1);
  for (int t = 0; t < ConvCode::kMemory; ++t) push(0);
  return out;
}

std::vector<std::size_t> make_interleaver(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

BcjrOutput bcjr_decode(std::span<const double> llr_in) {
  constexpr int S = ConvCode::kStates;
  if (llr_in.size() % 2 != 0 || llr_in.size() < 2 * ConvCode::kMemory)
    throw InputShapeError("bcjr_decode: input length " + std::to_string(llr_in.size()) +
                          " does not fit a terminated trellis");
  const std::size_t steps = llr_in.size() / 2;
  const std::size_t info = steps - ConvCode::kMemory;

  auto gamma = [&](std::size_t t, int s, int u) {
    double g = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double l = llr_in[2 * t + k];
      g += ConvCode::output(s, u, k) ? -0.5 * l : 0.5 * l;
    }
    return g;
  };
  auto allowed = [&](std::size_t t, int u) { return t < info || u == 0; };

  std::vector<std::array<double, S>> alpha(steps + 1), beta(steps + 1);
  alpha[0].fill(kNegInf);
  alpha[0][0] = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    alpha[t + 1].fill(kNegInf);
    for (int s = 0; s < S; ++s) {
      if (alpha[t][s] == kNegInf) continue;
      for (int u = 0; u < 2; ++u) {
        if (!allowed(t, u)) continue;
        const int n = ConvCode::next_state(s, u);
        alpha[t + 1][n] = log_add(alpha[t + 1][n], alpha[t][s] + gamma(t, s, u));
      }
    }
  }
  beta[steps].fill(kNegInf);
  beta[steps][0] = 0.0;
  for (std::size_t t = steps; t-- > 0;) {
    beta[t].fill(kNegInf);
    for (int s = 0; s < S; ++s) {
      for (int u = 0; u < 2; ++u) {
        if (!allowed(t, u)) continue;
        const int n = ConvCode::next_state(s, u);
        if (beta[t + 1][n] == kNegInf) continue;
        beta[t][s] = log_add(beta[t][s], gamma(t, s, u) + beta[t + 1][n]);
      }
    }
  }

  BcjrOutput out;
  out.posterior.resize(llr_in.size());
  out.extrinsic.resize(llr_in.size());
  out.info.resize(info);
  for (std::size_t t = 0; t < steps; ++t) {
    double c0[2] = {kNegInf, kNegInf}, c1[2] = {kNegInf, kNegInf};
    double u0 = kNegInf, u1 = kNegInf;
    for (int s = 0; s < S; ++s) {
      if (alpha[t][s] == kNegInf) continue;
      for (int u = 0; u < 2; ++u) {
        if (!allowed(t, u)) continue;
        const int n = ConvCode::next_state(s, u);
        const double m = alpha[t][s] + gamma(t, s, u) + beta[t + 1][n];
        if (m == kNegInf) continue;
        for (int k = 0; k < 2; ++k) {
          double& slot = ConvCode::output(s, u, k) ? c1[k] : c0[k];
          slot = log_add(slot, m);
        }
        (u ? u1 : u0) = log_add(u ? u1 : u0, m);
      }
    }
    for (int k = 0; k < 2; ++k) {
      const std::size_t m = 2 * t + k;
      out.posterior[m] = c0[k] - c1[k];
      out.extrinsic[m] = out.posterior[m] - llr_in[m];
    }
    if (t < info) out.info[t] = u0 - u1;
  }
  return out;
}

ScalarOutputModel estimate_output_model(std::span<const cplx> z, std::span<const cplx> ref,
                                        double sigma_s2, const ScalarOutputModel& previous,
                                        std::size_t min_samples) {
  if (z.size() != ref.size()) throw InputShapeError("estimate_output_model: length mismatch");
  if (z.size() < min_samples) return previous;
  const auto n = static_cast<double>(z.size());
  cplx acc = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) acc += std::conj(ref[k]) * z[k];
  ScalarOutputModel m;
  m.v = acc / (n * sigma_s2);
  double var = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) var += std::norm(z[k] - m.v * ref[k]);
  m.xi_var = std::max(var / n, kVarianceFloor);
  return m;
}

std::vector<double> extrinsic_llr(cplx z, const ScalarOutputModel& model,
                                  std::span<const double> priors, const Constellation& c,
                                  DemapMode mode) {
  const int C = c.bits_per_symbol();
  if (static_cast<int>(priors.size()) != C)
    throw InputShapeError("extrinsic_llr: expected " + std::to_string(C) + " priors");
  if (!(model.xi_var > 0.0)) throw ParameterError("extrinsic_llr: model variance must be positive");
  const bool use_priors = mode != DemapMode::literal;
  const double scale = 1.0 / (2.0 * model.xi_var);

  std::vector<double> metric(c.size());
  for (std::size_t a = 0; a < c.size(); ++a) {
    double m = -std::norm(z - model.v * c.point(a)) * scale;
    if (use_priors)
      for (int b = 0; b < C; ++b) m += c.bit(a, b) ? -0.5 * priors[b] : 0.5 * priors[b];
    metric[a] = m;
  }
  std::vector<double> out(C);
  for (int b = 0; b < C; ++b) {
    double num = kNegInf, den = kNegInf;
    for (std::size_t a = 0; a < c.size(); ++a) {
      double m = metric[a];
      // Remove the bit's own prior so only extrinsic information remains.
      if (use_priors) m -= c.bit(a, b) ? -0.5 * priors[b] : 0.5 * priors[b];
      double& slot = c.bit(a, b) ? den : num;
      slot = mode == DemapMode::maxlog ? std::max(slot, m) : log_add(slot, m);
    }
    out[b] = clamp_llr(num - den);
  }
  return out;
}

Selected select_llr(std::span<const double> per_branch, SelectMode mode) {
  if (per_branch.empty()) throw InputShapeError("select_llr: empty branch list");
  Selected s{per_branch[0], 0};
  for (std::size_t l = 1; l < per_branch.size(); ++l) {
    const double v = per_branch[l];
    const bool better = mode == SelectMode::magnitude ? std::abs(v) > std::abs(s.value) : v > s.value;
    if (better) s = {v, static_cast<int>(l)};
  }
  return s;
}

cplx soft_symbol_estimate(std::span<const double> priors, const Constellation& c) {
  const int C = c.bits_per_symbol();
  if (static_cast<int>(priors.size()) != C)
    throw InputShapeError("soft_symbol_estimate: expected " + std::to_string(C) + " priors");
  // P(bit = 0) = 1 / (1 + exp(-L)), computed without overflow.
  std::vector<double> p0(C);
  for (int b = 0; b < C; ++b) {
    const double l = priors[b];
    p0[b] = l >= 0 ? 1.0 / (1.0 + std::exp(-l)) : std::exp(l) / (1.0 + std::exp(l));
  }
  cplx mean = 0.0;
  for (std::size_t a = 0; a < c.size(); ++a) {
    double p = 1.0;
    for (int b = 0; b < C; ++b) p *= c.bit(a, b) ? 1.0 - p0[b] : p0[b];
    mean += p * c.point(a);
  }
  return mean;
}

}  // namespace mbdf
