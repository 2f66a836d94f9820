#include "mbdf/codec.hpp"

#include <algorithm>

namespace mbdf {

CodedPacket make_coded_packet(Eigen::Index n_t, std::size_t symbols_per_stream,
                              const Constellation& c, Rng& rng) {
  const std::size_t C = static_cast<std::size_t>(c.bits_per_symbol());
  const std::size_t coded = symbols_per_stream * C;
  if (coded % 2 != 0 || coded / 2 <= ConvCode::kMemory)
    throw ConfigError("coded packet: " + std::to_string(symbols_per_stream) +
                      " symbols cannot carry a terminated rate-1/2 codeword");
  const std::size_t k = coded / 2 - ConvCode::kMemory;

  CodedPacket pkt;
  pkt.info.resize(n_t, static_cast<Eigen::Index>(k));
  pkt.coded.resize(n_t, static_cast<Eigen::Index>(coded));
  std::bernoulli_distribution coin(0.5);
  for (Eigen::Index j = 0; j < n_t; ++j) {
    Bits info(k);
    for (auto& b : info) b = coin(rng) ? 1 : 0;
    const Bits cw = conv_encode(info);
    pkt.interleavers.push_back(make_interleaver(coded, rng));
    const Bits tx = interleave<std::uint8_t>(cw, pkt.interleavers.back());
    for (std::size_t m = 0; m < k; ++m) pkt.info(j, static_cast<Eigen::Index>(m)) = info[m];
    for (std::size_t m = 0; m < coded; ++m) pkt.coded(j, static_cast<Eigen::Index>(m)) = tx[m];
  }
  pkt.symbols = modulate(pkt.coded, c);
  return pkt;
}

TurboResult turbo_receive(const CMatrix& r, const CMatrix& h, double noise_variance,
                          const CodedPacket& packet, const DetectorConfig& detector,
                          const Constellation& c, const TurboConfig& cfg, OpCounter* ops) {
  if (cfg.iterations < 1) throw ConfigError("turbo: at least one iteration required");
  if (detector.kind == DetectorKind::ml) throw ConfigError("turbo: ml has no soft branch outputs");
  const Eigen::Index n_t = h.cols(), q_len = r.cols();
  const int C = c.bits_per_symbol();
  if (packet.coded.rows() != n_t || packet.coded.cols() != q_len * C)
    throw InputShapeError("turbo: packet does not match the received block");
  const double sigma_s2 = c.average_energy();

  Receiver rx(detector, c);
  rx.prepare(h, noise_variance, ops);
  const int n_l = static_cast<int>(rx.specs().size());

  // Iteration-1 soft outputs, one N_T x Q matrix per branch.
  std::vector<CMatrix> z(n_l, CMatrix(n_t, q_len));
  for (Eigen::Index q = 0; q < q_len; ++q) {
    const DetectionResult det = rx.detect(r.col(q), ops);
    for (int l = 0; l < n_l; ++l) z[l].col(q) = det.soft.col(l);
  }

  const std::vector<BranchSpec> soft_specs{
      make_pic_branch(identity_ordering(static_cast<int>(n_t)), 0, cfg.soft_beta)};
  // Soft stage filters at the fixed point of the alternation.
  const FilterBank soft_bank =
      design_closed_form(perfect_feedback_stats(h, sigma_s2, noise_variance), soft_specs);

  RMatrix priors = RMatrix::Zero(n_t, q_len * C);
  BitMatrix coded_hat(n_t, q_len * C);
  std::vector<ScalarOutputModel> models(static_cast<std::size_t>(n_t * n_l));

  TurboResult out;
  for (int it = 1; it <= cfg.iterations; ++it) {
    int branches = n_l;
    CMatrix ref(n_t, q_len);
    if (it > 1) {
      branches = 1;
      z.assign(1, CMatrix(n_t, q_len));
      CVector sbar(n_t);
      for (Eigen::Index q = 0; q < q_len; ++q) {
        for (Eigen::Index j = 0; j < n_t; ++j) {
          const RVector p = priors.row(j).segment(q * C, C).transpose();
          sbar(j) = soft_symbol_estimate(std::span<const double>(p.data(), C), c);
        }
        for (Eigen::Index j = 0; j < n_t; ++j)
          z[0](j, q) = soft_bank.w(j, 0).dot(r.col(q)) - soft_bank.f(j, 0).dot(sbar);
        ops::mul(ops, static_cast<std::uint64_t>(n_t * (h.rows() + n_t)));
      }
      ref = modulate(coded_hat, c);
    }

    RMatrix lambda1(n_t, q_len * C);
    std::vector<double> per_branch(static_cast<std::size_t>(branches));
    std::vector<std::vector<double>> llrs(static_cast<std::size_t>(branches));
    for (Eigen::Index j = 0; j < n_t; ++j) {
      for (int l = 0; l < branches; ++l) {
        std::vector<cplx> zs(static_cast<std::size_t>(q_len));
        std::vector<cplx> rs(zs.size());
        for (Eigen::Index q = 0; q < q_len; ++q) {
          zs[q] = z[l](j, q);
          rs[q] = it == 1 ? c.slice(zs[q]) : ref(j, q);
        }
        auto& model = models[static_cast<std::size_t>(j * n_l + l)];
        model = estimate_output_model(zs, rs, sigma_s2, model, cfg.min_samples);
      }
      for (Eigen::Index q = 0; q < q_len; ++q) {
        const RVector p = priors.row(j).segment(q * C, C).transpose();
        const std::span<const double> ps(p.data(), C);
        for (int l = 0; l < branches; ++l)
          llrs[l] = extrinsic_llr(z[l](j, q), models[static_cast<std::size_t>(j * n_l + l)], ps, c,
                                  cfg.demap);
        for (int b = 0; b < C; ++b) {
          for (int l = 0; l < branches; ++l) per_branch[l] = llrs[l][b];
          lambda1(j, q * C + b) = select_llr(per_branch, cfg.select).value;
        }
      }
    }

    BitMatrix decoded(n_t, packet.info.cols());
    std::uint64_t errors = 0;
    for (Eigen::Index j = 0; j < n_t; ++j) {
      const auto& perm = packet.interleavers[j];
      std::vector<double> tx(static_cast<std::size_t>(q_len * C));
      for (std::size_t m = 0; m < tx.size(); ++m) tx[m] = lambda1(j, static_cast<Eigen::Index>(m));
      const auto code_order = deinterleave<double>(tx, perm);
      const BcjrOutput dec = bcjr_decode(code_order);
      for (Eigen::Index m = 0; m < decoded.cols(); ++m) {
        decoded(j, m) = dec.info[m] < 0 ? 1 : 0;
        if (decoded(j, m) != packet.info(j, m)) ++errors;
      }
      std::vector<double> ext(dec.extrinsic.size());
      Bits hard(dec.posterior.size());
      for (std::size_t m = 0; m < ext.size(); ++m) {
        ext[m] = std::clamp(dec.extrinsic[m], -kLlrClamp, kLlrClamp);
        hard[m] = dec.posterior[m] < 0 ? 1 : 0;
      }
      const auto ext_tx = interleave<double>(ext, perm);
      const auto hard_tx = interleave<std::uint8_t>(hard, perm);
      for (std::size_t m = 0; m < ext_tx.size(); ++m) {
        priors(j, static_cast<Eigen::Index>(m)) = ext_tx[m];
        coded_hat(j, static_cast<Eigen::Index>(m)) = hard_tx[m];
      }
    }
    out.decoded.push_back(std::move(decoded));
    out.bit_errors.push_back(errors);
  }
  return out;
}

}  // namespace mbdf
