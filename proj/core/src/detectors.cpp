#include "mbdf/detectors.hpp"

#include <algorithm>
#include <numeric>

namespace mbdf {

std::string to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::ml: return "ml";
    case DetectorKind::linear: return "linear";
    case DetectorKind::sic: return "sic";
    case DetectorKind::df: return "df";
    case DetectorKind::mbdf: return "mbdf";
  }
  return "unknown";
}

std::string to_string(OrderingMode m) {
  switch (m) {
    case OrderingMode::optimal: return "optimal";
    case OrderingMode::suboptimal: return "suboptimal";
    case OrderingMode::fixed: return "fixed";
  }
  return "unknown";
}

DetectorKind detector_kind_from_string(std::string_view s) {
  if (s == "ml") return DetectorKind::ml;
  if (s == "linear" || s == "mmse") return DetectorKind::linear;
  if (s == "sic") return DetectorKind::sic;
  if (s == "df") return DetectorKind::df;
  if (s == "mbdf" || s == "mb-mmse-df") return DetectorKind::mbdf;
  throw ConfigError("unknown detector '" + std::string(s) + "'");
}

OrderingMode ordering_mode_from_string(std::string_view s) {
  if (s == "optimal") return OrderingMode::optimal;
  if (s == "suboptimal") return OrderingMode::suboptimal;
  if (s == "fixed") return OrderingMode::fixed;
  throw ConfigError("unknown ordering '" + std::string(s) + "'");
}

void DetectorConfig::validate() const {
  if (branches < 1) throw ConfigError("detector: L must be at least 1");
  if (stages < 1) throw ConfigError("detector: M must be at least 1");
  if (kind != DetectorKind::mbdf && branches != 1)
    throw ConfigError("detector: only mbdf supports more than one branch");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("detector: beta outside [0, 1]");
  if (design_iterations < 1) throw ConfigError("detector: design iterations must be positive");
}

DetectionResult detect_ml(const CVector& r, const CMatrix& h, const Constellation& c,
                          OpCounter* ops) {
  const Eigen::Index n_t = h.cols(), n_r = h.rows();
  if (r.size() != n_r) throw InputShapeError("detect_ml: received vector does not match H");
  if (static_cast<long>(c.bits_per_symbol()) * n_t > kMlMaxBits)
    throw SearchSpaceError("detect_ml: " + std::to_string(c.bits_per_symbol() * n_t) +
                           " bits per vector exceeds the exhaustive-search limit of " +
                           std::to_string(kMlMaxBits));
  const auto m = static_cast<Eigen::Index>(c.size());
  // Column contributions H(:, t) * a_k.
  std::vector<CMatrix> contrib(static_cast<std::size_t>(n_t));
  for (Eigen::Index t = 0; t < n_t; ++t) {
    contrib[t].resize(n_r, m);
    for (Eigen::Index k = 0; k < m; ++k) contrib[t].col(k) = h.col(t) * c.point(k);
  }
  ops::mul(ops, static_cast<std::uint64_t>(n_t * n_r * m));

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_t), 0), best(idx);
  double best_d = std::numeric_limits<double>::infinity();
  std::uint64_t count = 0;
  while (true) {
    CVector e = r;
    for (Eigen::Index t = 0; t < n_t; ++t) e -= contrib[t].col(idx[t]);
    const double d = e.squaredNorm();
    ++count;
    if (d < best_d) {
      best_d = d;
      best = idx;
    }
    Eigen::Index t = 0;
    while (t < n_t && ++idx[t] == m) idx[t++] = 0;
    if (t == n_t) break;
  }
  ops::add(ops, count * static_cast<std::uint64_t>(n_r * (n_t + 1)));
  ops::mul(ops, count * static_cast<std::uint64_t>(n_r));

  DetectionResult res;
  res.symbols.resize(n_t);
  for (Eigen::Index t = 0; t < n_t; ++t) res.symbols(t) = c.point(best[t]);
  res.chosen_branch.assign(n_t, 0);
  res.soft = res.symbols;
  res.metric = RMatrix::Constant(n_t, 1, best_d);
  return res;
}

namespace {

void check_bank(const CVector& r, const FilterBank& bank, std::span<const BranchSpec> specs) {
  if (specs.empty()) throw ConfigError("detector: no branch specs");
  if (bank.branches() != static_cast<int>(specs.size()))
    throw ConfigError("detector: filter bank has " + std::to_string(bank.branches()) +
                      " branches, specs have " + std::to_string(specs.size()));
  for (const auto& s : specs)
    if (s.n_t() != bank.n_t()) throw ConfigError("detector: spec/bank N_T mismatch");
  if (r.size() != bank.n_r()) throw InputShapeError("detector: received vector has wrong size");
}

double energy_term(const SelectionOptions& opts, cplx decision) {
  return opts.energy == SymbolEnergy::nominal ? opts.sigma_s2 : std::norm(decision);
}

// Runs every branch from the given starting decisions and selects per stream.
DetectionResult run_branches(const CVector& r, const FilterBank& bank,
                             std::span<const BranchSpec> specs, const Constellation& c,
                             const SelectionOptions& opts, const CVector* start, bool reverse,
                             OpCounter* ops) {
  const Eigen::Index n_t = bank.n_t(), n_r = bank.n_r();
  const int n_l = static_cast<int>(specs.size());
  DetectionResult res;
  res.soft.resize(n_t, n_l);
  res.metric.resize(n_t, n_l);
  CVector wr(n_t), s(n_t);
  for (int l = 0; l < n_l; ++l) {
    for (Eigen::Index j = 0; j < n_t; ++j) wr(j) = bank.w(j, l).dot(r);
    ops::mul(ops, static_cast<std::uint64_t>(n_t * n_r));
    ops::add(ops, static_cast<std::uint64_t>(n_t * (n_r - 1)));
    if (start) {
      s = *start;
    } else {
      for (Eigen::Index j = 0; j < n_t; ++j) s(j) = c.slice(wr(j));
    }
    const auto& order = specs[l].ordering;
    for (int p = 0; p < n_t; ++p) {
      const int j = reverse ? order[n_t - 1 - p] : order[p];
      const cplx fs = bank.f(j, l).dot(s);
      const cplx z = wr(j) - fs;
      const cplx d = c.slice(z);
      s(j) = d;
      res.soft(j, l) = z;
      res.metric(j, l) = immse_from_outputs(opts.immse, energy_term(opts, d), wr(j), fs);
    }
    ops::mul(ops, static_cast<std::uint64_t>(n_t * n_t + 3 * n_t));
    ops::add(ops, static_cast<std::uint64_t>(n_t * n_t + 2 * n_t));
  }
  res.symbols.resize(n_t);
  res.chosen_branch.assign(n_t, 0);
  for (Eigen::Index j = 0; j < n_t; ++j) {
    int best = 0;
    for (int l = 1; l < n_l; ++l)
      if (res.metric(j, l) < res.metric(j, best)) best = l;
    res.chosen_branch[j] = best;
    res.symbols(j) = c.slice(res.soft(j, best));
  }
  return res;
}

}  // namespace

DetectionResult detect_mb_mmse_df(const CVector& r, const FilterBank& bank,
                                  std::span<const BranchSpec> specs, const Constellation& c,
                                  const SelectionOptions& opts, OpCounter* ops) {
  check_bank(r, bank, specs);
  return run_branches(r, bank, specs, c, opts, nullptr, false, ops);
}

DetectionResult detect_sic(const CVector& r, const FilterBank& bank, const BranchSpec& spec,
                           const Constellation& c, OpCounter* ops) {
  check_bank(r, bank, std::span<const BranchSpec>(&spec, 1));
  const Eigen::Index n_t = bank.n_t(), n_r = bank.n_r();
  DetectionResult res;
  res.symbols = CVector::Zero(n_t);
  res.soft.resize(n_t, 1);
  res.metric = RMatrix::Zero(n_t, 1);
  res.chosen_branch.assign(n_t, 0);
  for (int p = 0; p < n_t; ++p) {
    const int j = spec.ordering[p];
    const CVector& f = bank.f(j, 0);
    cplx z = bank.w(j, 0).dot(r);
    for (int q = 0; q < p; ++q) {
      const int k = spec.ordering[q];
      z -= std::conj(f(k)) * res.symbols(k);
    }
    ops::mul(ops, static_cast<std::uint64_t>(n_r + p));
    ops::add(ops, static_cast<std::uint64_t>(n_r - 1 + p));
    res.soft(j, 0) = z;
    res.symbols(j) = c.slice(z);
  }
  return res;
}

DetectionResult detect_df(const CVector& r, const FilterBank& bank, const BranchSpec& spec,
                          const Constellation& c, OpCounter* ops) {
  return detect_sic(r, bank, spec, c, ops);
}

DetectionResult detect_linear(const CVector& r, const FilterBank& bank, const Constellation& c,
                              OpCounter* ops) {
  if (bank.branches() < 1) throw ConfigError("detect_linear: empty filter bank");
  if (r.size() != bank.n_r()) throw InputShapeError("detect_linear: received vector has wrong size");
  const Eigen::Index n_t = bank.n_t();
  DetectionResult res;
  res.symbols.resize(n_t);
  res.soft.resize(n_t, 1);
  res.metric = RMatrix::Zero(n_t, 1);
  res.chosen_branch.assign(n_t, 0);
  for (Eigen::Index j = 0; j < n_t; ++j) {
    res.soft(j, 0) = bank.w(j, 0).dot(r);
    res.symbols(j) = c.slice(res.soft(j, 0));
  }
  ops::matvec(ops, n_t, bank.n_r());
  return res;
}

RMatrix reversal_matrix(int n) {
  if (n < 1) throw ParameterError("reversal_matrix: n must be positive");
  RMatrix t = RMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k) t(k, n - 1 - k) = 1.0;
  return t;
}

DetectionResult multi_stage(const CVector& r, const FilterBank& bank,
                            std::span<const BranchSpec> specs, const FilterBank& later_bank,
                            std::span<const BranchSpec> later_specs, const Constellation& c,
                            int stages, const SelectionOptions& opts, OpCounter* ops) {
  if (stages < 1) throw ConfigError("multi_stage: M must be at least 1");
  check_bank(r, bank, specs);
  DetectionResult res = run_branches(r, bank, specs, c, opts, nullptr, false, ops);
  if (stages == 1) return res;
  check_bank(r, later_bank, later_specs);
  if (later_specs.size() != specs.size())
    throw ConfigError("multi_stage: later stages need one spec per branch");
  for (int m = 2; m <= stages; ++m) {
    const CVector prev = res.symbols;
    res = run_branches(r, later_bank, later_specs, c, opts, &prev, true, ops);
  }
  return res;
}

std::vector<double> stream_mmse(const CMatrix& h, double noise_variance, double sigma_s2) {
  const Eigen::Index n_r = h.rows(), n_t = h.cols();
  const CMatrix rr = sigma_s2 * h * h.adjoint() + noise_variance * CMatrix::Identity(n_r, n_r);
  const CMatrix g = hermitian_inverse(rr) * h;
  std::vector<double> out(static_cast<std::size_t>(n_t));
  for (Eigen::Index j = 0; j < n_t; ++j)
    out[j] = sigma_s2 - sigma_s2 * sigma_s2 * h.col(j).dot(g.col(j)).real();
  return out;
}

std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> p = identity_ordering(n);
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

namespace {

long factorial(int n) {
  long f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

void check_branch_count(int n_t, int branches) {
  if (branches < 1) throw ConfigError("ordering: L must be at least 1");
  if (n_t <= 12 && branches > factorial(n_t))
    throw ConfigError("ordering: L = " + std::to_string(branches) + " exceeds N_T! = " +
                      std::to_string(factorial(n_t)) + " distinct orderings");
}

bool contains(const std::vector<std::vector<int>>& set, const std::vector<int>& o) {
  return std::find(set.begin(), set.end(), o) != set.end();
}

std::vector<int> greedy_from(std::span<const double> mmse, int start) {
  const int n = static_cast<int>(mmse.size());
  std::vector<int> order{start};
  std::vector<bool> used(n, false);
  used[start] = true;
  while (static_cast<int>(order.size()) < n) {
    int best = -1;
    double best_v = -1.0;
    for (int k = 0; k < n; ++k) {
      if (used[k]) continue;
      double v = 0.0;
      for (int q : order) v += std::abs(mmse[k] - mmse[q]);
      if (v > best_v) {
        best_v = v;
        best = k;
      }
    }
    used[best] = true;
    order.push_back(best);
  }
  return order;
}

}  // namespace

std::vector<std::vector<int>> order_suboptimal(std::span<const double> mmse, int branches) {
  const int n = static_cast<int>(mmse.size());
  if (n < 1) throw ParameterError("order_suboptimal: no streams");
  check_branch_count(n, branches);
  std::vector<int> inc = identity_ordering(n);
  std::stable_sort(inc.begin(), inc.end(), [&](int a, int b) { return mmse[a] < mmse[b]; });
  std::vector<int> dec = identity_ordering(n);
  std::stable_sort(dec.begin(), dec.end(), [&](int a, int b) { return mmse[a] > mmse[b]; });

  std::vector<std::vector<int>> out{inc};
  for (int l = 2; l <= branches; ++l) {
    const int first = (l % 2 == 0) ? dec[(l / 2 - 1) % n] : inc[((l - 1) / 2) % n];
    std::vector<int> starts{first};
    for (int k = 0; k < n; ++k)
      if (k != first) starts.push_back(k);
    bool placed = false;
    for (int s : starts) {
      auto o = greedy_from(mmse, s);
      if (!contains(out, o)) {
        out.push_back(std::move(o));
        placed = true;
        break;
      }
    }
    if (!placed) {
      for (auto& o : all_permutations(n)) {
        if (!contains(out, o)) {
          out.push_back(std::move(o));
          break;
        }
      }
    }
  }
  return out;
}

double ordering_cost(const CMatrix& h, double noise_variance, std::span<const int> ordering,
                     double beta, SicShapeRule rule, int iterations) {
  const BranchSpec spec = make_sic_branch(ordering, 0, beta, rule);
  const FilterBank bank =
      design_perfect_feedback(h, noise_variance, std::span<const BranchSpec>(&spec, 1), 1.0,
                              iterations);
  const SecondOrderStats st = perfect_feedback_stats(h, 1.0, noise_variance);
  double cost = 0.0;
  for (Eigen::Index j = 0; j < h.cols(); ++j) cost += mse_value(bank.w(j, 0), bank.f(j, 0), st, j);
  return cost;
}

namespace {

std::vector<double> all_costs(const CMatrix& h, double noise_variance,
                              const std::vector<std::vector<int>>& perms, double beta,
                              SicShapeRule rule) {
  const std::vector<BranchSpec> specs = make_sic_branches(perms, beta, rule);
  const FilterBank bank = design_perfect_feedback(h, noise_variance, specs);
  const SecondOrderStats st = perfect_feedback_stats(h, 1.0, noise_variance);
  std::vector<double> cost(perms.size(), 0.0);
  for (std::size_t l = 0; l < perms.size(); ++l)
    for (Eigen::Index j = 0; j < h.cols(); ++j)
      cost[l] += mse_value(bank.w(j, static_cast<int>(l)), bank.f(j, static_cast<int>(l)), st, j);
  return cost;
}

}  // namespace

std::vector<std::vector<int>> order_optimal(const CMatrix& h, double noise_variance,
                                            int branches, double beta, SicShapeRule rule) {
  const int n = static_cast<int>(h.cols());
  if (n > kOptimalOrderingMaxStreams)
    throw SearchSpaceError("order_optimal: N_T = " + std::to_string(n) + " exceeds " +
                           std::to_string(kOptimalOrderingMaxStreams));
  check_branch_count(n, branches);
  const auto perms = all_permutations(n);
  const auto cost = all_costs(h, noise_variance, perms, beta, rule);
  std::vector<std::size_t> idx(perms.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return cost[a] < cost[b]; });
  std::vector<std::vector<int>> out;
  for (int l = 0; l < branches; ++l) out.push_back(perms[idx[l]]);
  return out;
}

std::vector<std::vector<int>> order_optimal_joint(const CMatrix& h, double noise_variance,
                                                  int branches, double beta, SicShapeRule rule) {
  const int n = static_cast<int>(h.cols());
  if (n > 3) throw SearchSpaceError("order_optimal_joint: joint search limited to N_T <= 3");
  check_branch_count(n, branches);
  const auto perms = all_permutations(n);
  const auto cost = all_costs(h, noise_variance, perms, beta, rule);
  const int total = static_cast<int>(perms.size());
  std::vector<int> best_set;
  double best = std::numeric_limits<double>::infinity();
  // Enumerate L-subsets by bitmask (total <= 6).
  for (int mask = 0; mask < (1 << total); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != branches) continue;
    double v = 0.0;
    std::vector<int> set;
    for (int k = 0; k < total; ++k)
      if (mask & (1 << k)) {
        v += cost[k];
        set.push_back(k);
      }
    if (v < best || (v == best && set < best_set)) {
      best = v;
      best_set = set;
    }
  }
  std::stable_sort(best_set.begin(), best_set.end(),
                   [&](int a, int b) { return cost[a] < cost[b]; });
  std::vector<std::vector<int>> out;
  for (int k : best_set) out.push_back(perms[k]);
  return out;
}

std::vector<std::vector<int>> fixed_orderings(int n_t, int branches) {
  if (n_t < 1) throw ParameterError("fixed_orderings: no streams");
  check_branch_count(n_t, branches);
  std::vector<std::vector<int>> cand;
  auto push = [&](std::vector<int> o) {
    if (!contains(cand, o)) cand.push_back(std::move(o));
  };
  for (int k = 0; k < n_t; ++k) {
    std::vector<int> o(n_t);
    for (int p = 0; p < n_t; ++p) o[p] = (p + k) % n_t;
    push(o);
  }
  for (int k = 0; k < n_t; ++k) {
    std::vector<int> o(n_t);
    for (int p = 0; p < n_t; ++p) o[p] = (n_t - 1 - p + n_t - k) % n_t;
    push(o);
  }
  std::vector<std::vector<int>> out;
  for (auto& o : cand) {
    if (static_cast<int>(out.size()) == branches) return out;
    out.push_back(o);
  }
  for (auto& o : all_permutations(n_t)) {
    if (static_cast<int>(out.size()) == branches) break;
    if (!contains(out, o)) out.push_back(std::move(o));
  }
  return out;
}

Receiver::Receiver(DetectorConfig cfg, Constellation c) : cfg_(cfg), c_(std::move(c)) {
  cfg_.validate();
  sel_.immse = cfg_.immse;
  sel_.energy = cfg_.energy;
  sel_.sigma_s2 = c_.average_energy();
}

void Receiver::prepare(const CMatrix& h, double noise_variance, OpCounter* ops) {
  h_ = h;
  ready_ = true;
  const int n_t = static_cast<int>(h.cols());
  specs_.clear();
  later_specs_.clear();
  switch (cfg_.kind) {
    case DetectorKind::ml:
      if (c_.bits_per_symbol() * n_t > kMlMaxBits)
        throw SearchSpaceError("ml: search space too large for N_T = " + std::to_string(n_t));
      return;
    case DetectorKind::linear:
      specs_.push_back(make_pic_branch(identity_ordering(n_t), 0, 0.0));
      break;
    case DetectorKind::sic: {
      const auto mmse = stream_mmse(h, noise_variance);
      specs_.push_back(make_sic_branch(order_suboptimal(mmse, 1)[0], 0, 1.0, cfg_.shape_rule));
      break;
    }
    case DetectorKind::df:
      specs_.push_back(make_sic_branch(identity_ordering(n_t), 0, 1.0, cfg_.shape_rule));
      break;
    case DetectorKind::mbdf: {
      std::vector<std::vector<int>> orders;
      if (cfg_.ordering == OrderingMode::optimal)
        orders = order_optimal(h, noise_variance, cfg_.branches, cfg_.beta, cfg_.shape_rule);
      else if (cfg_.ordering == OrderingMode::suboptimal)
        orders = order_suboptimal(stream_mmse(h, noise_variance), cfg_.branches);
      else
        orders = fixed_orderings(n_t, cfg_.branches);
      specs_ = make_sic_branches(orders, cfg_.beta, cfg_.shape_rule);
      if (cfg_.stages > 1) {
        for (int l = 0; l < cfg_.branches; ++l)
          later_specs_.push_back(make_pic_branch(orders[l], l, cfg_.beta));
        later_bank_ = design_perfect_feedback(h, noise_variance, later_specs_, sel_.sigma_s2,
                                              cfg_.design_iterations, ops);
      }
      break;
    }
  }
  bank_ = design_perfect_feedback(h, noise_variance, specs_, sel_.sigma_s2, cfg_.design_iterations,
                                  ops);
}

DetectionResult Receiver::detect(const CVector& r, OpCounter* ops) const {
  if (!ready_) throw ConfigError("receiver: prepare() must be called before detect()");
  switch (cfg_.kind) {
    case DetectorKind::ml: return detect_ml(r, h_, c_, ops);
    case DetectorKind::linear: return detect_linear(r, bank_, c_, ops);
    case DetectorKind::sic: return detect_sic(r, bank_, specs_[0], c_, ops);
    case DetectorKind::df: return detect_df(r, bank_, specs_[0], c_, ops);
    case DetectorKind::mbdf:
      if (cfg_.stages > 1)
        return multi_stage(r, bank_, specs_, later_bank_, later_specs_, c_, cfg_.stages, sel_, ops);
      return detect_mb_mmse_df(r, bank_, specs_, c_, sel_, ops);
  }
  throw ConfigError("receiver: unknown detector kind");
}

}  // namespace mbdf
