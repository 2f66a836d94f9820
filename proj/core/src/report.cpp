#include "mbdf/report.hpp"

#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "mbdf/complexity.hpp"

namespace mbdf {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& out, const BerReport& report) {
  const auto& d = report.config.detector;
  out << "snr_db,bits,bit_errors,ber,ci_low,ci_high,detector,L,beta,seed\n";
  for (const auto& p : report.points) {
    out << num(p.snr_db) << ',' << p.bits << ',' << p.bit_errors << ',' << num(p.ber) << ','
        << num(p.ci_low) << ',' << num(p.ci_high) << ',' << to_string(d.kind) << ',' << d.branches
        << ',' << num(d.beta) << ',' << report.config.seed << '\n';
  }
}

void write_json(std::ostream& out, const BerReport& report) {
  using nlohmann::json;
  const SimConfig& cfg = report.config;
  json j;
  json c = json::object();
  for (const auto& [k, v] : to_key_values(cfg)) c[k] = v;
  j["config"] = c;
  j["config_hash"] = report.config_hash;
  j["seed"] = cfg.seed;

  json analytic = json::array();
  for (const auto& row : complexity_table(cfg.n_t, cfg.n_r, cfg.detector.branches)) {
    analytic.push_back({{"algorithm", row.algorithm},
                        {"additions", row.additions},
                        {"multiplications", row.multiplications},
                        {"analytic_only", row.analytic_only}});
  }
  j["complexity"]["analytic"] = analytic;

  OpCounter total;
  std::uint64_t vectors = 0;
  json pts = json::array();
  for (const auto& p : report.points) {
    json e{{"snr_db", p.snr_db},
           {"noise_variance", p.noise_variance},
           {"bits", p.bits},
           {"bit_errors", p.bit_errors},
           {"frame_errors", p.frame_errors},
           {"packets", p.packets},
           {"ber", p.ber},
           {"ci_low", p.ci_low},
           {"ci_high", p.ci_high},
           {"mults", p.ops.mults},
           {"adds", p.ops.adds},
           {"vectors", p.vectors}};
    if (!p.iteration_errors.empty()) e["iteration_errors"] = p.iteration_errors;
    pts.push_back(e);
    total += p.ops;
    vectors += p.vectors;
  }
  j["points"] = pts;
  const double nvec = vectors ? static_cast<double>(vectors) : 1.0;
  j["complexity"]["measured"] = {{"mults", total.mults},
                                 {"adds", total.adds},
                                 {"vectors", vectors},
                                 {"mults_per_vector", static_cast<double>(total.mults) / nvec},
                                 {"adds_per_vector", static_cast<double>(total.adds) / nvec}};
  out << j.dump(2) << '\n';
}

void write_gnuplot(std::ostream& out, const BerReport& report) {
  out << "# " << to_string(report.config.detector.kind) << " L=" << report.config.detector.branches
      << " hash=" << report.config_hash << "\n# snr_db ber ci_low ci_high\n";
  for (const auto& p : report.points)
    out << num(p.snr_db) << ' ' << num(p.ber) << ' ' << num(p.ci_low) << ' ' << num(p.ci_high) << '\n';
}

void write_exit_csv(std::ostream& out, std::span<const ExitPoint> points) {
  out << "i_a,i_e\n";
  for (const auto& p : points) out << num(p.i_a) << ',' << num(p.i_e) << '\n';
}

void write_exit_gnuplot(std::ostream& out, std::span<const ExitPoint> points) {
  out << "# i_a i_e\n";
  for (const auto& p : points) out << num(p.i_a) << ' ' << num(p.i_e) << '\n';
}

}  // namespace mbdf
