// mbdf_sim: BER sweeps, EXIT charts, complexity tables and ordering comparisons.

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbdf/complexity.hpp"
#include "mbdf/exit_chart.hpp"
#include "mbdf/report.hpp"
#include "mbdf/sim_config.hpp"
#include "mbdf/sweep.hpp"

namespace {

constexpr int kConfigErrorExit = 2;

const std::vector<std::pair<std::string, std::string>> kSimKeys = {
    {"n_t", "transmit antennas"},
    {"n_r", "receive antennas"},
    {"constellation", "bpsk | qpsk | qam16"},
    {"snr", "comma-separated SNR grid in dB"},
    {"detector", "ml | linear | sic | df | mbdf"},
    {"branches", "number of branches L"},
    {"stages", "number of detection stages M"},
    {"ordering", "optimal | suboptimal | fixed"},
    {"beta", "feedback scaling in [0, 1]"},
    {"shape_rule", "cancel_detected | printed"},
    {"immse", "reduced | full"},
    {"energy", "candidate | nominal"},
    {"design_iterations", "alternating design iterations"},
    {"channel", "block_fading | time_varying"},
    {"doppler", "normalised Doppler f_D T"},
    {"packet_len", "symbols per stream and packet"},
    {"training_len", "training symbols per packet"},
    {"coded", "true | false"},
    {"iterations", "turbo iterations"},
    {"lambda", "RLS forgetting factor"},
    {"seed", "master seed"},
    {"min_errors", "stop after this many bit errors"},
    {"max_bits", "stop after this many bits"},
    {"threads", "worker threads (0: all cores)"},
};

struct SimFlags {
  std::map<std::string, std::string> values;
  std::string config_file;
  std::vector<CLI::Option*> options;
};

void add_sim_flags(CLI::App* app, SimFlags& f) {
  app->add_option("--config", f.config_file, "key=value configuration file");
  for (const auto& [key, help] : kSimKeys) {
    std::string flag = "--" + key;
    for (auto& ch : flag)
      if (ch == '_') ch = '-';
    f.options.push_back(app->add_option(flag, f.values[key], help));
  }
}

mbdf::SimConfig resolve(const SimFlags& f) {
  mbdf::SimConfig cfg;
  if (!f.config_file.empty()) mbdf::apply_key_values(cfg, mbdf::load_config_file(f.config_file));
  mbdf::KeyValues kv;
  for (std::size_t k = 0; k < kSimKeys.size(); ++k)
    if (f.options[k]->count() > 0) kv[kSimKeys[k].first] = f.values.at(kSimKeys[k].first);
  mbdf::apply_key_values(cfg, kv);
  cfg.validate();
  return cfg;
}

template <class Fn>
void write_to(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw mbdf::ConfigError("cannot write '" + path + "'");
  fn(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIMO detection simulator"};
  app.require_subcommand(1);

  SimFlags ber_flags;
  std::string csv_path = "-", json_path, dat_path;
  auto* ber = app.add_subcommand("ber", "Monte Carlo BER sweep");
  add_sim_flags(ber, ber_flags);
  ber->add_option("--csv", csv_path, "CSV output file (- for stdout)");
  ber->add_option("--json", json_path, "JSON report file");
  ber->add_option("--gnuplot", dat_path, "gnuplot data file");

  mbdf::ExitConfig ecfg;
  double exit_snr = 4.0;
  int exit_points = 11;
  bool large = false;
  std::string exit_out = "-", exit_dat;
  auto* ex = app.add_subcommand("exit", "EXIT transfer curve of the soft detection stage");
  ex->add_option("--n-t", ecfg.n_t, "transmit antennas");
  ex->add_option("--n-r", ecfg.n_r, "receive antennas");
  ex->add_option("--constellation", ecfg.constellation, "bpsk | qpsk | qam16");
  ex->add_option("--snr", exit_snr, "SNR in dB");
  ex->add_option("--beta", ecfg.soft_beta, "feedback scaling of the soft stage");
  ex->add_option("--symbols", ecfg.symbols, "symbols per stream per I_A point");
  ex->add_option("--block-len", ecfg.block_len, "symbols per channel realization");
  ex->add_option("--seed", ecfg.seed, "seed");
  ex->add_option("--points", exit_points, "number of I_A grid points in [0, 1]");
  ex->add_flag("--large", large, "10 x 10 system (long runtime)");
  ex->add_option("--csv", exit_out, "CSV output file (- for stdout)");
  ex->add_option("--gnuplot", exit_dat, "gnuplot data file");

  int c_nt = 4, c_nr = 4, c_l = 2, c_vectors = 0;
  double c_radius = 1.0;
  auto* cx = app.add_subcommand("complexity", "Operation counts per received vector");
  cx->add_option("--n-t", c_nt, "transmit antennas");
  cx->add_option("--n-r", c_nr, "receive antennas");
  cx->add_option("--branches", c_l, "number of branches L");
  cx->add_option("--sd-radius", c_radius, "sphere radius for the analytic SD row");
  cx->add_option("--measure", c_vectors, "also count operations over this many vectors");

  SimFlags oc_flags;
  double target = 1e-2;
  auto* oc = app.add_subcommand("order-compare", "Suboptimal against optimal ordering");
  add_sim_flags(oc, oc_flags);
  oc->add_option("--target", target, "BER at which the horizontal gap is measured");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigErrorExit;
  }

  try {
    if (*ber) {
      const mbdf::SimConfig cfg = resolve(ber_flags);
      const mbdf::BerReport rep = mbdf::run_ber_sweep(cfg);
      write_to(csv_path, [&](std::ostream& o) { mbdf::write_csv(o, rep); });
      if (!json_path.empty()) write_to(json_path, [&](std::ostream& o) { mbdf::write_json(o, rep); });
      if (!dat_path.empty()) write_to(dat_path, [&](std::ostream& o) { mbdf::write_gnuplot(o, rep); });
    } else if (*ex) {
      if (large) ecfg.n_t = ecfg.n_r = 10;
      if (exit_points < 2) throw mbdf::ConfigError("exit: need at least two grid points");
      std::vector<double> grid;
      for (int k = 0; k < exit_points; ++k) grid.push_back(static_cast<double>(k) / (exit_points - 1));
      const auto pts = mbdf::exit_chart(ecfg, exit_snr, grid);
      write_to(exit_out, [&](std::ostream& o) { mbdf::write_exit_csv(o, pts); });
      if (!exit_dat.empty()) write_to(exit_dat, [&](std::ostream& o) { mbdf::write_exit_gnuplot(o, pts); });
    } else if (*cx) {
      if (c_nt < 1 || c_nr < c_nt || c_l < 1) throw mbdf::ConfigError("complexity: need 1 <= n_t <= n_r and L >= 1");
      std::cout << "algorithm,additions,multiplications,note\n";
      for (const auto& row : mbdf::complexity_table(c_nt, c_nr, c_l, c_radius))
        std::cout << row.algorithm << ',' << row.additions << ',' << row.multiplications << ','
                  << (row.analytic_only ? "analytic only" : "") << '\n';
      if (c_vectors > 0) {
        mbdf::DetectorConfig d;
        d.branches = c_l;
        const auto m = mbdf::measured_ops(d, c_nt, c_nr, static_cast<std::size_t>(c_vectors), 1, 10.0);
        std::cout << "MB-MMSE-DF+RLS (measured)," << m.adds_per_vector() << ','
                  << m.mults_per_vector() << ",per vector\n";
      }
    } else if (*oc) {
      mbdf::SimConfig cfg = resolve(oc_flags);
      cfg.detector.kind = mbdf::DetectorKind::mbdf;
      std::map<std::string, mbdf::BerReport> reps;
      for (auto mode : {mbdf::OrderingMode::suboptimal, mbdf::OrderingMode::optimal}) {
        cfg.detector.ordering = mode;
        cfg.validate();
        reps[mbdf::to_string(mode)] = mbdf::run_ber_sweep(cfg);
      }
      std::cout << "ordering,snr_db,bits,bit_errors,ber,ci_low,ci_high\n";
      std::map<std::string, double> crossing;
      for (const auto& [name, rep] : reps) {
        std::vector<double> s, b;
        for (const auto& p : rep.points) {
          std::cout << name << ',' << p.snr_db << ',' << p.bits << ',' << p.bit_errors << ',' << p.ber
                    << ',' << p.ci_low << ',' << p.ci_high << '\n';
          s.push_back(p.snr_db);
          b.push_back(p.ber);
        }
        crossing[name] = mbdf::snr_at_ber(s, b, target);
      }
      std::cout << "# gap_db at BER " << target << ": "
                << crossing["suboptimal"] - crossing["optimal"] << '\n';
    }
  } catch (const mbdf::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigErrorExit;
  } catch (const mbdf::SearchSpaceError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigErrorExit;
  } catch (const mbdf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
