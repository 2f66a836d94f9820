#include "mbdf/sim_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

namespace mbdf {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
}

template <class T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + v + "'");
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(n) + ": empty key");
    kv[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

KeyValues load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_key_values(in);
}

void apply_key_values(SimConfig& cfg, const KeyValues& kv) {
  for (const auto& [k, v] : kv) {
    auto& d = cfg.detector;
    if (k == "n_t") cfg.n_t = parse_int<int>(k, v);
    else if (k == "n_r") cfg.n_r = parse_int<int>(k, v);
    else if (k == "constellation") cfg.constellation = v;
    else if (k == "snr") {
      cfg.snr_db.clear();
      std::stringstream ss(v);
      for (std::string item; std::getline(ss, item, ',');) cfg.snr_db.push_back(parse_double(k, trim(item)));
    }
    else if (k == "detector") d.kind = detector_kind_from_string(v);
    else if (k == "branches") d.branches = parse_int<int>(k, v);
    else if (k == "stages") d.stages = parse_int<int>(k, v);
    else if (k == "ordering") d.ordering = ordering_mode_from_string(v);
    else if (k == "beta") d.beta = parse_double(k, v);
    else if (k == "shape_rule") {
      if (v == "cancel_detected") d.shape_rule = SicShapeRule::cancel_detected;
      else if (v == "printed") d.shape_rule = SicShapeRule::printed;
      else throw ConfigError("config: unknown shape_rule '" + v + "'");
    }
    else if (k == "immse") {
      if (v == "reduced") d.immse = ImmseForm::reduced;
      else if (v == "full") d.immse = ImmseForm::full;
      else throw ConfigError("config: unknown immse form '" + v + "'");
    }
    else if (k == "energy") {
      if (v == "candidate") d.energy = SymbolEnergy::candidate;
      else if (v == "nominal") d.energy = SymbolEnergy::nominal;
      else throw ConfigError("config: unknown energy mode '" + v + "'");
    }
    else if (k == "design_iterations") d.design_iterations = parse_int<int>(k, v);
    else if (k == "channel") {
      if (v == "block" || v == "block_fading") cfg.channel = ChannelMode::block_fading;
      else if (v == "jakes" || v == "time_varying") cfg.channel = ChannelMode::time_varying;
      else throw ConfigError("config: unknown channel mode '" + v + "'");
    }
    else if (k == "doppler") cfg.doppler = parse_double(k, v);
    else if (k == "packet_len") cfg.packet_len = parse_int<std::size_t>(k, v);
    else if (k == "training_len") cfg.training_len = parse_int<std::size_t>(k, v);
    else if (k == "coded") cfg.coded = parse_bool(k, v);
    else if (k == "iterations") cfg.iterations = parse_int<int>(k, v);
    else if (k == "lambda") cfg.lambda = parse_double(k, v);
    else if (k == "seed") cfg.seed = parse_int<std::uint64_t>(k, v);
    else if (k == "min_errors") cfg.stop.min_bit_errors = parse_int<std::uint64_t>(k, v);
    else if (k == "max_bits") cfg.stop.max_bits = parse_int<std::uint64_t>(k, v);
    else if (k == "threads") cfg.threads = parse_int<unsigned>(k, v);
    else throw ConfigError("config: unknown key '" + k + "'");
  }
  // Single-branch detectors default to L = 1 unless L is set explicitly.
  if (kv.contains("detector") && !kv.contains("branches") && cfg.detector.kind != DetectorKind::mbdf)
    cfg.detector.branches = 1;
}

KeyValues to_key_values(const SimConfig& cfg) {
  const auto& d = cfg.detector;
  std::string snr;
  for (std::size_t k = 0; k < cfg.snr_db.size(); ++k) snr += (k ? "," : "") + fmt_double(cfg.snr_db[k]);
  return {
      {"n_t", std::to_string(cfg.n_t)},
      {"n_r", std::to_string(cfg.n_r)},
      {"constellation", cfg.constellation},
      {"snr", snr},
      {"detector", to_string(d.kind)},
      {"branches", std::to_string(d.branches)},
      {"stages", std::to_string(d.stages)},
      {"ordering", to_string(d.ordering)},
      {"beta", fmt_double(d.beta)},
      {"shape_rule", d.shape_rule == SicShapeRule::printed ? "printed" : "cancel_detected"},
      {"immse", d.immse == ImmseForm::full ? "full" : "reduced"},
      {"energy", d.energy == SymbolEnergy::nominal ? "nominal" : "candidate"},
      {"design_iterations", std::to_string(d.design_iterations)},
      {"channel", cfg.channel == ChannelMode::time_varying ? "time_varying" : "block_fading"},
      {"doppler", fmt_double(cfg.doppler)},
      {"packet_len", std::to_string(cfg.packet_len)},
      {"training_len", std::to_string(cfg.training_len)},
      {"coded", cfg.coded ? "true" : "false"},
      {"iterations", std::to_string(cfg.iterations)},
      {"lambda", fmt_double(cfg.lambda)},
      {"seed", std::to_string(cfg.seed)},
      {"min_errors", std::to_string(cfg.stop.min_bit_errors)},
      {"max_bits", std::to_string(cfg.stop.max_bits)},
  };
}

std::string config_hash(const SimConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : to_key_values(cfg)) {
    for (char ch : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mbdf
