#pragma once

// CSV, JSON and gnuplot output of BER and EXIT results.

#include <iosfwd>
#include <span>

#include "mbdf/exit_chart.hpp"
#include "mbdf/sim_config.hpp"
#include "mbdf/sweep.hpp"

namespace mbdf {

// Header: snr_db,bits,bit_errors,ber,ci_low,ci_high,detector,L,beta,seed
void write_csv(std::ostream& out, const BerReport& report);

// Full report: config, config hash, per-point counts and intervals, analytic
// and measured operation counts.
void write_json(std::ostream& out, const BerReport& report);

// Whitespace-separated columns: snr_db ber ci_low ci_high.
void write_gnuplot(std::ostream& out, const BerReport& report);

// i_a,i_e rows (CSV) or "i_a i_e" rows (gnuplot).
void write_exit_csv(std::ostream& out, std::span<const ExitPoint> points);
void write_exit_gnuplot(std::ostream& out, std::span<const ExitPoint> points);

}  // namespace mbdf
