#pragma once

// Operation counts per received vector, analytic and measured.

#include <cstdint>
#include <string>
#include <vector>

#include "mbdf/detectors.hpp"
#include "mbdf/op_counter.hpp"

namespace mbdf {

struct ComplexityRow {
  std::string algorithm;
  double additions = 0.0;
  double multiplications = 0.0;
  bool analytic_only = false;  // no implementation behind the formula
};

// MB-MMSE-DF + RLS:
//   adds  2 N_R^2 + N_R N_T - 1 + L (3 N_R N_T^2 + 2 N_T^2 - 3 N_R N_T + N_R - N_T)
//   mults 3 N_R^2 + 2 N_R N_T + 3 N_R + 1 + L (5 N_R N_T^2 + 2 N_R)
std::int64_t mbdf_rls_additions(int n_t, int n_r, int l);
std::int64_t mbdf_rls_multiplications(int n_t, int n_r, int l);
// SIC + RLS: 2/3 N_R^3 + 11/2 N_R^2 + 4 N_R adds, 2/3 N_R^3 + 25/2 N_R^2 + 3 N_R mults.
double sic_rls_additions(int n_r);
double sic_rls_multiplications(int n_r);
// Linear + RLS: N_T (3 N_R^2 + 2 N_R - 1) + 2 N_R N_T adds, N_T (3 N_R^2 + 4 N_R + 1) mults.
std::int64_t linear_rls_additions(int n_t, int n_r);
std::int64_t linear_rls_multiplications(int n_t, int n_r);
// RLS channel estimation: N_R N_T^2 + 4 N_T^2 - N_T adds, N_R N_T^2 + 4 N_T^2 + 2 N_T N_R + 2 N_T + 2 mults.
std::int64_t rls_channel_additions(int n_t, int n_r);
std::int64_t rls_channel_multiplications(int n_t, int n_r);
// Sphere-decoder bound with M(k) = k lattice points visited at level k and
// search radius d:
//   adds  sum_k M(k+1) pi^(k/2) / Gamma(k/2 + 1) d^k + 2 N_T^2 - N_T + 2
//   mults sum_k M(k)   pi^(k/2) / Gamma(k/2 + 1) d^k + 2 N_T^2
double sd_additions(int n_t, double radius);
double sd_multiplications(int n_t, double radius);

// Rows for every algorithm; throws ParameterError unless all sizes (and L) are >= 1.
std::vector<ComplexityRow> complexity_table(int n_t, int n_r, int l, double sd_radius = 1.0);

struct MeasuredOps {
  OpCounter detection;  // adaptive filter update, covariance/statistics RLS and detection
  OpCounter channel;    // RLS channel estimator
  std::size_t vectors = 0;
  double mults_per_vector() const;
  double adds_per_vector() const;
};

// Runs the adaptive receiver over a static random channel for the given
// number of received vectors and tallies the operations.
MeasuredOps measured_ops(const DetectorConfig& detector, int n_t, int n_r, std::size_t vectors,
                         std::uint64_t seed = 1, double snr_db = 10.0);

}  // namespace mbdf
