// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The aircomp authors

#pragma once

#include "aircomp/dd_core.hpp"
#include "aircomp/power_control.hpp"

#include <span>
#include <vector>

namespace aircomp {

enum class Direction { Forward, Backward };

/// A term entering a row's observation from a different data row.
struct InterferenceTerm {
  int source_row = 0;
  int delay = 0;
  int kappa = 0;  ///< cyclic shift [k]_N
};

/// How the crossover m* is chosen from the interference counters.
enum class OrderRule {
  /// Forward row m stays forward while theta+_m <= theta-_{m+1}. Counts
  /// every interfering path (multiset) and takes the backward same-delay
  /// bonus from paths sharing the last delay.
  Successor,
  /// max m with theta+_m <= theta-_m on the same counters.
  SameRow,
};

struct EstimationPlan {
  int data_rows = 0;  ///< D = M - l_max
  std::vector<int> order;
  std::vector<Direction> direction;  ///< indexed by row
  int m_star = 0;
  std::vector<long long> theta_plus;
  std::vector<long long> theta_minus;
  std::vector<int> obs_block;  ///< m2 per row
  std::vector<std::vector<InterferenceTerm>> interference_sets;
};

/// Ordering over data rows 0..D-1 for a shared delay list (sorted, with
/// repeats). D is taken from config.l_max; `delays` must fit inside it.
EstimationPlan compute_order(std::span<const int> delays, const SystemConfig& config,
                             OrderRule rule = OrderRule::Successor);

/// Same as above, with the Doppler shifts filled into the interference sets.
EstimationPlan compute_order(std::span<const ChannelPath> geometry, const SystemConfig& config,
                             OrderRule rule = OrderRule::Successor);

struct RowEstimate {
  int row = 0;
  Direction direction = Direction::Forward;
  int obs_block = 0;
  int principal_delay = 0;
  int principal_kappa = 0;
  RVector p;
  /// Per-device transmit coefficient applied to every cell of the row.
  CVector b;
  Real eta = 0.0;
  /// One weight per cancellable term, aligned with `terms`.
  std::vector<InterferenceTerm> terms;
  CVector zeta;
  /// Noise plus residual cross-row interference after cancellation.
  Real floor = 0.0;
  /// Same-delay leakage power per unit transmit power, per device.
  RVector leakage;
  Real mse_analytic = 0.0;
};

struct CleanRow {
  RowEstimate design;
  CVector f_hat;
};

/// A row observed without interference: y = sum_u sqrt(p_u)|h_u| x_u + w.
/// `principal` holds |h_{u,1}|. Powers follow the single-row optimum; f_hat
/// is y / sqrt(eta).
CleanRow estimate_row_clean(const CVector& y_block, const RVector& principal, const SystemConfig& config);

struct ZetaResult {
  Complex zeta;
  Real min_energy = 0.0;
};

/// Optimal weight for subtracting a clean previous estimate
/// f_prev = (sum_u sqrt(p_u) a_u x_u + w) / sqrt(eta_prev) from an
/// interference term sum_u sqrt(p_u) g_u x_u, and the resulting
/// interference-plus-noise energy (noise of the current row included).
ZetaResult optimal_zeta(const RVector& prev_p, Real prev_eta, const RVector& prev_principal,
                        const CVector& cross_gains, const SystemConfig& config);

/// E|G|^2 for an arbitrary weight, same setting as optimal_zeta.
Real zeta_energy(Complex zeta, const RVector& prev_p, Real prev_eta, const RVector& prev_principal,
                 const CVector& cross_gains, const SystemConfig& config);

/// Full S2 design for one shared-geometry realization. Estimates are
/// tracked as exact linear forms over every data and noise cell, so each
/// row's MSE is exact, and cancellation weights are jointly optimal.
class S2Design {
 public:
  S2Design(const ChannelRealization& channels, const SystemConfig& config,
           OrderRule rule = OrderRule::Successor);

  const EstimationPlan& plan() const { return plan_; }
  const std::vector<RowEstimate>& rows() const { return rows_; }
  int data_rows() const { return D_; }
  /// Mean of per-row MSE.
  Real total_mse() const;

  /// Per-device (M x N) transmit coefficient grids; ZP rows are zero.
  std::vector<CMatrix> coefficients() const;

  /// Linear form of row r's column-0 estimate over the cell layout below.
  const CVector& form(int row) const { return forms_.at(static_cast<std::size_t>(row)); }
  Eigen::Index data_index(int u, int row, int col) const;
  Eigen::Index noise_index(int block, int col) const;

 private:
  CVector shifted(const CVector& f, int delta) const;
  Complex inner(const CVector& a, const CVector& b) const;
  void design_row(int row);
  /// nu_u(m2, l, kappa) for device u.
  Complex nu(int u, int m2, int l, int kappa) const;

  SystemConfig config_;
  ChannelRealization channels_;
  int U_ = 0;
  int D_ = 0;
  std::vector<ChannelPath> geometry_;
  EstimationPlan plan_;
  std::vector<RowEstimate> rows_;
  std::vector<CVector> forms_;
  std::vector<bool> done_;
};

struct S2Output {
  CMatrix estimate;  ///< D x N, estimate of sum_u x_u on data rows
  CMatrix target;
  std::vector<Real> row_mse;
  Real total_mse = 0.0;
};

/// Transmits `frames` (ZP rows must be zero) through the channel, then
/// runs the SIC order with the design's weights.
S2Output run_s2(const S2Design& design, std::span<const DDFrame> frames, const ChannelRealization& channels,
                const DDFrame* noise, const SystemConfig& config);

/// Convenience: designs, draws noise from `rng`, runs.
S2Output run_s2(std::span<const DDFrame> frames, const ChannelRealization& channels, const SystemConfig& config,
                RandomStream& rng);

}  // namespace aircomp
