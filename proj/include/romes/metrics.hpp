#pragma once

#include "romes/closure.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace romes {

/// Fraction of variance unexplained of one coordinate model over held-out
/// (feature, truth) pairs.
double fvu(const GpErrorModel& model, const Vector& features, const Vector& truths);

/// Fraction of held-out truths inside the model's central omega-interval.
double validation_frequency(const GpErrorModel& model, const Vector& features,
                            const Vector& truths, double omega);

/// Kolmogorov-Smirnov statistic of the model's standardized held-out
/// residuals against the standard normal law.
double model_ks_statistic(const GpErrorModel& model, const Vector& features, const Vector& truths);

inline constexpr double kReportOmegas[] = {0.80, 0.90, 0.95, 0.99};

/// Aggregate accuracy report over a held-out parameter set.
///
/// State rows (all Euclidean norms, averaged over the set, relative to the
/// FOM state norm): e_x (raw ROM error), te_x_par / te_x_par_perp (error
/// after subtracting the modeled in-plane / in-plane-plus-out-of-plane
/// correction), e_x_par / e_x_par_perp (the exact-projection ideals).
/// Per-coordinate rows: FVU, coverage at kReportOmegas, KS statistic.
/// Per-QoI rows: relative output errors without (e_q) and with (te_q) the
/// modeled mean correction.
struct MetricReport {
  double e_x = 0.0;
  double te_x_par = 0.0;
  double e_x_par = 0.0;
  double te_x_par_perp = 0.0;
  double e_x_par_perp = 0.0;
  std::vector<double> fvu;          ///< n_bar
  Matrix nu;                        ///< n_bar x 4 coverage frequencies
  std::vector<double> ks;           ///< n_bar
  std::vector<std::string> qoi_labels;
  std::vector<double> e_q;
  std::vector<double> te_q;
  Matrix indicators;    ///< n_bar x #used, per evaluated point
  Matrix exact_coords;  ///< n_bar x #used
  Index points_used = 0;
  Index points_excluded = 0;  ///< points whose solves failed (warned, skipped)
};

/// Evaluates the trained package against held-out parameters (columns of
/// `test_params`), which must be disjoint from every training set recorded in
/// the package provenance.  Points whose FOM/ROM solves fail are excluded and
/// counted.
MetricReport error_metrics(const FomProblem& problem, const OfflinePackage& package,
                           const Matrix& test_params);

enum class ParetoMethod { rom_only, romes_inplane, romes_full };

ParetoMethod pareto_method_from_string(const std::string& name);
[[nodiscard]] constexpr const char* to_string(ParetoMethod method) {
  switch (method) {
    case ParetoMethod::rom_only: return "rom_only";
    case ParetoMethod::romes_inplane: return "romes_inplane";
    default: return "romes_full";
  }
}

/// One evaluated configuration in the accuracy-versus-cost study.
struct ParetoPoint {
  ParetoMethod method = ParetoMethod::rom_only;
  Index n = 0;
  Index n_p = 0;     ///< 0 for rom_only (no dual stage)
  Index n_perp = 0;  ///< 0 unless romes_full
  double error = 0.0;          ///< mean relative state error per method semantics
  double rel_wall_time = 0.0;  ///< mean online seconds / mean FOM seconds
  double mean_primal_iters = 0.0;
  double primal_ops = 0.0;  ///< op-count model: iterations x reduced-solve cost
  double dual_ops = 0.0;    ///< op-count model: one factorization + n_bar backsolves
  double fom_ops = 0.0;
  double rel_ops = 0.0;  ///< (primal_ops + dual_ops) / fom_ops
  bool on_front = false;
};

struct ParetoGrid {
  std::vector<Index> n_values;
  std::vector<Index> n_p_offsets;     ///< dual basis size = n_bar + offset
  std::vector<Index> n_perp_values;   ///< used by romes_full only
  std::vector<ParetoMethod> methods;
};

struct ParetoStudy {
  std::vector<ParetoPoint> points;
};

/// Runs every grid configuration against one shared held-out set and flags
/// the non-dominated points per method in the (rel_ops, error) plane; wall
/// time is reported alongside but the front uses the deterministic op-count
/// model.
ParetoStudy pareto_study(const FomProblem& problem, const TrainingConfig& base,
                         const ParetoGrid& grid);

/// Indices of the non-dominated (cost, error) pairs, both minimized.
std::vector<std::size_t> non_dominated_indices(
    std::span<const std::pair<double, double>> cost_error);

/// Op-count model of the reduced stages: a dense n x n factorization costs
/// 2/3 n^3 and each back-substitution 2 n^2.
double reduced_solve_ops(Index n, Index rhs_count);

}  // namespace romes
