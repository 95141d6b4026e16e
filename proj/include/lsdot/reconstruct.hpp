#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lsdot/forward_model.hpp"
#include "lsdot/gradient.hpp"
#include "lsdot/levelset.hpp"

namespace lsdot {

enum class Stage { CeeOnly, AyeOnly, Joint };
enum class Coefficient { A, C, Both };

std::string_view to_string(Stage stage);
std::string_view to_string(Coefficient which);
Stage stage_from_string(std::string_view name);

/// Which projection defines the reported coefficient iterate c_k = P(φ_k).
enum class ErrorProjection { Smooth, Sharp };

struct IterationRecord {
  int iter = 0;
  double misfit = 0.0;
  /// Relative L²(Ω) errors against ground truth (synthetic runs only).
  std::optional<double> err_a;
  std::optional<double> err_c;
  /// Absolute L²(Ω) errors, logged alongside.
  std::optional<double> abs_err_a;
  std::optional<double> abs_err_c;
  Stage stage = Stage::Joint;
  /// L² norms of the applied increments δφ/α.
  double step_a = 0.0;
  double step_c = 0.0;
};

struct Truth {
  NodalField a;
  NodalField c;
};

struct ReconstructionConfig {
  SolverSettings solver;
  /// Fixed α for both coefficients; unset selects one per coefficient from its
  /// first update (see auto_step_fraction).
  std::optional<double> alpha;
  /// First-step size target for automatic α: max|δφ/α| = fraction·max(1, max|φ₀|).
  double auto_step_fraction = 0.1;
  double beta_a = 0.0;
  double beta_c = 0.0;
  double eta = 1e-8;
  ErrorProjection error_projection = ErrorProjection::Smooth;
  /// Abort when the misfit grows over a stability_window-step window in
  /// single-coefficient runs.
  bool monitor_stability = false;
  int stability_window = 50;

  void validate() const;
};

/// Carries level sets, history and the per-step caches (system factorization
/// and residuals of the current iterate).
class IterationState {
 public:
  IterationState(const Mesh& mesh, LevelSetPair initial, const ExperimentSet& experiments,
                 const ReconstructionConfig& config, std::optional<Truth> truth = std::nullopt,
                 Stage stage = Stage::CeeOnly);

  const Mesh& mesh() const { return *mesh_; }
  const LevelSetPair& level_sets() const { return ls_; }
  int iter() const { return iter_; }
  Stage stage() const { return stage_; }
  void set_stage(Stage stage);
  const std::vector<IterationRecord>& history() const { return history_; }
  /// α used for each coefficient; unset until its first update when automatic.
  std::optional<double> alpha_a() const { return alpha_a_; }
  std::optional<double> alpha_c() const { return alpha_c_; }
  const std::optional<Truth>& truth() const { return truth_; }
  const ReconstructionConfig& config() const { return config_; }
  const ExperimentSet& experiments() const { return *experiments_; }

  /// Coefficient fields used in the forward model, P_ε(φ).
  CoefficientPair coefficients() const { return project_smooth(ls_); }
  /// Coefficient fields reported as the iterate (per config.error_projection).
  CoefficientPair reported_coefficients() const;
  double current_misfit() const { return history_.back().misfit; }

  /// Recent reported coefficient fields, newest last (bounded by snapshot_capacity).
  const std::deque<CoefficientPair>& snapshots() const { return snapshots_; }
  void set_snapshot_capacity(std::size_t n);

 private:
  friend void iterate_step(IterationState& state, bool update_a, bool update_c);

  IterationRecord make_record(double misfit_value, double step_a, double step_c) const;
  void refresh_residuals();

  const Mesh* mesh_;
  const ExperimentSet* experiments_;
  ReconstructionConfig config_;
  LevelSetPair ls_;
  std::optional<Truth> truth_;
  std::optional<double> alpha_a_;
  std::optional<double> alpha_c_;
  int iter_ = 0;
  Stage stage_;
  std::vector<IterationRecord> history_;
  std::deque<CoefficientPair> snapshots_;
  std::size_t snapshot_capacity_ = 0;

  SparseMatrix mass_;
  UpdateSolver update_solver_;
  std::optional<SpdSolver> state_solver_;
  ResidualSet residuals_;
};

/// One step of the five-step level-set iteration. Unflagged level sets stay
/// bit-identical. Throws std::runtime_error on a non-finite misfit.
void iterate_step(IterationState& state, bool update_a, bool update_c);

/// True when max_{j=1..window} ‖x_k − x_{k−j}‖_{L²} / max(‖x_k‖_{L²}, floor) < tol
/// for the tracked coefficient(s). False while fewer than window+1 snapshots exist.
bool stagnation_check(const Mesh& mesh, const std::deque<CoefficientPair>& snapshots, int window,
                      double tol, Coefficient which, double floor = 1e-12);

enum class TransitionRule { Budget, Stagnation };

struct StageSchedule {
  int k1 = 250;
  int k2 = 750;
  int ratio_a = 2;
  int ratio_c = 1;
  int max_iter = 2500;
  TransitionRule rule = TransitionRule::Budget;
  int stag_window = 50;
  double stag_tol = 1e-4;

  void validate() const;
};

enum class StopReason { MaxIter, TargetReached, Stagnation };
std::string_view to_string(StopReason reason);

struct RunResult {
  IterationState state;
  bool converged = false;
  StopReason reason = StopReason::MaxIter;
  /// Iterations at which stage 2 and stage 3 began (three-stage runs).
  std::optional<int> stage2_start;
  std::optional<int> stage3_start;
  const std::vector<IterationRecord>& history() const { return state.history(); }
};

/// Optional per-step observer, called after every recorded iteration.
using StepObserver = std::function<void(const IterationState&)>;

RunResult run_three_stage(const Mesh& mesh, const LevelSetPair& initial,
                          const ExperimentSet& experiments, const StageSchedule& schedule,
                          const ReconstructionConfig& config,
                          const std::optional<Truth>& truth = std::nullopt,
                          const StepObserver& observer = {});

struct FixedRunOptions {
  Coefficient which = Coefficient::C;
  int max_iter = 5000;
  /// Stop once the tracked error (min of relative and absolute) reaches this (synthetic runs).
  std::optional<double> target_error = 1e-2;
  /// Stop on stagnation of the tracked coefficient(s) when set.
  bool stop_on_stagnation = false;
  int stag_window = 50;
  double stag_tol = 1e-4;
};

RunResult run_fixed(const Mesh& mesh, const LevelSetPair& initial, const ExperimentSet& experiments,
                    const ReconstructionConfig& config, const FixedRunOptions& options,
                    const std::optional<Truth>& truth = std::nullopt,
                    const StepObserver& observer = {});

}  // namespace lsdot
