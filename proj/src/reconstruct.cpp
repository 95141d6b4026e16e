#include "lsdot/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lsdot {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::CeeOnly: return "c-only";
    case Stage::AyeOnly: return "a-only";
    case Stage::Joint: return "joint";
  }
  return "unknown";
}

std::string_view to_string(Coefficient which) {
  switch (which) {
    case Coefficient::A: return "a";
    case Coefficient::C: return "c";
    case Coefficient::Both: return "both";
  }
  return "unknown";
}

Stage stage_from_string(std::string_view name) {
  if (name == "c-only") return Stage::CeeOnly;
  if (name == "a-only") return Stage::AyeOnly;
  if (name == "joint") return Stage::Joint;
  throw std::invalid_argument("unknown stage '" + std::string(name) + "'");
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::MaxIter: return "max_iter";
    case StopReason::TargetReached: return "target_reached";
    case StopReason::Stagnation: return "stagnation";
  }
  return "unknown";
}

void ReconstructionConfig::validate() const {
  solver.validate();
  if (alpha && !(*alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(auto_step_fraction > 0.0)) throw std::invalid_argument("auto_step_fraction must be > 0");
  if (!(beta_a >= 0.0) || !(beta_c >= 0.0)) throw std::invalid_argument("betas must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  if (stability_window < 1) throw std::invalid_argument("stability_window must be >= 1");
}

void StageSchedule::validate() const {
  if (k1 < 0 || k2 < k1 || max_iter < k2) {
    throw std::invalid_argument("stage schedule needs 0 <= k1 <= k2 <= max_iter");
  }
  if (ratio_a < 0 || ratio_c < 0 || (ratio_a == 0 && ratio_c == 0)) {
    throw std::invalid_argument("stage-3 ratio components must be >= 0 and not both 0");
  }
  if (stag_window < 2) throw std::invalid_argument("stag_window must be >= 2");
  if (!(stag_tol > 0.0)) throw std::invalid_argument("stag_tol must be positive");
}

namespace {

double mass_norm(const SparseMatrix& mass, const NodalField& f) {
  return std::sqrt(std::max(0.0, f.dot(mass * f)));
}

NodalField unit_field(const Mesh& mesh) { return NodalField::Ones(mesh.num_nodes()); }

}  // namespace

IterationState::IterationState(const Mesh& mesh, LevelSetPair initial,
                               const ExperimentSet& experiments,
                               const ReconstructionConfig& config, std::optional<Truth> truth,
                               Stage stage)
    : mesh_(&mesh),
      experiments_(&experiments),
      config_(config),
      ls_(std::move(initial)),
      truth_(std::move(truth)),
      alpha_a_(config.alpha),
      alpha_c_(config.alpha),
      stage_(stage),
      mass_(assemble_mass(mesh, unit_field(mesh))),
      update_solver_(mesh, config.solver) {
  config_.validate();
  ls_.validate();
  if (ls_.phi_a.size() != mesh.num_nodes()) {
    throw std::invalid_argument("level sets are not sized to the mesh");
  }
  experiments.validate(mesh);
  if (truth_ && (truth_->a.size() != mesh.num_nodes() || truth_->c.size() != mesh.num_nodes())) {
    throw std::invalid_argument("ground truth is not sized to the mesh");
  }
  refresh_residuals();
  const double f = misfit(mesh, residuals_.r);
  if (!std::isfinite(f)) throw std::runtime_error("initial misfit is not finite");
  history_.push_back(make_record(f, 0.0, 0.0));
}

void IterationState::set_stage(Stage stage) {
  if (static_cast<int>(stage) < static_cast<int>(stage_)) {
    throw std::logic_error("stage transitions must be monotone");
  }
  stage_ = stage;
}

void IterationState::set_snapshot_capacity(std::size_t n) {
  snapshot_capacity_ = n;
  snapshots_.clear();
  if (n > 0) snapshots_.push_back(reported_coefficients());
}

CoefficientPair IterationState::reported_coefficients() const {
  return config_.error_projection == ErrorProjection::Sharp ? project_sharp(ls_)
                                                            : project_smooth(ls_);
}

void IterationState::refresh_residuals() {
  const auto coeffs = coefficients();
  state_solver_.emplace(assemble_system(*mesh_, coeffs.a, coeffs.c), config_.solver);
  residuals_ = residuals(*mesh_, *state_solver_, *experiments_);
}

IterationRecord IterationState::make_record(double misfit_value, double step_a,
                                            double step_c) const {
  IterationRecord rec;
  rec.iter = iter_;
  rec.misfit = misfit_value;
  rec.stage = stage_;
  rec.step_a = step_a;
  rec.step_c = step_c;
  if (truth_) {
    const auto coeffs = reported_coefficients();
    rec.abs_err_a = mass_norm(mass_, coeffs.a - truth_->a);
    rec.abs_err_c = mass_norm(mass_, coeffs.c - truth_->c);
    rec.err_a = *rec.abs_err_a / std::max(mass_norm(mass_, truth_->a), 1e-300);
    rec.err_c = *rec.abs_err_c / std::max(mass_norm(mass_, truth_->c), 1e-300);
  }
  return rec;
}

void iterate_step(IterationState& state, bool update_a, bool update_c) {
  if (!update_a && !update_c) {
    throw std::invalid_argument("iterate_step needs at least one coefficient to update");
  }
  const Mesh& mesh = *state.mesh_;
  const auto& cfg = state.config_;
  auto& ls = state.ls_;

  NodalField sum_da = NodalField::Zero(mesh.num_nodes());
  NodalField sum_dc = NodalField::Zero(mesh.num_nodes());
  for (std::size_t m = 0; m < state.residuals_.r.size(); ++m) {
    const NodalField w = adjoint_solve(mesh, *state.state_solver_, state.residuals_.r[m]);
    const auto sd = shape_derivative_fields(mesh, state.residuals_.u[m], w);
    sum_da += sd.da;
    sum_dc += sd.dc;
  }

  // Automatic α is resolved per coefficient on its first update.
  auto resolve_alpha = [&](std::optional<double>& alpha, const NodalField& data_part,
                           const NodalField& phi) {
    if (alpha) return *alpha;
    const double max_step = state.update_solver_.solve(data_part).cwiseAbs().maxCoeff();
    const double target = cfg.auto_step_fraction * std::max(1.0, phi.cwiseAbs().maxCoeff());
    alpha = max_step > 0.0 ? max_step / target : 1.0;
    return *alpha;
  };
  const auto data = assemble_L(mesh, ls, sum_da, sum_dc, 1.0, 0.0, 0.0, cfg.eta);

  double step_a = 0.0;
  double step_c = 0.0;
  if (update_a) {
    const double alpha = resolve_alpha(state.alpha_a_, data.data_part_a, ls.phi_a);
    const auto terms = assemble_L(mesh, ls, sum_da, sum_dc, alpha, cfg.beta_a, 0.0, cfg.eta);
    const NodalField dphi = state.update_solver_.solve(terms.L_a);
    step_a = mass_norm(state.mass_, dphi) / alpha;
    ls.phi_a = apply_update(ls.phi_a, dphi, alpha);
  }
  if (update_c) {
    const double alpha = resolve_alpha(state.alpha_c_, data.data_part_c, ls.phi_c);
    const auto terms = assemble_L(mesh, ls, sum_da, sum_dc, alpha, 0.0, cfg.beta_c, cfg.eta);
    const NodalField dphi = state.update_solver_.solve(terms.L_c);
    step_c = mass_norm(state.mass_, dphi) / alpha;
    ls.phi_c = apply_update(ls.phi_c, dphi, alpha);
  }

  ++state.iter_;
  state.refresh_residuals();
  const double f = misfit(mesh, state.residuals_.r);
  if (!std::isfinite(f)) {
    throw std::runtime_error("misfit became non-finite at iteration " + std::to_string(state.iter_));
  }
  state.history_.push_back(state.make_record(f, step_a, step_c));
  if (state.snapshot_capacity_ > 0) {
    state.snapshots_.push_back(state.reported_coefficients());
    while (state.snapshots_.size() > state.snapshot_capacity_) state.snapshots_.pop_front();
  }
}

bool stagnation_check(const Mesh& mesh, const std::deque<CoefficientPair>& snapshots, int window,
                      double tol, Coefficient which, double floor) {
  if (window < 2) throw std::invalid_argument("stagnation window must be >= 2");
  if (snapshots.size() < static_cast<std::size_t>(window) + 1) return false;
  const SparseMatrix mass = assemble_mass(mesh, unit_field(mesh));
  auto stagnated = [&](auto field_of) {
    const NodalField& current = field_of(snapshots.back());
    const double scale = std::max(mass_norm(mass, current), floor);
    double worst = 0.0;
    const std::size_t last = snapshots.size() - 1;
    for (int j = 1; j <= window; ++j) {
      worst = std::max(worst, mass_norm(mass, current - field_of(snapshots[last - j])));
    }
    return worst / scale < tol;
  };
  const auto a_of = [](const CoefficientPair& p) -> const NodalField& { return p.a; };
  const auto c_of = [](const CoefficientPair& p) -> const NodalField& { return p.c; };
  switch (which) {
    case Coefficient::A: return stagnated(a_of);
    case Coefficient::C: return stagnated(c_of);
    case Coefficient::Both: return stagnated(a_of) && stagnated(c_of);
  }
  return false;
}

namespace {

Stage stage_for(Coefficient which) {
  switch (which) {
    case Coefficient::A: return Stage::AyeOnly;
    case Coefficient::C: return Stage::CeeOnly;
    case Coefficient::Both: return Stage::Joint;
  }
  return Stage::Joint;
}

std::optional<double> tracked_error(const IterationRecord& rec, Coefficient which) {
  auto best = [](const std::optional<double>& rel, const std::optional<double>& abs) {
    return std::min(*rel, *abs);
  };
  if (!rec.err_a || !rec.err_c) return std::nullopt;
  switch (which) {
    case Coefficient::A: return best(rec.err_a, rec.abs_err_a);
    case Coefficient::C: return best(rec.err_c, rec.abs_err_c);
    case Coefficient::Both:
      return std::max(best(rec.err_a, rec.abs_err_a), best(rec.err_c, rec.abs_err_c));
  }
  return std::nullopt;
}

void check_stability(const IterationState& state) {
  const auto& cfg = state.config();
  if (!cfg.monitor_stability) return;
  const auto& h = state.history();
  const auto w = static_cast<std::size_t>(cfg.stability_window);
  if (h.size() <= w) return;
  const double now = h.back().misfit;
  const double before = h[h.size() - 1 - w].misfit;
  const double slack = 1e-12 * h.front().misfit + 1e-300;
  if (now > before + slack) {
    throw std::runtime_error("misfit increased from " + std::to_string(before) + " to " +
                             std::to_string(now) + " over the last " + std::to_string(w) +
                             " iterations (iteration " + std::to_string(state.iter()) +
                             "); the step size 1/alpha is likely too large");
  }
}

}  // namespace

RunResult run_fixed(const Mesh& mesh, const LevelSetPair& initial, const ExperimentSet& experiments,
                    const ReconstructionConfig& config, const FixedRunOptions& options,
                    const std::optional<Truth>& truth, const StepObserver& observer) {
  if (options.max_iter < 0) throw std::invalid_argument("max_iter must be >= 0");
  RunResult result{IterationState(mesh, initial, experiments, config, truth,
                                  stage_for(options.which)),
                   false, StopReason::MaxIter, std::nullopt, std::nullopt};
  auto& state = result.state;
  if (options.stop_on_stagnation) {
    if (options.stag_window < 2) throw std::invalid_argument("stag_window must be >= 2");
    state.set_snapshot_capacity(static_cast<std::size_t>(options.stag_window) + 1);
  }
  if (observer) observer(state);

  const bool ua = options.which != Coefficient::C;
  const bool uc = options.which != Coefficient::A;
  while (true) {
    if (options.target_error) {
      const auto err = tracked_error(state.history().back(), options.which);
      if (err && *err <= *options.target_error) {
        result.converged = true;
        result.reason = StopReason::TargetReached;
        break;
      }
    }
    if (options.stop_on_stagnation &&
        stagnation_check(mesh, state.snapshots(), options.stag_window, options.stag_tol,
                         options.which)) {
      result.converged = true;
      result.reason = StopReason::Stagnation;
      break;
    }
    if (state.iter() >= options.max_iter) break;
    iterate_step(state, ua, uc);
    if (options.which != Coefficient::Both) check_stability(state);
    if (observer) observer(state);
  }
  return result;
}

RunResult run_three_stage(const Mesh& mesh, const LevelSetPair& initial,
                          const ExperimentSet& experiments, const StageSchedule& schedule,
                          const ReconstructionConfig& config, const std::optional<Truth>& truth,
                          const StepObserver& observer) {
  schedule.validate();
  const Stage first = schedule.k1 > 0 ? Stage::CeeOnly
                      : schedule.k2 > 0 ? Stage::AyeOnly
                                        : Stage::Joint;
  RunResult result{IterationState(mesh, initial, experiments, config, truth, first), false,
                   StopReason::MaxIter, std::nullopt, std::nullopt};
  auto& state = result.state;
  const bool by_stagnation = schedule.rule == TransitionRule::Stagnation;
  const auto capacity = static_cast<std::size_t>(schedule.stag_window) + 1;
  if (by_stagnation) state.set_snapshot_capacity(capacity);
  if (observer) observer(state);

  auto step = [&](bool ua, bool uc) {
    iterate_step(state, ua, uc);
    if (observer) observer(state);
  };
  auto stagnated = [&](Coefficient which) {
    return by_stagnation &&
           stagnation_check(mesh, state.snapshots(), schedule.stag_window, schedule.stag_tol, which);
  };

  while (state.iter() < std::min(schedule.k1, schedule.max_iter) && !stagnated(Coefficient::C)) {
    step(false, true);
  }

  result.stage2_start = state.iter();
  if (state.stage() != Stage::Joint) state.set_stage(Stage::AyeOnly);
  if (by_stagnation) state.set_snapshot_capacity(capacity);
  while (state.iter() < std::min(schedule.k2, schedule.max_iter) && !stagnated(Coefficient::A)) {
    step(true, false);
  }

  result.stage3_start = state.iter();
  state.set_stage(Stage::Joint);
  if (by_stagnation) state.set_snapshot_capacity(capacity);
  const int joint = std::min(schedule.ratio_a, schedule.ratio_c);
  while (state.iter() < schedule.max_iter) {
    if (stagnated(Coefficient::Both)) {
      result.converged = true;
      result.reason = StopReason::Stagnation;
      break;
    }
    for (int j = 0; j < joint && state.iter() < schedule.max_iter; ++j) step(true, true);
    for (int j = joint; j < schedule.ratio_a && state.iter() < schedule.max_iter; ++j) {
      step(true, false);
    }
    for (int j = joint; j < schedule.ratio_c && state.iter() < schedule.max_iter; ++j) {
      step(false, true);
    }
  }
  return result;
}

}  // namespace lsdot
