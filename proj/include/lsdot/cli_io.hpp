#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsdot/phantoms.hpp"
#include "lsdot/reconstruct.hpp"

namespace lsdot {

enum class RunMode { CeeOnly, AyeOnly, Joint, ThreeStage };

std::string_view to_string(RunMode mode);
RunMode run_mode_from_string(std::string_view name);

/// Initial level set: scale·(radius² − ‖x − center‖²), the phantom's own
/// support (±scale), or the constant value.
struct InitialGuess {
  enum class Kind { Paraboloid, Truth, Constant };
  Kind kind = Kind::Paraboloid;
  Point center{0.5, 0.5};
  double radius = 0.2;
  double scale = 1.0;
  double value = -1.0;

  bool operator==(const InitialGuess&) const = default;
};

NodalField make_initial_level_set(const InitialGuess& guess, const Mesh& mesh,
                                  const NodalField& truth, double level_inside);

struct RunConfig {
  int nodes_per_side = 50;
  std::string phantom = "single-pair";
  InitialGuess init_a{InitialGuess::Kind::Truth};
  InitialGuess init_c{};
  ContrastLevels levels;
  ParameterBox box;
  double eps = 0.1;
  std::optional<double> alpha;
  double auto_step_fraction = 0.1;
  double beta_a = 0.0;
  double beta_c = 0.0;
  double eta = 1e-8;
  double delta = 0.0;
  std::uint64_t seed = 1;
  int refine = 1;
  StageSchedule schedule;
  /// Iteration cap for the single-mode runs.
  int max_iter = 5000;
  std::optional<double> target_error = 1e-2;
  SolverSettings solver;
  ErrorProjection error_projection = ErrorProjection::Smooth;
  std::string output_dir = "out";
  RunMode mode = RunMode::CeeOnly;
  int snapshot_every = 250;
  bool images = false;
  /// Measurement CSV to reconstruct from; empty means synthesize from the phantom.
  std::string data_file;

  void validate() const;
};

/// Configuration problem: bad JSON (message carries line/column) or a field
/// failing validation (key names the offending entry).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

RunConfig parse_config(const std::string& text);
std::string serialize_config(const RunConfig& config);
bool same_config(const RunConfig& x, const RunConfig& y);

ReconstructionConfig reconstruction_config(const RunConfig& config);

void write_field_grid(const Mesh& mesh, const NodalField& field, const std::filesystem::path& path,
                      bool image = false);
NodalField read_field_grid(const Mesh& mesh, const std::filesystem::path& path);
void write_pgm(const Mesh& mesh, const NodalField& field, const std::filesystem::path& path);

void write_history(const std::vector<IterationRecord>& history, const std::filesystem::path& path);

void write_measurements(const Mesh& mesh, const ExperimentSet& experiments,
                        const std::filesystem::path& path);
ExperimentSet read_measurements(const Mesh& mesh, const std::filesystem::path& path);

/// Exit codes: 0 success, 1 usage or validation error, 2 solver failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace lsdot
