#include "lsdot/cli_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace lsdot {

using nlohmann::json;

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::CeeOnly: return "c-only";
    case RunMode::AyeOnly: return "a-only";
    case RunMode::Joint: return "joint";
    case RunMode::ThreeStage: return "three-stage";
  }
  return "unknown";
}

RunMode run_mode_from_string(std::string_view name) {
  if (name == "c-only") return RunMode::CeeOnly;
  if (name == "a-only") return RunMode::AyeOnly;
  if (name == "joint") return RunMode::Joint;
  if (name == "three-stage") return RunMode::ThreeStage;
  throw std::invalid_argument("unknown mode '" + std::string(name) +
                              "' (expected c-only, a-only, joint or three-stage)");
}

NodalField make_initial_level_set(const InitialGuess& guess, const Mesh& mesh,
                                  const NodalField& truth, double level_inside) {
  switch (guess.kind) {
    case InitialGuess::Kind::Paraboloid:
      return guess.scale * init_paraboloid(mesh, guess.center, guess.radius);
    case InitialGuess::Kind::Truth: {
      NodalField phi(mesh.num_nodes());
      for (int k = 0; k < phi.size(); ++k) {
        phi[k] = truth[k] == level_inside ? guess.scale : -guess.scale;
      }
      return phi;
    }
    case InitialGuess::Kind::Constant:
      return NodalField::Constant(mesh.num_nodes(), guess.value);
  }
  return {};
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& msg) { throw ConfigError(key, msg); };
  auto nested = [&](const std::string& key, auto&& check) {
    try {
      check();
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  };
  if (nodes_per_side < 3) fail("nodes_per_side", "must be >= 3");
  {
    const auto& names = phantom_names();
    if (std::find(names.begin(), names.end(), phantom) == names.end()) {
      fail("phantom", "unknown phantom '" + phantom + "'");
    }
  }
  auto check_guess = [&](const std::string& key, const InitialGuess& g) {
    if (g.kind == InitialGuess::Kind::Paraboloid && !(g.radius > 0.0)) {
      fail(key + ".radius", "must be positive");
    }
    if (g.kind != InitialGuess::Kind::Constant && !(g.scale > 0.0)) {
      fail(key + ".scale", "must be positive");
    }
    if (!std::isfinite(g.value)) fail(key + ".value", "must be finite");
  };
  check_guess("init_a", init_a);
  check_guess("init_c", init_c);
  nested("levels", [&] { levels.validate(); });
  nested("box", [&] { box.validate(); });
  for (double v : {levels.a1, levels.a2}) {
    if (v < box.a_lo || v > box.a_hi) fail("levels", "a levels lie outside the box");
  }
  for (double v : {levels.c1, levels.c2}) {
    if (v < box.c_lo || v > box.c_hi) fail("levels", "c levels lie outside the box");
  }
  if (!(eps > 0.0)) fail("eps", "must be positive");
  if (alpha && !(*alpha > 0.0)) fail("alpha", "must be positive or \"auto\"");
  if (!(auto_step_fraction > 0.0)) fail("auto_step_fraction", "must be positive");
  if (!(beta_a >= 0.0)) fail("beta_a", "must be >= 0");
  if (!(beta_c >= 0.0)) fail("beta_c", "must be >= 0");
  if (!(eta > 0.0)) fail("eta", "must be positive");
  if (!(delta >= 0.0)) fail("delta", "must be >= 0");
  if (refine < 1) fail("refine", "must be >= 1");
  nested("schedule", [&] { schedule.validate(); });
  if (max_iter < 0) fail("max_iter", "must be >= 0");
  if (target_error && !(*target_error > 0.0)) fail("target_error", "must be positive or null");
  nested("solver", [&] { solver.validate(); });
  if (output_dir.empty()) fail("output_dir", "must not be empty");
  if (snapshot_every < 1) fail("snapshot_every", "must be >= 1");
}

namespace {

// Reads one JSON object, remembering which keys were consumed so that the
// rest can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
  }

  std::string key(const std::string& name) const {
    return path_.empty() ? name : path_ + "." + name;
  }

  const json* find(const std::string& name) {
    seen_.insert(name);
    auto it = j_.find(name);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& name, T& out) {
    if (const json* v = find(name)) {
      try {
        out = v->get<T>();
      } catch (const json::exception&) {
        throw ConfigError(key(name), "has the wrong type");
      }
    }
  }

  void number(const std::string& name, double& out) {
    if (const json* v = find(name)) {
      if (!v->is_number()) throw ConfigError(key(name), "must be a number");
      out = v->get<double>();
    }
  }

  void integer(const std::string& name, int& out) {
    if (const json* v = find(name)) {
      if (!v->is_number_integer()) throw ConfigError(key(name), "must be an integer");
      out = v->get<int>();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

InitialGuess::Kind guess_kind(const std::string& key, const std::string& s) {
  if (s == "paraboloid") return InitialGuess::Kind::Paraboloid;
  if (s == "truth") return InitialGuess::Kind::Truth;
  if (s == "constant") return InitialGuess::Kind::Constant;
  throw ConfigError(key, "unknown kind '" + s + "' (expected paraboloid, truth or constant)");
}

std::string guess_kind_name(InitialGuess::Kind k) {
  switch (k) {
    case InitialGuess::Kind::Paraboloid: return "paraboloid";
    case InitialGuess::Kind::Truth: return "truth";
    case InitialGuess::Kind::Constant: return "constant";
  }
  return "paraboloid";
}

void read_guess(ObjectReader& parent, const std::string& name, InitialGuess& g) {
  const json* v = parent.find(name);
  if (!v) return;
  ObjectReader r(*v, parent.key(name));
  std::string kind = guess_kind_name(g.kind);
  r.get("kind", kind);
  g.kind = guess_kind(r.key("kind"), kind);
  if (const json* c = r.find("center")) {
    if (!c->is_array() || c->size() != 2 || !(*c)[0].is_number() || !(*c)[1].is_number()) {
      throw ConfigError(r.key("center"), "must be [x, y]");
    }
    g.center = {(*c)[0].get<double>(), (*c)[1].get<double>()};
  }
  r.number("radius", g.radius);
  r.number("scale", g.scale);
  r.number("value", g.value);
  r.finish();
}

json guess_json(const InitialGuess& g) {
  return {{"kind", guess_kind_name(g.kind)},
          {"center", {g.center.x, g.center.y}},
          {"radius", g.radius},
          {"scale", g.scale},
          {"value", g.value}};
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return cfg;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("config ") + e.what());
  }
  ObjectReader r(j, "");
  r.integer("nodes_per_side", cfg.nodes_per_side);
  r.get("phantom", cfg.phantom);
  read_guess(r, "init_a", cfg.init_a);
  read_guess(r, "init_c", cfg.init_c);
  if (const json* v = r.find("levels")) {
    ObjectReader lv(*v, "levels");
    lv.number("a1", cfg.levels.a1);
    lv.number("a2", cfg.levels.a2);
    lv.number("c1", cfg.levels.c1);
    lv.number("c2", cfg.levels.c2);
    lv.finish();
  }
  if (const json* v = r.find("box")) {
    ObjectReader b(*v, "box");
    b.number("a_lo", cfg.box.a_lo);
    b.number("a_hi", cfg.box.a_hi);
    b.number("c_lo", cfg.box.c_lo);
    b.number("c_hi", cfg.box.c_hi);
    b.finish();
  }
  r.number("eps", cfg.eps);
  if (const json* v = r.find("alpha")) {
    if (v->is_string() && v->get<std::string>() == "auto") {
      cfg.alpha.reset();
    } else if (v->is_number()) {
      cfg.alpha = v->get<double>();
    } else {
      throw ConfigError("alpha", "must be a number or \"auto\"");
    }
  }
  r.number("auto_step_fraction", cfg.auto_step_fraction);
  r.number("beta_a", cfg.beta_a);
  r.number("beta_c", cfg.beta_c);
  r.number("eta", cfg.eta);
  r.number("delta", cfg.delta);
  if (const json* v = r.find("seed")) {
    if (!v->is_number_unsigned()) throw ConfigError("seed", "must be a non-negative integer");
    cfg.seed = v->get<std::uint64_t>();
  }
  r.integer("refine", cfg.refine);
  if (const json* v = r.find("schedule")) {
    ObjectReader s(*v, "schedule");
    s.integer("k1", cfg.schedule.k1);
    s.integer("k2", cfg.schedule.k2);
    if (const json* ratio = s.find("ratio")) {
      if (!ratio->is_array() || ratio->size() != 2 || !(*ratio)[0].is_number_integer() ||
          !(*ratio)[1].is_number_integer()) {
        throw ConfigError("schedule.ratio", "must be [a_steps, c_steps]");
      }
      cfg.schedule.ratio_a = (*ratio)[0].get<int>();
      cfg.schedule.ratio_c = (*ratio)[1].get<int>();
    }
    s.integer("max_iter", cfg.schedule.max_iter);
    std::string rule = cfg.schedule.rule == TransitionRule::Budget ? "budget" : "stagnation";
    s.get("rule", rule);
    if (rule == "budget") {
      cfg.schedule.rule = TransitionRule::Budget;
    } else if (rule == "stagnation") {
      cfg.schedule.rule = TransitionRule::Stagnation;
    } else {
      throw ConfigError("schedule.rule", "must be \"budget\" or \"stagnation\"");
    }
    s.integer("stag_window", cfg.schedule.stag_window);
    s.number("stag_tol", cfg.schedule.stag_tol);
    s.finish();
  }
  r.integer("max_iter", cfg.max_iter);
  if (const json* v = r.find("target_error")) {
    if (v->is_null()) {
      cfg.target_error.reset();
    } else if (v->is_number()) {
      cfg.target_error = v->get<double>();
    } else {
      throw ConfigError("target_error", "must be a number or null");
    }
  }
  if (const json* v = r.find("solver")) {
    ObjectReader s(*v, "solver");
    std::string method =
        cfg.solver.method == SolverMethod::ConjugateGradient ? "cg" : "direct";
    s.get("method", method);
    if (method == "cg") {
      cfg.solver.method = SolverMethod::ConjugateGradient;
    } else if (method == "direct") {
      cfg.solver.method = SolverMethod::DirectFactorization;
    } else {
      throw ConfigError("solver.method", "must be \"cg\" or \"direct\"");
    }
    s.number("rel_tol", cfg.solver.rel_tol);
    s.integer("max_iter", cfg.solver.max_iter);
    s.finish();
  }
  {
    std::string proj = cfg.error_projection == ErrorProjection::Smooth ? "smooth" : "sharp";
    r.get("error_projection", proj);
    if (proj == "smooth") {
      cfg.error_projection = ErrorProjection::Smooth;
    } else if (proj == "sharp") {
      cfg.error_projection = ErrorProjection::Sharp;
    } else {
      throw ConfigError("error_projection", "must be \"smooth\" or \"sharp\"");
    }
  }
  r.get("output_dir", cfg.output_dir);
  if (const json* v = r.find("mode")) {
    if (!v->is_string()) throw ConfigError("mode", "must be a string");
    try {
      cfg.mode = run_mode_from_string(v->get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("mode", e.what());
    }
  }
  r.integer("snapshot_every", cfg.snapshot_every);
  r.get("images", cfg.images);
  r.get("data_file", cfg.data_file);
  r.finish();
  cfg.validate();
  return cfg;
}

std::string serialize_config(const RunConfig& c) {
  json j;
  j["nodes_per_side"] = c.nodes_per_side;
  j["phantom"] = c.phantom;
  j["init_a"] = guess_json(c.init_a);
  j["init_c"] = guess_json(c.init_c);
  j["levels"] = {{"a1", c.levels.a1}, {"a2", c.levels.a2}, {"c1", c.levels.c1}, {"c2", c.levels.c2}};
  j["box"] = {{"a_lo", c.box.a_lo}, {"a_hi", c.box.a_hi}, {"c_lo", c.box.c_lo}, {"c_hi", c.box.c_hi}};
  j["eps"] = c.eps;
  j["alpha"] = c.alpha ? json(*c.alpha) : json("auto");
  j["auto_step_fraction"] = c.auto_step_fraction;
  j["beta_a"] = c.beta_a;
  j["beta_c"] = c.beta_c;
  j["eta"] = c.eta;
  j["delta"] = c.delta;
  j["seed"] = c.seed;
  j["refine"] = c.refine;
  j["schedule"] = {{"k1", c.schedule.k1},
                   {"k2", c.schedule.k2},
                   {"ratio", {c.schedule.ratio_a, c.schedule.ratio_c}},
                   {"max_iter", c.schedule.max_iter},
                   {"rule", c.schedule.rule == TransitionRule::Budget ? "budget" : "stagnation"},
                   {"stag_window", c.schedule.stag_window},
                   {"stag_tol", c.schedule.stag_tol}};
  j["max_iter"] = c.max_iter;
  j["target_error"] = c.target_error ? json(*c.target_error) : json(nullptr);
  j["solver"] = {
      {"method", c.solver.method == SolverMethod::ConjugateGradient ? "cg" : "direct"},
      {"rel_tol", c.solver.rel_tol},
      {"max_iter", c.solver.max_iter}};
  j["error_projection"] = c.error_projection == ErrorProjection::Smooth ? "smooth" : "sharp";
  j["output_dir"] = c.output_dir;
  j["mode"] = std::string(to_string(c.mode));
  j["snapshot_every"] = c.snapshot_every;
  j["images"] = c.images;
  j["data_file"] = c.data_file;
  return j.dump(2) + "\n";
}

bool same_config(const RunConfig& x, const RunConfig& y) {
  return serialize_config(x) == serialize_config(y);
}

ReconstructionConfig reconstruction_config(const RunConfig& c) {
  ReconstructionConfig rc;
  rc.solver = c.solver;
  rc.alpha = c.alpha;
  rc.auto_step_fraction = c.auto_step_fraction;
  rc.beta_a = c.beta_a;
  rc.beta_c = c.beta_c;
  rc.eta = c.eta;
  rc.error_projection = c.error_projection;
  return rc;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(17);
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return in;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": bad number '" + s +
                             "'");
  }
}

}  // namespace

void write_field_grid(const Mesh& mesh, const NodalField& field, const std::filesystem::path& path,
                      bool image) {
  if (field.size() != mesh.num_nodes()) throw std::invalid_argument("field is not sized to the mesh");
  auto out = open_out(path);
  for (int i = 0; i < mesh.nx(); ++i) {
    for (int j = 0; j < mesh.ny(); ++j) {
      if (j > 0) out << ',';
      out << field[mesh.node_index(i, j)];
    }
    out << '\n';
  }
  check_written(out, path);
  if (image) {
    auto pgm = path;
    write_pgm(mesh, field, pgm.replace_extension(".pgm"));
  }
}

NodalField read_field_grid(const Mesh& mesh, const std::filesystem::path& path) {
  auto in = open_in(path);
  NodalField field(mesh.num_nodes());
  std::string line;
  int i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (i >= mesh.nx()) throw std::runtime_error(path.string() + ": too many rows");
    const auto cells = split_csv(line);
    if (static_cast<int>(cells.size()) != mesh.ny()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(i + 1) + ": expected " +
                               std::to_string(mesh.ny()) + " columns");
    }
    for (int j = 0; j < mesh.ny(); ++j) field[mesh.node_index(i, j)] = parse_double(cells[j], path, i + 1);
    ++i;
  }
  if (i != mesh.nx()) throw std::runtime_error(path.string() + ": expected " +
                                               std::to_string(mesh.nx()) + " rows");
  return field;
}

void write_pgm(const Mesh& mesh, const NodalField& field, const std::filesystem::path& path) {
  auto out = open_out(path);
  const double lo = field.minCoeff();
  const double hi = field.maxCoeff();
  out << "P2\n" << mesh.nx() << ' ' << mesh.ny() << "\n255\n";
  // top image row is the largest y
  for (int j = mesh.ny() - 1; j >= 0; --j) {
    for (int i = 0; i < mesh.nx(); ++i) {
      const double v = field[mesh.node_index(i, j)];
      const int gray = hi > lo ? static_cast<int>(std::lround(255.0 * (v - lo) / (hi - lo))) : 0;
      out << gray << (i + 1 < mesh.nx() ? ' ' : '\n');
    }
  }
  check_written(out, path);
}

void write_history(const std::vector<IterationRecord>& history, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "iter,stage,misfit,err_a,err_c,step_a,step_c\n";
  for (const auto& r : history) {
    out << r.iter << ',' << to_string(r.stage) << ',' << r.misfit << ',';
    if (r.err_a) out << *r.err_a;
    out << ',';
    if (r.err_c) out << *r.err_c;
    out << ',' << r.step_a << ',' << r.step_c << '\n';
  }
  check_written(out, path);
}

void write_measurements(const Mesh& mesh, const ExperimentSet& experiments,
                        const std::filesystem::path& path) {
  experiments.validate(mesh);
  auto out = open_out(path);
  out << "m,node_index,arc_position,g,h\n";
  const auto& nodes = mesh.boundary_nodes();
  const auto& arc = mesh.arc_positions();
  for (std::size_t m = 0; m < experiments.size(); ++m) {
    for (int p = 0; p < mesh.num_boundary_nodes(); ++p) {
      out << m << ',' << nodes[p] << ',' << arc[p] << ',' << experiments.excitations[m][p] << ','
          << experiments.measurements[m][p] << '\n';
    }
  }
  check_written(out, path);
}

ExperimentSet read_measurements(const Mesh& mesh, const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "m,node_index,arc_position,g,h") {
    throw std::runtime_error(path.string() + ": missing header m,node_index,arc_position,g,h");
  }
  const int nb = mesh.num_boundary_nodes();
  ExperimentSet out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                                    ": expected 5 columns");
    const auto m = static_cast<std::size_t>(parse_double(cells[0], path, lineno));
    const int node = static_cast<int>(parse_double(cells[1], path, lineno));
    if (m == out.size()) {
      out.excitations.emplace_back(BoundaryField::Zero(nb));
      out.measurements.emplace_back(BoundaryField::Zero(nb));
    } else if (m + 1 != out.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": experiments must be listed in order");
    }
    const auto& nodes = mesh.boundary_nodes();
    const auto it = std::find(nodes.begin(), nodes.end(), node);
    if (it == nodes.end()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": node " +
                               std::to_string(node) + " is not a boundary node of this mesh");
    }
    const auto p = it - nodes.begin();
    out.excitations[m][p] = parse_double(cells[3], path, lineno);
    out.measurements[m][p] = parse_double(cells[4], path, lineno);
  }
  if (out.size() == 0) throw std::runtime_error(path.string() + ": no measurements");
  out.validate(mesh);
  return out;
}

namespace {

struct Problem {
  Mesh mesh;
  Phantom phantom;
  ExperimentSet data;
};

Problem build_problem(const RunConfig& cfg) {
  Mesh mesh(cfg.nodes_per_side, cfg.nodes_per_side, kUnitSquare);
  Phantom ph = make_phantom(cfg.phantom, mesh);
  ph.levels = cfg.levels;
  ph = resample(ph, mesh);
  ExperimentSet data = cfg.data_file.empty()
                           ? synthesize_data(ph, make_excitations(mesh), mesh, cfg.refine, cfg.delta,
                                             cfg.seed, cfg.solver)
                           : read_measurements(mesh, cfg.data_file);
  if (!cfg.data_file.empty()) data.delta = cfg.delta;
  return {std::move(mesh), std::move(ph), std::move(data)};
}

std::string snapshot_name(const std::string& what, int iter) {
  std::ostringstream os;
  os << what << '_' << std::setw(5) << std::setfill('0') << iter << ".csv";
  return os.str();
}

int cmd_synthesize(const RunConfig& cfg) {
  const auto problem = build_problem(cfg);
  const std::filesystem::path out = std::filesystem::path(cfg.output_dir) / "measurements.csv";
  write_measurements(problem.mesh, problem.data, out);
  std::cout << "wrote " << out.string() << " (" << problem.data.size() << " experiments, delta "
            << cfg.delta << ")\n";
  return 0;
}

int cmd_phantom(const RunConfig& cfg) {
  const Mesh mesh(cfg.nodes_per_side, cfg.nodes_per_side, kUnitSquare);
  Phantom ph = make_phantom(cfg.phantom, mesh);
  ph.levels = cfg.levels;
  ph = resample(ph, mesh);
  const std::filesystem::path dir(cfg.output_dir);
  write_field_grid(mesh, ph.a_true, dir / "a_true.csv", cfg.images);
  write_field_grid(mesh, ph.c_true, dir / "c_true.csv", cfg.images);
  std::cout << "phantom " << ph.name << '\n';
  for (const auto& s : ph.a_support) std::cout << "  a support: " << s.describe() << '\n';
  for (const auto& s : ph.c_support) std::cout << "  c support: " << s.describe() << '\n';
  std::cout << "wrote " << (dir / "a_true.csv").string() << " and " << (dir / "c_true.csv").string()
            << '\n';
  return 0;
}

int cmd_reconstruct(const RunConfig& cfg) {
  const auto problem = build_problem(cfg);
  const auto& mesh = problem.mesh;
  const auto& ph = problem.phantom;
  LevelSetPair ls;
  ls.levels = cfg.levels;
  ls.eps = cfg.eps;
  ls.phi_a = make_initial_level_set(cfg.init_a, mesh, ph.a_true, cfg.levels.a1);
  ls.phi_c = make_initial_level_set(cfg.init_c, mesh, ph.c_true, cfg.levels.c1);

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir / "snapshots");
  auto snapshot = [&](const IterationState& s) {
    const auto coeffs = s.reported_coefficients();
    write_field_grid(mesh, coeffs.a, dir / "snapshots" / snapshot_name("a", s.iter()), cfg.images);
    write_field_grid(mesh, coeffs.c, dir / "snapshots" / snapshot_name("c", s.iter()), cfg.images);
  };
  const StepObserver observer = [&](const IterationState& s) {
    if (s.iter() % cfg.snapshot_every == 0) snapshot(s);
  };

  const auto rc = reconstruction_config(cfg);
  const Truth truth{ph.a_true, ph.c_true};
  std::optional<RunResult> result;
  if (cfg.mode == RunMode::ThreeStage) {
    result.emplace(run_three_stage(mesh, ls, problem.data, cfg.schedule, rc, truth, observer));
  } else {
    FixedRunOptions opt;
    opt.which = cfg.mode == RunMode::CeeOnly   ? Coefficient::C
                : cfg.mode == RunMode::AyeOnly ? Coefficient::A
                                               : Coefficient::Both;
    opt.max_iter = cfg.max_iter;
    opt.target_error = cfg.target_error;
    result.emplace(run_fixed(mesh, ls, problem.data, rc, opt, truth, observer));
  }
  const auto& state = result->state;
  snapshot(state);
  write_history(result->history(), dir / "history.csv");
  {
    auto out = open_out(dir / "run.json");
    out << serialize_config(cfg);
    check_written(out, dir / "run.json");
  }

  const auto& last = result->history().back();
  std::cout << "mode " << to_string(cfg.mode) << ", " << state.iter() << " iterations, stop "
            << to_string(result->reason) << '\n';
  std::cout << std::setprecision(6) << "alpha_a "
            << (state.alpha_a() ? std::to_string(*state.alpha_a()) : "unused") << ", alpha_c "
            << (state.alpha_c() ? std::to_string(*state.alpha_c()) : "unused") << '\n';
  std::cout << "misfit " << last.misfit << ", err_a " << *last.err_a << ", err_c " << *last.err_c
            << '\n';
  std::cout << "wrote " << (dir / "history.csv").string() << '\n';
  return 0;
}

// Built-in oracle suite ------------------------------------------------------

double exact_u(const Point& p) {
  return std::cos(std::numbers::pi * p.x) * std::cos(std::numbers::pi * p.y);
}

// L² and H¹-seminorm errors against the exact manufactured solution, by a
// degree-2 (edge midpoint) rule on each triangle.
std::pair<double, double> manufactured_errors(int n) {
  const Mesh mesh(n, n, kUnitSquare);
  const double pi = std::numbers::pi;
  const NodalField one = NodalField::Ones(mesh.num_nodes());
  const NodalField f = interpolate(mesh, [&](const Point& p) { return (2 * pi * pi + 1) * exact_u(p); });
  SolverSettings s;
  s.method = SolverMethod::DirectFactorization;
  const NodalField uh = solve_spd(assemble_system(mesh, one, one), assemble_source_load(mesh, f), s);
  double e0 = 0.0, e1 = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto& g = mesh.basis_gradients(t);
    Point grad{0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
      grad.x += uh[tri[k]] * g[k].x;
      grad.y += uh[tri[k]] * g[k].y;
    }
    for (int k = 0; k < 3; ++k) {
      const Point& p = mesh.node(tri[k]);
      const Point& q = mesh.node(tri[(k + 1) % 3]);
      const Point mid{(p.x + q.x) / 2, (p.y + q.y) / 2};
      const double d = 0.5 * (uh[tri[k]] + uh[tri[(k + 1) % 3]]) - exact_u(mid);
      const double ux = -pi * std::sin(pi * mid.x) * std::cos(pi * mid.y);
      const double uy = -pi * std::cos(pi * mid.x) * std::sin(pi * mid.y);
      e0 += mesh.area(t) / 3 * d * d;
      e1 += mesh.area(t) / 3 * ((grad.x - ux) * (grad.x - ux) + (grad.y - uy) * (grad.y - uy));
    }
  }
  return {std::sqrt(e0), std::sqrt(e1)};
}

bool verify_manufactured() {
  const auto [l2a, h1a] = manufactured_errors(17);
  const auto [l2b, h1b] = manufactured_errors(33);
  const auto [l2c, h1c] = manufactured_errors(65);
  const double q0 = std::log2(l2a / l2b);
  const double q1 = std::log2(h1a / h1b);
  const double r0 = std::log2(l2b / l2c);
  const double r1 = std::log2(h1b / h1c);
  const bool ok = std::abs(r0 - 2.0) <= 0.2 && std::abs(q0 - 2.0) <= 0.2 &&
                  std::abs(r1 - 1.0) <= 0.2 && std::abs(q1 - 1.0) <= 0.2;
  std::cout << (ok ? "PASS" : "FAIL") << " manufactured solution: L2 orders " << q0 << ", " << r0
            << "; H1 orders " << q1 << ", " << r1 << '\n';
  return ok;
}

bool verify_adjoint() {
  const Mesh mesh(25, 25, kUnitSquare);
  SolverSettings s;
  s.method = SolverMethod::DirectFactorization;
  const Phantom ph = make_phantom("single-pair", mesh);
  const auto data = synthesize_data(ph, make_excitations(mesh), mesh, 1, 0.0, 1, s);
  LevelSetPair ls;
  ls.phi_a = 10.0 * init_paraboloid(mesh, {0.35, 0.6}, 0.2);
  ls.phi_c = 10.0 * init_paraboloid(mesh, {0.6, 0.4}, 0.2);
  auto objective = [&](const LevelSetPair& l) {
    const auto co = project_smooth(l);
    return misfit(mesh, residuals(mesh, co.a, co.c, data, s).r);
  };
  const auto co = project_smooth(ls);
  const SpdSolver solver(assemble_system(mesh, co.a, co.c), s);
  const auto res = residuals(mesh, solver, data);
  NodalField sa = NodalField::Zero(mesh.num_nodes());
  NodalField sc = sa;
  for (std::size_t m = 0; m < res.r.size(); ++m) {
    const auto sd = shape_derivative_fields(mesh, res.u[m], adjoint_solve(mesh, solver, res.r[m]));
    sa += sd.da;
    sc += sd.dc;
  }
  const auto terms = assemble_L(mesh, ls, sa, sc, 1.0, 0.0, 0.0, 1e-8);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst = 0.0;
  for (int which = 0; which < 2; ++which) {
    const NodalField& phi = which ? ls.phi_c : ls.phi_a;
    NodalField v = NodalField::Zero(mesh.num_nodes());
    for (int k = 0; k < v.size(); ++k) {
      if (phi[k] > -0.9 * ls.eps && phi[k] < -0.1 * ls.eps) v[k] = unif(rng);
    }
    const double t = 1e-4;
    LevelSetPair plus = ls, minus = ls;
    (which ? plus.phi_c : plus.phi_a) += t * v;
    (which ? minus.phi_c : minus.phi_a) -= t * v;
    const double fd = (objective(plus) - objective(minus)) / (2 * t);
    const NodalField& part = which ? terms.data_part_c : terms.data_part_a;
    const double predicted = 2.0 * part.cwiseProduct(mesh.lumped_weights()).dot(v);
    worst = std::max(worst, std::abs(fd - predicted) / std::max(std::abs(fd), 1e-300));
  }
  const bool ok = worst <= 1e-3;
  std::cout << (ok ? "PASS" : "FAIL") << " adjoint gradient vs finite differences: rel err " << worst
            << '\n';
  return ok;
}

bool verify_reciprocity() {
  const Mesh mesh(33, 33, kUnitSquare);
  SolverSettings s;
  s.method = SolverMethod::DirectFactorization;
  const auto g = make_excitations(mesh);
  const NodalField a = interpolate(mesh, [](const Point& p) { return 2.0 + std::sin(3 * p.x) * p.y; });
  const NodalField c = interpolate(mesh, [](const Point& p) { return 1.5 + p.x * p.x; });
  const SpdSolver solver(assemble_system(mesh, a, c), s);
  std::vector<ForwardSolution> sol;
  for (const auto& gm : g) sol.push_back(forward_solve(mesh, solver, gm));
  double worst_sym = 0.0;
  double worst_flux = 0.0;
  const SparseMatrix mass = assemble_mass(mesh, c);
  for (std::size_t m = 0; m < g.size(); ++m) {
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double x = boundary_l2_inner(mesh, g[m], sol[n].h);
      const double y = boundary_l2_inner(mesh, g[n], sol[m].h);
      worst_sym = std::max(worst_sym, std::abs(x - y) / std::max(std::abs(x), std::abs(y)));
    }
    const double cu = NodalField::Ones(mesh.num_nodes()).dot(mass * sol[m].u);
    const double flux = mesh.boundary_weights().dot(g[m]);
    worst_flux = std::max(worst_flux, std::abs(cu - flux));
  }
  const bool ok = worst_sym <= 1e-8 && worst_flux <= 1e-8;
  std::cout << (ok ? "PASS" : "FAIL") << " reciprocity " << worst_sym << ", compatibility "
            << worst_flux << '\n';
  return ok;
}

int cmd_verify() {
  bool ok = verify_manufactured();
  ok = verify_adjoint() && ok;
  ok = verify_reciprocity() && ok;
  return ok ? 0 : 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Level-set reconstruction of piecewise constant diffusion and absorption", "lsdot"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<std::string> output;
  std::optional<std::string> phantom;
  std::optional<int> nodes;
  std::optional<int> max_iter;
  std::optional<std::uint64_t> seed;
  std::optional<double> delta;
  std::optional<std::string> solver;
  std::optional<std::string> data_file;
  bool images = false;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--mode", mode, "c-only, a-only, joint or three-stage");
  app.add_option("--output", output, "output directory");
  app.add_option("--phantom", phantom, "ground-truth phantom name");
  app.add_option("--nodes", nodes, "nodes per side");
  app.add_option("--max-iter", max_iter, "iteration cap for single-mode runs");
  app.add_option("--seed", seed, "noise seed");
  app.add_option("--delta", delta, "noise level in L2(boundary) units");
  app.add_option("--solver", solver, "cg or direct");
  app.add_option("--data", data_file, "measurement CSV to reconstruct from");
  app.add_flag("--images", images, "write PGM images next to field grids");
  app.fallthrough();
  auto* synth = app.add_subcommand("synthesize", "write synthetic measurements");
  auto* recon = app.add_subcommand("reconstruct", "run the configured reconstruction");
  auto* verify = app.add_subcommand("verify", "run the built-in oracle checks");
  auto* phant = app.add_subcommand("phantom", "export ground-truth field grids");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    std::string text;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("--config", "cannot read '" + config_path + "'");
      text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    RunConfig cfg;
    if (const char* env = std::getenv("LSDOT_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    {
      RunConfig parsed = parse_config(text);
      const bool file_sets_output = !text.empty() && json::parse(text).contains("output_dir");
      if (!file_sets_output) parsed.output_dir = cfg.output_dir;
      cfg = parsed;
    }
    if (mode) {
      try {
        cfg.mode = run_mode_from_string(*mode);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("--mode", e.what());
      }
    }
    if (output) cfg.output_dir = *output;
    if (phantom) cfg.phantom = *phantom;
    if (nodes) cfg.nodes_per_side = *nodes;
    if (max_iter) cfg.max_iter = *max_iter;
    if (seed) cfg.seed = *seed;
    if (delta) cfg.delta = *delta;
    if (data_file) cfg.data_file = *data_file;
    if (images) cfg.images = true;
    if (solver) {
      if (*solver == "cg") {
        cfg.solver.method = SolverMethod::ConjugateGradient;
      } else if (*solver == "direct") {
        cfg.solver.method = SolverMethod::DirectFactorization;
      } else {
        throw ConfigError("--solver", "must be cg or direct");
      }
    }
    cfg.validate();

    if (*synth) return cmd_synthesize(cfg);
    if (*recon) return cmd_reconstruct(cfg);
    if (*verify) return cmd_verify();
    if (*phant) return cmd_phantom(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace lsdot
