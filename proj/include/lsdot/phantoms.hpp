#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsdot/forward_model.hpp"
#include "lsdot/levelset.hpp"

namespace lsdot {

/// Disk or axis-aligned rectangle; a support is a union of these.
struct Shape {
  enum class Kind { Disk, Box };
  Kind kind = Kind::Disk;
  Point center;        // disk
  double radius = 0;   // disk
  Rectangle box;       // box

  bool contains(const Point& p) const;
  double area() const;
  std::string describe() const;
};

struct Phantom {
  std::string name;
  NodalField a_true;
  NodalField c_true;
  ContrastLevels levels;
  std::vector<Shape> a_support;
  std::vector<Shape> c_support;
};

/// Names accepted by make_phantom.
const std::vector<std::string>& phantom_names();

/// Indicator of the middle half of each side (Bottom, Right, Top, Left), value 1;
/// nodes exactly at a segment end get 1/2.
std::vector<BoundaryField> make_excitations(const Mesh& mesh);

/// Two-valued ground truth (levels 10 inside, 1 outside) sampled at the nodes.
Phantom make_phantom(const std::string& name, const Mesh& mesh);

/// Resamples a phantom's geometry onto another mesh.
Phantom resample(const Phantom& phantom, const Mesh& mesh);

/// Solves the forward problems on a mesh refined by `refine`, restricts traces to
/// the working boundary and adds noise of L²(Γ) size delta with seed + m.
ExperimentSet synthesize_data(const Phantom& phantom, const std::vector<BoundaryField>& excitations,
                              const Mesh& mesh, int refine, double delta, std::uint64_t seed,
                              const SolverSettings& settings = {});

}  // namespace lsdot
