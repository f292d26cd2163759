// Procedural synthetic solids: axis-aligned boxes, L-shaped blocks and upright
// cylinders with analytic topology. Stands in for a real CAD corpus.
#pragma once

#include <string>

#include "cmt/brep.hpp"
#include "cmt/rng.hpp"

namespace cmt {

enum class ShapeFamily { Box, LBlock, Cylinder };

const char* family_name(ShapeFamily f);

struct ShapeSpec {
  ShapeFamily family = ShapeFamily::Box;
  // Box: dx, dy, dz. Cylinder: radius, height (axis = z).
  double dx = 1, dy = 1, dz = 1;
  double radius = 0.5, height = 1;
  // LBlock cross-section in xy (outer dx * dy minus the +x/+y corner notch),
  // extruded along z by dz.
  double cut_x = 0.5, cut_y = 0.5;
  uint64_t seed = 0;

  void check() const;  // throws on non-positive dimensions
};

// Draws a random spec of a random family. Dimension ranges keep every edge
// longer than ~0.24 after normalization so vertex clustering stays unambiguous.
ShapeSpec random_spec(Rng& rng);

// Builds the exact B-Rep for the spec: grids sampled uniformly in parameter
// space with outward normals, edges with m points each, analytic adjacency.
// The result is normalized (longest axis spans [-1,1]).
BRepModel synth_generate(const ShapeSpec& spec, int grid_n = 8, int edge_m = 8);

// Analytic n x n patch for one face of the spec's solid (before normalization).
// face indices follow the construction order used by synth_generate.
SurfacePatch sample_surface(const ShapeSpec& spec, int face, int n);

int face_count(ShapeFamily f);

// Short natural-language caption ("a tall box", "an l-shaped block", ...).
std::string caption_for(const ShapeSpec& spec, Rng& rng);

// Every word that caption_for can emit, for building the text vocabulary.
std::vector<std::string> caption_vocabulary();

}  // namespace cmt
