// Turns generated tokens plus a predicted adjacency matrix back into a
// BRepModel: decode latents in the local frame, place them via token bounding
// boxes, weld endpoints into shared vertices and check topology.
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cmt/brep.hpp"

namespace cmt {

// Token layouts (see tokens.hpp): edge = latent(d_e) | bbox(6) | start(3) | end(3),
// surface = bbox(6) | latent(d_s).
struct TokenizedModel {
  std::vector<std::vector<double>> edge_tokens;
  std::vector<std::vector<double>> surf_tokens;
  std::vector<std::vector<uint8_t>> adjacency;  // N_e x N_s
  int d_e = 0, d_s = 0;
};

// latent -> flattened local-frame coordinates (grid n*n*3 or polyline m*3)
using DecodeFn = std::function<std::vector<double>(std::span<const double>)>;

struct AssembleResult {
  BRepModel model;
  ValidityReport report;
};

// eps is the vertex weld tolerance. Decoded curves are blended so their
// endpoints meet the token's start/end exactly; geometry is never re-fit to
// satisfy the adjacency.
AssembleResult assemble(const TokenizedModel& tm, int grid_n, int edge_m,
                        const DecodeFn& decode_surface, const DecodeFn& decode_edge,
                        double eps = kVertexEps);

std::string report_to_json(const ValidityReport& rep);

}  // namespace cmt
