#pragma once

#include <cstdint>

#include "toothlift/mesh.hpp"

namespace toothlift {

/// Procedural dental arch: a U-shaped flat strip (gingiva, class 0) carrying
/// hemispherical bumps, bump k labelled class k+1 in order along the arch.
/// Units are millimetres with +Z pointing out of the occlusal surface.
struct ArchParams {
  int teeth = 14;
  int along = 500;  // grid columns along the arch
  int across = 40;  // grid rows across the strip
  double semi_axis_x = 25.0;
  double semi_axis_y = 30.0;
  double span = 0.56;  // arch covers +-span*pi of the ellipse parameter
  double width = 8.0;
  double radius = 2.6;
  double radius_jitter = 0.1;  // relative, uniform
  double margin = 0.5;         // floor ring around each bump that is re-meshed with it
  std::uint64_t seed = 0;
  Jaw jaw = Jaw::upper;
};

/// ArgumentError if the parameters leave bumps overlapping or off the strip.
LabeledMesh synth_arch(const ArchParams& params = {});

/// Flat n x n vertex grid in the XY plane, unit spacing, split into
/// tile x tile blocks that each carry a random class.
struct GridParams {
  int n = 32;
  int tile = 8;
  std::uint64_t seed = 0;
};

LabeledMesh synth_grid(const GridParams& params = {});

}  // namespace toothlift
