#pragma once

// Schematic SVG rendering of frames: perspective-projected object boxes,
// flat fills keyed by class hash, far-to-near painter ordering, a 0.5 m
// floor grid, and the "X" mark glyph for perspective episodes. Output bytes
// are deterministic so rendered trees diff cleanly.

#include <string>
#include <vector>

#include "spatialqa/simulator.hpp"

namespace spatialqa {

struct Rgb {
  int r, g, b;
};

/// Stable per-class fill color (FNV hash of the class name).
Rgb class_color(const std::string& class_name);

/// Renders one frame to an SVG document.
std::string render_frame_svg(const Frame& frame);

/// Writes <dir>/<frame_id>.svg for every frame.
void write_frame_svgs(const std::vector<Frame>& frames, const std::string& dir);

}  // namespace spatialqa
