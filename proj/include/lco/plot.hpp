#pragma once

// Deterministic SVG line charts from CSV columns.

#include <optional>
#include <string>
#include <vector>

#include "lco/io.hpp"

namespace lco {

inline constexpr double kCanvasWidth = 800.0;
inline constexpr double kCanvasHeight = 500.0;

struct PlotSeriesSource {
  std::string label;  // prefix for legend entries when several files are plotted
  CsvTable table;
};

struct PlotOptions {
  std::optional<std::string> x;  // default: first column of the first table
  std::vector<std::string> y;    // default: every numeric column of the first table except x
  std::string title;
};

/// Throws SchemaError naming the first requested column a table lacks.
std::string render_svg(const std::vector<PlotSeriesSource>& sources, const PlotOptions& options);

}  // namespace lco
