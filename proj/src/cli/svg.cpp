#include "vecot/cli/svg.hpp"

#include "vecot/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>

namespace vecot::cli {

namespace {

constexpr std::array<const char*, 12> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string render_svg(const LayeredMeasure& m, const Assignment& labels,
                       double size) {
  if (m.dimension() != 2)
    throw Error(ErrorCode::SizeMismatch,
                "render needs 2-D points, got dimension " + std::to_string(m.dimension()));
  if (static_cast<Index>(labels.size()) != m.size())
    throw Error(ErrorCode::SizeMismatch, "one label per point is required");
  for (std::size_t t = 0; t < labels.size(); ++t)
    if (labels[t] < 0)
      throw Error(ErrorCode::IndexOutOfRange, "negative label", t);

  const double margin = 0.08 * size;
  const double max_radius = 0.04 * size;
  const auto lo = m.points().colwise().minCoeff();
  const auto hi = m.points().colwise().maxCoeff();
  const double span = std::max({hi(0) - lo(0), hi(1) - lo(1), 1e-12});
  const double scale = (size - 2.0 * margin) / span;
  const double heaviest = m.weights().maxCoeff();

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(size) +
         "\" height=\"" + fixed(size) + "\" viewBox=\"0 0 " + fixed(size) + " " +
         fixed(size) + "\">\n";
  out += "  <rect x=\"0\" y=\"0\" width=\"" + fixed(size) + "\" height=\"" +
         fixed(size) + "\" fill=\"#ffffff\"/>\n";
  for (Index t = 0; t < m.size(); ++t) {
    const double x = margin + (m.points()(t, 0) - lo(0)) * scale;
    // SVG y grows downward.
    const double y = size - margin - (m.points()(t, 1) - lo(1)) * scale;
    const double r = max_radius * std::sqrt(m.weight(t) / heaviest);
    const int label = labels[static_cast<std::size_t>(t)];
    out += "  <circle cx=\"" + fixed(x) + "\" cy=\"" + fixed(y) + "\" r=\"" + fixed(r) + "\"";
    if (label == 0) {
      out += " fill=\"none\" stroke=\"#333333\" stroke-width=\"1.5\"";
    } else {
      out += " fill=\"" + std::string(kPalette[static_cast<std::size_t>(label - 1) % kPalette.size()]) +
             "\" fill-opacity=\"0.85\"";
    }
    out += "/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace vecot::cli
