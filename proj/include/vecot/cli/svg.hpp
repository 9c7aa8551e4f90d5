#ifndef VECOT_CLI_SVG_HPP
#define VECOT_CLI_SVG_HPP

#include "vecot/measure.hpp"
#include "vecot/partition.hpp"

#include <string>

namespace vecot::cli {

/// Standalone SVG: a background rect and one circle per point, radius
/// proportional to sqrt(weight), filled by label from a 12-colour palette;
/// unsold points are drawn hollow. Needs 2-D points.
std::string render_svg(const LayeredMeasure& m, const Assignment& labels,
                       double size = 480.0);

}  // namespace vecot::cli

#endif  // VECOT_CLI_SVG_HPP
