#pragma once

#include <string>

#include "mtfer/metrics_csv.hpp"

namespace mtfer {

/// Two-panel SVG: emotion accuracy and emotion loss against epoch, each with
/// a train and a validation polyline. Series with a single point also get a
/// circle marker. Throws FormatError when a needed column is missing or the
/// table has no rows.
std::string render_training_svg(const MetricsTable& table);

}  // namespace mtfer
