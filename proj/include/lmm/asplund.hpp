#pragma once

#include <span>

#include "lmm/image.hpp"
#include "lmm/morphology.hpp"

namespace lmm {

// LIP-additive Asplund distance between a window and probe values aligned on
// the same support. With c1 the least LIP-shift of the probe dominating the
// window and c2 the greatest dominated by it, the distance is c1 (-) c2.
// Returns m (the degenerate "infinite distance") when the window contains m
// or -inf; throws config_error on an empty window.
double asplund_distance(std::span<const double> window,
                        std::span<const double> probe_vals, double m = kDefaultM);

// Map of Asplund distances, three algebraically equal routes. Values lie in
// [0, m]; a pixel whose clipped window misses the support entirely gets m.
//
// Per-pixel gather + asplund_distance on the clipped neighbourhood.
LipImage asplund_map_definitional(const LipImage& f, const Probe& b);
// Morphological route: log_dilate with the LIP-negated reflected probe,
// LIP-minus log_erode with the probe. The m convention dominates when both
// degenerate cases trigger at once.
LipImage asplund_map_morphological(const LipImage& f, const Probe& b);
// Production route: one xi transform, classical dilation/erosion, one
// xi_inv of the difference.
LipImage asplund_map_xi_form(const LipImage& f, const Probe& b);

}  // namespace lmm
