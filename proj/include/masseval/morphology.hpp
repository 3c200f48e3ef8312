#pragma once

#include <cstdint>

#include "masseval/mask_core.hpp"
#include "masseval/raster.hpp"

namespace masseval {

/// Mask pixels with at least one 4-neighbour outside the mask or outside
/// the image frame.
EdgeMap inner_boundary(const BinaryMask& mask);

/// Exact squared Euclidean distance to the nearest set pixel of `source`.
/// When `frame_is_source` is true, the virtual pixels surrounding the image
/// also count as sources. Pixels with no reachable source get INT64_MAX.
Raster<std::int64_t> squared_distance_transform(const BinaryMask& source,
                                                bool frame_is_source = false);

/// Euclidean distance to the nearest set pixel. Throws on an empty source.
DistanceField distance_transform(const BinaryMask& source);

/// Pixels within Euclidean distance `radius` of `set` (inclusive).
BinaryMask dilate(const BinaryMask& set, double radius);

/// {p in mask : dist(p, complement of mask) <= d}, with pixels outside the
/// frame counted as complement.
BinaryMask band(const BinaryMask& mask, double d);

/// k x k mean with replicate padding; k must be odd and positive.
ScalarField box_filter(const ScalarField& field, int k);

/// Number of set pixels in each k x k window under replicate padding.
Raster<std::int32_t> box_count(const BinaryMask& mask, int k);

/// Total Freeman chain-code length of every outer and hole border of the
/// 8-connected components. Axis steps count 1, diagonal steps sqrt(2); an
/// isolated pixel counts 4.
double contour_perimeter(const BinaryMask& mask);

/// Pixels whose in-frame 4-neighbourhood holds a different non-ignore
/// class, dilated by a Euclidean `radius`. Ignore pixels never seed edges.
EdgeMap semantic_edges(const LabelMap& map, int radius);

}  // namespace masseval
