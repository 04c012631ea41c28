#pragma once

#include <vector>

namespace flowprop {

// Area-weighted box resampling of a channel-last grid to smaller spatial dims.
// Each target cell averages the source cells overlapping its proportional
// footprint, weighted by overlap area; exact window pooling falls out when the
// target divides the source evenly. Channel count is preserved.
std::vector<float> resample_area(const float* src, int src_h, int src_w, int channels,
                                 int dst_h, int dst_w);

} // namespace flowprop
