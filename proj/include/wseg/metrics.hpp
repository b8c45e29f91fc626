#pragma once

#include "wseg/image.hpp"

namespace wseg {

struct OverlapCounts {
  long intersection = 0;
  long union_ = 0;
};

OverlapCounts overlap_counts(const BinaryMask& pred, const BinaryMask& gt);

// Jaccard similarity |A n B| / |A u B|. Two empty masks score 1.0.
double jsi(const BinaryMask& pred, const BinaryMask& gt);

}  // namespace wseg
