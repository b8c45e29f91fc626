#include "wseg/metrics.hpp"

#include <string>

namespace wseg {

OverlapCounts overlap_counts(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw ArgumentError("jsi: mask dimensions differ (" + std::to_string(pred.height()) + "x" +
                        std::to_string(pred.width()) + " vs " + std::to_string(gt.height()) + "x" +
                        std::to_string(gt.width()) + ")");
  }
  const auto a = pred.data.cast<bool>();
  const auto b = gt.data.cast<bool>();
  return {static_cast<long>((a && b).count()), static_cast<long>((a || b).count())};
}

double jsi(const BinaryMask& pred, const BinaryMask& gt) {
  const OverlapCounts c = overlap_counts(pred, gt);
  if (c.union_ == 0) return 1.0;
  return static_cast<double>(c.intersection) / static_cast<double>(c.union_);
}

}  // namespace wseg
