#pragma once

#include <array>
#include <span>
#include <vector>

namespace groundkit::geom {

// Axis-aligned region in pixel coordinates; (x, y) is the top-left corner.
struct Box {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double x2() const { return x + w; }
  double y2() const { return y + h; }
  double area() const { return w * h; }
  double cx() const { return x + w / 2; }
  double cy() const { return y + h / 2; }
  bool valid() const;

  bool operator==(const Box&) const = default;
};

struct ImageSize {
  double width = 0;
  double height = 0;
  bool valid() const { return width > 0 && height > 0; }
};

// Intersection area / union area; exactly 0 for empty intersection.
double iou(const Box& a, const Box& b);

// Smallest box containing every input box. Throws on an empty list.
Box union_hull(std::span<const Box> boxes);

// [cx/W, cy/H, area/(W*H), w/h]; the aspect ratio is width over height.
std::array<double, 4> position_feature(const Box& b, const ImageSize& img);

// Relative layout of b2 with respect to b: [(x-x')/w, (y-y')/h, w'/w, h'/h].
std::array<double, 4> spatial_pair_feature(const Box& b, const Box& b2);

// Greedy non-maximum suppression. Keeps the highest-scoring remaining box,
// discards boxes with IOU > threshold against it. Returns kept indices in
// descending score order; score ties break toward the lower input index.
std::vector<int> nms(std::span<const Box> boxes, std::span<const double> scores,
                     double iou_threshold);

}  // namespace groundkit::geom
