#include "groundkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace groundkit::geom {

bool Box::valid() const {
  return w > 0 && h > 0 && std::isfinite(x) && std::isfinite(y) &&
         std::isfinite(w) && std::isfinite(h);
}

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x2(), b.x2()) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y2(), b.y2()) - std::max(a.y, b.y));
  const double inter = ix * iy;
  if (inter <= 0) return 0.0;
  // Areas measured with the same corner arithmetic as the intersection keep
  // iou(a, a) at exactly 1.
  const double area_a = (a.x2() - a.x) * (a.y2() - a.y);
  const double area_b = (b.x2() - b.x) * (b.y2() - b.y);
  const double uni = area_a + area_b - inter;
  return inter / uni;
}

Box union_hull(std::span<const Box> boxes) {
  if (boxes.empty()) throw std::invalid_argument("union_hull: no boxes");
  double x1 = boxes[0].x, y1 = boxes[0].y, x2 = boxes[0].x2(), y2 = boxes[0].y2();
  for (const Box& b : boxes.subspan(1)) {
    x1 = std::min(x1, b.x);
    y1 = std::min(y1, b.y);
    x2 = std::max(x2, b.x2());
    y2 = std::max(y2, b.y2());
  }
  return Box{x1, y1, x2 - x1, y2 - y1};
}

std::array<double, 4> position_feature(const Box& b, const ImageSize& img) {
  return {b.cx() / img.width, b.cy() / img.height,
          b.area() / (img.width * img.height), b.w / b.h};
}

std::array<double, 4> spatial_pair_feature(const Box& b, const Box& b2) {
  return {(b.x - b2.x) / b.w, (b.y - b2.y) / b.h, b2.w / b.w, b2.h / b.h};
}

std::vector<int> nms(std::span<const Box> boxes, std::span<const double> scores,
                     double iou_threshold) {
  if (boxes.size() != scores.size())
    throw std::invalid_argument("nms: boxes and scores differ in length");
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[a] > scores[b];
  });
  std::vector<char> suppressed(boxes.size(), 0);
  std::vector<int> kept;
  for (size_t oi = 0; oi < order.size(); ++oi) {
    const int i = order[oi];
    if (suppressed[i]) continue;
    kept.push_back(i);
    for (size_t oj = oi + 1; oj < order.size(); ++oj) {
      const int j = order[oj];
      if (!suppressed[j] && iou(boxes[i], boxes[j]) > iou_threshold)
        suppressed[j] = 1;
    }
  }
  return kept;
}

}  // namespace groundkit::geom
