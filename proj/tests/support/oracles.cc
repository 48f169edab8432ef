#include "oracles.h"

#include <cmath>
#include <map>
#include <utility>

namespace pointscene::testing {

double SsimOracle(const RgbImage& a, const RgbImage& b) {
  double g[11][11], total = 0;
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      total += g[i][j];
    }
  }
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  double sum = 0;
  for (int c = 0; c < 3; ++c) {
    double channel = 0;
    int windows = 0;
    for (int y0 = 0; y0 + 11 <= a.height(); ++y0) {
      for (int x0 = 0; x0 + 11 <= a.width(); ++x0) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int i = 0; i < 11; ++i) {
          for (int j = 0; j < 11; ++j) {
            const double w = g[i][j] / total;
            const double x = a.at(x0 + j, y0 + i, c), y = b.at(x0 + j, y0 + i, c);
            mx += w * x;
            my += w * y;
            sxx += w * x * x;
            syy += w * y * y;
            sxy += w * x * y;
          }
        }
        sxx -= mx * mx;
        syy -= my * my;
        sxy -= mx * my;
        channel += ((2 * mx * my + c1) * (2 * sxy + c2)) /
                   ((mx * mx + my * my + c1) * (sxx + syy + c2));
        ++windows;
      }
    }
    sum += channel / windows;
  }
  return sum / 3;
}

double RandIndex(std::span<const int32_t> a, std::span<const int32_t> b) {
  // Pair counting through the contingency table.
  const auto pairs = [](double n) { return n * (n - 1) / 2; };
  std::map<std::pair<int32_t, int32_t>, double> joint;
  std::map<int32_t, double> ca, cb;
  for (size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ca[a[i]] += 1;
    cb[b[i]] += 1;
  }
  double same_both = 0, same_a = 0, same_b = 0;
  for (const auto& [k, n] : joint) same_both += pairs(n);
  for (const auto& [k, n] : ca) same_a += pairs(n);
  for (const auto& [k, n] : cb) same_b += pairs(n);
  const double total = pairs(static_cast<double>(a.size()));
  if (total == 0) return 1.0;
  // Agreements: together in both, plus apart in both.
  return (total + 2 * same_both - same_a - same_b) / total;
}

}  // namespace pointscene::testing
