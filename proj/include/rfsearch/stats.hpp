#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace rfs {

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// sqrt(sum_g (n_g - 1) s_g^2 / sum_g (n_g - 1)).
inline double pooled_stddev(const std::vector<std::vector<double>>& groups) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) continue;
    const double s = sample_stddev(g);
    num += static_cast<double>(g.size() - 1) * s * s;
    den += static_cast<double>(g.size() - 1);
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace rfs
