#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "rsds/manifold.hpp"

namespace rsds {

Vec karcher_mean(const ManifoldSpec& m, const std::vector<Vec>& points, int max_iter, double tol) {
  if (points.empty()) throw ValidationError("karcher mean of an empty set");
  Vec mean = points.front();
  if (points.size() == 1) return mean;
  const double inv = 1.0 / static_cast<double>(points.size());
  for (int it = 0; it < max_iter; ++it) {
    Vec g = Vec::Zero(m.ambient_dim());
    for (const auto& p : points) g += m.log(mean, p);
    g *= inv;
    mean = m.retract(m.exp(mean, g));
    if (g.norm() < tol) break;
  }
  return mean;
}

namespace {

int nearest(const ManifoldSpec& m, const Vec& p, const std::vector<Vec>& centers, double* dist) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = m.distance(p, centers[c]);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(c);
    }
  }
  if (dist) *dist = bd;
  return best;
}

}  // namespace

KMeansResult kmeans_manifold(const ManifoldSpec& m, const std::vector<Vec>& points, int k,
                             std::mt19937_64& rng, int max_iter) {
  const int n = static_cast<int>(points.size());
  if (k < 1 || k > n)
    throw ValidationError(fmt::format("kmeans needs 1 <= k <= {} points, got k={}", n, k));

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  KMeansResult r;
  r.centers.push_back(points[std::min(n - 1, static_cast<int>(unif(rng) * n))]);
  std::vector<double> d2(n);
  while (static_cast<int>(r.centers.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double d;
      nearest(m, points[i], r.centers, &d);
      d2[i] = d * d;
      total += d2[i];
    }
    int pick = n - 1;
    if (total > 0.0) {
      double u = unif(rng) * total;
      for (int i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (d2[pick] == 0.0)
        for (int i = n - 1; i >= 0; --i)
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
    }
    r.centers.push_back(points[pick]);
  }

  auto assign = [&](std::vector<int>& a) {
    a.resize(n);
    for (int i = 0; i < n; ++i) a[i] = nearest(m, points[i], r.centers, nullptr);
  };
  assign(r.assignment);

  std::vector<int> next;
  for (r.iterations = 1; r.iterations <= max_iter; ++r.iterations) {
    std::vector<std::vector<Vec>> members(k);
    for (int i = 0; i < n; ++i) members[r.assignment[i]].push_back(points[i]);
    for (int c = 0; c < k; ++c) {
      if (!members[c].empty()) {
        r.centers[c] = karcher_mean(m, members[c]);
        continue;
      }
      int far = 0;
      double fd = -1.0;
      for (int i = 0; i < n; ++i) {
        const double d = m.distance(points[i], r.centers[r.assignment[i]]);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      r.centers[c] = points[far];
      r.assignment[far] = c;
    }
    assign(next);
    if (next == r.assignment) break;
    r.assignment.swap(next);
  }
  r.iterations = std::min(r.iterations, max_iter);
  return r;
}

}  // namespace rsds
