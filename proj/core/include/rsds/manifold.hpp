#pragma once

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rsds/errors.hpp"

namespace rsds {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kCutLocusMargin = 1e-6;
inline constexpr double kLogZeroTol = 1e-12;

// Euclidean(n), Sphere(d) embedded in R^{d+1}, or an ordered product.
// Points and tangent vectors are plain ambient coordinate vectors.
class ManifoldSpec {
 public:
  enum class Kind { Euclidean, Sphere, Product };

  // Leaf factor of a (possibly nested) product, in ambient coordinates.
  struct Block {
    bool sphere;
    int offset;
    int size;
  };

  ManifoldSpec() = default;
  static ManifoldSpec euclidean(int n);
  static ManifoldSpec sphere(int d);
  static ManifoldSpec product(std::vector<ManifoldSpec> parts);
  // "S2", "R3", "R3xS3", ...
  static ManifoldSpec parse(std::string_view text);

  Kind kind() const { return kind_; }
  int ambient_dim() const { return ambient_; }
  int intrinsic_dim() const;
  const std::vector<ManifoldSpec>& components() const { return parts_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  bool has_sphere() const;
  bool is_single_sphere() const { return kind_ == Kind::Sphere; }
  std::string to_string() const;

  bool operator==(const ManifoldSpec& o) const { return to_string() == o.to_string(); }

  Vec exp(const Vec& x, const Vec& u) const;
  Vec log(const Vec& x, const Vec& y) const;
  double distance(const Vec& x, const Vec& y) const;
  Vec transport(const Vec& x, const Vec& y, const Vec& u) const;
  Vec project(const Vec& x, const Vec& v) const;
  Mat projector(const Vec& x) const;
  Vec retract(const Vec& v) const;

  // Per-block geodesic distances, in block order.
  std::vector<double> block_distances(const Vec& x, const Vec& y) const;

  // Euclidean coordinates are drawn uniformly from [lo, hi].
  Vec sample_uniform(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) const;

  double manifold_residual(const Vec& x) const;
  double tangency_residual(const Vec& x, const Vec& v) const;
  // Throws ValidationError naming `what` if x is off the manifold.
  void check_point(const Vec& x, std::string_view what, double tol = 1e-9) const;

 private:
  Kind kind_ = Kind::Euclidean;
  int dim_ = 0;
  int ambient_ = 0;
  std::vector<ManifoldSpec> parts_;
  std::vector<Block> blocks_;

  void build_blocks();
};

double sphere_distance(const Vec& x, const Vec& y);

// Riemannian center of mass by fixed-point iteration.
Vec karcher_mean(const ManifoldSpec& m, const std::vector<Vec>& points, int max_iter = 100,
                 double tol = 1e-9);

struct KMeansResult {
  std::vector<Vec> centers;
  std::vector<int> assignment;
  int iterations = 0;
};

// Lloyd iterations with geodesic assignment and Karcher-mean updates,
// k-means++ seeding.
KMeansResult kmeans_manifold(const ManifoldSpec& m, const std::vector<Vec>& points, int k,
                             std::mt19937_64& rng, int max_iter = 100);

}  // namespace rsds
