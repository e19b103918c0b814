#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rsds/manifold.hpp"
#include "rsds/training.hpp"

namespace rsds {

struct RawTrajectory {
  std::vector<double> t;
  std::vector<Vec> states;

  std::size_t size() const { return t.size(); }
  // Throws ValidationError naming the offending sample.
  void validate() const;
};

struct Demonstration {
  ManifoldSpec spec;
  std::vector<double> t;
  std::vector<Vec> points;
  std::vector<Vec> velocities;
  double dt = 0.0;  // mean sampling period

  std::size_t size() const { return points.size(); }
  void validate(double tol = 1e-9) const;
};

enum class TrajectoryFormat { Auto, Csv, Json };

// CSV: header `t,x0,x1,...`, one sample per row, blank lines separate
// trajectories, `#` starts a comment line. JSON:
// {"trajectories": [{"t": [...], "states": [[...], ...]}]}.
std::vector<RawTrajectory> load_trajectories(const std::filesystem::path& path,
                                             TrajectoryFormat format = TrajectoryFormat::Auto);
std::vector<RawTrajectory> parse_trajectories_csv(const std::string& text);
std::vector<RawTrajectory> parse_trajectories_json(const std::string& text);
std::string format_trajectories_csv(const std::vector<RawTrajectory>& trajs);
void save_trajectories(const std::filesystem::path& path, const std::vector<RawTrajectory>& trajs);

// Zero-phase second-order Butterworth low-pass applied per coordinate.
RawTrajectory lowpass_filter(const RawTrajectory& traj, double cutoff_hz);

// Planar letters mapped into the tangent disk of radius scale * pi/2 at
// `base` (common centring and scaling for the whole set), then through Exp.
std::vector<Demonstration> project_letters_to_sphere(const std::vector<RawTrajectory>& trajs,
                                                     const Vec& base, double scale);

// Retracts states onto `spec` (sphere blocks renormalized) and attaches
// forward log-difference velocities with a zero final velocity.
Demonstration make_demonstration(const ManifoldSpec& spec, const RawTrajectory& traj);

// Aligns every demo to the Karcher mean of the final points by transporting
// each point's log-offset from its own final point.
std::vector<Demonstration> shift_to_common_goal(const std::vector<Demonstration>& demos);

// Recomputes log-difference velocities in place.
void attach_velocities(Demonstration& demo);

enum class LetterShape { S, W, P };
LetterShape parse_letter_shape(const std::string& id);
std::string to_string(LetterShape s);

struct SyntheticOptions {
  int n_samples = 41;
  double dt = 0.1;
};

// Planar curves in [-1, 1]^2 traversed with a minimum-jerk time profile.
// Per-demo variation is a smooth seeded perturbation scaled by `noise`.
std::vector<RawTrajectory> generate_synthetic_letters(LetterShape shape, int n_demos, double noise,
                                                      std::mt19937_64& rng,
                                                      const SyntheticOptions& opt = {});

// 7-D pose trajectories (position, unit quaternion w-first): a V-shaped
// position path and a 90 degree rotation about z.
std::vector<RawTrajectory> generate_synthetic_pose(int n_demos, double noise, std::mt19937_64& rng,
                                                   const SyntheticOptions& opt = {});

std::vector<Sample> to_samples(const std::vector<Demonstration>& demos);
Vec common_goal(const std::vector<Demonstration>& demos);

// Demo container: {spec, dt, demos: [[{t, point, velocity}]]}.
std::string format_demos_json(const std::vector<Demonstration>& demos);
std::vector<Demonstration> parse_demos_json(const std::string& text);

}  // namespace rsds
