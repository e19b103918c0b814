#include "run_config.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "rsds/errors.hpp"
#include "rsds/io.hpp"

namespace rsds::cli {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"input", "", "input path or synthetic:<S|W|P|pose>"},
      {"output", "", "output path"},
      {"manifold", "S2", "manifold spec, e.g. S2, S3, R3xS3"},
      {"seed", 0, "seed for data generation, initialization and sweeps"},
      {"threads", 0, "worker threads (0: available parallelism)"},
      {"n_demos", 3, "synthetic demonstrations to generate"},
      {"noise", 0.05, "synthetic per-demo variation"},
      {"n_samples", 41, "samples per synthetic demonstration"},
      {"sample_dt", 0.1, "sampling period of synthetic demonstrations"},
      {"cutoff", 2.0, "low-pass cutoff in Hz (0 disables filtering)"},
      {"base", json::array({0.0, 0.0, 1.0}), "tangent-disk center for planar letters"},
      {"scale", 0.35, "planar letter extent as a fraction of pi/2"},
      {"model", "rsds", "rsds or euclidean_flow"},
      {"hidden", 0, "hidden width (0: 32 on a single sphere, 16 otherwise)"},
      {"epochs", 2000, "training epochs"},
      {"lr", 1e-3, "Adam learning rate"},
      {"decay_epoch", 1000, "epoch at which the learning rate decays"},
      {"decay_factor", 0.1, "learning rate decay factor"},
      {"batch_size", 0, "mini-batch size (0: full batch)"},
      {"step_size", 1.0 / 32.0, "flow integration step"},
      {"num_charts", 4, "charts per unit flow time"},
      {"rbf_centers", 50, "scaling network centers"},
      {"holdout", "last", "held-out demo: last, none, or an index"},
      {"checkpoint_every", 100, "epochs between intermediate checkpoints (0 disables)"},
      {"baseline", "auto", "law for Euclidean checkpoints: auto, euclidean, projected"},
      {"sweep_n", 1000, "stability sweep starts (0 disables the sweep)"},
      {"sweep_dt", 0.02, "sweep rollout step"},
      {"sweep_max_steps", 3000, "sweep rollout horizon"},
      {"conv_tol", 0.05, "convergence radius around the goal"},
      {"exclusion_radius", 0.1, "sweep exclusion radius around the cut locus"},
      {"box_lo", -1.0, "lower bound of Euclidean sampling boxes"},
      {"box_hi", 1.0, "upper bound of Euclidean sampling boxes"},
      {"reproduction_max_steps", 3000, "rollout horizon for DTWD"},
      {"start", json::array(), "rollout start point"},
      {"perturb_at", -1, "rollout step at which the state is overwritten"},
      {"perturb_to", json::array(), "state written at --perturb-at"},
      {"rollout_dt", 0.01, "rollout step"},
      {"rollout_max_steps", 3000, "rollout horizon"},
      {"grid_density", 400, "exported grid points"},
  };
  return keys;
}

namespace {

const ConfigKey& find_key(const std::string& name) {
  for (const auto& k : config_keys())
    if (k.name == name) return k;
  throw ValidationError(fmt::format("unknown config key '{}'", name));
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) j_[k.name] = k.fallback;
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  json f;
  try {
    f = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  if (!f.is_object()) throw ValidationError(fmt::format("{}: expected a JSON object", path.string()));
  for (const auto& [k, v] : f.items()) set(k, v);
}

void RunConfig::set(const std::string& key, json value) {
  const ConfigKey& k = find_key(key);
  const auto& d = k.fallback;
  const bool ok = (d.is_number_integer() && value.is_number_integer()) ||
                  (d.is_number_float() && value.is_number()) ||
                  (d.is_string() && value.is_string()) ||
                  (d.is_array() && value.is_array() &&
                   std::all_of(value.begin(), value.end(), [](const json& e) { return e.is_number(); }));
  if (!ok) throw ValidationError(fmt::format("config key '{}' has the wrong type", key));
  if (d.is_number_float()) value = value.get<double>();
  j_[key] = std::move(value);
}

void RunConfig::set_from_string(const std::string& key, const std::string& text) {
  const json& d = find_key(key).fallback;
  auto fail = [&] {
    return ValidationError(fmt::format("--{}: cannot parse '{}'", key, text));
  };
  try {
    std::size_t used = 0;
    if (d.is_number_integer()) {
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw fail();
      set(key, v);
    } else if (d.is_number_float()) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw fail();
      set(key, v);
    } else if (d.is_array()) {
      json arr = json::array();
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const double v = std::stod(item, &used);
        if (used != item.size()) throw fail();
        arr.push_back(v);
      }
      set(key, arr);
    } else {
      set(key, text);
    }
  } catch (const std::invalid_argument&) {
    throw fail();
  } catch (const std::out_of_range&) {
    throw fail();
  }
}

const json& RunConfig::at(const std::string& key) const {
  find_key(key);
  return j_.at(key);
}

int RunConfig::integer(const std::string& key) const { return at(key).get<int>(); }
double RunConfig::number(const std::string& key) const { return at(key).get<double>(); }
std::string RunConfig::text(const std::string& key) const { return at(key).get<std::string>(); }

Vec RunConfig::vector(const std::string& key) const {
  const auto v = at(key).get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void RunConfig::validate() const {
  ManifoldSpec::parse(text("manifold"));
  require(integer("threads") >= 0, "threads must be >= 0");
  require(integer("n_demos") >= 1, "n_demos must be >= 1");
  require(number("noise") >= 0.0, "noise must be >= 0");
  require(integer("n_samples") >= 2, "n_samples must be >= 2");
  require(number("sample_dt") > 0.0, "sample_dt must be positive");
  require(number("cutoff") >= 0.0, "cutoff must be >= 0");
  require(number("scale") > 0.0 && number("scale") < 2.0, "scale must lie in (0, 2)");
  const Vec base = vector("base");
  require(base.size() == 3 && std::abs(base.norm() - 1.0) < 1e-9, "base must be a unit 3-vector");
  const std::string model = text("model");
  require(model == "rsds" || model == "euclidean_flow", "model must be rsds or euclidean_flow");
  require(integer("hidden") >= 0, "hidden must be >= 0");
  require(integer("epochs") >= 0, "epochs must be >= 0");
  require(number("lr") > 0.0, "lr must be positive");
  require(integer("decay_epoch") >= 0, "decay_epoch must be >= 0");
  require(number("decay_factor") > 0.0, "decay_factor must be positive");
  require(integer("batch_size") >= 0, "batch_size must be >= 0");
  const double h = number("step_size");
  require(h > 0.0 && h <= 1.0, "step_size must lie in (0, 1]");
  require(integer("num_charts") >= 1, "num_charts must be >= 1");
  require(integer("rbf_centers") >= 1, "rbf_centers must be >= 1");
  const std::string ho = text("holdout");
  if (ho != "last" && ho != "none") {
    std::size_t used = 0;
    int idx = -1;
    try {
      idx = std::stoi(ho, &used);
    } catch (const std::exception&) {
    }
    require(used == ho.size() && idx >= 0, "holdout must be last, none, or a demo index");
  }
  require(integer("checkpoint_every") >= 0, "checkpoint_every must be >= 0");
  const std::string bl = text("baseline");
  require(bl == "auto" || bl == "euclidean" || bl == "projected",
          "baseline must be auto, euclidean or projected");
  require(integer("sweep_n") >= 0, "sweep_n must be >= 0");
  require(number("sweep_dt") > 0.0, "sweep_dt must be positive");
  require(integer("sweep_max_steps") >= 1, "sweep_max_steps must be >= 1");
  require(number("conv_tol") > 0.0, "conv_tol must be positive");
  require(number("exclusion_radius") >= 0.0, "exclusion_radius must be >= 0");
  require(number("box_lo") < number("box_hi"), "box_lo must be below box_hi");
  require(integer("reproduction_max_steps") >= 1, "reproduction_max_steps must be >= 1");
  require(number("rollout_dt") > 0.0, "rollout_dt must be positive");
  require(integer("rollout_max_steps") >= 1, "rollout_max_steps must be >= 1");
  require(integer("grid_density") >= 1, "grid_density must be >= 1");
}

}  // namespace rsds::cli
