#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "rsds/data.hpp"
#include "rsds/eval.hpp"
#include "rsds/io.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace rsds;
using rsds::cli::json;
using rsds::cli::RunConfig;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> flags;
};

Command add_command(CLI::App& root, const std::string& name, const std::string& help,
                    const std::vector<std::string>& keys) {
  Command c;
  c.app = root.add_subcommand(name, help);
  c.app->add_option("--config", c.config_path, "JSON file with config keys");
  std::vector<std::string> all = {"seed", "threads"};
  all.insert(all.end(), keys.begin(), keys.end());
  for (const auto& key : all) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    const auto& k = *std::find_if(cli::config_keys().begin(), cli::config_keys().end(),
                                  [&](const cli::ConfigKey& e) { return e.name == key; });
    c.flags[key];
    c.app->add_option(flag, c.flags[key], fmt::format("{} [{}]", k.help, k.fallback.dump()));
  }
  return c;
}

RunConfig resolve(const Command& c) {
  RunConfig cfg;
  if (!c.config_path.empty()) cfg.merge_file(c.config_path);
  for (const auto& [key, value] : c.flags) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (c.app->count(flag) > 0) cfg.set_from_string(key, value);
  }
  return cfg;
}

std::string vec_csv(const Vec& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
  return s;
}

std::string coord_header(const std::string& prefix, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += fmt::format("{}{}{}", i ? "," : "", prefix, i);
  return s;
}

std::string config_comment(const RunConfig& cfg) { return "# config: " + cfg.compact() + "\n"; }

ManifoldSpec sphere2() { return ManifoldSpec::sphere(2); }

// ------------------------------------------------------------- preprocess

std::vector<Demonstration> build_demos(const RunConfig& cfg, std::string& spec_out) {
  const std::string input = cfg.text("input");
  std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.integer("seed")));
  const SyntheticOptions so{cfg.integer("n_samples"), cfg.number("sample_dt")};
  std::vector<RawTrajectory> trajs;
  ManifoldSpec spec = ManifoldSpec::parse(cfg.text("manifold"));
  bool planar = false;
  if (input.rfind("synthetic:", 0) == 0) {
    const std::string id = input.substr(10);
    if (id == "pose") {
      trajs = generate_synthetic_pose(cfg.integer("n_demos"), cfg.number("noise"), rng, so);
      spec = ManifoldSpec::parse("R3xS3");
    } else {
      trajs = generate_synthetic_letters(parse_letter_shape(id), cfg.integer("n_demos"),
                                         cfg.number("noise"), rng, so);
      spec = sphere2();
      planar = true;
    }
  } else {
    trajs = load_trajectories(input);
    const auto dim = trajs.front().states.front().size();
    planar = spec == sphere2() && dim == 2;
    if (!planar && dim != spec.ambient_dim())
      throw ValidationError(fmt::format("{}: states have {} coordinates but {} needs {}", input,
                                        dim, spec.to_string(), spec.ambient_dim()));
  }
  if (cfg.number("cutoff") > 0.0)
    for (auto& t : trajs) t = lowpass_filter(t, cfg.number("cutoff"));
  std::vector<Demonstration> demos;
  if (planar) {
    demos = project_letters_to_sphere(trajs, cfg.vector("base"), cfg.number("scale"));
  } else {
    for (const auto& t : trajs) demos.push_back(make_demonstration(spec, t));
  }
  spec_out = spec.to_string();
  return shift_to_common_goal(demos);
}

int cmd_preprocess(RunConfig cfg) {
  cfg.validate();
  std::string spec;
  const auto demos = build_demos(cfg, spec);
  cfg.set("manifold", spec);
  json j = json::parse(format_demos_json(demos));
  j["config"] = cfg.values();
  write_file_atomic(cfg.text("output"), j.dump(1) + "\n");
  fmt::print("{} demos on {}:", demos.size(), spec);
  for (const auto& d : demos) fmt::print(" {}", d.size());
  fmt::print(" samples; goal [{}]\n", vec_csv(common_goal(demos)));
  return 0;
}

// ------------------------------------------------------------------ train

std::optional<std::size_t> holdout_index(const RunConfig& cfg, std::size_t n) {
  const std::string h = cfg.text("holdout");
  if (h == "none") return std::nullopt;
  const std::size_t idx = h == "last" ? n - 1 : static_cast<std::size_t>(std::stoul(h));
  if (idx >= n) throw ValidationError(fmt::format("holdout {} out of range ({} demos)", h, n));
  if (n < 2) throw ValidationError("holding out a demo needs at least two demos");
  return idx;
}

int default_hidden(const ManifoldSpec& m) { return m.is_single_sphere() ? 32 : 16; }

int cmd_train(RunConfig cfg) {
  cfg.validate();
  const auto demos = parse_demos_json(read_file(cfg.text("input")));
  if (demos.empty()) throw ValidationError("no demonstrations");
  const ManifoldSpec& spec = demos.front().spec;
  cfg.set("manifold", spec.to_string());
  const auto held = holdout_index(cfg, demos.size());
  std::vector<Demonstration> train_demos;
  for (std::size_t i = 0; i < demos.size(); ++i)
    if (!held || i != *held) train_demos.push_back(demos[i]);

  ModelOptions mo;
  mo.hidden = cfg.integer("hidden") > 0 ? cfg.integer("hidden") : default_hidden(spec);
  mo.rbf_centers = cfg.integer("rbf_centers");
  mo.cfg.step_size = cfg.number("step_size");
  mo.cfg.num_charts = cfg.integer("num_charts");
  mo.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  const bool baseline = cfg.text("model") == "euclidean_flow";
  Checkpoint ck{baseline ? init_baseline(train_demos, mo) : init_model(train_demos, mo),
                baseline ? std::optional<ManifoldSpec>(spec) : std::nullopt, "{}"};

  const fs::path out = cfg.text("output");
  const fs::path loss_path = fs::path(out).replace_extension(".loss.csv");
  std::string loss_csv = config_comment(cfg) + "epoch,loss\n";
  auto metadata = [&](int epochs_done, bool aborted) {
    json m;
    m["config"] = cfg.values();
    m["epochs_done"] = epochs_done;
    m["aborted"] = aborted;
    m["holdout"] = held ? json(*held) : json(nullptr);
    return m.dump();
  };

  TrainOptions to;
  to.epochs = cfg.integer("epochs");
  to.lr = cfg.number("lr");
  to.decay_epoch = cfg.integer("decay_epoch");
  to.decay_factor = cfg.number("decay_factor");
  to.batch_size = cfg.integer("batch_size");
  to.seed = mo.seed;
  to.threads = cfg.integer("threads");
  const int every = cfg.integer("checkpoint_every");
  to.on_epoch = [&](int epoch, double loss) {
    loss_csv += fmt::format("{},{}\n", epoch, format_number(loss));
    if (every > 0 && (epoch + 1) % every == 0 && epoch + 1 < to.epochs) {
      ck.metadata_json = metadata(epoch + 1, false);
      save_checkpoint(out, ck);
      write_file_atomic(loss_path, loss_csv);
    }
  };
  const TrainResult r = train(ck.model, to_samples(train_demos), to);
  const int done = static_cast<int>(r.loss_history.size()) - (r.aborted ? 1 : 0);
  ck.metadata_json = metadata(std::max(done, 0), r.aborted);
  save_checkpoint(out, ck);
  write_file_atomic(loss_path, loss_csv);
  if (r.aborted) {
    fmt::print(stderr, "training aborted: {}\n", r.message);
    return kExitNumerical;
  }
  if (!r.loss_history.empty())
    fmt::print("trained {} epochs on {} demos; loss {} -> {}\n", r.loss_history.size(),
               train_demos.size(), format_number(r.loss_history.front()),
               format_number(r.loss_history.back()));
  fmt::print("wrote {} and {}\n", out.string(), loss_path.string());
  return 0;
}

// ------------------------------------------------------- checkpoint laws

struct LoadedLaw {
  explicit LoadedLaw(Checkpoint c) : ck(std::move(c)) {}
  Checkpoint ck;
  std::unique_ptr<RsdsEvaluator> rsds;
  std::unique_ptr<BaselineLaw> baseline;
  std::string name;

  const VelocityLaw& law() const {
    return rsds ? static_cast<const VelocityLaw&>(*rsds) : *baseline;
  }
  const ManifoldSpec& data_spec() const { return ck.data_spec ? *ck.data_spec : ck.model.spec; }
};

std::unique_ptr<LoadedLaw> load_law(const RunConfig& cfg, const std::string& path) {
  auto l = std::make_unique<LoadedLaw>(load_checkpoint(path));
  const std::string bl = cfg.text("baseline");
  if (!l->ck.data_spec) {
    if (bl != "auto")
      throw ValidationError(fmt::format("--baseline {} needs a euclidean_flow checkpoint", bl));
    l->rsds = std::make_unique<RsdsEvaluator>(l->ck.model);
    l->name = "rsds";
  } else {
    const bool projected = bl != "euclidean";
    l->baseline = std::make_unique<BaselineLaw>(l->ck.model, *l->ck.data_spec, projected);
    l->name = projected ? "projected_euclidean_flow" : "euclidean_flow";
  }
  return l;
}

// ------------------------------------------------------------------- eval

int cmd_eval(RunConfig cfg, const std::string& checkpoint, const std::string& demos_path) {
  cfg.validate();
  const auto loaded = load_law(cfg, checkpoint);
  const auto demos = parse_demos_json(read_file(demos_path));
  if (!(demos.front().spec == loaded->data_spec()))
    throw ValidationError(fmt::format("demos live on {} but the checkpoint on {}",
                                      demos.front().spec.to_string(),
                                      loaded->data_spec().to_string()));
  MetricsReport rep;
  rep.model = loaded->name;
  rep.mse = velocity_mse(loaded->law(), demos);
  rep.dtwd = reproduction_dtwd(loaded->law(), demos, cfg.integer("reproduction_max_steps"),
                               cfg.number("conv_tol"));
  SweepOptions so;
  so.n = cfg.integer("sweep_n");
  so.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  so.dt = cfg.number("sweep_dt");
  so.max_steps = cfg.integer("sweep_max_steps");
  so.conv_tol = cfg.number("conv_tol");
  so.exclusion_radius = cfg.number("exclusion_radius");
  so.box_lo = cfg.number("box_lo");
  so.box_hi = cfg.number("box_hi");
  so.threads = cfg.integer("threads");
  rep.sweep_options = so;
  if (so.n > 0) {
    const ExclusionTest ex =
        loaded->rsds ? rsds_exclusion(*loaded->rsds, so.exclusion_radius)
                     : antipode_exclusion(loaded->data_spec(), loaded->law().goal(),
                                          so.exclusion_radius);
    rep.sweep = stability_sweep(loaded->law(), loaded->data_spec(), ex, so);
    rep.has_sweep = true;
  }
  rep.config_json = cfg.compact();
  const fs::path out = cfg.text("output");
  write_file_atomic(out, rep.to_json());
  write_file_atomic(fs::path(out).replace_extension(".csv"),
                    config_comment(cfg) + MetricsReport::csv_header() + rep.csv_row());
  fmt::print("{}: velocity mse {}, dtwd {}", rep.model, format_number(rep.mse.mse),
             format_number(rep.dtwd.mean));
  if (rep.has_sweep)
    fmt::print(", success rate {} ({}/{})", format_number(rep.sweep.success_rate()),
               rep.sweep.n_converged, rep.sweep.n_rollouts);
  fmt::print("\n");
  return 0;
}

// ---------------------------------------------------------------- rollout

int cmd_rollout(RunConfig cfg, const std::string& checkpoint) {
  cfg.validate();
  const auto loaded = load_law(cfg, checkpoint);
  const ManifoldSpec& m = loaded->data_spec();
  const Vec start = cfg.vector("start");
  if (start.size() == 0) throw ValidationError("--start is required");
  if (start.size() != m.ambient_dim())
    throw ValidationError(fmt::format("--start has {} coordinates, {} needs {}", start.size(),
                                      m.to_string(), m.ambient_dim()));
  m.check_point(start, "--start");
  RolloutOptions ro;
  ro.dt = cfg.number("rollout_dt");
  ro.max_steps = cfg.integer("rollout_max_steps");
  ro.conv_tol = cfg.number("conv_tol");
  ro.perturb_step = cfg.integer("perturb_at");
  if (ro.perturb_step >= 0) {
    ro.perturb_to = cfg.vector("perturb_to");
    if (ro.perturb_to.size() != m.ambient_dim())
      throw ValidationError("--perturb-to must be given with --perturb-at");
    m.check_point(ro.perturb_to, "--perturb-to");
  }
  const Rollout r = rollout(loaded->law(), start, ro);
  const int n = m.ambient_dim();
  std::string csv = config_comment(cfg);
  csv += fmt::format("# converged: {}, final_distance: {}, perturbed_at: {}\n", r.converged,
                     format_number(r.final_distance), r.perturbed_at);
  csv += fmt::format("step,t,{},{},lyapunov\n", coord_header("x", n), coord_header("v", n));
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    const Vec v = i < r.xdot.size() ? r.xdot[i] : Vec(Vec::Zero(n));
    csv += fmt::format("{},{},{},{},{}\n", i, format_number(r.t[i]), vec_csv(r.x[i]), vec_csv(v),
                       i < r.lyapunov.size() ? format_number(r.lyapunov[i]) : "");
  }
  write_file_atomic(cfg.text("output"), csv);
  if (!r.failure.empty()) {
    fmt::print(stderr, "rollout failed: {}\n", r.failure);
    return kExitNumerical;
  }
  fmt::print("{} steps, converged {}, final distance {}\n", r.x.size() - 1, r.converged,
             format_number(r.final_distance));
  return 0;
}

// ----------------------------------------------------------- export-field

std::vector<Vec> field_grid(const ManifoldSpec& m, int n, double lo, double hi,
                            std::mt19937_64& rng) {
  std::vector<Vec> pts;
  if (m == sphere2()) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / n;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      pts.push_back((Vec(3) << r * std::cos(golden * i), r * std::sin(golden * i), z).finished());
    }
  } else if (!m.blocks().empty() && m.blocks().size() == 1 && !m.blocks()[0].sphere) {
    const int d = m.ambient_dim();
    const int k = std::max(1, static_cast<int>(std::floor(std::pow(n, 1.0 / d) + 1e-9)));
    const int total = static_cast<int>(std::pow(k, d));
    for (int i = 0; i < total; ++i) {
      Vec x(d);
      int rem = i;
      for (int a = 0; a < d; ++a) {
        const int c = rem % k;
        rem /= k;
        x[a] = k == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * c / (k - 1);
      }
      pts.push_back(x);
    }
  } else {
    for (int i = 0; i < n; ++i) pts.push_back(m.sample_uniform(rng, lo, hi));
  }
  return pts;
}

int cmd_export_field(RunConfig cfg, const std::string& checkpoint) {
  cfg.validate();
  const auto loaded = load_law(cfg, checkpoint);
  const ManifoldSpec& m = loaded->data_spec();
  std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.integer("seed")));
  std::vector<Vec> grid =
      field_grid(m, cfg.integer("grid_density"), cfg.number("box_lo"), cfg.number("box_hi"), rng);
  // The grid point closest to the goal is replaced by the goal itself.
  const Vec& goal = loaded->law().goal();
  std::size_t nearest = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (m.distance(grid[i], goal) < m.distance(grid[nearest], goal)) nearest = i;
  grid[nearest] = goal;

  const int n = m.ambient_dim();
  std::string csv = config_comment(cfg);
  csv += fmt::format("{},{},scaling,lyapunov\n", coord_header("x", n), coord_header("v", n));
  for (const auto& x : grid) {
    double lyap = 0.0;
    const Vec v = loaded->law().velocity(x, &lyap);
    csv += fmt::format("{},{},{},{}\n", vec_csv(x), vec_csv(v),
                       format_number(loaded->ck.model.scaling.eval(x)),
                       loaded->law().has_lyapunov() ? format_number(lyap) : "");
  }
  write_file_atomic(cfg.text("output"), csv);
  fmt::print("wrote {} grid points to {}\n", grid.size(), cfg.text("output"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn stable dynamical systems on Riemannian manifolds from demonstrations"};
  app.require_subcommand(1);

  auto pre = add_command(app, "preprocess", "Filter, project and goal-align demonstrations",
                         {"manifold", "n_demos", "noise", "n_samples", "sample_dt", "cutoff",
                          "base", "scale"});
  std::string pre_in, pre_out;
  pre.app->add_option("input", pre_in, "trajectory file (CSV or JSON) or synthetic:<S|W|P|pose>")
      ->required();
  pre.app->add_option("output", pre_out, "demo container JSON")->required();

  auto tr = add_command(app, "train", "Train a model on a demo container",
                        {"model", "hidden", "epochs", "lr", "decay_epoch", "decay_factor",
                         "batch_size", "step_size", "num_charts", "rbf_centers", "holdout",
                         "checkpoint_every"});
  std::string tr_in, tr_out = "checkpoint.json";
  tr.app->add_option("demos", tr_in, "demo container JSON")->required();
  tr.app->add_option("-o,--output", tr_out, "checkpoint path (loss CSV is written next to it)");

  auto ev = add_command(app, "eval", "Velocity MSE, reproduction DTWD and stability sweep",
                        {"baseline", "sweep_n", "sweep_dt", "sweep_max_steps", "conv_tol",
                         "exclusion_radius", "box_lo", "box_hi", "reproduction_max_steps"});
  std::string ev_ck, ev_demos, ev_out = "report.json";
  ev.app->add_option("checkpoint", ev_ck, "checkpoint JSON")->required();
  ev.app->add_option("demos", ev_demos, "demo container JSON")->required();
  ev.app->add_option("-o,--output", ev_out, "report JSON (a CSV row is written next to it)");

  auto ro = add_command(app, "rollout", "Integrate the learned system from a start point",
                        {"baseline", "start", "perturb_at", "perturb_to", "rollout_dt",
                         "rollout_max_steps", "conv_tol"});
  std::string ro_ck, ro_out = "trajectory.csv";
  ro.app->add_option("checkpoint", ro_ck, "checkpoint JSON")->required();
  ro.app->add_option("-o,--output", ro_out, "trajectory CSV");

  auto ex = add_command(app, "export-field", "Sample the learned field on a grid",
                        {"baseline", "grid_density", "box_lo", "box_hi"});
  std::string ex_ck, ex_out = "field.csv";
  ex.app->add_option("checkpoint", ex_ck, "checkpoint JSON")->required();
  ex.app->add_option("-o,--output", ex_out, "field CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*pre.app) {
      RunConfig cfg = resolve(pre);
      cfg.set("input", pre_in);
      cfg.set("output", pre_out);
      return cmd_preprocess(cfg);
    }
    if (*tr.app) {
      RunConfig cfg = resolve(tr);
      cfg.set("input", tr_in);
      cfg.set("output", tr_out);
      return cmd_train(cfg);
    }
    if (*ev.app) {
      RunConfig cfg = resolve(ev);
      cfg.set("input", ev_demos);
      cfg.set("output", ev_out);
      return cmd_eval(cfg, ev_ck, ev_demos);
    }
    if (*ro.app) {
      RunConfig cfg = resolve(ro);
      cfg.set("input", ro_ck);
      cfg.set("output", ro_out);
      return cmd_rollout(cfg, ro_ck);
    }
    if (*ex.app) {
      RunConfig cfg = resolve(ex);
      cfg.set("input", ex_ck);
      cfg.set("output", ex_out);
      return cmd_export_field(cfg, ex_ck);
    }
  } catch (const ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitValidation;
  } catch (const NumericalError& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return kExitNumerical;
  }
  return 0;
}
