#include "rsds/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace rsds {

using json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += fmt::format(".tmp.{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError(fmt::format("cannot write '{}'", tmp.string()));
    out << content;
    out.flush();
    if (!out) throw ValidationError(fmt::format("write to '{}' failed", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw ValidationError(fmt::format("cannot rename onto '{}': {}", path.string(), ec.message()));
  }
}

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

namespace {

json vec_json(const Vec& v) { return std::vector<double>(v.begin(), v.end()); }

Vec json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

Mat json_mat(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(j.size()) != rows)
    throw ValidationError("checkpoint weight matrix has the wrong number of rows");
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vec r = json_vec(j[i]);
    if (r.size() != cols) throw ValidationError("checkpoint weight matrix row has the wrong length");
    m.row(i) = r.transpose();
  }
  return m;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ck) {
  const RsdsModel& m = ck.model;
  m.validate();
  json j;
  j["format"] = "rsds-checkpoint";
  j["version"] = kCheckpointVersion;
  j["model"] = ck.data_spec ? "euclidean_flow" : "rsds";
  j["spec"] = m.spec.to_string();
  if (ck.data_spec) j["data_spec"] = ck.data_spec->to_string();
  j["widths"] = m.net.widths();
  json layers = json::array();
  const auto& net = m.net.mlp();
  for (std::size_t l = 0; l < net.W.size(); ++l)
    layers.push_back({{"W", mat_json(net.W[l])}, {"b", vec_json(net.b[l])}});
  j["layers"] = std::move(layers);
  json centers = json::array();
  for (const auto& c : m.scaling.centers()) centers.push_back(vec_json(c));
  j["scaling"] = {{"centers", std::move(centers)},
                  {"sigma", vec_json(m.scaling.sigma())},
                  {"weights", vec_json(m.scaling.weights())},
                  {"epsilon", m.scaling.epsilon()}};
  j["goal"] = vec_json(m.goal);
  j["integration"] = {{"step_size", m.cfg.step_size},
                      {"num_charts", m.cfg.num_charts},
                      {"t_start", m.cfg.t_start},
                      {"t_end", m.cfg.t_end},
                      {"solver", "euler"}};
  json meta;
  try {
    meta = json::parse(ck.metadata_json);
  } catch (const json::exception&) {
    throw ValidationError("checkpoint metadata is not valid JSON");
  }
  j["metadata"] = std::move(meta);
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("invalid checkpoint JSON: {}", e.what()));
  }
  Checkpoint ck;
  try {
    if (j.at("format") != "rsds-checkpoint") throw ValidationError("not an rsds checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ValidationError(fmt::format("unsupported checkpoint version {}", j["version"].dump()));
    RsdsModel& m = ck.model;
    m.spec = ManifoldSpec::parse(j.at("spec").get<std::string>());
    if (j.contains("data_spec")) ck.data_spec = ManifoldSpec::parse(j["data_spec"].get<std::string>());
    const auto widths = j.at("widths").get<std::vector<int>>();
    const int n = m.spec.ambient_dim();
    if (widths.size() < 3 || widths.front() != n + 1 || widths.back() != n)
      throw ValidationError("checkpoint layer widths do not match the manifold");
    for (std::size_t l = 1; l + 1 < widths.size(); ++l)
      if (widths[l] != widths[1]) throw ValidationError("hidden layers must share one width");
    m.net = VectorFieldNet(m.spec, widths[1], static_cast<int>(widths.size()) - 2);
    const auto& layers = j.at("layers");
    if (layers.size() != widths.size() - 1)
      throw ValidationError("checkpoint layer count does not match widths");
    auto& net = m.net.mlp();
    for (std::size_t l = 0; l < net.W.size(); ++l) {
      net.W[l] = json_mat(layers[l].at("W"), widths[l + 1], widths[l]);
      net.b[l] = json_vec(layers[l].at("b"));
      if (net.b[l].size() != widths[l + 1])
        throw ValidationError("checkpoint bias has the wrong length");
      if (!net.W[l].allFinite() || !net.b[l].allFinite())
        throw ValidationError("checkpoint contains non-finite parameters");
    }
    const auto& sc = j.at("scaling");
    std::vector<Vec> centers;
    for (const auto& c : sc.at("centers")) centers.push_back(json_vec(c));
    m.scaling = ScalingNet(m.spec, std::move(centers), json_vec(sc.at("sigma")),
                           json_vec(sc.at("weights")), sc.at("epsilon").get<double>());
    m.goal = json_vec(j.at("goal"));
    const auto& ic = j.at("integration");
    m.cfg.step_size = ic.at("step_size").get<double>();
    m.cfg.num_charts = ic.at("num_charts").get<int>();
    m.cfg.t_start = ic.at("t_start").get<double>();
    m.cfg.t_end = ic.at("t_end").get<double>();
    if (ic.at("solver") != "euler") throw ValidationError("unsupported solver in checkpoint");
    ck.metadata_json = j.contains("metadata") ? j["metadata"].dump() : "{}";
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed checkpoint: {}", e.what()));
  }
  ck.model.validate();
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file_atomic(path, checkpoint_to_json(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return checkpoint_from_json(read_file(path));
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    if (msg.find(path.string()) != std::string::npos) throw;
    throw ValidationError(fmt::format("{}: {}", path.string(), msg));
  }
}

}  // namespace rsds
