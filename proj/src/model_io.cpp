#include "hamrc/model_io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "hamrc/errors.hpp"

namespace hamrc {

using nlohmann::json;

namespace {

json dense(const Matrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix dense_from(const json& j, const char* what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ConfigError(std::string("model: ") + what + " has inconsistent size");
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

Vector vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

json body(const ModelDocument& doc) {
  const TrainedModel& m = doc.model;
  if (!m.reservoir) throw std::invalid_argument("model_to_json: model has no reservoir");
  const Reservoir& res = *m.reservoir;
  const auto& c = res.config();
  json j;
  j["format"] = "hamrc-model";
  j["version"] = kModelFormatVersion;
  j["reservoir"] = {{"nodes", c.nodes},
                    {"density", c.density},
                    {"spectral_radius", c.spectral_radius},
                    {"leak", c.leak},
                    {"input_scale", c.input_scale},
                    {"ridge", c.ridge},
                    {"input_dim", c.input_dim},
                    {"output_dim", c.output_dim},
                    {"dt", c.dt},
                    {"seed", c.seed}};
  json triplets = json::array();
  for (int r = 0; r < res.adjacency().outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(res.adjacency(), r); it; ++it)
      triplets.push_back({it.row(), it.col(), it.value()});
  }
  j["adjacency"] = {{"rows", res.adjacency().rows()},
                    {"cols", res.adjacency().cols()},
                    {"triplets", triplets}};
  j["input_weights"] = dense(res.input_weights());
  j["bias"] = as_std(res.bias());
  j["w_out"] = dense(m.w_out);
  j["final_state"] = as_std(m.final_state);
  const auto& t = m.manifest;
  j["manifest"] = {{"betas", t.betas},
                   {"lengths", t.lengths},
                   {"washout", t.washout},
                   {"ridge", t.ridge},
                   {"reservoir_seed", t.reservoir_seed},
                   {"state_seed", t.state_seed},
                   {"harvested_columns", t.harvested_columns},
                   {"training_rmse", t.training_rmse}};
  j["experiment"] = doc.experiment.empty() ? json(nullptr) : json::parse(doc.experiment);
  return j;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

std::string model_to_json(const ModelDocument& doc) {
  json j = body(doc);
  j["content_hash"] = sha256_hex(j.dump());
  // One top-level key per line and one adjacency triplet per line.
  std::string out = "{\n";
  bool first = true;
  for (const auto& [key, value] : j.items()) {
    if (!first) out += ",\n";
    first = false;
    out += json(key).dump() + ": ";
    if (key != "adjacency") {
      out += value.dump();
      continue;
    }
    out += "{\"cols\": " + value.at("cols").dump() + ", \"rows\": " + value.at("rows").dump() +
           ", \"triplets\": [";
    const auto& trips = value.at("triplets");
    for (std::size_t i = 0; i < trips.size(); ++i) {
      out += i ? ",\n  " : "\n  ";
      out += trips[i].dump();
    }
    out += "\n]}";
  }
  out += "\n}";
  return out;
}

ModelDocument model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model: malformed JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "hamrc-model") throw ConfigError("model: not a model document");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw ConfigError("model: unsupported format version " + std::to_string(version));
    const std::string stored = j.at("content_hash").get<std::string>();
    json unhashed = j;
    unhashed.erase("content_hash");
    if (sha256_hex(unhashed.dump()) != stored) throw ConfigError("model: content hash mismatch");

    const json& r = j.at("reservoir");
    ReservoirConfig c;
    c.nodes = r.at("nodes").get<int>();
    c.density = r.at("density").get<double>();
    c.spectral_radius = r.at("spectral_radius").get<double>();
    c.leak = r.at("leak").get<double>();
    c.input_scale = r.at("input_scale").get<double>();
    c.ridge = r.at("ridge").get<double>();
    c.input_dim = r.at("input_dim").get<int>();
    c.output_dim = r.at("output_dim").get<int>();
    c.dt = r.at("dt").get<double>();
    c.seed = r.at("seed").get<std::uint64_t>();

    const json& a = j.at("adjacency");
    const auto n = a.at("rows").get<Eigen::Index>();
    if (n != c.nodes || a.at("cols").get<Eigen::Index>() != n)
      throw ConfigError("model: adjacency size does not match nodes");
    std::vector<Eigen::Triplet<double>> trips;
    for (const auto& t : a.at("triplets")) {
      const auto row = t.at(0).get<Eigen::Index>();
      const auto col = t.at(1).get<Eigen::Index>();
      if (row < 0 || row >= n || col < 0 || col >= n)
        throw ConfigError("model: adjacency triplet out of range");
      trips.emplace_back(row, col, t.at(2).get<double>());
    }
    SparseMatrix adj(n, n);
    adj.setFromTriplets(trips.begin(), trips.end());
    adj.makeCompressed();

    auto res = std::make_shared<const Reservoir>(c, std::move(adj),
                                                 dense_from(j.at("input_weights"), "input_weights"),
                                                 vector_from(j.at("bias")));
    ModelDocument doc;
    TrainedModel& m = doc.model;
    m.w_out = dense_from(j.at("w_out"), "w_out");
    m.final_state = vector_from(j.at("final_state"));
    if (m.w_out.cols() != res->size() || m.final_state.size() != res->size())
      throw ConfigError("model: readout or state size does not match nodes");
    const json& t = j.at("manifest");
    auto& man = m.manifest;
    man.betas = t.at("betas").get<std::vector<double>>();
    man.lengths = t.at("lengths").get<std::vector<Eigen::Index>>();
    man.washout = t.at("washout").get<int>();
    man.ridge = t.at("ridge").get<double>();
    man.reservoir_seed = t.at("reservoir_seed").get<std::uint64_t>();
    man.state_seed = t.at("state_seed").get<std::uint64_t>();
    man.harvested_columns = t.at("harvested_columns").get<Eigen::Index>();
    man.training_rmse = t.at("training_rmse").get<double>();
    m.reservoir = std::move(res);
    if (!j.at("experiment").is_null()) doc.experiment = j.at("experiment").dump(2);
    return doc;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelDocument& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << model_to_json(doc) << '\n';
  if (!out) throw ConfigError("failed writing " + path.string());
}

ModelDocument load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read model " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

RunManifest::RunManifest(std::string command, const std::string& config_json)
    : command_(std::move(command)),
      config_(config_json.empty() ? json(nullptr) : json::parse(config_json)) {}

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs_.emplace_back(path.filename().string(), sha256_file(path));
}

void RunManifest::write(const std::filesystem::path& dir) const {
  json j;
  j["command"] = command_;
  j["config"] = config_;
  j["results"] = results_;
  json outs = json::array();
  for (const auto& [name, hash] : outputs_) outs.push_back({{"file", name}, {"sha256", hash}});
  j["outputs"] = outs;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  j["timestamp"] = stamp;
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "manifest.json");
  if (!out) throw ConfigError("cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

}  // namespace hamrc
