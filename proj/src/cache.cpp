#include "trimerlab/cache.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <openssl/evp.h>

#include "trimerlab/csv.hpp"
#include "trimerlab/error.hpp"

namespace trimerlab {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string cache_key(const nlohmann::json& inputs) {
  // nlohmann::json objects are key-sorted, so dump() is canonical.
  return sha256_hex(std::string(kVersion) + "\n" + inputs.dump());
}

Cache::Cache(fs::path root) : root_(std::move(root)) {}

fs::path Cache::default_root() {
  if (const char* env = std::getenv("TRIMERLAB_CACHE"); env && *env) return env;
  return ".trimerlab-cache";
}

std::optional<std::string> Cache::get(const std::string& key, const std::string& name) const {
  std::ifstream in(entry(key) / name, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Cache::put(const std::string& key, const std::string& name, const std::string& content) const {
  write_file_atomic(entry(key) / name, content);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::random_device rd;
  const fs::path tmp = path.string() + ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

nlohmann::json channel_table_inputs(const ModelConfig& cfg, const std::vector<double>& R_grid,
                                    int n_channels, const MeshPolicy& policy,
                                    const ChannelTableOptions& options) {
  std::vector<std::string> grid;
  grid.reserve(R_grid.size());
  for (double R : R_grid) grid.push_back(csv::num(R));
  return nlohmann::json{{"kind", "channel_table"},
                        {"config", cfg},
                        {"R_grid", grid},
                        {"n_channels", n_channels},
                        {"mesh_policy", policy},
                        {"dlnR", options.dlnR},
                        {"guard_channels", options.guard_channels},
                        {"block_size", options.block_size},
                        {"lanczos",
                         {{"tolerance", options.lanczos.tolerance},
                          {"max_steps", options.lanczos.max_steps},
                          {"max_factorizations", options.lanczos.max_factorizations},
                          {"seed", options.lanczos.seed}}}};
}

ChannelTable cached_channel_table(const Cache* cache, const ModelConfig& cfg,
                                  const std::vector<double>& R_grid, int n_channels,
                                  const MeshPolicy& policy, const ChannelTableOptions& options,
                                  bool* hit) {
  if (hit) *hit = false;
  if (!cache) return channel_table(cfg, R_grid, n_channels, policy, options);
  const std::string key = cache_key(channel_table_inputs(cfg, R_grid, n_channels, policy, options));
  const auto csv_text = cache->get(key, "channels.csv");
  const auto side_text = cache->get(key, "channels.json");
  if (csv_text && side_text) {
    try {
      std::istringstream in(*csv_text);
      ChannelTable t = read_channel_table(in, nlohmann::json::parse(*side_text));
      if (hit) *hit = true;
      return t;
    } catch (const std::exception&) {
      // Corrupt entry: recompute and overwrite.
    }
  }
  ChannelTable t = channel_table(cfg, R_grid, n_channels, policy, options);
  std::ostringstream csv_out;
  write_csv(csv_out, t);
  nlohmann::json side = sidecar(t);
  side["input_hash"] = key;
  cache->put(key, "channels.csv", csv_out.str());
  cache->put(key, "channels.json", side.dump(2) + "\n");
  return t;
}

}  // namespace trimerlab
