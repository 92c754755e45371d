#pragma once

// Content-addressed result cache. Entries live in <root>/<key>/ where the
// key is the SHA-256 of the canonical JSON of every input that affects the
// output; files are written to a temporary name and renamed into place.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "trimerlab/hyperangular.hpp"

namespace trimerlab {

/// Software version mixed into every cache key.
inline constexpr const char* kVersion = "1.0.0";

std::string sha256_hex(std::string_view data);

/// SHA-256 of the compact JSON dump (object keys sorted) plus the version.
std::string cache_key(const nlohmann::json& inputs);

class Cache {
 public:
  explicit Cache(std::filesystem::path root);

  /// $TRIMERLAB_CACHE, else ./.trimerlab-cache.
  static std::filesystem::path default_root();

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path entry(const std::string& key) const { return root_ / key; }

  std::optional<std::string> get(const std::string& key, const std::string& name) const;
  /// Atomic: write-temp then rename.
  void put(const std::string& key, const std::string& name, const std::string& content) const;

 private:
  std::filesystem::path root_;
};

/// Atomically writes `content` to `path` (temporary file in the same directory, then rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Cache inputs of a channel table; the thread count is excluded because
/// results do not depend on it.
nlohmann::json channel_table_inputs(const ModelConfig& cfg, const std::vector<double>& R_grid,
                                    int n_channels, const MeshPolicy& policy,
                                    const ChannelTableOptions& options);

/// channel_table served from `cache` when present (nullptr disables caching).
/// `hit`, when given, reports whether the result came from the cache.
ChannelTable cached_channel_table(const Cache* cache, const ModelConfig& cfg,
                                  const std::vector<double>& R_grid, int n_channels,
                                  const MeshPolicy& policy, const ChannelTableOptions& options = {},
                                  bool* hit = nullptr);

}  // namespace trimerlab
