#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "trimerlab/cache.hpp"

using namespace trimerlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("trimerlab-test-" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Cache, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Cache, KeyIgnoresInsertionOrder) {
  nlohmann::json a, b;
  a["x"] = 1;
  a["y"] = "s";
  b["y"] = "s";
  b["x"] = 1;
  EXPECT_EQ(cache_key(a), cache_key(b));
  b["x"] = 2;
  EXPECT_NE(cache_key(a), cache_key(b));
}

TEST(Cache, PutThenGet) {
  const Cache c(scratch_dir("putget"));
  EXPECT_FALSE(c.get("k", "f.txt").has_value());
  c.put("k", "f.txt", "hello\n");
  EXPECT_EQ(c.get("k", "f.txt").value(), "hello\n");
  c.put("k", "f.txt", "again\n");
  EXPECT_EQ(c.get("k", "f.txt").value(), "again\n");
}

TEST(Cache, AtomicWriteLeavesNoTemporaries) {
  const fs::path dir = scratch_dir("atomic");
  write_file_atomic(dir / "sub" / "out.csv", "a,b\n1,2\n");
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) ++files;
  EXPECT_EQ(files, 1);
  std::ifstream in(dir / "sub" / "out.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "a,b");
}

TEST(Cache, ChannelTableInputsExcludeThreads) {
  ModelConfig cfg;
  ChannelTableOptions one, many;
  many.threads = 8;
  const std::vector<double> grid{10.0, 100.0};
  EXPECT_EQ(cache_key(channel_table_inputs(cfg, grid, 1, MeshPolicy{}, one)),
            cache_key(channel_table_inputs(cfg, grid, 1, MeshPolicy{}, many)));
  cfg.alpha2 = 0.01;
  EXPECT_NE(cache_key(channel_table_inputs(cfg, grid, 1, MeshPolicy{}, one)),
            cache_key(channel_table_inputs(ModelConfig{}, grid, 1, MeshPolicy{}, one)));
}

TEST(Cache, CachedTableIsIdenticalOnHit) {
  const Cache c(scratch_dir("table"));
  ModelConfig cfg;
  cfg.alpha2 = 0.02;
  const auto grid = log_grid(10.0, 1e3, 2);
  bool hit = true;
  const ChannelTable a = cached_channel_table(&c, cfg, grid, 2, MeshPolicy{}, {}, &hit);
  EXPECT_FALSE(hit);
  const ChannelTable b = cached_channel_table(&c, cfg, grid, 2, MeshPolicy{}, {}, &hit);
  EXPECT_TRUE(hit);
  EXPECT_EQ(a.R, b.R);
  EXPECT_EQ(a.W, b.W);
  EXPECT_EQ(a.Q, b.Q);
  EXPECT_EQ(a.cfg, b.cfg);
}

TEST(Cache, CorruptEntryIsRecomputed) {
  const Cache c(scratch_dir("corrupt"));
  ModelConfig cfg;
  const auto grid = log_grid(10.0, 100.0, 2);
  const ChannelTable a = cached_channel_table(&c, cfg, grid, 1, MeshPolicy{});
  const std::string key = cache_key(channel_table_inputs(cfg, grid, 1, MeshPolicy{}, {}));
  c.put(key, "channels.csv", "garbage\n");
  bool hit = true;
  const ChannelTable b = cached_channel_table(&c, cfg, grid, 1, MeshPolicy{}, {}, &hit);
  EXPECT_FALSE(hit);
  EXPECT_EQ(a.W, b.W);
  cached_channel_table(&c, cfg, grid, 1, MeshPolicy{}, {}, &hit);
  EXPECT_TRUE(hit);
}
