#include <doctest.h>

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "taskroute/artifact.hpp"
#include "taskroute/dataset.hpp"
#include "taskroute/router.hpp"
#include "taskroute/synth.hpp"

using namespace taskroute;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("taskroute_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& line : lines) out << line << "\n";
}

const std::vector<std::string> kPool = {
    R"({"model_id":"alpha","cost_per_query":1.5})",
    R"({"model_id":"beta","cost_per_query":0.5})",
};

std::string record_line(const std::string& id, double q0, double q1) {
  return R"({"prompt_id":")" + id +
         R"(","source":"synthetic","prompt_embedding":[0.1,0.2,0.3],"desc_embedding":[1.0,2.0],"quality":[)" +
         std::to_string(q0) + "," + std::to_string(q1) + "]}";
}

}  // namespace

TEST_CASE("load_dataset round-trips a valid file") {
  TempDir dir;
  write_lines(dir.file("pool.jsonl"), kPool);
  write_lines(dir.file("records.jsonl"),
              {record_line("a", 0.1, 0.9), record_line("b", 0.4, 0.6),
               record_line("c", 1.0, 0.0)});
  const Dataset ds = load_dataset(dir.file("records.jsonl"), dir.file("pool.jsonl"));
  CHECK(ds.records.size() == 3);
  CHECK(ds.pool_size() == 2);
  CHECK(ds.pool[0].model_id == "alpha");
  CHECK(ds.pool[1].index == 1);
  CHECK(ds.prompt_dim() == 3);
  CHECK(ds.desc_dim() == 2);
  CHECK(ds.records[1].quality[1] == doctest::Approx(0.6));
}

TEST_CASE("load_dataset rejects out-of-range quality with the line number") {
  TempDir dir;
  write_lines(dir.file("pool.jsonl"), kPool);
  write_lines(dir.file("records.jsonl"),
              {record_line("a", 0.1, 0.9), record_line("b", 0.4, 1.2)});
  try {
    load_dataset(dir.file("records.jsonl"), dir.file("pool.jsonl"));
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":2") != std::string::npos);
    CHECK(msg.find("quality") != std::string::npos);
  }
}

TEST_CASE("load_dataset rejects embedding dimension drift") {
  TempDir dir;
  write_lines(dir.file("pool.jsonl"), kPool);
  write_lines(
      dir.file("records.jsonl"),
      {record_line("a", 0.1, 0.9),
       R"({"prompt_id":"b","source":"s","prompt_embedding":[0.1,0.2],"desc_embedding":[1.0,2.0],"quality":[0.5,0.5]})"});
  CHECK_THROWS_WITH_AS(load_dataset(dir.file("records.jsonl"), dir.file("pool.jsonl")),
                       doctest::Contains("does not match first record"), Error);
}

TEST_CASE("load_dataset rejects duplicates, bad pool, and missing files") {
  TempDir dir;
  write_lines(dir.file("pool.jsonl"), kPool);
  write_lines(dir.file("records.jsonl"),
              {record_line("a", 0.1, 0.9), record_line("a", 0.4, 0.6)});
  CHECK_THROWS_WITH_AS(load_dataset(dir.file("records.jsonl"), dir.file("pool.jsonl")),
                       doctest::Contains("duplicate prompt_id"), Error);

  write_lines(dir.file("badpool.jsonl"),
              {kPool[0], R"({"model_id":"alpha","cost_per_query":2.0})"});
  CHECK_THROWS_WITH_AS(load_dataset(dir.file("records.jsonl"), dir.file("badpool.jsonl")),
                       doctest::Contains("duplicate model_id"), Error);

  CHECK_THROWS_AS(load_dataset(dir.file("missing.jsonl"), dir.file("pool.jsonl")), Error);

  // wrong quality arity vs the pool
  write_lines(
      dir.file("records3.jsonl"),
      {R"({"prompt_id":"a","source":"s","prompt_embedding":[0.1],"desc_embedding":[1.0],"quality":[0.5,0.5,0.5]})"});
  CHECK_THROWS_WITH_AS(load_dataset(dir.file("records3.jsonl"), dir.file("pool.jsonl")),
                       doctest::Contains("pool has"), Error);
}

TEST_CASE("dataset writers and loader round-trip") {
  const auto [ds, truth] = generate(taskroute::testing::fixture_spec());
  TempDir dir;
  write_pool_file(ds.pool, dir.file("pool.jsonl"));
  write_records_file(ds, dir.file("records.jsonl"));
  const Dataset back = load_dataset(dir.file("records.jsonl"), dir.file("pool.jsonl"));
  REQUIRE(back.records.size() == ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    CHECK(back.records[i].prompt_id == ds.records[i].prompt_id);
    CHECK(taskroute::testing::exact_eq(back.records[i].prompt_embedding, ds.records[i].prompt_embedding));
    CHECK(taskroute::testing::exact_eq(back.records[i].quality, ds.records[i].quality));
  }
}

TEST_CASE("split_dataset sizes follow floor-with-remainder-to-train") {
  Dataset ds;
  ds.pool = {{"m", 0, 1.0}};
  for (int i = 0; i < 10; ++i) {
    PromptRecord rec;
    rec.prompt_id = "p" + std::to_string(i);
    rec.source = "s";
    rec.prompt_embedding = Eigen::VectorXd::Constant(2, i);
    rec.desc_embedding = Eigen::VectorXd::Constant(2, i);
    rec.quality = Eigen::VectorXd::Constant(1, 0.5);
    ds.records.push_back(rec);
  }

  const auto splits = split_dataset(ds, {0.8, 0.1, 0.1}, 7);
  CHECK(splits[0].records.size() == 8);
  CHECK(splits[1].records.size() == 1);
  CHECK(splits[2].records.size() == 1);

  Dataset seven = ds;
  seven.records.resize(7);
  const auto odd = split_dataset(seven, {0.8, 0.1, 0.1}, 7);
  CHECK(odd[0].records.size() == 7);
  CHECK(odd[1].records.size() == 0);
  CHECK(odd[2].records.size() == 0);
}

TEST_CASE("split_dataset is deterministic and partitions exactly") {
  const auto [ds, truth] = generate(taskroute::testing::fixture_spec(4));
  const auto a = split_dataset(ds, {0.6, 0.2, 0.2}, 99);
  const auto b = split_dataset(ds, {0.6, 0.2, 0.2}, 99);
  for (int s = 0; s < 3; ++s) {
    REQUIRE(a[s].records.size() == b[s].records.size());
    for (std::size_t i = 0; i < a[s].records.size(); ++i)
      CHECK(a[s].records[i].prompt_id == b[s].records[i].prompt_id);
  }

  std::set<std::string> seen;
  std::size_t total = 0;
  for (int s = 0; s < 3; ++s) {
    total += a[s].records.size();
    for (const auto& rec : a[s].records) CHECK(seen.insert(rec.prompt_id).second);
  }
  CHECK(total == ds.records.size());

  CHECK_THROWS_AS(split_dataset(ds, {0.5, 0.2, 0.2}, 1), Error);
}

TEST_CASE("config text serialization round-trips exactly") {
  PipelineConfig cfg;
  cfg.knn_k = 7;
  cfg.rbo_threshold = 0.3721;
  cfg.rbo_persistence = 0.55;
  cfg.rrf_epsilon = 12.125;
  cfg.leiden_iterations = 2;
  cfg.alpha = 0.625;
  cfg.seed = -12345;
  const PipelineConfig back = parse_config_text(config_to_text(cfg));
  CHECK(back == cfg);

  CHECK_THROWS_WITH_AS(parse_config_text("bogus_key=1\n"),
                       doctest::Contains("unknown key"), Error);
  CHECK_THROWS_AS(parse_config_text("alpha=2.0\n"), Error);
}

TEST_CASE("artifact round-trip preserves a config and checks versions") {
  TempDir dir;
  PipelineConfig cfg;
  cfg.knn_k = 9;
  cfg.alpha = 0.25;
  cfg.seed = 1234;
  save_artifact(cfg, dir.file("config.bin"));
  CHECK(load_artifact<PipelineConfig>(dir.file("config.bin")) == cfg);

  // bump the version field in place
  {
    std::fstream f(dir.file("config.bin"),
                   std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const char bumped[4] = {2, 0, 0, 0};
    f.write(bumped, 4);
  }
  CHECK_THROWS_WITH_AS(load_artifact<PipelineConfig>(dir.file("config.bin")),
                       doctest::Contains("version mismatch"), Error);
}

TEST_CASE("artifact corruption is caught by the checksum") {
  TempDir dir;
  PipelineConfig cfg;
  save_artifact(cfg, dir.file("c.bin"));
  {
    std::fstream f(dir.file("c.bin"), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(20);
    const char x = 0x5a;
    f.write(&x, 1);
  }
  CHECK_THROWS_WITH_AS(load_artifact<PipelineConfig>(dir.file("c.bin")),
                       doctest::Contains("checksum"), Error);
}

TEST_CASE("artifact type tags are enforced") {
  TempDir dir;
  PipelineConfig cfg;
  save_artifact(cfg, dir.file("c.bin"));
  CHECK_THROWS_WITH_AS(load_artifact<DiscoveryResult>(dir.file("c.bin")),
                       doctest::Contains("type mismatch"), Error);
}

TEST_CASE("router params round-trip bitwise") {
  const auto [ds, truth] = generate(taskroute::testing::fixture_spec());
  const PipelineConfig cfg = taskroute::testing::fixture_config();
  const DiscoveryResult result = iterative_cluster(ds, cfg);
  RouterDims dims{ds.prompt_dim(), 8, 8, 12};
  const RouterParams params = init_router(ds.pool, result, dims, 5);

  TempDir dir;
  save_artifact(params, dir.file("router.bin"));
  const RouterParams back = load_artifact<RouterParams>(dir.file("router.bin"));
  CHECK(bitwise_equal(params, back));

  // byte-stable: saving twice produces identical files
  save_artifact(params, dir.file("router2.bin"));
  CHECK(file_crc32(dir.file("router.bin")) == file_crc32(dir.file("router2.bin")));
}
