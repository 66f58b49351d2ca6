/* Copyright 2026 The artta Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "artta/experiment.hpp"

namespace artta {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class ExperimentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("artta_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    BlobSpec spec;
    spec.samples = 300;
    spec.classes = 3;
    spec.dims = 4;
    spec.spread = 0.05;
    const auto data = make_blobs(spec, 100);
    write_file_atomic(dir_ / "train.csv", dataset_to_csv(data.train));
    config_.dataset_path = (dir_ / "train.csv").string();
    config_.network = {{4, 8, 3}, {true}};
    config_.pretrain.epochs = 3;
    config_.schedule.segments = DomainSchedule::parse_segments("identity:1:4,gaussian_noise:3:4");
    config_.replay_capacity = 30;
    config_.out_dir = (dir_ / "run").string();
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  RunConfig config_;
};

TEST_F(ExperimentTest, WritesAllArtifacts) {
  const auto rep = run_experiment(config_);
  const fs::path out = config_.out_dir;
  for (const char* f : {"config.ini", "summary.json", "manifest.json", "source_model.mnet", "seed_0/metrics.csv",
                        "seed_1/summary.json", "seed_2/metrics.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_EQ(parse_config(slurp(out / "config.ini")), config_);
  const auto csv = slurp(out / "seed_0" / "metrics.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "batch_idx,segment_idx,domain_id,batch_acc,window_acc,loss,mean_beta_ema,lambda");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);

  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary.at("method"), "ar_tta");
  EXPECT_EQ(summary.at("mean_accuracy").at("values").size(), 3u);
  EXPECT_EQ(summary.at("domains"), (std::vector<std::string>{"identity@1", "gaussian_noise@3"}));
  const auto seed = nlohmann::json::parse(slurp(out / "seed_1" / "summary.json"));
  for (const char* k : {"method", "seed", "mean_accuracy", "amca", "per_domain"}) EXPECT_TRUE(seed.contains(k)) << k;

  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  for (const auto& f : manifest.at("files")) {
    const auto bytes = slurp(out / f.at("path").get<std::string>());
    EXPECT_EQ(f.at("sha256").get<std::string>(), sha256_hex(bytes));
    EXPECT_EQ(f.at("bytes").get<std::size_t>(), bytes.size());
  }
  ASSERT_EQ(rep.seeds.size(), 3u);
  for (const auto& s : rep.seeds) EXPECT_TRUE(s.ok) << s.error;
}

TEST_F(ExperimentTest, RerunIsByteIdentical) {
  run_experiment(config_);
  const auto first = slurp(fs::path(config_.out_dir) / "manifest.json");
  const auto summary = slurp(fs::path(config_.out_dir) / "summary.json");
  fs::remove_all(config_.out_dir);
  run_experiment(config_);
  EXPECT_EQ(slurp(fs::path(config_.out_dir) / "manifest.json"), first);
  EXPECT_EQ(slurp(fs::path(config_.out_dir) / "summary.json"), summary);
}

TEST_F(ExperimentTest, StoredModelIsReused) {
  run_experiment(config_);
  RunConfig again = config_;
  again.pretrain.model_path = (fs::path(config_.out_dir) / "source_model.mnet").string();
  again.out_dir = (dir_ / "again").string();
  run_experiment(again);
  EXPECT_EQ(slurp(fs::path(again.out_dir) / "summary.json"), slurp(fs::path(config_.out_dir) / "summary.json"));
  EXPECT_FALSE(fs::exists(fs::path(again.out_dir) / "source_model.mnet"));
  again.network = {{4, 6, 3}, {true}};
  EXPECT_THROW(run_experiment(again), ConfigError);
}

TEST_F(ExperimentTest, MissingDatasetIsAConfigError) {
  config_.dataset_path = (dir_ / "absent.csv").string();
  EXPECT_THROW(run_experiment(config_), ConfigError);
  config_.dataset_path.clear();
  EXPECT_THROW(run_experiment(config_), ConfigError);
}

TEST(Summarize, MeanAndSampleStd) {
  const auto s = summarize({0.5, 0.6, 0.7});
  EXPECT_NEAR(s.mean, 0.6, 1e-15);
  EXPECT_NEAR(s.std, 0.1, 1e-15);
  EXPECT_EQ(s.values.size(), 3u);
  EXPECT_EQ(summarize({0.4}).std, 0.0);
  EXPECT_TRUE(std::isnan(summarize({}).mean));
}

TEST_F(ExperimentTest, OversizedReplayCapacityIsRejectedUpFront) {
  config_.replay_capacity = 301;
  EXPECT_THROW(run_experiment(config_), ConfigError);
  EXPECT_FALSE(fs::exists(config_.out_dir));
  config_.method = Method::ar_tta_no_replay;
  EXPECT_NO_THROW(run_experiment(config_));
}

TEST(RunSeeds, SourceFrozenSeedsShareThePredictor) {
  BlobSpec spec;
  spec.samples = 200;
  spec.classes = 2;
  spec.dims = 3;
  const auto data = make_blobs(spec, 100);
  RunConfig c;
  c.network = {{3, 6, 2}, {true}};
  c.pretrain.epochs = 2;
  c.method = Method::source_frozen;
  c.schedule.segments = DomainSchedule::parse_segments("identity:1:5");
  c.schedule.order = OrderMode::sequential;
  const auto src = pretrain_source(data.train, c.network, c.pretrain).model;
  const auto rep = run_seeds(c, src, data.train, data.test);
  ASSERT_EQ(rep.mean_accuracy.values.size(), 3u);
  EXPECT_EQ(rep.mean_accuracy.values[0], rep.mean_accuracy.values[1]);
  EXPECT_EQ(rep.mean_accuracy.std, 0.0);
  EXPECT_EQ(summary_json(rep).dump(), summary_json(run_seeds(c, src, data.train, data.test)).dump());
}

TEST(RunSeeds, ZeroCapacityMatchesNoReplay) {
  BlobSpec spec;
  spec.samples = 200;
  spec.classes = 2;
  spec.dims = 3;
  const auto data = make_blobs(spec, 100);
  RunConfig c;
  c.network = {{3, 6, 2}, {true}};
  c.pretrain.epochs = 2;
  c.engine.lr = 0.05;
  c.schedule.segments = DomainSchedule::parse_segments("gaussian_noise:4:8");
  const auto src = pretrain_source(data.train, c.network, c.pretrain).model;
  c.replay_capacity = 0;
  const auto empty = run_seeds(c, src, data.train, data.test);
  c.method = Method::ar_tta_no_replay;
  c.replay_capacity = 100;
  const auto none = run_seeds(c, src, data.train, data.test);
  for (std::size_t s = 0; s < 3; ++s) {
    ASSERT_EQ(empty.seeds[s].rows.size(), none.seeds[s].rows.size());
    for (std::size_t b = 0; b < empty.seeds[s].rows.size(); ++b) {
      EXPECT_EQ(empty.seeds[s].rows[b].batch_acc, none.seeds[s].rows[b].batch_acc);
      EXPECT_EQ(empty.seeds[s].rows[b].loss, none.seeds[s].rows[b].loss);
    }
  }
  EXPECT_EQ(empty.mean_accuracy.values, none.mean_accuracy.values);
}

nlohmann::json fake_summary(const std::string& label, double acc) {
  nlohmann::json m = {{"mean", acc}, {"std", 0.0}, {"values", {acc}}};
  return {{"label", label},          {"method", "ar_tta"},        {"schedule", "identity:1:1"},
          {"domains", {"identity@1"}}, {"mean_accuracy", m},       {"amca", m},
          {"per_domain", {{{"domain", "identity@1"}, {"accuracy", m}}}}};
}

TEST(Compare, TablesPreserveOrder) {
  const auto one = compare({fake_summary("a", 0.5)});
  EXPECT_EQ(one.labels, (std::vector<std::string>{"a"}));
  EXPECT_EQ(one.cells[0], (std::vector<double>{0.5, 0.5, 0.5}));
  const auto t = compare({fake_summary("z", 0.9), fake_summary("a", 0.1), fake_summary("z", 0.9)});
  EXPECT_EQ(t.labels, (std::vector<std::string>{"z", "a", "z"}));
  EXPECT_EQ(t.cells[0], t.cells[2]);
  EXPECT_EQ(t.csv.substr(0, t.csv.find('\n')), "method,identity@1,mean,amca");
  EXPECT_NE(t.text.find("90.0"), std::string::npos);
  auto other = fake_summary("b", 0.2);
  other["schedule"] = "identity:1:2";
  EXPECT_THROW(compare({fake_summary("a", 0.1), other}), ConfigError);
  EXPECT_THROW(compare({}), ConfigError);
}

TEST(Blobs, SparsePrototypes) {
  BlobSpec spec;
  spec.samples = 100;
  spec.classes = 4;
  spec.dims = 200;
  spec.spread = 0.0;
  spec.center_low = 0.0;
  spec.center_high = 0.4;
  spec.active_fraction = 0.25;
  const auto d = make_blobs(spec, 10).train;
  std::size_t high = 0;
  for (double v : d.samples.values()) {
    ASSERT_TRUE(v == 0.0 || v == 0.4);
    high += v == 0.4;
  }
  EXPECT_NEAR(static_cast<double>(high) / d.samples.size(), 0.25, 0.05);
  spec.active_fraction = 1.5;
  EXPECT_THROW(make_blobs(spec, 10), ConfigError);
}

TEST(Blobs, DeterministicAndBalanced) {
  BlobSpec spec;
  spec.samples = 40;
  const auto a = make_blobs(spec, 20);
  const auto b = make_blobs(spec, 20);
  EXPECT_EQ(a.train.samples, b.train.samples);
  EXPECT_EQ(a.train.class_counts(), (std::vector<std::size_t>{10, 10, 10, 10}));
  for (double v : a.test.samples.values()) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace artta
