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

// artta: pretrain source models, run adaptation experiments, compare runs
// and generate synthetic datasets.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "artta/experiment.hpp"

namespace {

namespace fs = std::filesystem;
using namespace artta;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + p.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "Run configuration file");
    cmd->add_option("-s,--set", overrides, "Override one key, section.key=value (repeatable)");
    cmd->add_option("-o,--out", out, "Output directory");
    cmd->add_option("--seed", seed, "Seed (replaces run.seeds for run, pretrain.seed for pretrain)");
  }

  RunConfig load() const {
    RunConfig c = config_path.empty() ? RunConfig{} : parse_config(read_text(config_path));
    for (const auto& o : overrides) apply_override(c, o);
    if (!out.empty()) c.out_dir = out;
    return c;
  }
};

void print_warnings(const Warnings& w) {
  if (w.prob_clamped) std::fprintf(stderr, "warning: %zu probabilities clamped in the loss\n", w.prob_clamped);
  if (w.var_clamped) std::fprintf(stderr, "warning: %zu variances clamped to eps\n", w.var_clamped);
  if (w.degenerate_batch) std::fprintf(stderr, "warning: %zu single-row batches used source stats\n", w.degenerate_batch);
  if (w.deficient_class) std::fprintf(stderr, "warning: %zu replay classes had too few samples\n", w.deficient_class);
  if (w.resampled_stream) std::fprintf(stderr, "warning: %zu stream segments reused samples\n", w.resampled_stream);
}

int cmd_pretrain(const CommonOptions& opt) {
  RunConfig c = opt.load();
  if (opt.seed) c.pretrain.seed = *opt.seed;
  c.validate();
  if (c.dataset_path.empty()) throw ConfigError("data.path is required");
  const Dataset data = load_dataset(c.dataset_path);
  Warnings w;
  const auto r = pretrain_source(data, c.network, c.pretrain, &w);
  fs::create_directories(c.out_dir);
  const fs::path model = fs::path(c.out_dir) / "source_model.mnet";
  write_file_atomic(model, encode_container(source_model_to_container(r.model)));
  std::printf("train accuracy %.4f, final loss %.6f\n", r.train_accuracy,
              r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back());
  std::printf("wrote %s\n", model.string().c_str());
  if (!r.loss_improved) std::fprintf(stderr, "warning: training loss never improved\n");
  print_warnings(w);
  return 0;
}

int cmd_run(const CommonOptions& opt) {
  RunConfig c = opt.load();
  if (opt.seed) c.seeds = {*opt.seed};
  const auto rep = run_experiment(c);
  std::printf("%s on %s, %zu seed(s)\n", rep.label.c_str(), rep.schedule.c_str(), rep.seeds.size());
  if (rep.mean_accuracy.values.empty()) std::printf("  no seed completed\n");
  for (std::size_t d = 0; d < rep.domain_names.size(); ++d) {
    std::printf("  %-24s %6.2f +- %.2f\n", rep.domain_names[d].c_str(), 100 * rep.per_domain[d].mean,
                100 * rep.per_domain[d].std);
  }
  std::printf("  %-24s %6.2f +- %.2f\n", "mean accuracy", 100 * rep.mean_accuracy.mean, 100 * rep.mean_accuracy.std);
  std::printf("  %-24s %6.2f +- %.2f\n", "amca", 100 * rep.amca.mean, 100 * rep.amca.std);
  std::printf("results in %s\n", c.out_dir.c_str());
  Warnings w;
  int failed = 0;
  for (const auto& s : rep.seeds) {
    w += s.warnings;
    if (!s.ok) {
      std::fprintf(stderr, "error: seed %llu failed: %s\n", static_cast<unsigned long long>(s.seed), s.error.c_str());
      ++failed;
    }
  }
  print_warnings(w);
  return failed ? kExitRuntime : 0;
}

int cmd_compare(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<nlohmann::json> summaries;
  for (const auto& in : inputs) {
    fs::path p = in;
    if (fs::is_directory(p)) p /= "summary.json";
    try {
      summaries.push_back(nlohmann::json::parse(read_text(p)));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(p.string() + ": " + e.what());
    }
  }
  ComparisonTable t;
  try {
    t = compare(summaries);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("compare: malformed summary: ") + e.what());
  }
  std::fputs(t.text.c_str(), stdout);
  if (!out.empty()) {
    fs::create_directories(out);
    write_file_atomic(fs::path(out) / "comparison.csv", t.csv);
    write_file_atomic(fs::path(out) / "comparison.txt", t.text);
  }
  return 0;
}

struct GenOptions {
  std::string kind = "blobs";
  std::size_t samples = 2000;
  std::size_t test_samples = 1000;
  std::size_t classes = 4;
  std::size_t dims = 16;
  double spread = 0.1;
  double center_low = 0.2;
  double center_high = 0.8;
  double active_fraction = 0.0;
  double noise = 0.03;
};

int cmd_gen_data(const GenOptions& g, const std::string& out, std::uint64_t seed) {
  if (out.empty()) throw ConfigError("gen-data needs --out DIR");
  SplitDataset d;
  if (g.kind == "blobs") {
    BlobSpec spec;
    spec.samples = g.samples;
    spec.classes = g.classes;
    spec.dims = g.dims;
    spec.spread = g.spread;
    spec.center_low = g.center_low;
    spec.center_high = g.center_high;
    spec.active_fraction = g.active_fraction;
    spec.seed = seed;
    d = make_blobs(spec, g.test_samples);
  } else {
    d = make_rings(g.samples, g.classes, g.noise, seed, g.test_samples);
  }
  fs::create_directories(out);
  write_file_atomic(fs::path(out) / "train.csv", dataset_to_csv(d.train));
  write_file_atomic(fs::path(out) / "test.csv", dataset_to_csv(d.test));
  std::printf("wrote %zu train and %zu test samples (%zu features, %zu classes) to %s\n", d.train.size(),
              d.test.size(), d.train.feature_count(), d.train.class_count, out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AR-TTA continual test-time adaptation"};
  app.require_subcommand(1);

  CommonOptions pretrain_opt, run_opt, config_opt;
  auto* pretrain = app.add_subcommand("pretrain", "Train the source model on clean data");
  pretrain_opt.attach(pretrain);
  auto* run = app.add_subcommand("run", "Adapt over a shifting stream for every seed and write results");
  run_opt.attach(run);
  auto* show = app.add_subcommand("config", "Print the resolved configuration");
  show->add_option("-c,--config", config_opt.config_path, "Run configuration file");
  show->add_option("-s,--set", config_opt.overrides, "Override one key, section.key=value (repeatable)");

  std::vector<std::string> compare_inputs;
  std::string compare_out;
  auto* cmp = app.add_subcommand("compare", "Tabulate summary.json files from runs over the same schedule");
  cmp->add_option("summaries", compare_inputs, "summary.json files or run directories")->required();
  cmp->add_option("-o,--out", compare_out, "Also write comparison.csv and comparison.txt here");

  GenOptions gen;
  std::string gen_out;
  std::uint64_t gen_seed = 0;
  auto* gd = app.add_subcommand("gen-data", "Write a synthetic dataset as DIR/train.csv and DIR/test.csv");
  gd->add_option("kind", gen.kind, "blobs or rings")->check(CLI::IsMember({"blobs", "rings"}));
  gd->add_option("-o,--out", gen_out, "Output directory")->required();
  gd->add_option("--seed", gen_seed, "Data seed");
  gd->add_option("--samples", gen.samples, "Training samples");
  gd->add_option("--test-samples", gen.test_samples, "Test samples");
  gd->add_option("--classes", gen.classes, "Number of classes");
  gd->add_option("--dims", gen.dims, "Feature count (blobs)");
  gd->add_option("--spread", gen.spread, "Per-feature std around each center (blobs)");
  gd->add_option("--center-low", gen.center_low, "Lower center coordinate (blobs)");
  gd->add_option("--center-high", gen.center_high, "Upper center coordinate (blobs)");
  gd->add_option("--active-fraction", gen.active_fraction, "Binary prototypes: P(coordinate = center-high) (blobs)");
  gd->add_option("--noise", gen.noise, "Radial noise (rings)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*pretrain) return cmd_pretrain(pretrain_opt);
    if (*run) return cmd_run(run_opt);
    if (*show) {
      const RunConfig c = config_opt.load();
      c.validate();
      std::fputs(serialize_config(c).c_str(), stdout);
      return 0;
    }
    if (*cmp) return cmd_compare(compare_inputs, compare_out);
    if (*gd) return cmd_gen_data(gen, gen_out, gen_seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
