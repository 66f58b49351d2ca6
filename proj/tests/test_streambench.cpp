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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "artta/streambench.hpp"
#include "test_util.hpp"

namespace artta {
namespace {

Dataset labeled(std::size_t n, std::size_t features, std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset d;
  d.class_count = classes;
  d.samples = testing::random_tensor(n, features, rng, 0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) d.labels.push_back(i % classes);
  return d;
}

constexpr Corruption kKinds[] = {Corruption::gaussian_noise, Corruption::contrast, Corruption::brightness,
                                 Corruption::pixel_dropout};

TEST(Corrupt, IdentityIsBitwise) {
  std::mt19937_64 g(1);
  const auto x = testing::random_tensor(30, 7, g, 0, 1);
  for (int s = 1; s <= 5; ++s) {
    Rng rng(s);
    EXPECT_EQ(corrupt(x, Corruption::identity, s, rng), x);
  }
}

TEST(Corrupt, ContrastFixedPointAndClosedForm) {
  Rng rng(2);
  const Tensor2D half(5, 4, 0.5);
  EXPECT_EQ(corrupt(half, Corruption::contrast, 5, rng), half);
  const auto y = corrupt(Tensor2D::from_rows({{0.0, 1.0}}), Corruption::contrast, 5, rng);
  EXPECT_NEAR(y(0, 0), 0.425, 1e-15);
  EXPECT_NEAR(y(0, 1), 0.575, 1e-15);
}

TEST(Corrupt, SeverityTable) {
  const double noise[] = {0.04, 0.08, 0.12, 0.18, 0.26};
  const double contrast[] = {0.75, 0.6, 0.45, 0.3, 0.15};
  const double brightness[] = {0.1, 0.2, 0.3, 0.4, 0.5};
  const double dropout[] = {0.05, 0.1, 0.2, 0.3, 0.4};
  for (int s = 1; s <= 5; ++s) {
    EXPECT_EQ(severity_parameter(Corruption::gaussian_noise, s), noise[s - 1]);
    EXPECT_EQ(severity_parameter(Corruption::contrast, s), contrast[s - 1]);
    EXPECT_EQ(severity_parameter(Corruption::brightness, s), brightness[s - 1]);
    EXPECT_EQ(severity_parameter(Corruption::pixel_dropout, s), dropout[s - 1]);
    EXPECT_EQ(severity_parameter(Corruption::identity, s), 0.0);
  }
  EXPECT_THROW(severity_parameter(Corruption::contrast, 0), ConfigError);
  EXPECT_THROW(severity_parameter(Corruption::contrast, 6), ConfigError);
}

TEST(Corrupt, NoiseStdMatchesSeverityFive) {
  const Tensor2D x(1000, 100, 0.5);
  Rng rng(3);
  const auto y = corrupt(x, Corruption::gaussian_noise, 5, rng);
  std::vector<double> dev;
  double sum = 0.0, sq = 0.0;
  std::size_t interior = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y.values()[i] - 0.5;
    dev.push_back(std::abs(d));
    if (y.values()[i] > 0.0 && y.values()[i] < 1.0) {
      sum += d;
      sq += d * d;
      ++interior;
    }
  }
  // Clipping only touches |z| > 1.92 sigma, so the median absolute deviation is unaffected.
  std::nth_element(dev.begin(), dev.begin() + dev.size() / 2, dev.end());
  EXPECT_NEAR(1.482602218505602 * dev[dev.size() / 2], 0.26, 0.01);

  // Unclipped values follow a normal truncated at +-0.5.
  const double s = 0.26, a = 0.5 / s;
  const double pdf = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
  const double mass = std::erf(a / std::sqrt(2.0));
  const double truncated_std = s * std::sqrt(1.0 - 2.0 * a * pdf / mass);
  const double mean = sum / interior;
  EXPECT_NEAR(std::sqrt(sq / interior - mean * mean), truncated_std, 0.01);
  EXPECT_GE(interior, 90000u);
}

TEST(Corrupt, NoiseStdUnclippedAtSeverityOne) {
  const Tensor2D x(1000, 100, 0.5);
  Rng rng(4);
  const auto y = corrupt(x, Corruption::gaussian_noise, 1, rng);
  double sq = 0.0;
  for (double v : y.values()) sq += (v - 0.5) * (v - 0.5);
  EXPECT_NEAR(std::sqrt(sq / y.size()), 0.04, 0.001);
}

TEST(Corrupt, OutputStaysInUnitInterval) {
  std::mt19937_64 g(5);
  const auto x = testing::random_tensor(200, 16, g, 0, 1);
  for (auto kind : kKinds) {
    for (int s = 1; s <= 5; ++s) {
      Rng rng(s);
      for (double v : corrupt(x, kind, s, rng).values()) {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
      }
    }
  }
}

TEST(Corrupt, PerturbationGrowsWithSeverity) {
  std::mt19937_64 g(6);
  const auto x = testing::random_tensor(2000, 16, g, 0, 1);
  for (auto kind : kKinds) {
    double last = 0.0;
    for (int s = 1; s <= 5; ++s) {
      Rng rng(77);
      const auto y = corrupt(x, kind, s, rng);
      double mad = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) mad += std::abs(y.values()[i] - x.values()[i]);
      mad /= x.size();
      EXPECT_GE(mad, last) << to_string(kind) << " severity " << s;
      last = mad;
    }
  }
}

TEST(Corrupt, DropoutRateMatches) {
  const Tensor2D x(500, 200, 0.7);
  Rng rng(8);
  const auto y = corrupt(x, Corruption::pixel_dropout, 4, rng);
  const auto zeros = std::count(y.values().begin(), y.values().end(), 0.0);
  EXPECT_NEAR(static_cast<double>(zeros) / y.size(), 0.3, 0.005);
}

TEST(Corrupt, Names) {
  for (auto kind : {Corruption::identity, Corruption::gaussian_noise, Corruption::contrast, Corruption::brightness,
                    Corruption::pixel_dropout}) {
    EXPECT_EQ(parse_corruption(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_corruption("fog"), ConfigError);
  for (auto m : {OrderMode::shuffled, OrderMode::class_sorted_runs, OrderMode::sequential}) {
    EXPECT_EQ(parse_order_mode(to_string(m)), m);
  }
}

TEST(Schedule, ParseAndPrint) {
  const auto segs = DomainSchedule::parse_segments("gaussian_noise:5:100,identity:1:50");
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0], (Segment{Corruption::gaussian_noise, 5, 100}));
  DomainSchedule s{segs, OrderMode::shuffled, 20.0};
  EXPECT_EQ(s.segments_to_string(), "gaussian_noise:5:100,identity:1:50");
  EXPECT_THROW(DomainSchedule::parse_segments("gaussian_noise:5"), ConfigError);
  EXPECT_THROW(DomainSchedule::parse_segments("gaussian_noise:2.5:3"), ConfigError);
  EXPECT_THROW(DomainSchedule::parse_segments("gaussian_noise:5:0"), ConfigError);
  EXPECT_THROW((DomainSchedule{{}, OrderMode::shuffled, 20.0}.validate()), ConfigError);
  EXPECT_THROW((DomainSchedule{{Segment{Corruption::contrast, 6, 1}}, OrderMode::shuffled, 20.0}.validate()),
               ConfigError);
}

TEST(Stream, CountsAndDomains) {
  const auto d = labeled(400, 5, 4, 9);
  DomainSchedule s{DomainSchedule::parse_segments("identity:1:10,contrast:3:10,identity:1:10"), OrderMode::shuffled,
                   20.0};
  const auto st = make_stream(d, s, 10, 1);
  ASSERT_EQ(st.batches.size(), 30u);
  std::size_t total = 0;
  for (const auto& b : st.batches) {
    EXPECT_EQ(b.x.rows(), 10u);
    EXPECT_EQ(b.labels.size(), 10u);
    total += b.labels.size();
  }
  EXPECT_EQ(total, 300u);
  ASSERT_EQ(st.domains.size(), 2u);
  EXPECT_EQ(st.domains[1].name(), "contrast@3");
  EXPECT_EQ(st.batches[0].domain_id, 0u);
  EXPECT_EQ(st.batches[15].domain_id, 1u);
  EXPECT_EQ(st.batches[25].domain_id, 0u);
  EXPECT_EQ(st.batches[25].segment_index, 2u);
  EXPECT_FALSE(st.resampled);
}

TEST(Stream, IdentityShuffledStreamIsAPermutation) {
  const auto d = labeled(300, 3, 3, 10);
  DomainSchedule s{{Segment{Corruption::identity, 1, 30}}, OrderMode::shuffled, 20.0};
  const auto st = make_stream(d, s, 10, 2);
  std::vector<std::vector<double>> seen, expected;
  for (const auto& b : st.batches) {
    for (std::size_t i = 0; i < b.x.rows(); ++i) {
      auto row = std::vector<double>(b.x.row(i).begin(), b.x.row(i).end());
      row.push_back(static_cast<double>(b.labels[i]));
      seen.push_back(row);
    }
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto row = std::vector<double>(d.samples.row(i).begin(), d.samples.row(i).end());
    row.push_back(static_cast<double>(d.labels[i]));
    expected.push_back(row);
  }
  EXPECT_NE(seen, expected);
  std::sort(seen.begin(), seen.end());
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(seen, expected);
}

TEST(Stream, SequentialKeepsDatasetOrder) {
  const auto d = labeled(50, 2, 2, 11);
  DomainSchedule s{{Segment{Corruption::identity, 1, 5}}, OrderMode::sequential, 20.0};
  const auto st = make_stream(d, s, 10, 3);
  for (std::size_t b = 0; b < 5; ++b) {
    for (std::size_t i = 0; i < 10; ++i) {
      ASSERT_EQ(st.batches[b].labels[i], d.labels[b * 10 + i]);
      ASSERT_EQ(st.batches[b].x(i, 0), d.samples(b * 10 + i, 0));
    }
  }
}

TEST(Stream, ClassRunsHaveMeanLengthTwenty) {
  const auto d = labeled(2000, 2, 5, 12);
  DomainSchedule s{{Segment{Corruption::identity, 1, 10000}}, OrderMode::class_sorted_runs, 20.0};
  Warnings w;
  const auto st = make_stream(d, s, 10, 4, &w);
  std::vector<std::size_t> labels;
  for (const auto& b : st.batches) labels.insert(labels.end(), b.labels.begin(), b.labels.end());
  ASSERT_EQ(labels.size(), 100000u);
  std::size_t runs = 1;
  for (std::size_t i = 1; i < labels.size(); ++i) runs += labels[i] != labels[i - 1];
  EXPECT_NEAR(static_cast<double>(labels.size()) / runs, 20.0, 2.0);
  EXPECT_TRUE(st.resampled);
  EXPECT_EQ(w.resampled_stream, 1u);

  // Within-batch agreement: about 1/5 of pairs for i.i.d. labels.
  auto agreement = [](const Stream& stream) {
    std::size_t same = 0, pairs = 0;
    for (const auto& b : stream.batches) {
      for (std::size_t i = 0; i < b.labels.size(); ++i) {
        for (std::size_t j = i + 1; j < b.labels.size(); ++j) {
          same += b.labels[i] == b.labels[j];
          ++pairs;
        }
      }
    }
    return static_cast<double>(same) / pairs;
  };
  DomainSchedule iid = s;
  iid.order = OrderMode::shuffled;
  EXPECT_GT(agreement(st), 0.6);
  EXPECT_NEAR(agreement(make_stream(d, iid, 10, 4)), 0.2, 0.02);
}

TEST(Stream, DeterministicPerSeed) {
  const auto d = labeled(200, 4, 4, 13);
  DomainSchedule s{DomainSchedule::parse_segments("gaussian_noise:3:5,pixel_dropout:2:5"),
                   OrderMode::class_sorted_runs, 20.0};
  const auto a = make_stream(d, s, 10, 5);
  const auto b = make_stream(d, s, 10, 5);
  const auto c = make_stream(d, s, 10, 6);
  bool differs = false;
  for (std::size_t i = 0; i < a.batches.size(); ++i) {
    ASSERT_EQ(a.batches[i].x, b.batches[i].x);
    ASSERT_EQ(a.batches[i].labels, b.batches[i].labels);
    differs |= a.batches[i].x != c.batches[i].x;
  }
  EXPECT_TRUE(differs);
}

TEST(Stream, RejectsBadArguments) {
  const auto d = labeled(20, 2, 2, 14);
  DomainSchedule s{{Segment{Corruption::identity, 1, 1}}, OrderMode::shuffled, 20.0};
  EXPECT_THROW(make_stream(d, s, 0, 0), ConfigError);
  EXPECT_THROW(make_stream(d, s, 21, 0), ConfigError);
  auto bad = d;
  bad.labels[0] = 7;
  EXPECT_THROW(make_stream(bad, s, 10, 0), ConfigError);
}

TEST(Metrics, AllCorrectSingleDomain) {
  MetricsAccumulator acc(3);
  const std::vector<std::size_t> y{0, 1, 2, 0, 1, 2};
  acc.record(y, y, 0);
  const auto r = acc.finalize();
  EXPECT_EQ(r.mean_accuracy, 1.0);
  EXPECT_EQ(r.amca, 1.0);
}

TEST(Metrics, HandTalliedTwoDomainExample) {
  // d1: class 0 1/2, class 1 1/1; d2: class 0 0/1, class 1 1/2.
  MetricsAccumulator acc(2);
  acc.record(std::vector<std::size_t>{0, 1, 1}, std::vector<std::size_t>{0, 0, 1}, 0);
  acc.record(std::vector<std::size_t>{1, 1, 0}, std::vector<std::size_t>{0, 1, 1}, 1);
  const auto r = acc.finalize();
  EXPECT_EQ(r.mean_accuracy, 0.5);
  EXPECT_EQ(r.amca, 0.5);
  ASSERT_EQ(r.per_domain.size(), 2u);
  EXPECT_EQ(r.per_domain[0].mean_class_accuracy, 0.75);
  EXPECT_EQ(r.per_domain[1].mean_class_accuracy, 0.25);
}

TEST(Metrics, AbsentClassesAreExcluded) {
  MetricsAccumulator acc(3);
  acc.record(std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{0, 0}, 0);
  const auto r = acc.finalize();
  EXPECT_EQ(r.amca, 0.5);
  EXPECT_EQ(r.per_domain[0].absent_classes, (std::vector<std::size_t>{1, 2}));
}

TEST(Metrics, MatchesBruteForceOnRandomPredictions) {
  std::mt19937_64 rng(15);
  std::uniform_int_distribution<std::size_t> cls(0, 3), dom(0, 2);
  MetricsAccumulator acc(4);
  std::size_t correct[3][4] = {}, seen[3][4] = {}, total_correct = 0, total = 0;
  for (int b = 0; b < 200; ++b) {
    std::vector<std::size_t> p(10), y(10);
    const auto d = dom(rng);
    for (std::size_t i = 0; i < 10; ++i) {
      p[i] = cls(rng);
      y[i] = cls(rng);
      ++seen[d][y[i]];
      correct[d][y[i]] += p[i] == y[i];
      total_correct += p[i] == y[i];
      ++total;
    }
    acc.record(p, y, d);
  }
  double amca = 0.0;
  for (auto d = 0; d < 3; ++d) {
    double m = 0.0;
    for (int c = 0; c < 4; ++c) m += static_cast<double>(correct[d][c]) / seen[d][c];
    amca += m / 4;
  }
  const auto r = acc.finalize();
  EXPECT_NEAR(r.amca, amca / 3, 1e-12);
  EXPECT_EQ(r.mean_accuracy, static_cast<double>(total_correct) / total);
  EXPECT_NEAR(r.mean_accuracy, 0.25, 0.03);
}

TEST(Metrics, AmcaInvariantToDuplication) {
  std::mt19937_64 rng(16);
  std::uniform_int_distribution<std::size_t> cls(0, 2);
  std::vector<std::size_t> p(30), y(30);
  for (std::size_t i = 0; i < 30; ++i) {
    p[i] = cls(rng);
    y[i] = cls(rng);
  }
  MetricsAccumulator once(3), thrice(3);
  once.record(p, y, 0);
  for (int k = 0; k < 3; ++k) thrice.record(p, y, 0);
  EXPECT_NEAR(once.finalize().amca, thrice.finalize().amca, 1e-15);
}

TEST(Metrics, WindowResetsAtDomainChange) {
  MetricsAccumulator acc(2, 3);
  const std::vector<std::size_t> right{0, 1}, wrong{1, 0}, y{0, 1};
  EXPECT_EQ(acc.record(right, y, 0).window_accuracy, 1.0);
  EXPECT_EQ(acc.record(wrong, y, 0).window_accuracy, 0.5);
  EXPECT_EQ(acc.record(wrong, y, 0).window_accuracy, 1.0 / 3.0);
  EXPECT_EQ(acc.record(wrong, y, 0).window_accuracy, 0.0);
  const auto r = acc.record(right, y, 1);
  EXPECT_EQ(r.window_accuracy, 1.0);
  EXPECT_EQ(r.batch_accuracy, 1.0);
  EXPECT_EQ(acc.finalize().windowed.size(), 5u);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(MetricsAccumulator(0), ConfigError);
  EXPECT_THROW(MetricsAccumulator(2, 0), ConfigError);
  MetricsAccumulator acc(2);
  EXPECT_THROW(acc.finalize(), UsageError);
  EXPECT_THROW(acc.record(std::vector<std::size_t>{0}, std::vector<std::size_t>{0, 1}, 0), ConfigError);
  EXPECT_THROW(acc.record(std::vector<std::size_t>{0}, std::vector<std::size_t>{2}, 0), ConfigError);
}

TEST(DatasetIo, CsvAndContainerRoundTrip) {
  const auto d = labeled(25, 3, 4, 17);
  const auto csv = dataset_to_csv(d);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "f0,f1,f2,label");
  const auto back = dataset_from_csv(csv);
  EXPECT_EQ(back.samples, d.samples);
  EXPECT_EQ(back.labels, d.labels);
  const auto c = dataset_from_container(decode_container(encode_container(dataset_to_container(d))));
  EXPECT_EQ(c.samples, d.samples);
  EXPECT_EQ(c.labels, d.labels);
  EXPECT_EQ(c.class_count, 4u);
  EXPECT_THROW(dataset_from_csv("a,b,label\n1,2,0\n"), ConfigError);
  EXPECT_THROW(dataset_from_csv("f0,label\n0.5\n"), ConfigError);
  EXPECT_THROW(dataset_from_csv("f0,label\n0.5,-1\n"), ConfigError);
  EXPECT_THROW(dataset_from_csv(""), ConfigError);
}

TEST(DatasetIo, SubsetAndClassCounts) {
  const auto d = labeled(10, 2, 3, 18);
  EXPECT_EQ(d.class_counts(), (std::vector<std::size_t>{4, 3, 3}));
  const std::vector<std::size_t> rows{9, 0};
  const auto s = d.subset(rows);
  EXPECT_EQ(s.labels, (std::vector<std::size_t>{0, 0}));
  EXPECT_EQ(s.samples(0, 1), d.samples(9, 1));
}

}  // namespace
}  // namespace artta
