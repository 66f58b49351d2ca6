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
#include <random>

#include "artta/replay.hpp"
#include "test_util.hpp"

namespace artta {
namespace {

struct Labeled {
  Tensor2D x;
  std::vector<std::size_t> y;
};

// Row i carries feature value i so selected rows can be traced back.
Labeled make_source(const std::vector<std::size_t>& per_class) {
  Labeled d;
  std::size_t n = 0;
  for (auto c : per_class) n += c;
  d.x = Tensor2D(n, 2);
  std::size_t r = 0;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (std::size_t k = 0; k < per_class[c]; ++k, ++r) {
      d.x(r, 0) = static_cast<double>(r);
      d.x(r, 1) = static_cast<double>(c);
      d.y.push_back(c);
    }
  }
  return d;
}

TEST(BuildBuffer, ExactlyEqualWhenDivisible) {
  const auto d = make_source(std::vector<std::size_t>(10, 300));
  Rng rng(1);
  const auto buf = build_buffer(d.x, d.y, 10, 2000, SelectionMode::balanced, rng);
  EXPECT_EQ(buf.size(), 2000u);
  EXPECT_EQ(buf.class_counts(), std::vector<std::size_t>(10, 200));
  for (std::size_t i = 0; i < buf.size(); ++i) {
    EXPECT_EQ(static_cast<std::size_t>(buf.samples()(i, 1)), buf.labels()[i]);
  }
}

TEST(BuildBuffer, ZeroCapacityIsEmpty) {
  const auto d = make_source({5, 5});
  Rng rng(1);
  const auto buf = build_buffer(d.x, d.y, 2, 0, SelectionMode::balanced, rng);
  EXPECT_TRUE(buf.empty());
  Rng r2(2);
  EXPECT_FALSE(sample_exemplars(buf, 4, r2).has_value());
}

TEST(BuildBuffer, SpreadAtMostOneForAnyCapacity) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t classes = 1 + gen() % 9;
    std::vector<std::size_t> per_class(classes);
    for (auto& c : per_class) c = 40 + gen() % 60;
    const auto d = make_source(per_class);
    const std::size_t capacity = gen() % (40 * classes + 1);
    Rng rng(trial);
    Warnings w;
    const auto buf = build_buffer(d.x, d.y, classes, capacity, SelectionMode::balanced, rng, &w);
    const auto counts = buf.class_counts();
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    ASSERT_LE(*hi - *lo, 1u);
    ASSERT_EQ(buf.size(), capacity);
    ASSERT_EQ(w.deficient_class, 0u);
  }
}

TEST(BuildBuffer, TenIntoThree) {
  const auto d = make_source({10, 10, 10});
  Rng rng(3);
  const auto buf = build_buffer(d.x, d.y, 3, 10, SelectionMode::balanced, rng);
  EXPECT_EQ(buf.class_counts(), (std::vector<std::size_t>{4, 3, 3}));
}

TEST(BuildBuffer, DeficientClassGivesAllItHas) {
  const auto d = make_source({50, 2, 50});
  Rng rng(3);
  Warnings w;
  const auto buf = build_buffer(d.x, d.y, 3, 30, SelectionMode::balanced, rng, &w);
  EXPECT_EQ(buf.class_counts(), (std::vector<std::size_t>{10, 2, 10}));
  EXPECT_EQ(w.deficient_class, 1u);

  const auto empty_class = make_source({50, 0, 50});
  Warnings w2;
  const auto buf2 = build_buffer(empty_class.x, empty_class.y, 3, 30, SelectionMode::balanced, rng, &w2);
  EXPECT_EQ(buf2.class_counts()[1], 0u);
  EXPECT_EQ(w2.deficient_class, 1u);
}

TEST(BuildBuffer, RandomModeIgnoresClass) {
  const auto d = make_source({900, 100});
  Rng rng(5);
  const auto buf = build_buffer(d.x, d.y, 2, 500, SelectionMode::random, rng);
  EXPECT_EQ(buf.size(), 500u);
  // Expected 450/50; a balanced draw would give 250/250.
  EXPECT_GT(buf.class_counts()[0], 400u);
  std::vector<double> rows;
  for (std::size_t i = 0; i < buf.size(); ++i) rows.push_back(buf.samples()(i, 0));
  std::sort(rows.begin(), rows.end());
  EXPECT_EQ(std::adjacent_find(rows.begin(), rows.end()), rows.end());
}

TEST(BuildBuffer, Errors) {
  const auto d = make_source({3, 3});
  Rng rng(1);
  EXPECT_THROW(build_buffer(d.x, d.y, 2, 7, SelectionMode::balanced, rng), ConfigError);
  EXPECT_THROW(build_buffer(d.x, d.y, 1, 2, SelectionMode::balanced, rng), ConfigError);
  EXPECT_THROW(parse_selection_mode("herding"), ConfigError);
  EXPECT_EQ(parse_selection_mode(to_string(SelectionMode::random)), SelectionMode::random);
}

TEST(SampleExemplars, SingleExemplarRepeats) {
  const ExemplarBuffer buf(Tensor2D::from_rows({{0.25, 0.75}}), {1}, 3, 1);
  Rng rng(1);
  const auto b = sample_exemplars(buf, 5, rng);
  ASSERT_TRUE(b.has_value());
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(b->x(i, 0), 0.25);
    EXPECT_EQ(b->x(i, 1), 0.75);
    EXPECT_EQ(b->y(i, 1), 1.0);
    EXPECT_EQ(b->y(i, 0) + b->y(i, 1) + b->y(i, 2), 1.0);
  }
}

TEST(SampleExemplars, UniformByChiSquare) {
  Tensor2D x(10, 1);
  std::vector<std::size_t> y(10);
  for (std::size_t i = 0; i < 10; ++i) {
    x(i, 0) = static_cast<double>(i);
    y[i] = i % 2;
  }
  const ExemplarBuffer buf(x, y, 2, 10);
  Rng rng(12345);
  std::vector<double> counts(10, 0.0);
  for (int draw = 0; draw < 1000; ++draw) {
    const auto b = sample_exemplars(buf, 10, rng);
    for (std::size_t i = 0; i < 10; ++i) {
      counts[static_cast<std::size_t>(b->x(i, 0))] += 1.0;
      ASSERT_EQ(b->y(i, y[static_cast<std::size_t>(b->x(i, 0))]), 1.0);
    }
  }
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  // 0.999 quantile of chi-square with 9 degrees of freedom.
  EXPECT_LT(chi2, 27.877);
}

TEST(SampleLambda, BetaMomentsAndSymmetry) {
  Rng rng(77);
  const MixupParams p;  // 0.4, 0.4
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double l = sample_lambda(p, rng);
    ASSERT_GE(l, 0.0);
    ASSERT_LE(l, 1.0);
    sum += l;
    sq += l * l;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_NEAR(mean, 0.5, 0.01);
  const double closed = 0.4 * 0.4 / ((0.8 * 0.8) * 1.8);
  EXPECT_NEAR(closed, 0.1389, 1e-4);
  EXPECT_NEAR(var, closed, 0.005);
}

TEST(SampleLambda, BetaOneOneIsUniformByKs) {
  Rng rng(78);
  const int n = 100000;
  std::vector<double> v(n);
  for (auto& x : v) x = sample_lambda({1.0, 1.0}, rng);
  std::sort(v.begin(), v.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    d = std::max({d, std::abs((i + 1.0) / n - v[i]), std::abs(v[i] - static_cast<double>(i) / n)});
  }
  // Asymptotic KS critical value at p = 0.001.
  EXPECT_LT(d, 1.9495 / std::sqrt(static_cast<double>(n)));
}

TEST(SampleLambda, RejectsNonpositiveShape) {
  Rng rng(1);
  EXPECT_THROW(sample_lambda({0.0, 1.0}, rng), ConfigError);
  EXPECT_THROW(sample_lambda({1.0, -1.0}, rng), ConfigError);
}

TEST(Mixup, EndpointsAndHandExample) {
  std::mt19937_64 gen(3);
  const auto xt = testing::random_tensor(4, 3, gen);
  const auto xs = testing::random_tensor(4, 3, gen);
  const auto pt = Tensor2D(4, 2, 0.5);
  const auto ys = Tensor2D::from_rows({{1, 0}, {0, 1}, {1, 0}, {0, 1}});
  const auto one = mixup(xt, pt, xs, ys, 1.0);
  EXPECT_EQ(one.x, xt);
  EXPECT_EQ(one.y, pt);
  const auto zero = mixup(xt, pt, xs, ys, 0.0);
  EXPECT_EQ(zero.x, xs);
  EXPECT_EQ(zero.y, ys);

  const auto hand = mixup(Tensor2D(1, 1, 1.0), Tensor2D::from_rows({{0.5, 0.5}}), Tensor2D(1, 1, 0.0),
                          Tensor2D::from_rows({{1.0, 0.0}}), 0.4);
  EXPECT_NEAR(hand.x(0, 0), 0.4, 1e-15);
  EXPECT_NEAR(hand.y(0, 0), 0.8, 1e-15);
  EXPECT_NEAR(hand.y(0, 1), 0.2, 1e-15);
  EXPECT_THROW(mixup(xt, pt, Tensor2D(3, 3), ys, 0.5), ConfigError);
}

TEST(Mixup, SimplexAndBoundsUnderFuzz) {
  std::mt19937_64 gen(10);
  Rng rng(10);
  for (int trial = 0; trial < 500; ++trial) {
    const auto xt = testing::random_tensor(5, 4, gen, 0, 1);
    const auto xs = testing::random_tensor(5, 4, gen, 0, 1);
    auto pt = testing::random_tensor(5, 3, gen, 0.01, 1);
    for (std::size_t i = 0; i < 5; ++i) {
      double s = 0;
      for (double v : pt.row(i)) s += v;
      for (double& v : pt.row(i)) v /= s;
    }
    std::vector<std::size_t> labels(5);
    for (auto& l : labels) l = gen() % 3;
    const auto ys = one_hot(labels, 3);
    const double lambda = sample_lambda({}, rng);
    const auto m = mixup(xt, pt, xs, ys, lambda);
    for (std::size_t i = 0; i < 5; ++i) {
      double s = 0;
      for (double v : m.y.row(i)) s += v;
      ASSERT_NEAR(s, 1.0, 1e-9);
      for (std::size_t c = 0; c < 4; ++c) {
        ASSERT_GE(m.x(i, c), std::min(xt(i, c), xs(i, c)));
        ASSERT_LE(m.x(i, c), std::max(xt(i, c), xs(i, c)));
      }
    }
  }
}

TEST(Mixup, PerRowLambdas) {
  const auto xt = Tensor2D::from_rows({{1.0}, {1.0}});
  const auto xs = Tensor2D::from_rows({{0.0}, {0.0}});
  const auto y = Tensor2D::from_rows({{1.0}, {1.0}});
  const std::vector<double> l{0.25, 0.75};
  const auto m = mixup_rows(xt, y, xs, y, l);
  EXPECT_EQ(m.x(0, 0), 0.25);
  EXPECT_EQ(m.x(1, 0), 0.75);
  EXPECT_THROW(mixup_rows(xt, y, xs, y, std::vector<double>{0.5}), ConfigError);
}

TEST(Buffer, ContainerRoundTripAndImmutability) {
  const auto d = make_source({20, 20, 20});
  Rng rng(1);
  const auto buf = build_buffer(d.x, d.y, 3, 11, SelectionMode::balanced, rng);
  const auto before = buf.samples();
  Rng r2(2);
  for (int i = 0; i < 10; ++i) sample_exemplars(buf, 10, r2);
  EXPECT_EQ(buf.samples(), before);

  const auto c = buffer_to_container(buf);
  EXPECT_EQ(c.section, "exemplars");
  const auto back = buffer_from_container(decode_container(encode_container(c)));
  EXPECT_EQ(back.samples(), buf.samples());
  EXPECT_EQ(back.labels(), buf.labels());
  EXPECT_EQ(back.capacity(), 11u);
  Container wrong = c;
  wrong.section = "model";
  EXPECT_THROW(buffer_from_container(wrong), ConfigError);
}

}  // namespace
}  // namespace artta
