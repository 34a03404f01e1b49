#include <gtest/gtest.h>

#include <vector>

#include "aoi/estimator.hpp"
#include "oracle_compare.hpp"
#include "trace_util.hpp"

namespace aoi {
namespace {

SourceEstimator make(const GenSpec& g, double p = 1.0, Slot delay = 0, FeedbackDelay fb = kNoFeedback,
                     bool closed = true) {
  EstimatorSettings s;
  s.p_dest = p;
  s.delay = delay;
  s.feedback = fb;
  s.keep_history = true;
  s.closed_form = closed;
  return SourceEstimator(g, s);
}

TEST(Posterior, BernoulliNoReceptions) {
  GenerationPosterior post(Geometric{0.5});
  const SourceObservation obs;
  post.extend(obs, 3);
  EXPECT_NEAR(post.probability(3, 3), 0.5, 1e-12);
  EXPECT_NEAR(post.probability(2, 3), 0.25, 1e-12);
  EXPECT_NEAR(post.probability(1, 3), 0.25, 1e-12);
  EXPECT_NEAR(post.source_timestamp(3), 2.25, 1e-12);
  for (bool closed : {true, false}) {
    auto e = make(Geometric{0.5}, 1.0, 0, kNoFeedback, closed);
    e.observe(obs, 3);
    EXPECT_NEAR(e.source_timestamp(), 2.25, 1e-12);
  }
}

TEST(Posterior, FirstSlotAlwaysGenerates) {
  for (GenSpec g : {GenSpec{Geometric{0.2}}, GenSpec{Uniform{2, 4}}, GenSpec{Periodic{5}}}) {
    GenerationPosterior post(g);
    post.extend(SourceObservation{}, 4);
    EXPECT_DOUBLE_EQ(post.generation_probability(1), 1.0);
  }
}

TEST(Posterior, PeriodicIsDeterministic) {
  GenerationPosterior post(Periodic{3});
  const SourceObservation obs;
  post.extend(obs, 9);
  for (Slot phi = 1; phi <= 9; ++phi) EXPECT_DOUBLE_EQ(post.generation_probability(phi), phi % 3 == 1 ? 1.0 : 0.0);
  EXPECT_DOUBLE_EQ(post.probability(4, 5), 1.0);
  EXPECT_DOUBLE_EQ(post.source_timestamp(5), 4.0);
  GenerationPosterior two(Periodic{2});
  two.extend(obs, 8);
  for (Slot phi = 1; phi <= 8; ++phi) EXPECT_DOUBLE_EQ(two.source_timestamp(phi), phi % 2 ? phi : phi - 1);
  for (bool closed : {true, false}) {
    auto e = make(Periodic{3}, 1.0, 0, kNoFeedback, closed);
    e.observe(obs, 5);
    EXPECT_DOUBLE_EQ(e.source_timestamp(), 4.0);
  }
}

TEST(Posterior, TwoOrThreeGaps) {
  GenerationPosterior post(Explicit{{0.0, 0.5, 0.5}});
  post.extend(SourceObservation{}, 4);
  EXPECT_NEAR(post.probability(3, 4), 0.5, 1e-12);
  EXPECT_NEAR(post.probability(4, 4), 0.5, 1e-12);
  EXPECT_NEAR(post.probability(1, 4), 0.0, 1e-12);
  auto e = make(Explicit{{0.0, 0.5, 0.5}});
  e.observe(SourceObservation{}, 4);
  EXPECT_NEAR(e.source_timestamp(), 3.5, 1e-12);
}

TEST(Posterior, FreshEverySlot) {
  SourceObservation obs;
  obs.record(2, 2);
  obs.record(5, 5);
  for (bool closed : {true, false}) {
    auto e = make(Periodic{1}, 0.7, 0, kNoFeedback, closed);
    for (Slot t = 1; t <= 8; ++t) {
      e.observe(obs, t);
      EXPECT_DOUBLE_EQ(e.source_timestamp(), static_cast<double>(t));
      EXPECT_DOUBLE_EQ(e.view().system_time, 0.0);
    }
    EXPECT_DOUBLE_EQ(*e.packet_generation(1), 2.0);
    EXPECT_DOUBLE_EQ(*e.packet_generation(2), 5.0);
  }
}

TEST(Posterior, BernoulliFirstPacketAtThree) {
  SourceObservation obs;
  obs.record(3, 1);
  GenerationPosterior post(Geometric{0.5});
  post.extend(obs, 4);
  const double expect = 3 * 0.5 + 2 * 0.25 + 1 * 0.25;
  EXPECT_NEAR(post.packet_generation(obs, 1), expect, 1e-12);
  auto e = make(Geometric{0.5});
  e.observe(obs, 4);
  EXPECT_NEAR(*e.packet_generation(1), expect, 1e-12);
}

TEST(Posterior, RepeatRulesOutGenerations) {
  SourceObservation obs;
  obs.record(2, 1);
  obs.record(4, 1);  // no generation in slots 3, 4
  GenerationPosterior post(Geometric{0.5});
  post.extend(obs, 5);
  EXPECT_NEAR(post.generation_probability(3), 0.0, 1e-15);
  EXPECT_NEAR(post.generation_probability(4), 0.0, 1e-15);
  EXPECT_NEAR(post.generation_probability(5), 0.5, 1e-12);
}

TEST(Beliefs, Examples) {
  const std::vector<int> one{2};
  auto b = delivery_beliefs(one, 0.5);
  EXPECT_NEAR(b.packet[0], 0.75, 1e-15);
  EXPECT_NEAR(b.residual, 0.25, 1e-15);
  const std::vector<int> two{1, 1};
  b = delivery_beliefs(two, 0.5);
  EXPECT_NEAR(b.packet[1], 0.5, 1e-15);
  EXPECT_NEAR(b.packet[0], 0.25, 1e-15);
  EXPECT_NEAR(b.residual, 0.25, 1e-15);
  const std::vector<int> three{3, 1, 2};
  b = delivery_beliefs(three, 1.0);
  EXPECT_EQ(b.packet, (std::vector<double>{0.0, 0.0, 1.0}));
  EXPECT_EQ(b.residual, 0.0);
  const std::vector<int> many{1, 4, 2, 7};
  b = delivery_beliefs(many, 0.3);
  double sum = b.residual;
  for (double v : b.packet) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Beliefs, MatchEnumeration) {
  const std::vector<int> c{2, 1, 3};
  const auto b = delivery_beliefs(c, 0.35);
  const auto o = brute_force_delivery_distribution(c, 0.35);
  EXPECT_NEAR(b.residual, o[0], 1e-12);
  for (std::size_t k = 0; k < c.size(); ++k) EXPECT_NEAR(b.packet[k], o[k + 1], 1e-12);
}

TEST(DestRecursion, Arithmetic) {
  EXPECT_DOUBLE_EQ(update_dest_timestamp(0.0, true, 2.0, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(update_dest_timestamp(3.25, false, 9.0, 0.5), 3.25);
}

TEST(Views, NothingDelivered) {
  auto e = make(Uniform{2, 4}, 0.6, 3);
  e.observe(SourceObservation{}, 7);
  EXPECT_DOUBLE_EQ(e.dest_timestamp(), 0.0);
  EXPECT_DOUBLE_EQ(e.view().aoi_ahead, 10.0);
}

TEST(Views, OrderPreserved) {
  Engine rng = make_stream(17, Stream::kTest);
  NetworkConfig cfg;
  cfg.max_scheduled = 1;
  cfg.sources.push_back({1.0, 0.8, 0.6, 2, 1, Uniform{2, 5}});
  const auto rec = testing::record_random_trace(cfg, 300, rng);
  for (FeedbackDelay fb : {FeedbackDelay{1}, kNoFeedback}) {
    auto e = make(Uniform{2, 5}, 0.6, 2, fb);
    for (Slot t = 1; t <= 300; ++t) {
      e.observe(rec.obs.sources[0], t);
      EXPECT_GE(e.source_timestamp() + 1e-9, e.dest_timestamp());
      const auto b = e.beliefs();
      double sum = b.residual;
      for (double v : b.packet) sum += v;
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

// pD = 1 and immediate feedback: the destination state is known exactly.
TEST(Feedback, PerfectInformationCollapses) {
  for (GenSpec g : {GenSpec{Uniform{2, 4}}, GenSpec{Geometric{0.4}}, GenSpec{Periodic{3}}}) {
    Engine rng = make_stream(23, Stream::kTest);
    NetworkConfig cfg;
    cfg.max_scheduled = 1;
    cfg.sources.push_back({1.0, 0.7, 1.0, 0, 0, g});
    const auto rec = testing::record_random_trace(cfg, 400, rng);
    for (bool closed : {true, false}) {
      auto e = make(g, 1.0, 0, 0, closed);
      for (Slot t = 1; t <= 400; ++t) {
        e.observe(rec.obs.sources[0], t);
        const auto& st = rec.states[static_cast<std::size_t>(t - 1)];
        EXPECT_DOUBLE_EQ(e.dest_timestamp(), static_cast<double>(st.dest_timestamp(0))) << "t=" << t;
        EXPECT_DOUBLE_EQ(e.view().aoi_ahead, static_cast<double>(st.aoi(0)));
      }
    }
  }
}

TEST(Feedback, AckAnchorsTheDestination) {
  // received at 2 and 3 (new, new); ack of the slot-2 copy says it was generated at 2
  SourceObservation obs;
  obs.record(2, 2);
  obs.record(3, 3);
  obs.record_ack({2, 3, 4});  // delay 1, feedback 1
  auto e = make(Geometric{0.5}, 0.5, 1, 1);
  e.observe(obs, 5);
  EXPECT_EQ(e.anchor_packet(), 1);
  EXPECT_EQ(e.anchor_timestamp(), 2);
  EXPECT_NEAR(e.dest_timestamp(), 0.5 * 2 + 0.5 * 3, 1e-12);
}

TEST(Feedback, RejectsImpossibleAck) {
  SourceObservation obs;
  obs.record(3, 3);
  obs.record_ack({5, 3, 3});  // generated after it was received
  auto e = make(Geometric{0.5}, 0.5, 0, 0);
  EXPECT_THROW(e.observe(obs, 5), ObservationError);
}

TEST(Estimator, RejectsImpossibleRepeatForPeriodic) {
  SourceObservation obs;
  obs.record(1, 1);
  obs.record(3, 1);  // period 2 would have produced a new packet at 3
  auto e = make(Periodic{2});
  EXPECT_THROW(e.observe(obs, 4), ObservationError);
}

// The closed-form fast paths agree with the generic age-vector recursion.
TEST(FastPath, MatchesGeneric) {
  for (GenSpec g : {GenSpec{Geometric{0.3}}, GenSpec{Geometric{0.8}}, GenSpec{Periodic{1}}, GenSpec{Periodic{4}}}) {
    for (FeedbackDelay fb : {FeedbackDelay{0}, FeedbackDelay{2}, kNoFeedback}) {
      Engine rng = make_stream(31, Stream::kTest);
      NetworkConfig cfg;
      cfg.max_scheduled = 1;
      cfg.sources.push_back({1.0, 0.8, 0.55, 1, fb, g});
      const auto rec = testing::record_random_trace(cfg, 600, rng);
      auto a = make(g, 0.55, 1, fb, true);
      auto b = make(g, 0.55, 1, fb, false);
      for (Slot t = 1; t <= 600; ++t) {
        a.observe(rec.obs.sources[0], t);
        b.observe(rec.obs.sources[0], t);
        ASSERT_NEAR(a.source_timestamp(), b.source_timestamp(), 1e-9) << describe(g) << " t=" << t;
        ASSERT_NEAR(a.dest_timestamp(), b.dest_timestamp(), 1e-9) << describe(g) << " t=" << t;
      }
    }
  }
}

TEST(BatchForm, MatchesRecursion) {
  for (GenSpec g : {GenSpec{Uniform{2, 4}}, GenSpec{Geometric{0.5}}, GenSpec{Periodic{2}}, GenSpec{Explicit{{0.2, 0.5, 0.0, 0.3}}}}) {
    for (FeedbackDelay fb : {FeedbackDelay{1}, kNoFeedback}) {
      Engine rng = make_stream(41, Stream::kTest);
      NetworkConfig cfg;
      cfg.max_scheduled = 1;
      cfg.sources.push_back({1.0, 0.9, 0.4, 2, fb, g});
      const auto rec = testing::record_random_trace(cfg, 500, rng);
      auto e = make(g, 0.4, 2, fb);
      for (Slot t = 1; t <= 500; ++t) {
        e.observe(rec.obs.sources[0], t);
        ASSERT_NEAR(e.dest_timestamp_batch(), e.dest_timestamp(), 1e-12) << describe(g) << " t=" << t;
      }
    }
  }
}

// Streaming without history must agree with the full-history estimator.
TEST(Pruning, DoesNotChangeEstimates) {
  for (GenSpec g : {GenSpec{Uniform{2, 6}}, GenSpec{Geometric{0.25}}}) {
    for (FeedbackDelay fb : {FeedbackDelay{3}, kNoFeedback}) {
      Engine rng = make_stream(43, Stream::kTest);
      NetworkConfig cfg;
      cfg.max_scheduled = 1;
      cfg.sources.push_back({1.0, 0.9, 0.5, 2, fb, g});
      const auto rec = testing::record_random_trace(cfg, 800, rng);
      auto full = make(g, 0.5, 2, fb, false);
      EstimatorSettings s{0.5, 2, fb, false, false};
      SourceEstimator lean(g, s);
      for (Slot t = 1; t <= 800; ++t) {
        full.observe(rec.obs.sources[0], t);
        lean.observe(rec.obs.sources[0], t);
        ASSERT_NEAR(full.dest_timestamp(), lean.dest_timestamp(), 1e-9);
        ASSERT_NEAR(full.source_timestamp(), lean.source_timestamp(), 1e-9);
      }
    }
  }
}

TEST(Oracle, SmallSample) {
  for (GenSpec g : {GenSpec{Uniform{2, 4}}, GenSpec{Geometric{0.5}}}) {
    const auto gap = testing::oracle_family(g, 20, 5);
    EXPECT_LE(gap.worst(), 1e-9) << describe(g);
  }
}

TEST(FeasibleSet, Intervals) {
  SourceObservation obs;
  obs.record(3, 1);
  obs.record(4, 1);
  obs.record(7, 2);
  // packet 1 generated in [1,3]; packet 2 in [5,7]; afterwards anything > 7
  EXPECT_TRUE(in_feasible_set(obs, 2, 10));
  EXPECT_FALSE(in_feasible_set(obs, 4, 10));
  EXPECT_TRUE(in_feasible_set(obs, 5, 10));
  EXPECT_TRUE(in_feasible_set(obs, 9, 10));
  EXPECT_FALSE(in_feasible_set(obs, 11, 10));
}

}  // namespace
}  // namespace aoi
