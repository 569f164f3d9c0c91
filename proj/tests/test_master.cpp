#include <doctest.h>

#include <cmath>
#include <vector>

#include "corral/master.hpp"

using namespace corral;
using namespace corral::master;

TEST_CASE("initialization") {
  auto s = init_master(0.01, 2, 100);
  CHECK(s.gamma == 0.01);
  CHECK(s.rho == std::vector<double>{4.0, 4.0});
  // Oracle: e^{1/ln T} in long double; the rounded reference values hold to 1e-4.
  CHECK(std::abs(s.beta - static_cast<double>(std::exp(1.0L / std::log(100.0L)))) < 1e-14);
  CHECK(std::abs(s.beta - 1.2425461) < 1e-4);
  const double beta3 = init_master(0.01, 2, 3).beta;
  CHECK(std::abs(beta3 - static_cast<double>(std::exp(1.0L / std::log(3.0L)))) < 1e-14);
  CHECK(std::abs(beta3 - 2.4849666) < 1e-4);

  auto four = init_master(0.1, 4, 50);
  for (double x : four.p) CHECK(x == 0.25);
  for (double x : four.p_bar) CHECK(x == 0.25);
  CHECK_NOTHROW(check_invariants(four));

  CHECK_THROWS_AS(init_master(0.1, 1, 100), Error);
  CHECK_THROWS_AS(init_master(0.1, 2, 1), Error);
  CHECK_THROWS_AS(init_master(0.0, 2, 100), Error);
}

TEST_CASE("sampling by inverse CDF") {
  CHECK(sample_index(ProbVector::uniform(4), 0.6) == 2);
  CHECK(sample_index(ProbVector::uniform(4), 0.0) == 0);
  const double gamma = 0.01;
  ProbVector skew({1 - gamma + gamma / 2, gamma / 2});
  CHECK(sample_index(skew, 0.5) == 0);

  // 10^5 draws from (0.2, 0.8): frequency of the first base in [0.195, 0.205].
  auto s = init_master(0.1, 2, 100);
  s.p_bar = ProbVector({0.2, 0.8});
  Rng rng(1);
  std::vector<DecisionId> proposals{0, 1};
  int first = 0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) first += choose(s, proposals, rng).chosen_base == 0;
  const double freq = static_cast<double>(first) / n;
  CHECK(freq >= 0.195);
  CHECK(freq <= 0.205);

  std::vector<DecisionId> wrong{0};
  CHECK_THROWS_AS(choose(s, wrong, rng), Error);
}

TEST_CASE("standard packets") {
  std::vector<DecisionId> proposals{0, 1};
  auto packets = build_packets(ProbVector({0.25, 0.75}), proposals, 0, 0.5, Estimator::kStandard);
  CHECK(packets[0].selected);
  CHECK(packets[0].weighted_loss == 2.0);
  CHECK(packets[0].sampling_prob == 0.25);
  CHECK_FALSE(packets[1].selected);
  CHECK(packets[1].weighted_loss == 0.0);
  CHECK_THROWS_AS(build_packets(ProbVector({0.25, 0.75}), proposals, 0, 1.5, Estimator::kStandard), Error);
}

TEST_CASE("shared packets") {
  std::vector<DecisionId> proposals{7, 7, 3};
  auto packets = build_packets(ProbVector({0.2, 0.3, 0.5}), proposals, 0, 0.6, Estimator::kShared);
  CHECK(packets[0].selected);
  CHECK(packets[1].selected);
  CHECK(packets[0].weighted_loss == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(packets[1].weighted_loss == doctest::Approx(1.2).epsilon(1e-14));
  CHECK_FALSE(packets[2].selected);
  CHECK(packets[2].weighted_loss == 0.0);
}

TEST_CASE("threshold event") {
  auto s = init_master(0.1, 2, 100);
  s.p_bar = ProbVector({0.1, 0.9});
  const double eta_before = s.eta[0];
  auto fired = update_thresholds(s);
  CHECK(fired == std::vector<std::size_t>{0});
  CHECK(s.rho[0] == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(s.rho[1] == 4.0);
  CHECK(s.eta[0] == doctest::Approx(s.beta * eta_before).epsilon(1e-15));
  CHECK(s.threshold_events[0] == 1);
}

TEST_CASE("feedback moves mass away from the charged base") {
  auto s = init_master(0.5, 2, 1000);
  std::vector<DecisionId> proposals{0, 1};
  auto out = feedback(s, Choice{0, 0}, 1.0, Estimator::kStandard, proposals);
  CHECK(s.p_bar[0] < 0.5);
  CHECK(s.round == 2);
  CHECK(out.packets[0].weighted_loss == 2.0);
  CHECK_NOTHROW(check_invariants(s));
}

TEST_CASE("schedule invariants over long adversarial runs") {
  for (auto policy : {RestartPolicy::kRestartOnDoubling, RestartPolicy::kNeverRestart}) {
    const std::size_t horizon = 5000;
    auto s = init_master(0.2, 3, horizon, policy);
    Rng rng(9);
    std::vector<DecisionId> proposals{0, 1, 2};
    for (std::size_t t = 1; t <= horizon; ++t) {
      auto c = choose(s, proposals, rng);
      // Base 0 always loses nothing, the others always lose 1.
      const double loss = c.chosen_base == 0 ? 0.0 : 1.0;
      auto out = feedback(s, c, loss, Estimator::kStandard, proposals);
      if (policy == RestartPolicy::kNeverRestart) CHECK(out.restarts.empty());
      for (std::size_t i = 0; i < 3; ++i) REQUIRE(s.rho[i] * s.p_bar[i] >= 1.0);
    }
    CHECK_NOTHROW(check_invariants(s));
    CHECK(s.p_bar[0] > 0.9);
    CHECK(s.threshold_events[1] >= 1);
  }
}

TEST_CASE("tuned learning rate") {
  CHECK(tuned_eta(100, 10000, 2) == doctest::Approx(2.714e-5).epsilon(1e-3));
  CHECK(tuned_eta(1, 4, 2) == doctest::Approx(0.01803).epsilon(1e-3));
  CHECK(tuned_eta(1e-12, 10000, 2) == doctest::Approx(std::sqrt(2.0 / 10000)));
  CHECK_THROWS_AS(tuned_eta(0.0, 100, 2), Error);
}

TEST_CASE("naive master") {
  NaiveExp3Master naive(2, 10000);
  CHECK(naive.rate() == doctest::Approx(std::sqrt(std::log(2.0) / 20000)));
  CHECK(NaiveExp3Master(2, 10, 0.3).rate() == 0.3);
  auto d = naive.distribution();
  CHECK(d[0] == 0.5);
  std::vector<DecisionId> proposals{0, 2};
  auto packets = naive.feedback(Choice{0, 0}, 0.5, proposals);
  CHECK(packets[0].weighted_loss == 1.0);
  CHECK_FALSE(packets[1].selected);
  CHECK(naive.distribution()[0] < 0.5);
}
