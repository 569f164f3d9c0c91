#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "corral/envs.hpp"

using namespace corral;
using namespace corral::envs;

TEST_CASE("stochastic bandit baseline") {
  StochasticMab env({0.1, 0.9}, Rng(1));
  auto b = env.baseline(constant_policies(2), 10);
  CHECK(b.best_index == 0);
  CHECK(b.per_round[0] == 0.1);
  CHECK(b.cumulative(10) == doctest::Approx(1.0));

  StochasticMab tie({0.5, 0.5, 0.5}, Rng(1));
  CHECK(tie.baseline(constant_policies(3), 5).best_index == 0);
  CHECK_THROWS_AS(StochasticMab({0.5, 1.5}, Rng(1)), Error);

  // Losses are Bernoulli draws with the configured means.
  StochasticMab draws({0.3, 0.8}, Rng(2));
  double sum0 = 0.0, sum1 = 0.0;
  const int n = 20000;
  for (int t = 0; t < n; ++t) {
    draws.next_round();
    CHECK((draws.loss(0) == 0.0 || draws.loss(0) == 1.0));
    sum0 += draws.loss(0);
    sum1 += draws.loss(1);
  }
  CHECK(sum0 / n == doctest::Approx(0.3).epsilon(0.05));
  CHECK(sum1 / n == doctest::Approx(0.8).epsilon(0.05));
}

TEST_CASE("scripted adversarial baseline") {
  std::vector<std::vector<double>> alternating;
  for (int t = 0; t < 100; ++t) alternating.push_back(t % 2 == 0 ? std::vector<double>{1, 0} : std::vector<double>{0, 1});
  AdversarialMab alt(alternating);
  auto b = alt.baseline(constant_policies(2), 100);
  CHECK(b.best_index == 0);
  CHECK(b.cumulative(100) == 50.0);

  AdversarialMab constant(std::vector<std::vector<double>>(10, {0.7, 0.2, 0.5}));
  CHECK(constant.baseline(constant_policies(3), 10).best_index == 1);

  AdversarialMab zeros(std::vector<std::vector<double>>(10, {0.7, 0.0, 0.5}));
  auto z = zeros.baseline(constant_policies(3), 10);
  CHECK(z.best_index == 1);
  CHECK(z.cumulative(10) == 0.0);

  CHECK_THROWS_AS(AdversarialMab({{0.1, 0.2}, {0.3}}), Error);
  CHECK_THROWS_AS(alt.baseline(constant_policies(2), 101), Error);

  AdversarialMab short_script({{0.1, 0.2}});
  short_script.next_round();
  CHECK(short_script.loss(1) == 0.2);
  CHECK_THROWS_AS(short_script.next_round(), Error);
}

TEST_CASE("loss script CSV") {
  const std::string path = "test_envs_script.csv";
  {
    std::ofstream out(path);
    out << "0.1,0.9\n0.5, 0.25\n\n1,0\n";
  }
  auto rows = load_loss_script(path);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][1] == 0.25);
  {
    std::ofstream out(path);
    out << "0.1,abc\n";
  }
  CHECK_THROWS_AS(load_loss_script(path), Error);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_loss_script("does-not-exist.csv"), Error);
}

TEST_CASE("stochastic contextual baseline") {
  StochasticContextual single({1.0}, {}, {{0.4, 0.2}}, Rng(1));
  CHECK(single.baseline(constant_policies(2), 3).best_index == 1);
  CHECK(single.baseline(constant_policies(2), 3).per_round[0] == 0.2);

  PolicyClass policies{{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  StochasticContextual two({0.5, 0.5}, policies, {{0.2, 0.6}, {0.7, 0.1}}, Rng(1));
  auto b = two.baseline(policies, 4);
  CHECK(b.best_policy == Policy{0, 1});
  CHECK(b.per_round[0] == doctest::Approx(0.15));
  CHECK(two.policy_value({1, 0}) == doctest::Approx(0.65));
  CHECK(two.default_policies() == policies);

  int seen0 = 0;
  for (int t = 0; t < 10000; ++t) seen0 += two.next_round() == 0;
  CHECK(seen0 / 10000.0 == doctest::Approx(0.5).epsilon(0.05));
  CHECK_THROWS_AS(StochasticContextual({0.5, 0.4}, {}, {{0.1}, {0.2}}, Rng(1)), Error);
  CHECK_THROWS_AS(StochasticContextual({0.5, 0.5}, {{0, 2}}, {{0.1, 0.2}, {0.2, 0.3}}, Rng(1)), Error);
}

TEST_CASE("lower-bound environment") {
  LowerBoundEnv e1(Rng(1), LowerBoundEnv::Variant::kE1);
  CHECK(e1.is_e1());
  const auto& l = e1.losses();
  CHECK(std::min(l[0], l[1]) == 0.1);
  CHECK(std::max(l[0], l[1]) == 0.2);
  CHECK(std::min(l[2], l[3]) == 0.3);

  // Pulling the 0.1 arm every round costs nothing against the best arm.
  const DecisionId best = l[0] == 0.1 ? 0 : 1;
  auto b = e1.baseline(constant_policies(4), 100);
  double regret = 0.0;
  for (int t = 0; t < 100; ++t) {
    e1.next_round();
    regret += e1.loss(best) - b.per_round[t];
  }
  CHECK(regret == 0.0);

  LowerBoundEnv e2(Rng(1), LowerBoundEnv::Variant::kE2);
  auto b2 = e2.baseline(constant_policies(4), 1);
  for (DecisionId a : {0, 1}) CHECK(e2.loss(a) - b2.per_round[0] >= 0.2 - 1e-12);

  int e1_count = 0;
  for (std::uint64_t s = 0; s < 400; ++s) e1_count += LowerBoundEnv(Rng(s)).is_e1();
  CHECK(e1_count > 150);
  CHECK(e1_count < 250);
}

TEST_CASE("induced environment") {
  auto wrapped = induced_env(stochastic_mab({0.3, 0.6}, Rng(5)), [](std::size_t) { return 1.0; }, Rng(9));
  StochasticMab plain({0.3, 0.6}, Rng(5));
  for (int t = 0; t < 200; ++t) {
    wrapped->next_round();
    plain.next_round();
    CHECK(wrapped->loss(1) == plain.loss(1));
    CHECK(wrapped->feedback(1) == plain.feedback(1));
  }

  InducedEnv quarter(adversarial_mab(std::vector<std::vector<double>>(100, {0.8, 0.1})),
                     [](std::size_t) { return 0.25; }, Rng(3));
  bool saw_selected = false, saw_skipped = false;
  for (int t = 0; t < 100; ++t) {
    quarter.next_round();
    if (quarter.selected()) {
      saw_selected = true;
      CHECK(quarter.loss(0) == doctest::Approx(3.2));
      CHECK(quarter.feedback(0).weighted_loss == doctest::Approx(3.2));
      CHECK(*quarter.feedback(0).raw_loss == 0.8);
    } else {
      saw_skipped = true;
      CHECK(quarter.loss(0) == 0.0);
      CHECK_FALSE(quarter.feedback(0).selected);
    }
  }
  CHECK(saw_selected);
  CHECK(saw_skipped);

  InducedEnv many(stochastic_mab({0.5, 0.5}, Rng(1)), [](std::size_t) { return 0.25; }, Rng(4));
  int sel = 0;
  for (int t = 0; t < 20000; ++t) {
    many.next_round();
    sel += many.selected();
  }
  CHECK(sel / 20000.0 == doctest::Approx(0.25).epsilon(0.05));

  InducedEnv bad(stochastic_mab({0.5, 0.5}, Rng(1)), [](std::size_t) { return 1.5; }, Rng(4));
  CHECK_THROWS_AS(bad.next_round(), Error);
}
