#include <doctest.h>

#include <cmath>
#include <vector>

#include "corral/bases.hpp"

using namespace corral;
using namespace corral::bases;

namespace {

FeedbackPacket selected(double weighted, double prob = 1.0) {
  return FeedbackPacket{true, weighted, prob, std::nullopt};
}

FeedbackPacket unselected(double prob = 0.5) { return FeedbackPacket{false, 0.0, prob, std::nullopt}; }

// Reset must leave the algorithm in the same learning state as a freshly
// built one; only the random stream keeps advancing.
template <typename Make>
void check_reset_equivalence(Make make) {
  auto used = make(Rng(1));
  for (int t = 0; t < 30; ++t) {
    used->propose(t % 2);
    used->update(selected(0.3 + 0.02 * t, 0.5));
  }
  used->reset(4.0);
  auto fresh = make(Rng(2));
  fresh->reset(4.0);
  CHECK(used->range() == 4.0);
  CHECK(fresh->range() == 4.0);
  CHECK(used->decision_space(2) == fresh->decision_space(2));
  CHECK_THROWS_AS(used->update(selected(0.1)), Error);
  CHECK_THROWS_AS(used->reset(0.5), Error);
}

}  // namespace

TEST_CASE("EXP3 rate and reset") {
  Exp3 e(2, 1000, 1.0, Rng(1));
  CHECK(std::abs(e.rate() - 0.018623) < 1e-4);
  CHECK(std::abs(e.rate() - std::sqrt(std::log(2.0) / 2000.0)) < 1e-15);
  e.reset(4.0);
  CHECK(e.rate() == doctest::Approx(std::sqrt(std::log(2.0) / 8000.0)));
  Exp3 unit(2, 1000, 4.0, Rng(1), Exp3Options{false});
  CHECK(unit.rate() == doctest::Approx(std::sqrt(std::log(2.0) / 2000.0) / 4.0));

  const auto a = e.propose(kNoContext);
  const double prob = e.distribution()[a];
  e.update(selected(0.8, 0.5));
  CHECK(e.cumulative_losses()[a] == doctest::Approx(0.8 / prob));

  Exp3 g(3, 100, 1.0, Rng(3));
  g.propose(kNoContext);
  g.update(unselected());
  for (double c : g.cumulative_losses()) CHECK(c == 0.0);

  auto fresh = Exp3(3, 100, 2.0, Rng(3));
  for (int t = 0; t < 10; ++t) {
    g.propose(kNoContext);
    g.update(selected(0.5));
  }
  g.reset(2.0);
  CHECK(g.cumulative_losses() == fresh.cumulative_losses());
  CHECK(g.rate() == fresh.rate());
  CHECK(g.certificate()->alpha == 0.5);
}

TEST_CASE("EXP4 degenerates to EXP3 on constant policies") {
  Exp3 e3(3, 500, 2.0, Rng(42));
  Exp4 e4(constant_policies(3), 3, 500, 2.0, Rng(42));
  CHECK(e3.rate() == e4.rate());
  Rng losses(7);
  for (int t = 0; t < 500; ++t) {
    const auto a = e3.propose(kNoContext);
    REQUIRE(e4.propose(kNoContext) == a);
    const bool sel = losses.uniform() < 0.5;
    const double raw = losses.uniform();
    auto packet = importance_weight(raw, 0.5, sel);
    e3.update(packet);
    e4.update(packet);
  }
  const auto w3 = e3.distribution();
  const auto w4 = e4.policy_weights();
  for (std::size_t i = 0; i < 3; ++i) CHECK(w3[i] == doctest::Approx(w4[i]).epsilon(1e-12));
}

TEST_CASE("EXP4 rate, symmetry and validation") {
  PolicyClass eight;
  for (DecisionId a = 0; a < 4; ++a) {
    eight.push_back({a, a});
    eight.push_back({a, (a + 1) % 4});
  }
  Exp4 e(eight, 4, 10000, 4.0, Rng(1));
  CHECK(e.rate() == doctest::Approx(std::sqrt(std::log(8.0) / 160000.0)).epsilon(1e-14));
  CHECK(std::abs(e.rate() - 0.0036057) < 1e-6);

  Exp4 twins({{0, 1}, {0, 1}, {1, 0}}, 2, 100, 1.0, Rng(2));
  for (int t = 0; t < 50; ++t) {
    twins.propose(t % 2);
    twins.update(selected(0.4, 0.5));
    const auto w = twins.policy_weights();
    REQUIRE(w[0] == w[1]);
  }
  CHECK_THROWS_AS(Exp4({{0, 5}, {1, 0}}, 2, 100, 1.0, Rng(1)), Error);
  check_reset_equivalence([&](Rng r) { return std::make_unique<Exp4>(eight, 4, 1000, 1.0, std::move(r)); });
}

TEST_CASE("Epoch-Greedy exploration length") {
  CHECK(epoch_greedy_explore_rounds(10000, 1.0, 4, 8) == 3120);
  const double expected = std::ceil(std::pow(2000.0, 2.0 / 3) * std::sqrt(4 * std::log(16000.0)));
  CHECK(epoch_greedy_explore_rounds(2000, 1.0, 4, 8) == static_cast<std::size_t>(expected));
  CHECK(epoch_greedy_explore_rounds(10, 1.0, 4, 8) == 10);
  CHECK(epoch_greedy_explore_rounds(10000, 8.0, 4, 8) > epoch_greedy_explore_rounds(10000, 1.0, 4, 8));
}

TEST_CASE("Epoch-Greedy exploits the empirical risk minimizer") {
  // Policy 1 has strictly smaller weighted empirical loss on every sample.
  PolicyClass policies{{0, 0}, {1, 1}, {0, 1}};
  EpochGreedy eg(policies, 2, 200, 1.0, Rng(4));
  const std::size_t t0 = eg.explore_rounds();
  REQUIRE(t0 < 200);
  std::size_t selected_rounds = 0;
  while (!eg.exploiting()) {
    const ContextId x = selected_rounds % 2;
    const auto a = eg.propose(x);
    eg.update(selected(a == 1 ? 0.1 : 0.9, 0.5));
    ++selected_rounds;
  }
  CHECK(selected_rounds == t0);
  CHECK(eg.samples().size() == t0);
  for (const auto& s : eg.samples()) {
    CHECK(s.weighted_loss == doctest::Approx((s.arm == 1 ? 0.1 : 0.9) * 2.0));
  }

  // Oracle ERM: recompute each policy's weighted loss from the stored samples.
  std::vector<double> totals(policies.size(), 0.0);
  for (const auto& s : eg.samples()) {
    for (std::size_t k = 0; k < policies.size(); ++k) totals[k] += s.loss_for(policies[k][s.context]);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < totals.size(); ++k) {
    if (totals[k] < totals[best]) best = k;
  }
  CHECK(*eg.erm_policy() == best);
  for (ContextId x = 0; x < 2; ++x) {
    const auto a = eg.propose(x);
    CHECK(a == policies[best][x]);
    eg.update(selected(0.5));
  }
}

TEST_CASE("Epoch-Greedy ignores unselected rounds") {
  EpochGreedy eg({{0}, {1}}, 2, 100, 1.0, Rng(5));
  for (int t = 0; t < 1000; ++t) {
    eg.propose(0);
    eg.update(unselected());
  }
  CHECK(eg.samples().empty());
  CHECK_FALSE(eg.exploiting());
  check_reset_equivalence([](Rng r) {
    return std::make_unique<EpochGreedy>(PolicyClass{{0, 0}, {1, 1}}, 2, 1000, 1.0, std::move(r));
  });
}

TEST_CASE("Thompson sampling bookkeeping") {
  ThompsonSampling ts({{1, 1}, {1, 1}}, 1.0, Rng(8));
  const auto a = ts.propose(kNoContext);
  // Raw loss recovered as 2.0 * 0.5 = 1.0: one more loss event.
  ts.update(FeedbackPacket{true, 2.0, 0.5, std::nullopt});
  CHECK(ts.one_loss_counts()[a] == 1);
  CHECK(ts.zero_loss_counts()[a] == 0);

  const auto before = ts;
  ts.propose(kNoContext);
  ts.update(unselected());
  CHECK(ts.one_loss_counts() == before.one_loss_counts());
  CHECK(ts.zero_loss_counts() == before.zero_loss_counts());

  CHECK_THROWS_AS(ThompsonSampling({{0, 1}, {1, 1}}, 1.0, Rng(1)), Error);

  // Symmetric priors: each arm proposed with probability 1/K.
  std::vector<int> counts(4, 0);
  Rng rng(9);
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    ThompsonSampling fresh(std::vector<BetaPrior>(4), 1.0, Rng(rng.engine()()));
    ++counts[fresh.propose(kNoContext)];
  }
  for (int c : counts) CHECK(static_cast<double>(c) / n == doctest::Approx(0.25).epsilon(0.06));

  check_reset_equivalence(
      [](Rng r) { return std::make_unique<ThompsonSampling>(std::vector<BetaPrior>(3), 1.0, std::move(r)); });
}

TEST_CASE("UCB1") {
  Ucb1 u(3);
  for (DecisionId a = 0; a < 3; ++a) {
    CHECK(u.propose(kNoContext) == a);
    u.update(selected(0.5));
  }

  // Equal counts, strictly lower empirical mean -> lower index -> proposed.
  Ucb1 v(2);
  v.propose(kNoContext);
  v.update(selected(0.9));
  v.propose(kNoContext);
  v.update(selected(0.2));
  CHECK(v.index(1) <= v.index(0));
  CHECK(v.propose(kNoContext) == 1);
  v.update(selected(0.2));

  // Deterministic (0, 1) losses: regret at most one.
  Ucb1 w(2);
  double regret = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto a = w.propose(kNoContext);
    const double loss = a == 0 ? 0.0 : 1.0;
    regret += loss;
    w.update(selected(loss));
  }
  CHECK(regret <= 1.0);

  // Means 0.1 vs 0.9 over 5000 rounds: the worse arm gets at most 5% of pulls.
  Ucb1 s(2);
  Rng env(3);
  for (int t = 0; t < 5000; ++t) {
    const auto a = s.propose(kNoContext);
    s.update(selected(env.bernoulli(a == 0 ? 0.1 : 0.9) ? 1.0 : 0.0));
  }
  CHECK(s.pulls()[1] <= 250);
  CHECK_FALSE(s.certificate());
}

TEST_CASE("pathological base") {
  auto locked = [](double loss, int side) {
    PathologicalBase b(side, Rng(1));
    const auto first = b.propose(kNoContext);
    b.update(selected(loss));
    std::vector<DecisionId> plays;
    for (int t = 0; t < 50; ++t) {
      plays.push_back(b.propose(kNoContext));
      b.update(selected(0.123));
    }
    return std::make_pair(first, plays);
  };
  {
    auto [first, plays] = locked(0.1, 0);
    CHECK(first == 0);
    for (auto a : plays) CHECK(a == 0);
  }
  {
    auto [first, plays] = locked(0.4, 0);
    for (auto a : plays) CHECK(a == 1);
  }
  {
    auto [first, plays] = locked(0.3, 1);
    CHECK(first == 2);
    for (auto a : plays) CHECK(a == 2);
  }
  {
    // 0.2 / p_bar with p_bar < 1 is not a recognised value.
    auto [first, plays] = locked(0.2 / 0.7, 0);
    std::size_t ones = 0;
    for (auto a : plays) {
      CHECK(a <= 1);
      ones += a;
    }
    CHECK(ones > 0);
    CHECK(ones < plays.size());
  }
  PathologicalBase quiet(0, Rng(1));
  quiet.update(unselected());
  CHECK(quiet.mode() == PathologicalBase::Mode::kFresh);
  PathologicalBase eager(0, Rng(1), true);
  eager.update(unselected());
  CHECK(eager.mode() == PathologicalBase::Mode::kUniform);
  eager.reset(2.0);
  CHECK(eager.mode() == PathologicalBase::Mode::kFresh);
}
