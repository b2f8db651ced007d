#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "ehrmab/policies.hpp"

using namespace ehrmab;

namespace {

const EhChainParams kChain{0.1, 0.9, 0.5};

BeliefVector case1(std::initializer_list<double> zs) {
  BeliefVector v;
  for (double z : zs) v.emplace_back(Case1Belief{0, z});
  return v;
}

}  // namespace

TEST_CASE("myopic_select picks the largest beliefs") {
  const BeliefTable table(Variant::NoSimultaneousHarvest, kChain, 5);
  CHECK(myopic_select(case1({0.9, 0.1, 0.5}), 2, table) == std::vector<int>{0, 2});
}

TEST_CASE("myopic_select tie rule") {
  const BeliefTable table(Variant::Batteryless, kChain, 1);
  BeliefVector v{Case2Belief{0.5, 1}, Case2Belief{0.5, 3}, Case2Belief{0.5, 3}, Case2Belief{0.5, 2}};
  CHECK(myopic_select(v, 2, table) == std::vector<int>{1, 2});
  BeliefVector flat(4, Case2Belief{0.5, 0});
  CHECK(myopic_select(flat, 2, table) == std::vector<int>{0, 1});
}

TEST_CASE("myopic_select is permutation-equivariant") {
  const BeliefTable table(Variant::Batteryless, kChain, 1);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    BeliefVector v;
    for (int i = 0; i < 7; ++i) v.emplace_back(Case2Belief{rng.uniform(), 0});
    std::vector<int> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 6; i > 0; --i) std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
    BeliefVector permuted(7);
    for (int i = 0; i < 7; ++i) permuted[perm[i]] = v[i];
    const auto a = myopic_select(v, 3, table);
    auto mapped = std::vector<int>();
    for (int i : a) mapped.push_back(perm[i]);
    std::sort(mapped.begin(), mapped.end());
    CHECK(myopic_select(permuted, 3, table) == mapped);
  }
}

TEST_CASE("round robin follows its cyclic order") {
  auto p = Policy::round_robin_with_order(Variant::NoSimultaneousHarvest, {2, 0, 3, 1}, 2);
  const BeliefTable table(Variant::NoSimultaneousHarvest, kChain, 5);
  const auto b = case1({0, 0, 0, 0});
  CHECK(p.decide(b, table) == std::vector<int>{0, 2});
  CHECK(p.decide(b, table) == std::vector<int>{1, 3});
  CHECK(p.decide(b, table) == std::vector<int>{0, 2});

  auto all = Policy::round_robin_with_order(Variant::NoSimultaneousHarvest, {2, 0, 3, 1}, 4);
  CHECK(all.decide(b, table) == std::vector<int>{0, 1, 2, 3});

  const Policy x(PolicyKind::RoundRobin, Variant::General, 9, 2, 1234);
  const Policy y(PolicyKind::RoundRobin, Variant::General, 9, 2, 1234);
  CHECK(x.order() == y.order());
}

TEST_CASE("random_select") {
  Rng rng(1);
  CHECK(random_select(rng, 5, 5) == std::vector<int>{0, 1, 2, 3, 4});
  long zero = 0;
  const long n = 100'000;
  for (long i = 0; i < n; ++i) zero += random_select(rng, 2, 1)[0] == 0;
  CHECK(std::abs(static_cast<double>(zero) / n - 0.5) <= 0.01);

  Rng a(99), b(99);
  for (int i = 0; i < 20; ++i) CHECK(random_select(a, 10, 3) == random_select(b, 10, 3));
  CHECK_THROWS_AS(random_select(rng, 2, 3), std::invalid_argument);
}

TEST_CASE("decide returns K distinct indices") {
  const BeliefTable table(Variant::General, kChain, 5);
  const BeliefVector beliefs(12, GeneralBelief{0, 0});
  for (auto kind : {PolicyKind::Myopic, PolicyKind::RoundRobin, PolicyKind::Random}) {
    Policy p(kind, Variant::General, 12, 4, 3);
    for (int t = 0; t < 10; ++t) {
      const auto s = p.decide(beliefs, table);
      CHECK(s.size() == 4);
      CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
      CHECK(s.front() >= 0);
      CHECK(s.back() < 12);
    }
  }
  Policy p(PolicyKind::Myopic, Variant::General, 11, 4, 3);
  CHECK_THROWS_AS(p.decide(beliefs, table), ModelMismatch);
}

TEST_CASE("update_beliefs") {
  const BeliefTable c1(Variant::NoSimultaneousHarvest, kChain, 5);
  const BeliefTable c2(Variant::Batteryless, kChain, 1);
  const BeliefTable gen(Variant::General, kChain, 5);

  TsOutcome out(2);
  out.scheduled = {true, false};
  out.operative = {true, true};
  out.active = {true, false};
  out.observed_eh = {1, std::nullopt};

  SUBCASE("case1 active node resets to zero") {
    const auto next = update_beliefs(BeliefVector{Case1Belief{4, c1.case1_z(4)}, Case1Belief{2, c1.case1_z(2)}}, out, c1);
    CHECK(std::get<Case1Belief>(next[0]).z == 0.0);
    CHECK(std::get<Case1Belief>(next[1]).z == doctest::Approx(c1.case1_z(3)));
  }
  SUBCASE("case2") {
    const auto next = update_beliefs(BeliefVector{Case2Belief{0.3, 0}, Case2Belief{0.5, 0}}, out, c2);
    CHECK(std::get<Case2Belief>(next[0]).s == doctest::Approx(0.9));
    CHECK(std::get<Case2Belief>(next[1]).s == doctest::Approx(0.5));  // fixed point of tau
  }
  SUBCASE("general") {
    const auto next = update_beliefs(BeliefVector{GeneralBelief{6, 0}, GeneralBelief{3, 1}}, out, gen);
    CHECK(std::get<GeneralBelief>(next[0]).idle == 0);
    CHECK(std::get<GeneralBelief>(next[0]).last_eh == 1);
    CHECK(std::get<GeneralBelief>(next[1]).idle == 4);
    CHECK(std::get<GeneralBelief>(next[1]).last_eh == 1);
  }
  SUBCASE("missing observation") {
    out.observed_eh[0].reset();
    CHECK_THROWS_AS(update_beliefs(BeliefVector{GeneralBelief{}, GeneralBelief{}}, out, gen), std::invalid_argument);
  }
}

TEST_CASE("all-idle update preserves belief order") {
  const EhChainParams ch{0.2, 0.7, 0.3};
  const BeliefTable c2(Variant::Batteryless, ch, 1);
  const BeliefTable c1(Variant::NoSimultaneousHarvest, ch, 4);
  const TsOutcome idle(3);
  const auto n2 = update_beliefs(BeliefVector{Case2Belief{0.9, 0}, Case2Belief{0.4, 0}, Case2Belief{0.1, 0}}, idle, c2);
  CHECK(std::get<Case2Belief>(n2[0]).s >= std::get<Case2Belief>(n2[1]).s);
  CHECK(std::get<Case2Belief>(n2[1]).s >= std::get<Case2Belief>(n2[2]).s);
  const auto n1 = update_beliefs(
      BeliefVector{Case1Belief{7, c1.case1_z(7)}, Case1Belief{3, c1.case1_z(3)}, Case1Belief{0, 0.0}}, idle, c1);
  CHECK(std::get<Case1Belief>(n1[0]).z >= std::get<Case1Belief>(n1[1]).z);
  CHECK(std::get<Case1Belief>(n1[1]).z >= std::get<Case1Belief>(n1[2]).z);
}
