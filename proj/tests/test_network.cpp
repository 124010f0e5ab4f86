#include "doctest.h"

#include <random>

#include "support.hpp"
#include "wrsn/network.hpp"

using namespace wrsn;
using wrsn::test::rel_err;

TEST_CASE("transmit energy examples") {
  RadioConstants r;
  CHECK(rel_err(*transmit_energy(2000, 0, r, 80), 1.0e-4) <= 1e-12);
  CHECK(rel_err(*transmit_energy(2000, 50, r, 80), 1.5e-4) <= 1e-12);
  CHECK_FALSE(transmit_energy(2000, 90, r, 80).has_value());
  CHECK(transmit_energy(2000, 80, r, 80).has_value());
}

TEST_CASE("multipath branch beyond crossover") {
  RadioConstants r;
  const double l0 = r.crossover_distance();
  CHECK(l0 == doctest::Approx(87.7058).epsilon(1e-5));
  const double l = 120.0;
  const double expect = 2000 * 50e-9 + 2000 * 0.0013e-12 * l * l * l * l;
  CHECK(rel_err(*transmit_energy(2000, l, r, 200), expect) <= 1e-12);
}

TEST_CASE("branches meet at the crossover for any packet size") {
  RadioConstants r;
  const double l0 = r.crossover_distance();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> bits(1.0, 1e5);
  for (int i = 0; i < 100; ++i) {
    const double k = bits(rng);
    const double fs = k * r.eps_elec + k * r.eps_fs * l0 * l0;
    const double mp = k * r.eps_elec + k * r.eps_mp * l0 * l0 * l0 * l0;
    CHECK(rel_err(fs, mp) <= 1e-12);
    CHECK(rel_err(*transmit_energy(k, l0, r, 200), fs) <= 1e-12);
    CHECK(rel_err(*transmit_energy(k, std::nextafter(l0, 1e9), r, 200), fs) <= 1e-12);
  }
}

TEST_CASE("transmit energy is monotone in bits and distance") {
  RadioConstants r;
  double prev = 0.0;
  for (double l = 0; l <= 150; l += 0.5) {
    const double e = *transmit_energy(2000, l, r, 150);
    CHECK(e >= prev);
    prev = e;
  }
  prev = 0.0;
  for (double k = 0; k <= 10000; k += 100) {
    const double e = *transmit_energy(k, 60, r, 80);
    CHECK(e >= prev);
    prev = e;
  }
}

TEST_CASE("receive energy and node dissipation examples") {
  RadioConstants r;
  CHECK(receive_energy(0, r) == 0.0);
  CHECK(rel_err(receive_energy(2000, r), 1.0e-4) <= 1e-12);
  CHECK(rel_err(receive_energy(1, r), 5.0e-8) <= 1e-12);
  CHECK(node_dissipation(0, 0, 30, 2000, r, 80) == 0.0);
  CHECK(rel_err(node_dissipation(3, 2, 50, 2000, r, 80), 1.05e-3) <= 1e-12);
  CHECK(rel_err(node_dissipation(1, 0, 0, 2000, r, 80), 2.0e-4) <= 1e-12);
  CHECK_THROWS_AS(node_dissipation(1, 1, 81, 2000, r, 80), UnreachableLink);
}

TEST_CASE("routing tree examples") {
  NetworkInstance inst;
  inst.base_station = {100, 100};
  inst.sensors = {{100, 60}, {60, 100}, {130, 130}};
  inst.targets = {{100, 70}};
  auto tree = build_routing_tree(inst, {true, true, true});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(tree.parent[i] == RoutingTree::kBaseStation);
    CHECK(tree.hop_count[i] == 1);
  }

  // chain: s0 -- s1 -- BS, s0 out of BS range
  NetworkInstance chain;
  chain.base_station = {150, 100};
  chain.sensors = {{10, 100}, {80, 100}};
  chain.targets = {{10, 110}};
  tree = build_routing_tree(chain, {true, true});
  CHECK(tree.parent[0] == 1);
  CHECK(tree.parent[1] == RoutingTree::kBaseStation);
  CHECK(tree.hop_count[0] == 2);
  CHECK(tree.link_len[0] == doctest::Approx(70));

  tree = build_routing_tree(chain, {true, false});
  CHECK_FALSE(tree.attached(0));
  tree = build_routing_tree(NetworkInstance{}, {});
  CHECK(tree.size() == 0);
}

TEST_CASE("routing ties prefer shorter links then lower index") {
  NetworkInstance inst;
  inst.base_station = {150, 100};
  // s2 is two hops out; s0 and s1 both one hop, s1 is closer to s2
  inst.sensors = {{90, 130}, {90, 100}, {30, 100}};
  inst.targets = {{30, 110}};
  auto tree = build_routing_tree(inst, {true, true, true});
  CHECK(tree.parent[2] == 1);
  // equal distances: lower index wins
  inst.sensors = {{90, 120}, {90, 80}, {30, 100}};
  tree = build_routing_tree(inst, {true, true, true});
  CHECK(tree.parent[2] == 0);
}

TEST_CASE("routing hop counts match brute force on small instances") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    auto inst = test::random_layout(n, 3, rng);
    auto mask = test::random_mask(n, rng);
    auto tree = build_routing_tree(inst, mask);
    auto hops = test::brute_hops(inst, mask);
    for (int i = 0; i < n; ++i) {
      if (hops[i] < 0) {
        CHECK_FALSE(tree.attached(i));
        continue;
      }
      REQUIRE(tree.attached(i));
      CHECK(tree.hop_count[i] == hops[i]);
      const int p = tree.parent[i];
      const Vec2 pp = p == RoutingTree::kBaseStation ? inst.base_station : inst.sensors[p];
      CHECK(distance(pp, inst.sensors[i]) <= inst.comm_range);
      CHECK(tree.link_len[i] == doctest::Approx(distance(pp, inst.sensors[i])));
      if (p != RoutingTree::kBaseStation) CHECK(tree.hop_count[p] == hops[i] - 1);
    }
  }
}

TEST_CASE("coverage and connectivity match brute force") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    auto inst = test::random_layout(n, 1 + static_cast<int>(rng() % 4), rng);
    auto mask = test::random_mask(n, rng);
    CHECK(check_coverage(inst, mask) == test::brute_coverage(inst, mask));
    CHECK(check_connectivity(inst, mask) == test::brute_connectivity(inst, mask));
  }
}

TEST_CASE("coverage and connectivity edge cases") {
  auto inst = test::default_instance(7);
  std::vector<bool> all(inst.num_sensors(), true);
  CHECK(check_coverage(inst, all));
  CHECK(check_connectivity(inst, all));
  std::vector<bool> none(inst.num_sensors(), false);
  CHECK_FALSE(check_coverage(inst, none));
  CHECK(check_connectivity(inst, none));

  // a target with a unique coverer
  NetworkInstance two;
  two.base_station = {100, 100};
  two.sensors = {{100, 60}, {160, 100}};
  two.targets = {{100, 40}, {180, 100}};
  CHECK(check_coverage(two, {true, true}));
  CHECK_FALSE(check_coverage(two, {false, true}));

  // removing the only relay disconnects the source
  NetworkInstance relay;
  relay.base_station = {150, 100};
  relay.sensors = {{10, 100}, {80, 100}};
  relay.targets = {{10, 110}};
  CHECK(check_connectivity(relay, {true, true}));
  CHECK_FALSE(check_connectivity(relay, {true, false}));
}

TEST_CASE("instantaneous ECR examples") {
  NetworkInstance inst;
  inst.base_station = {100, 100};
  // s0, s1 sources 50 m from s2; s2 relays 50 m to the BS; s3 idle leaf
  inst.sensors = {{0, 150}, {0, 50}, {50, 100}, {100, 130}};
  inst.targets = {{0, 160}, {0, 40}};
  inst.comm_range = 80;
  auto tree = build_routing_tree(inst, {true, true, true, true});
  REQUIRE(tree.parent[2] == RoutingTree::kBaseStation);
  auto ecr = instantaneous_ecr(inst, tree, {0.0, 0.0, 0.0, 0.0});
  for (double w : ecr) CHECK(w == 0.0);

  // direct source, kappa = 1, one target, l = 50
  NetworkInstance src;
  src.base_station = {100, 100};
  src.sensors = {{50, 100}};
  src.targets = {{50, 110}};
  tree = build_routing_tree(src, {true});
  CHECK(rel_err(instantaneous_ecr(src, tree, {1.0})[0], 1.5e-4) <= 1e-12);

  tree = build_routing_tree(inst, {true, true, true, true});
  if (tree.parent[0] == 2 && tree.parent[1] == 2) {
    ecr = instantaneous_ecr(inst, tree, {1.0, 1.0, 0.0, 0.0});
    CHECK(rel_err(ecr[2], 5.0e-4) <= 1e-12);
    CHECK(ecr[3] == 0.0);
  } else {
    FAIL("unexpected tree");
  }
}
