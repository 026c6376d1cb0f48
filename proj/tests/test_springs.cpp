#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "cpf/springs.hpp"

using namespace cpf;

namespace {

Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> uni(lo, hi);
  return Vec3(uni(rng), uni(rng), uni(rng));
}

// Minimal anchor setup: a degenerate-free one-face "mesh" whose three
// vertices host pure-corner anchors, so anchor i sits exactly at hand
// vertex i.
struct TinyRig {
  Mesh topology;
  AnchorSet anchors;

  TinyRig() {
    topology.vertices = {Vec3(0, 0, 0), Vec3(10, 0, 0), Vec3(0, 10, 0)};
    topology.faces = {{0, 1, 2}};
    anchors.anchors = {
        {0, 0.0, 0.0, phalange_region(0, 2)},  // corner 0, region 2
        {0, 1.0, 0.0, phalange_region(1, 2)},  // corner 1, region 5
        {0, 0.0, 1.0, kPalmMetacarpalRegion},  // corner 2, region 15
    };
  }
};

std::array<double, kRegionCount> one_hot(int region) {
  std::array<double, kRegionCount> row{};
  row[region] = 1.0;
  return row;
}

}  // namespace

TEST_CASE("attractive energy closed form") {
  CHECK(attractive_energy(Vec3(1, 2, 3), Vec3(1, 2, 3), 0.7) == 0.0);
  // |d| = 5, e = 0.5 * 0.4 * 25 = 5
  CHECK(attractive_energy(Vec3(3, 4, 0), Vec3(0, 0, 0), 0.4) ==
        doctest::Approx(5.0));
  // Energy is symmetric and scales linearly in k.
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Vec3 a = random_vec(rng, -10, 10);
    const Vec3 v = random_vec(rng, -10, 10);
    CHECK(attractive_energy(a, v, 0.8) ==
          doctest::Approx(attractive_energy(v, a, 0.8)));
    CHECK(attractive_energy(a, v, 0.8) ==
          doctest::Approx(2 * attractive_energy(a, v, 0.4)));
  }
}

TEST_CASE("repulsive energy closed form and sign convention") {
  const Vec3 n(0, 1, 0);
  const Vec3 vo(0, 0, 0);
  const double k = 1e-3;
  // Hand vertex 2 mm outside along the normal: dl = +2.
  CHECK(repulsive_energy(Vec3(0, 2, 0), vo, n, k, 1.0) ==
        doctest::Approx(0.5 * k * std::exp(-4.0)));
  // Penetrating 2 mm: dl = -2, energy blows up.
  CHECK(repulsive_energy(Vec3(0, -2, 0), vo, n, k, 1.0) ==
        doctest::Approx(0.5 * k * std::exp(4.0)));
  // On the surface: 0.5 k.
  CHECK(repulsive_energy(Vec3(3, 0, 0), vo, n, k, 1.0) ==
        doctest::Approx(0.5 * k));
  // Length scale stretches the decay.
  CHECK(repulsive_energy(Vec3(0, 2, 0), vo, n, k, 2.0) ==
        doctest::Approx(0.5 * k * std::exp(-2.0)));
}

TEST_CASE("contact label validation") {
  ContactLabels labels;
  labels.vc = {0.9};
  labels.cr = {one_hot(2)};
  labels.ae = {0.5};
  labels.validate();

  ContactLabels bad = labels;
  bad.vc[0] = 1.5;
  CHECK_THROWS_AS(bad.validate(), SpringError);
  bad = labels;
  bad.cr[0][2] = 0.4;  // no longer sums to 1
  CHECK_THROWS_AS(bad.validate(), SpringError);
  bad = labels;
  bad.ae.clear();
  CHECK_THROWS_AS(bad.validate(), SpringError);
}

TEST_CASE("spring recovery: contact gate is strict") {
  const TinyRig rig;
  const std::vector<Vec3> hand = rig.topology.vertices;
  const std::vector<Vec3> object = {Vec3(0, 1, 0), Vec3(10, 1, 0)};
  ContactLabels labels;
  labels.vc = {0.8, 0.81};  // exactly at the gate vs just above
  labels.cr = {one_hot(2), one_hot(5)};
  labels.ae = {0.5, 0.25};
  const SpringSystem sys =
      recover_springs(object, hand, rig.anchors, labels, {});
  // Only vertex 1 passes (vc > 0.8 strictly).
  REQUIRE(sys.attractive.size() == 1);
  CHECK(sys.attractive[0].anchor_index == 1);
  CHECK(sys.attractive[0].object_vertex_index == 1);
  CHECK(sys.attractive[0].k == 0.25);
  // Repulsion only for the contact vertex; all three hand vertices are
  // within 20 mm of it.
  REQUIRE(sys.repulsive.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(sys.repulsive[i].hand_vertex_index == i);
    CHECK(sys.repulsive[i].object_vertex_index == 1);
    CHECK(sys.repulsive[i].k == 1e-3);
  }
}

TEST_CASE("spring recovery: argmax region with lower-index tie-break") {
  const TinyRig rig;
  const std::vector<Vec3> hand = rig.topology.vertices;
  const std::vector<Vec3> object = {Vec3(0, 1, 0)};
  ContactLabels labels;
  labels.vc = {0.9};
  std::array<double, kRegionCount> row{};
  row[2] = 0.5;
  row[5] = 0.5;  // tie: region 2 must win
  labels.cr = {row};
  labels.ae = {1.0};
  const SpringSystem sys =
      recover_springs(object, hand, rig.anchors, labels, {});
  REQUIRE(sys.attractive.size() == 1);
  CHECK(sys.attractive[0].anchor_index == 0);
}

TEST_CASE("spring recovery: one spring per anchor of the chosen region") {
  TinyRig rig;
  // Give region 2 a second anchor (edge midpoint of the face).
  rig.anchors.anchors.push_back({0, 0.5, 0.0, phalange_region(0, 2)});
  const std::vector<Vec3> hand = rig.topology.vertices;
  const std::vector<Vec3> object = {Vec3(0, 1, 0)};
  ContactLabels labels;
  labels.vc = {1.0};
  labels.cr = {one_hot(2)};
  labels.ae = {0.6};
  const SpringSystem sys =
      recover_springs(object, hand, rig.anchors, labels, {});
  REQUIRE(sys.attractive.size() == 2);
  CHECK(sys.attractive[0].anchor_index == 0);
  CHECK(sys.attractive[1].anchor_index == 3);
  // Shared elasticity from the ae channel.
  CHECK(sys.attractive[0].k == 0.6);
  CHECK(sys.attractive[1].k == 0.6);
}

TEST_CASE("spring recovery: Euclidean repulsion gate") {
  const TinyRig rig;
  const std::vector<Vec3> hand = {Vec3(0, 0, 0), Vec3(0, 19.9, 0),
                                  Vec3(0, 20.1, 0)};
  const std::vector<Vec3> object = {Vec3(0, 0, 0)};
  ContactLabels labels;
  labels.vc = {1.0};
  labels.cr = {one_hot(2)};
  labels.ae = {1.0};
  const SpringSystem sys =
      recover_springs(object, hand, rig.anchors, labels, {});
  REQUIRE(sys.repulsive.size() == 2);  // 20.1 mm vertex excluded
  CHECK(sys.repulsive[0].hand_vertex_index == 0);
  CHECK(sys.repulsive[1].hand_vertex_index == 1);
}

TEST_CASE("spring recovery: repulse_all ignores the contact labels") {
  const TinyRig rig;
  const std::vector<Vec3> hand = {Vec3(0, 1, 0)};
  const std::vector<Vec3> object = {Vec3(0, 0, 0)};
  ContactLabels labels;
  labels.vc = {0.0};
  labels.cr = {one_hot(0)};
  labels.ae = {0.0};
  SpringRecoveryOptions options;
  options.repulse_all = true;
  const SpringSystem sys =
      recover_springs(object, hand, rig.anchors, labels, options);
  CHECK(sys.attractive.empty());
  CHECK(sys.repulsive.size() == 1);
}

TEST_CASE("spring recovery rejects mismatched label counts") {
  const TinyRig rig;
  ContactLabels labels;
  labels.vc = {1.0};
  labels.cr = {one_hot(0)};
  labels.ae = {1.0};
  const std::vector<Vec3> object = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  CHECK_THROWS_AS(
      recover_springs(object, rig.topology.vertices, rig.anchors, labels, {}),
      SpringError);
}

TEST_CASE("modular recovery+energy equals a monolithic brute-force loop") {
  // Random labels over a random point cloud; the oracle re-derives the
  // energy directly from the label semantics without building spring lists.
  TinyRig rig;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> region_pick(0, kRegionCount - 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vec3> hand;
    for (int i = 0; i < 12; ++i) hand.push_back(random_vec(rng, -15, 15));
    std::vector<Vec3> hand_for_anchors = rig.topology.vertices;
    std::vector<Vec3> object, normals;
    ContactLabels labels;
    const int nv = 25;
    for (int j = 0; j < nv; ++j) {
      object.push_back(random_vec(rng, -15, 15));
      normals.push_back(random_vec(rng, -1, 1).normalized());
      labels.vc.push_back(uni(rng));
      std::array<double, kRegionCount> row{};
      row[region_pick(rng)] = 1.0;
      labels.cr.push_back(row);
      labels.ae.push_back(uni(rng));
    }
    SpringRecoveryOptions options;
    options.k_rpl = 2e-3;
    const SpringSystem sys =
        recover_springs(object, hand, rig.anchors, labels, options);
    const auto anchor_pos = interpolate_anchors(rig.anchors, rig.topology,
                                                hand_for_anchors);
    const double modular =
        elastic_energy(sys, anchor_pos, hand, object, normals).total;

    double brute = 0;
    for (int j = 0; j < nv; ++j) {
      if (labels.vc[j] <= options.t_vc) continue;
      int region = 0;
      for (int r = 1; r < kRegionCount; ++r) {
        if (labels.cr[j][r] > labels.cr[j][region]) region = r;
      }
      for (std::size_t a = 0; a < rig.anchors.anchors.size(); ++a) {
        if (rig.anchors.anchors[a].region != region) continue;
        brute += 0.5 * labels.ae[j] *
                 (anchor_pos[a] - object[j]).squaredNorm();
      }
      for (const auto& vh : hand) {
        if ((vh - object[j]).norm() <= options.t_rpl) {
          const double dl = (vh - object[j]).dot(normals[j]);
          brute += 0.5 * options.k_rpl * std::exp(-2.0 * dl);
        }
      }
    }
    CHECK(modular == doctest::Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("single-pair equilibrium matches the bisection root") {
  // One attractive spring (anchor at distance d above the vertex) plus one
  // repulsive spring on the same axis: E(d) = 0.5 k_a d^2
  // + 0.5 k_r exp(-2 d / lambda). dE/dd = 0 at k_a d = (k_r / lambda)
  // exp(-2 d / lambda), which has a unique positive root.
  const double lambda = 1.0;
  auto energy = [&](double d, double ka, double kr) {
    return 0.5 * ka * d * d + 0.5 * kr * std::exp(-2.0 * d / lambda);
  };
  for (double ka : {0.2, 1.0}) {
    for (double kr : {1e-3, 1e-1}) {
      // Bisection on the derivative's root.
      auto deriv = [&](double d) {
        return ka * d - (kr / lambda) * std::exp(-2.0 * d / lambda);
      };
      double lo = 0.0, hi = 10.0;
      REQUIRE(deriv(lo) < 0);
      REQUIRE(deriv(hi) > 0);
      for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (deriv(mid) < 0 ? lo : hi) = mid;
      }
      const double root = 0.5 * (lo + hi);
      CHECK(root > 0);
      // Sampled minimum of the actual energy agrees with the root.
      double best_d = 0, best_e = std::numeric_limits<double>::infinity();
      for (double d = 0; d <= 10.0; d += 1e-4) {
        const double e = energy(d, ka, kr);
        if (e < best_e) {
          best_e = e;
          best_d = d;
        }
      }
      CHECK(best_d == doctest::Approx(root).epsilon(1e-3));
      // And the library's energies reproduce the analytic curve.
      const Vec3 n(0, 1, 0);
      const double d_test = root;
      const double lib =
          attractive_energy(Vec3(0, d_test, 0), Vec3(0, 0, 0), ka) +
          repulsive_energy(Vec3(0, d_test, 0), Vec3(0, 0, 0), n, kr, lambda);
      CHECK(lib == doctest::Approx(energy(d_test, ka, kr)));
    }
  }
}

TEST_CASE("elastic energy gradient matches finite differences") {
  TinyRig rig;
  std::mt19937_64 rng(23);
  std::vector<Vec3> anchors, hand, object, normals;
  for (int i = 0; i < 3; ++i) anchors.push_back(random_vec(rng, -5, 5));
  for (int i = 0; i < 6; ++i) hand.push_back(random_vec(rng, -5, 5));
  for (int i = 0; i < 5; ++i) {
    object.push_back(random_vec(rng, -5, 5));
    normals.push_back(random_vec(rng, -1, 1).normalized());
  }
  SpringSystem sys;
  sys.attractive = {{0, 0, 0.5}, {1, 2, 0.9}, {2, 4, 0.1}};
  sys.repulsive = {{0, 1, 1e-3}, {3, 3, 1e-3}, {5, 0, 2e-3}};
  ElasticGradient grad;
  const double e0 =
      elastic_energy_gradient(sys, anchors, hand, object, normals, grad);
  CHECK(e0 ==
        doctest::Approx(elastic_energy(sys, anchors, hand, object, normals)
                            .total));

  const double h = 1e-6;
  auto check_block = [&](std::vector<Vec3>& block,
                         const std::vector<Vec3>& analytic) {
    for (std::size_t i = 0; i < block.size(); ++i) {
      for (int c = 0; c < 3; ++c) {
        const double saved = block[i][c];
        block[i][c] = saved + h;
        const double ep =
            elastic_energy(sys, anchors, hand, object, normals).total;
        block[i][c] = saved - h;
        const double em =
            elastic_energy(sys, anchors, hand, object, normals).total;
        block[i][c] = saved;
        CHECK(analytic[i][c] ==
              doctest::Approx((ep - em) / (2 * h)).epsilon(1e-5));
      }
    }
  };
  check_block(anchors, grad.d_anchor);
  check_block(hand, grad.d_hand);
  check_block(object, grad.d_object);
  check_block(normals, grad.d_normal);
}
