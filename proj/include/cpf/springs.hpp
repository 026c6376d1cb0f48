#pragma once

#include "cpf/anchors.hpp"

namespace cpf {

struct SpringError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Quadratic spring pulling an anchor onto an object vertex.
struct AttractiveSpring {
  int anchor_index;
  int object_vertex_index;
  double k;  // elasticity in [0, 1]
};

/// Exponentially decaying spring pushing a hand vertex out along the
/// object normal.
struct RepulsiveSpring {
  int hand_vertex_index;
  int object_vertex_index;
  double k;  // default 1e-3
};

struct SpringSystem {
  std::vector<AttractiveSpring> attractive;
  std::vector<RepulsiveSpring> repulsive;
  double t_rpl = 20.0;    // mm, repulsion distance gate
  double t_vc = 0.8;      // contact probability gate
  double length_scale = 1.0;  // mm, makes the repulsion exponent dimensionless
};

/// Per-object-vertex contact probability, 17-way region distribution and
/// attractive elasticity.
struct ContactLabels {
  std::vector<double> vc;
  std::vector<std::array<double, kRegionCount>> cr;
  std::vector<double> ae;

  std::size_t size() const { return vc.size(); }
  void validate() const;
};

// 0.5 k |a - v|^2
double attractive_energy(const Vec3& anchor_pos, const Vec3& vertex_pos,
                         double k);

// 0.5 k exp(-2 dl / lambda) with dl = (v_h - v_o) . n_o (signed; negative
// when penetrating).
double repulsive_energy(const Vec3& hand_vertex, const Vec3& object_vertex,
                        const Vec3& object_normal, double k,
                        double length_scale = 1.0);

struct SpringRecoveryOptions {
  double t_vc = 0.8;
  double t_rpl = 20.0;       // mm
  double k_rpl = 1e-3;
  double length_scale = 1.0; // mm
  bool repulse_all = false;  // repulsion from every object vertex, label-free
};

// Materializes the spring lists from labels: for every object vertex over
// the contact gate, one attractive spring per anchor of its argmax region
// (k from the elasticity channel) and one repulsive spring per hand vertex
// within the distance gate. Deterministic ordering.
SpringSystem recover_springs(const std::vector<Vec3>& object_vertices,
                             const std::vector<Vec3>& hand_vertices,
                             const AnchorSet& anchor_set,
                             const ContactLabels& labels,
                             const SpringRecoveryOptions& options = {});

struct ElasticEnergy {
  double total = 0;
  std::vector<double> attractive;  // per spring
  std::vector<double> repulsive;
};

ElasticEnergy elastic_energy(const SpringSystem& system,
                             const std::vector<Vec3>& anchor_positions,
                             const std::vector<Vec3>& hand_vertices,
                             const std::vector<Vec3>& object_vertices,
                             const std::vector<Vec3>& object_normals);

/// Gradient of the summed elastic energy with respect to every position
/// input, accumulated in place.
struct ElasticGradient {
  std::vector<Vec3> d_anchor;
  std::vector<Vec3> d_hand;
  std::vector<Vec3> d_object;
  std::vector<Vec3> d_normal;
};

double elastic_energy_gradient(const SpringSystem& system,
                               const std::vector<Vec3>& anchor_positions,
                               const std::vector<Vec3>& hand_vertices,
                               const std::vector<Vec3>& object_vertices,
                               const std::vector<Vec3>& object_normals,
                               ElasticGradient& grad);

}  // namespace cpf
