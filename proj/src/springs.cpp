#include "cpf/springs.hpp"

#include <algorithm>
#include <cmath>

namespace cpf {

void ContactLabels::validate() const {
  if (cr.size() != vc.size() || ae.size() != vc.size()) {
    throw SpringError("contact label channels have mismatched sizes");
  }
  for (std::size_t j = 0; j < vc.size(); ++j) {
    if (vc[j] < 0 || vc[j] > 1 || ae[j] < 0 || ae[j] > 1) {
      throw SpringError("vc/ae labels must lie in [0, 1]");
    }
    double sum = 0;
    for (double p : cr[j]) {
      if (p < 0) throw SpringError("negative region probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw SpringError("region distribution must sum to 1");
    }
  }
}

double attractive_energy(const Vec3& anchor_pos, const Vec3& vertex_pos,
                         double k) {
  return 0.5 * k * (anchor_pos - vertex_pos).squaredNorm();
}

double repulsive_energy(const Vec3& hand_vertex, const Vec3& object_vertex,
                        const Vec3& object_normal, double k,
                        double length_scale) {
  const double dl = (hand_vertex - object_vertex).dot(object_normal);
  return 0.5 * k * std::exp(-2.0 * dl / length_scale);
}

SpringSystem recover_springs(const std::vector<Vec3>& object_vertices,
                             const std::vector<Vec3>& hand_vertices,
                             const AnchorSet& anchor_set,
                             const ContactLabels& labels,
                             const SpringRecoveryOptions& options) {
  labels.validate();
  if (labels.size() != object_vertices.size()) {
    throw SpringError("label count does not match object vertex count");
  }
  SpringSystem system;
  system.t_rpl = options.t_rpl;
  system.t_vc = options.t_vc;
  system.length_scale = options.length_scale;

  std::vector<std::vector<int>> region_anchors(kRegionCount);
  for (int r = 0; r < kRegionCount; ++r) {
    region_anchors[r] = anchor_set.anchors_in_region(r);
  }
  const double gate_sq = options.t_rpl * options.t_rpl;

  for (std::size_t j = 0; j < object_vertices.size(); ++j) {
    const bool contact = labels.vc[j] > options.t_vc;
    if (contact) {
      // argmax region; lower index wins ties
      int region = 0;
      for (int r = 1; r < kRegionCount; ++r) {
        if (labels.cr[j][r] > labels.cr[j][region]) region = r;
      }
      for (int anchor : region_anchors[region]) {
        system.attractive.push_back(
            {anchor, static_cast<int>(j), labels.ae[j]});
      }
    }
    if (contact || options.repulse_all) {
      for (std::size_t i = 0; i < hand_vertices.size(); ++i) {
        if ((hand_vertices[i] - object_vertices[j]).squaredNorm() <= gate_sq) {
          system.repulsive.push_back(
              {static_cast<int>(i), static_cast<int>(j), options.k_rpl});
        }
      }
    }
  }
  return system;
}

ElasticEnergy elastic_energy(const SpringSystem& system,
                             const std::vector<Vec3>& anchor_positions,
                             const std::vector<Vec3>& hand_vertices,
                             const std::vector<Vec3>& object_vertices,
                             const std::vector<Vec3>& object_normals) {
  ElasticEnergy out;
  out.attractive.reserve(system.attractive.size());
  out.repulsive.reserve(system.repulsive.size());
  for (const auto& s : system.attractive) {
    const double e = attractive_energy(anchor_positions.at(s.anchor_index),
                                       object_vertices.at(s.object_vertex_index),
                                       s.k);
    out.attractive.push_back(e);
    out.total += e;
  }
  for (const auto& s : system.repulsive) {
    const double e = repulsive_energy(
        hand_vertices.at(s.hand_vertex_index),
        object_vertices.at(s.object_vertex_index),
        object_normals.at(s.object_vertex_index), s.k, system.length_scale);
    out.repulsive.push_back(e);
    out.total += e;
  }
  return out;
}

double elastic_energy_gradient(const SpringSystem& system,
                               const std::vector<Vec3>& anchor_positions,
                               const std::vector<Vec3>& hand_vertices,
                               const std::vector<Vec3>& object_vertices,
                               const std::vector<Vec3>& object_normals,
                               ElasticGradient& grad) {
  grad.d_anchor.assign(anchor_positions.size(), Vec3::Zero());
  grad.d_hand.assign(hand_vertices.size(), Vec3::Zero());
  grad.d_object.assign(object_vertices.size(), Vec3::Zero());
  grad.d_normal.assign(object_normals.size(), Vec3::Zero());
  double total = 0;
  for (const auto& s : system.attractive) {
    const Vec3 d =
        anchor_positions[s.anchor_index] - object_vertices[s.object_vertex_index];
    total += 0.5 * s.k * d.squaredNorm();
    grad.d_anchor[s.anchor_index] += s.k * d;
    grad.d_object[s.object_vertex_index] -= s.k * d;
  }
  const double inv_scale = 1.0 / system.length_scale;
  for (const auto& s : system.repulsive) {
    const Vec3& vh = hand_vertices[s.hand_vertex_index];
    const Vec3& vo = object_vertices[s.object_vertex_index];
    const Vec3& n = object_normals[s.object_vertex_index];
    const Vec3 diff = vh - vo;
    const double dl = diff.dot(n);
    const double e = 0.5 * s.k * std::exp(-2.0 * dl * inv_scale);
    total += e;
    const double de_ddl = -2.0 * inv_scale * e;
    grad.d_hand[s.hand_vertex_index] += de_ddl * n;
    grad.d_object[s.object_vertex_index] -= de_ddl * n;
    grad.d_normal[s.object_vertex_index] += de_ddl * diff;
  }
  return total;
}

}  // namespace cpf
