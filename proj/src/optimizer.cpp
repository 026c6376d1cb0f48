#include "cpf/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace cpf {

OptimVariables OptimVariables::from_hand_pose(const HandPose& pose) {
  OptimVariables vars;
  vars.wrist_pose = pose.wrist;
  vars.joint_rotations = pose.joint_rotations;
  return vars;
}

HandPose OptimVariables::hand_pose() const {
  HandPose pose;
  pose.wrist = wrist_pose;
  pose.joint_rotations = joint_rotations;
  return pose;
}

double anatomical_cost(const std::vector<Rotation>& joint_rotations,
                       const std::vector<TsbFrame>& frames,
                       const std::vector<bool>& knuckle_flags,
                       std::vector<Vec3>* grad) {
  if (joint_rotations.size() != kArticulations) {
    throw OptimizerError("anatomical cost needs 15 joint rotations");
  }
  if (grad) grad->assign(kArticulations, Vec3::Zero());
  double cost = 0;
  for (int j = 0; j < kArticulations; ++j) {
    const Rotation& r = joint_rotations[j];
    const double theta = r.angle();
    if (theta < 1e-12) continue;
    const int joint = j + 1;
    const TsbFrame& frame = frames.at(joint);
    const Vec3 axis = r.axis_angle / theta;

    auto axial_term = [&](const Vec3& n) {
      const double dot = axis.dot(n);
      cost += std::abs(dot);
      if (grad) {
        const double sign = dot >= 0 ? 1.0 : -1.0;
        (*grad)[j] += sign * (n - dot * axis) / theta;
      }
    };
    axial_term(frame.twist);
    if (!knuckle_flags.at(joint)) axial_term(frame.splay);

    const double bend = axis.dot(frame.bend);
    const bool dominant = std::abs(bend) > 0.9;
    const double bend_angle = dominant ? theta : theta * std::abs(bend);
    if (bend_angle > M_PI / 2) {
      cost += bend_angle - M_PI / 2;
      if (grad) {
        if (dominant) {
          (*grad)[j] += axis;
        } else {
          // theta |axis . bend| = |axis_angle . bend|
          const double raw = r.axis_angle.dot(frame.bend);
          (*grad)[j] += (raw >= 0 ? 1.0 : -1.0) * frame.bend;
        }
      }
    }
  }
  return cost;
}

double offset_cost(const std::vector<Vec3>& current,
                   const std::vector<Vec3>& initial, double weight,
                   std::vector<Vec3>* grad) {
  if (current.size() != initial.size()) {
    throw OptimizerError("offset cost size mismatch");
  }
  if (current.empty()) return 0;
  const double inv_n = 1.0 / static_cast<double>(current.size());
  double cost = 0;
  for (std::size_t i = 0; i < current.size(); ++i) {
    const Vec3 d = current[i] - initial[i];
    cost += d.squaredNorm();
    if (grad) (*grad)[i] += 2.0 * weight * inv_n * d;
  }
  return weight * cost * inv_n;
}

// ---------------------------------------------------------------------------
// GraspCost

GraspCost::GraspCost(const SkinnedHand& hand, const AnchorSet& anchors,
                     const Mesh& object_world, SpringSystem springs,
                     const HandPose& initial_hand_pose, const GeoConfig& config)
    : hand_(hand),
      anchors_(anchors),
      object_world_(object_world),
      springs_(std::move(springs)),
      config_(config) {
  ensure_vertex_normals(object_world_);
  frames_ = derive_tsb_frames(hand_.tree);
  for (const auto& v : object_world_.vertices) object_centroid_ += v;
  if (!object_world_.vertices.empty()) {
    object_centroid_ /= static_cast<double>(object_world_.vertices.size());
  }
  initial_hand_vertices_ =
      pose_hand(hand_, initial_hand_pose).vertices;
}

std::vector<double> GraspCost::pack(const OptimVariables& vars) {
  std::vector<double> p(kParamCount);
  auto put = [&](int at, const Vec3& v) {
    p[at] = v.x();
    p[at + 1] = v.y();
    p[at + 2] = v.z();
  };
  put(0, vars.object_pose.rotation.axis_angle);
  put(3, vars.object_pose.translation / kTranslationScale);
  put(6, vars.wrist_pose.rotation.axis_angle);
  put(9, vars.wrist_pose.translation / kTranslationScale);
  for (int j = 0; j < kArticulations; ++j) {
    put(12 + 3 * j, vars.joint_rotations[j].axis_angle);
  }
  return p;
}

OptimVariables GraspCost::unpack(const std::vector<double>& params) {
  auto get = [&](int at) { return Vec3(params[at], params[at + 1], params[at + 2]); };
  OptimVariables vars;
  vars.object_pose.rotation.axis_angle = get(0);
  vars.object_pose.translation = kTranslationScale * get(3);
  vars.wrist_pose.rotation.axis_angle = get(6);
  vars.wrist_pose.translation = kTranslationScale * get(9);
  vars.joint_rotations.resize(kArticulations);
  for (int j = 0; j < kArticulations; ++j) {
    vars.joint_rotations[j].axis_angle = get(12 + 3 * j);
  }
  return vars;
}

std::vector<Vec3> GraspCost::object_vertices(const OptimVariables& vars) const {
  const Mat3 r = rotation_to_matrix(vars.object_pose.rotation);
  std::vector<Vec3> out(object_world_.vertices.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = r * (object_world_.vertices[i] - object_centroid_) +
             object_centroid_ + vars.object_pose.translation;
  }
  return out;
}

std::vector<Vec3> GraspCost::object_normals(const OptimVariables& vars) const {
  const Mat3 r = rotation_to_matrix(vars.object_pose.rotation);
  std::vector<Vec3> out(object_world_.vertex_normals.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = r * object_world_.vertex_normals[i];
  }
  return out;
}

std::vector<Vec3> GraspCost::hand_vertices(const OptimVariables& vars) const {
  const FkResult fk = forward_kinematics(hand_.tree, vars.joint_rotations);
  return skin_vertices(hand_, fk, vars.wrist_pose);
}

std::vector<Vec3> GraspCost::anchor_positions(const OptimVariables& vars) const {
  return interpolate_anchors(anchors_, hand_.template_mesh,
                             hand_vertices(vars));
}

CostBreakdown GraspCost::evaluate(const OptimVariables& vars,
                                  std::vector<double>* grad) const {
  // Forward pass.
  const FkResult fk = forward_kinematics(hand_.tree, vars.joint_rotations);
  const Mat3 rw = rotation_to_matrix(vars.wrist_pose.rotation);
  const std::size_t nv = hand_.template_mesh.vertices.size();

  std::vector<Vec3> pre_wrist(nv);  // skinned vertices before the wrist pose
  for (std::size_t i = 0; i < nv; ++i) {
    const Vec3& v = hand_.template_mesh.vertices[i];
    Vec3 blended = Vec3::Zero();
    for (const auto& w : hand_.skin_weights[i]) {
      blended += w.weight * (fk.rotation[w.joint] *
                                 (v - hand_.tree.rest_positions[w.joint]) +
                             fk.position[w.joint]);
    }
    pre_wrist[i] = blended;
  }
  std::vector<Vec3> hand_verts(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    hand_verts[i] = rw * pre_wrist[i] + vars.wrist_pose.translation;
  }
  const std::vector<Vec3> anchors =
      interpolate_anchors(anchors_, hand_.template_mesh, hand_verts);
  const std::vector<Vec3> obj_verts = object_vertices(vars);
  const std::vector<Vec3> obj_normals = object_normals(vars);

  CostBreakdown cost;
  ElasticGradient egrad;
  std::vector<Vec3> d_hand(nv, Vec3::Zero());
  std::vector<Vec3> d_object(obj_verts.size(), Vec3::Zero());
  std::vector<Vec3> anat_grad;

  if (grad) {
    cost.elastic = elastic_energy_gradient(springs_, anchors, hand_verts,
                                           obj_verts, obj_normals, egrad);
  } else {
    cost.elastic =
        elastic_energy(springs_, anchors, hand_verts, obj_verts, obj_normals)
            .total;
  }
  cost.anatomical = anatomical_cost(vars.joint_rotations, frames_,
                                    hand_.tree.knuckle,
                                    grad ? &anat_grad : nullptr);
  // Per-part offsets; the initial object placement is object_world_ itself
  // (the pose variable is a delta starting at identity).
  cost.offset = offset_cost(hand_verts, initial_hand_vertices_,
                            config_.w_offset_hand, grad ? &d_hand : nullptr);
  cost.offset += offset_cost(obj_verts, object_world_.vertices,
                             config_.w_offset_object, grad ? &d_object : nullptr);
  cost.total = config_.w_elast * cost.elastic + config_.w_anat * cost.anatomical +
               config_.w_offset * cost.offset;

  if (!std::isfinite(cost.total)) {
    std::string term = !std::isfinite(cost.elastic)  ? "elastic"
                       : !std::isfinite(cost.anatomical) ? "anatomical"
                                                         : "offset";
    throw OptimizerError("non-finite " + term + " cost");
  }
  if (!grad) return cost;

  // Backward pass. The offset gradients sit in d_hand / d_object already;
  // scale them by the term weight and add the elastic contributions.
  for (std::size_t i = 0; i < nv; ++i) {
    d_hand[i] = config_.w_offset * d_hand[i] + config_.w_elast * egrad.d_hand[i];
  }
  for (std::size_t i = 0; i < obj_verts.size(); ++i) {
    d_object[i] = config_.w_offset * d_object[i] +
                  config_.w_elast * egrad.d_object[i];
  }
  // Anchors are barycentric combinations of hand vertices.
  for (std::size_t a = 0; a < anchors_.anchors.size(); ++a) {
    const auto& rec = anchors_.anchors[a];
    const auto& f = hand_.template_mesh.faces[rec.face];
    const Vec3 g = config_.w_elast * egrad.d_anchor[a];
    d_hand[f[0]] += (1.0 - rec.x1 - rec.x2) * g;
    d_hand[f[1]] += rec.x1 * g;
    d_hand[f[2]] += rec.x2 * g;
  }

  grad->assign(kParamCount, 0.0);
  auto add = [&](int at, const Vec3& v) {
    (*grad)[at] += v.x();
    (*grad)[at + 1] += v.y();
    (*grad)[at + 2] += v.z();
  };

  // Object pose: v = R (v0 - c) + c + t, n = R n0.
  Mat3 d_rot_obj = Mat3::Zero();
  Vec3 d_trans_obj = Vec3::Zero();
  for (std::size_t i = 0; i < obj_verts.size(); ++i) {
    d_rot_obj +=
        d_object[i] * (object_world_.vertices[i] - object_centroid_).transpose();
    d_trans_obj += d_object[i];
    d_rot_obj += (config_.w_elast * egrad.d_normal[i]) *
                 object_world_.vertex_normals[i].transpose();
  }
  for (int i = 0; i < 3; ++i) {
    const Mat3 dr = rotation_matrix_derivative(vars.object_pose.rotation, i);
    (*grad)[0 + i] += (d_rot_obj.array() * dr.array()).sum();
  }
  add(3, kTranslationScale * d_trans_obj);

  // Wrist pose: v = Rw u + tw.
  Mat3 d_rot_wrist = Mat3::Zero();
  Vec3 d_trans_wrist = Vec3::Zero();
  std::vector<Vec3> d_pre(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    d_rot_wrist += d_hand[i] * pre_wrist[i].transpose();
    d_trans_wrist += d_hand[i];
    d_pre[i] = rw.transpose() * d_hand[i];
  }
  for (int i = 0; i < 3; ++i) {
    const Mat3 dr = rotation_matrix_derivative(vars.wrist_pose.rotation, i);
    (*grad)[6 + i] += (d_rot_wrist.array() * dr.array()).sum();
  }
  add(9, kTranslationScale * d_trans_wrist);

  // Skinning: accumulate per-joint adjoints, then walk the chain in reverse.
  std::vector<Mat3> d_rg(kJointCount, Mat3::Zero());
  std::vector<Vec3> d_pos(kJointCount, Vec3::Zero());
  for (std::size_t i = 0; i < nv; ++i) {
    const Vec3& v = hand_.template_mesh.vertices[i];
    for (const auto& w : hand_.skin_weights[i]) {
      const Vec3 wi = w.weight * d_pre[i];
      d_rg[w.joint] +=
          wi * (v - hand_.tree.rest_positions[w.joint]).transpose();
      d_pos[w.joint] += wi;
    }
  }
  for (int j = kJointCount - 1; j >= 1; --j) {
    const int p = hand_.tree.parent[j];
    const Mat3 local = rotation_to_matrix(vars.joint_rotations[j - 1]);
    const Vec3 offset =
        hand_.tree.rest_positions[j] - hand_.tree.rest_positions[p];
    d_rg[p] += d_rg[j] * local.transpose();
    d_rg[p] += d_pos[j] * offset.transpose();
    d_pos[p] += d_pos[j];
    const Mat3 d_local = fk.rotation[p].transpose() * d_rg[j];
    for (int i = 0; i < 3; ++i) {
      const Mat3 dr = rotation_matrix_derivative(vars.joint_rotations[j - 1], i);
      (*grad)[12 + 3 * (j - 1) + i] += (d_local.array() * dr.array()).sum();
    }
  }

  for (int j = 0; j < kArticulations; ++j) {
    add(12 + 3 * j, config_.w_anat * anat_grad[j]);
  }
  return cost;
}

// ---------------------------------------------------------------------------
// Solver

namespace {

RefineResult run_adam(
    const std::function<CostBreakdown(const std::vector<double>&,
                                      std::vector<double>*)>& eval,
    const std::function<void(const std::vector<double>&)>& pre_iteration,
    const GraspCost& cost, const OptimVariables& initial,
    const GeoConfig& config, RefineMode mode) {
  if (config.iterations <= 0 || config.step_size <= 0) {
    throw OptimizerError("iterations and step size must be positive");
  }
  const bool freeze_object = (mode == RefineMode::kHandAlone);
  std::vector<double> params = GraspCost::pack(initial);
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  double lr = config.step_size;
  int stall = 0;
  RefineResult result;
  result.trace.per_iteration.reserve(config.iterations);

  auto clip = [&](std::vector<double>& g) {
    if (config.max_grad_norm <= 0) return;
    double sq = 0;
    for (double x : g) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm > config.max_grad_norm) {
      const double scale = config.max_grad_norm / norm;
      for (double& x : g) x *= scale;
    }
  };

  std::vector<double> grad;
  if (pre_iteration) pre_iteration(params);
  CostBreakdown current = eval(params, &grad);
  clip(grad);
  result.initial_cost = current;
  double best_cost = current.total;
  double prev_total = current.total;
  std::vector<double> best_params = params;
  CostBreakdown best_breakdown = current;

  for (int it = 1; it <= config.iterations; ++it) {
    // Adam step on the unfrozen block.
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (freeze_object && i < 6) continue;
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      const double mhat = m[i] / (1.0 - std::pow(beta1, it));
      const double vhat = v[i] / (1.0 - std::pow(beta2, it));
      params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    if (pre_iteration) pre_iteration(params);
    current = eval(params, &grad);
    clip(grad);
    result.trace.per_iteration.push_back(current);
    result.trace.step_size.push_back(lr);

    if (current.total < best_cost) {
      best_cost = current.total;
      best_params = params;
      best_breakdown = current;
    }
    if (current.total < prev_total) {
      stall = 0;
    } else if (++stall >= config.plateau_patience) {
      lr = std::max(lr * config.plateau_factor, config.step_floor);
      stall = 0;
    }
    prev_total = current.total;
  }

  OptimVariables refined = GraspCost::unpack(best_params);
  if (freeze_object) refined.object_pose = initial.object_pose;
  result.variables = refined;
  result.final_cost = best_breakdown;
  result.hand_vertices = cost.hand_vertices(refined);
  result.object_vertices = cost.object_vertices(refined);
  return result;
}

}  // namespace

RefineResult refine(const GraspCost& cost, const OptimVariables& initial,
                    const GeoConfig& config, RefineMode mode) {
  auto eval = [&](const std::vector<double>& params,
                  std::vector<double>* grad) {
    return cost.evaluate(GraspCost::unpack(params), grad);
  };
  return run_adam(eval, nullptr, cost, initial, config, mode);
}

RefineResult vanilla_contact_refine(GraspCost& cost,
                                    const OptimVariables& initial,
                                    const GeoConfig& config, RefineMode mode,
                                    const std::vector<int>& tip_anchor_indices,
                                    double gate_mm) {
  if (tip_anchor_indices.empty()) {
    throw OptimizerError("baseline refiner needs tip anchors");
  }
  const SpringSystem original = cost.springs();
  // Correspondences are re-queried each iteration and treated as constant
  // within the step.
  auto pre_iteration = [&](const std::vector<double>& params) {
    const OptimVariables vars = GraspCost::unpack(params);
    const std::vector<Vec3> anchors = cost.anchor_positions(vars);
    const std::vector<Vec3> obj = cost.object_vertices(vars);
    SpringSystem springs;
    springs.t_rpl = original.t_rpl;
    springs.t_vc = original.t_vc;
    springs.length_scale = original.length_scale;
    for (int a : tip_anchor_indices) {
      int best = -1;
      double best_d = gate_mm;
      for (std::size_t j = 0; j < obj.size(); ++j) {
        const double d = (anchors[a] - obj[j]).norm();
        if (d < best_d) {
          best = static_cast<int>(j);
          best_d = d;
        }
      }
      if (best >= 0) {
        springs.attractive.push_back({a, best, 1.0});
      }
    }
    cost.set_springs(std::move(springs));
  };
  auto eval = [&](const std::vector<double>& params,
                  std::vector<double>* grad) {
    return cost.evaluate(GraspCost::unpack(params), grad);
  };
  RefineResult result =
      run_adam(eval, pre_iteration, cost, initial, config, mode);
  cost.set_springs(original);
  return result;
}

}  // namespace cpf
