#pragma once

#include <cstdint>
#include <functional>

#include "cpf/contact_labels.hpp"
#include "cpf/springs.hpp"

namespace cpf {

struct OptimizerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything the solver may adjust. The object pose is a delta on top of
/// the scene's initial object placement, rotating about the object centroid.
struct OptimVariables {
  RigidPose object_pose;  // delta, identity at start
  RigidPose wrist_pose;
  std::vector<Rotation> joint_rotations;  // 15

  static OptimVariables from_hand_pose(const HandPose& pose);
  HandPose hand_pose() const;
};

enum class RefineMode { kHandAlone, kHandObject };

struct GeoConfig {
  int iterations = 400;
  double step_size = 1e-2;
  int plateau_patience = 20;
  double plateau_factor = 0.5;
  double step_floor = 1e-5;
  // The repulsive exponential produces near-vertical gradients on deep
  // penetration; clipping keeps those spikes from saturating the adaptive
  // moments. <= 0 disables.
  double max_grad_norm = 1e3;
  double w_elast = 1.0;
  double w_anat = 1.0;
  double w_offset = 1.0;
  double w_offset_hand = 1.0;   // per-part weights inside the offset term
  double w_offset_object = 1.0;
  std::uint64_t seed = 0;
};

struct CostBreakdown {
  double elastic = 0;
  double anatomical = 0;
  double offset = 0;
  double total = 0;
};

struct EnergyTrace {
  std::vector<CostBreakdown> per_iteration;
  std::vector<double> step_size;
};

// Eq. of the axial penalty: twist components for every joint, splay for
// non-knuckles, bend angle beyond pi/2. Zero rotations contribute nothing.
double anatomical_cost(const std::vector<Rotation>& joint_rotations,
                       const std::vector<TsbFrame>& frames,
                       const std::vector<bool>& knuckle_flags,
                       std::vector<Vec3>* grad = nullptr);

// Weighted mean squared vertex displacement from the initial estimate.
double offset_cost(const std::vector<Vec3>& current,
                   const std::vector<Vec3>& initial, double weight,
                   std::vector<Vec3>* grad = nullptr);

/// Differentiable total cost of a grasp configuration: elastic spring
/// energy + anatomical penalty + offset to the initial estimate. Gradients
/// are reverse-accumulated through skinning, anchor interpolation and the
/// object rigid motion.
class GraspCost {
 public:
  static constexpr int kParamCount = 12 + 3 * kArticulations;  // 57
  // Translation variables are scaled so one solver step moves the pose by
  // ~0.5 mm, comparable to what a step of the rotation variables does to a
  // fingertip. Geometry everywhere else stays in millimeters.
  static constexpr double kTranslationScale = 50.0;

  GraspCost(const SkinnedHand& hand, const AnchorSet& anchors,
            const Mesh& object_world, SpringSystem springs,
            const HandPose& initial_hand_pose, const GeoConfig& config);

  CostBreakdown evaluate(const OptimVariables& vars,
                         std::vector<double>* grad) const;

  // Replaces the attractive springs (used by the baseline refiner).
  void set_springs(SpringSystem springs) { springs_ = std::move(springs); }
  const SpringSystem& springs() const { return springs_; }

  std::vector<Vec3> hand_vertices(const OptimVariables& vars) const;
  std::vector<Vec3> object_vertices(const OptimVariables& vars) const;
  std::vector<Vec3> object_normals(const OptimVariables& vars) const;
  std::vector<Vec3> anchor_positions(const OptimVariables& vars) const;

  const std::vector<Vec3>& initial_hand_vertices() const {
    return initial_hand_vertices_;
  }

  static std::vector<double> pack(const OptimVariables& vars);
  static OptimVariables unpack(const std::vector<double>& params);

 private:
  const SkinnedHand& hand_;
  const AnchorSet& anchors_;
  Mesh object_world_;
  SpringSystem springs_;
  GeoConfig config_;
  std::vector<TsbFrame> frames_;
  Vec3 object_centroid_ = Vec3::Zero();
  std::vector<Vec3> initial_hand_vertices_;
};

struct RefineResult {
  OptimVariables variables;  // best-cost iterate
  std::vector<Vec3> hand_vertices;
  std::vector<Vec3> object_vertices;
  CostBreakdown initial_cost;
  CostBreakdown final_cost;
  EnergyTrace trace;
};

// Adaptive-moment gradient descent over the unfrozen variables; the step
// size halves after `plateau_patience` iterations without improvement and
// the lowest-cost iterate is returned.
RefineResult refine(const GraspCost& cost, const OptimVariables& initial,
                    const GeoConfig& config, RefineMode mode);

// Distance-gated baseline: tip anchors chase their nearest object vertex
// (within 20 mm, re-queried every iteration); no elastic field.
RefineResult vanilla_contact_refine(GraspCost& cost,
                                    const OptimVariables& initial,
                                    const GeoConfig& config, RefineMode mode,
                                    const std::vector<int>& tip_anchor_indices,
                                    double gate_mm = 20.0);

}  // namespace cpf
