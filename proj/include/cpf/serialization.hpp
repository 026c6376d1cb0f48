#pragma once

#include <string>

#include "cpf/contact_labels.hpp"
#include "cpf/metrics.hpp"
#include "cpf/optimizer.hpp"

namespace cpf {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pose records: one schema for ground-truth, initial and refined poses.
void save_rigid_pose(const RigidPose& pose, const std::string& path);
RigidPose load_rigid_pose(const std::string& path);
void save_hand_pose(const HandPose& pose, const std::string& path);
HandPose load_hand_pose(const std::string& path);

// Hand model bundle (template OBJ referenced by relative path).
// Declared in hand_model.hpp: load_hand_model / save_hand_model.

void save_anchor_set(const AnchorSet& set, const std::string& path);
AnchorSet load_anchor_set(const std::string& path);

void save_contact_labels(const ContactLabels& labels, const std::string& path);
ContactLabels load_contact_labels(const std::string& path);

void save_annotation(const AffinityAnnotation& annotation,
                     const std::string& path);
AffinityAnnotation load_annotation(const std::string& path);

void save_spring_system(const SpringSystem& system, const std::string& path);
SpringSystem load_spring_system(const std::string& path);

void save_energy_trace(const EnergyTrace& trace, const std::string& path);

void save_metrics_report(const MetricsReport& report, const std::string& path);
void save_metrics_csv(const MetricsReport& report, const std::string& path);

void save_tsb_frames(const std::vector<TsbFrame>& frames,
                     const std::string& path);

void save_subregion_histogram(const SubregionMap& map, const std::string& path);

/// File-driven pipeline configuration with the published defaults.
struct PipelineConfig {
  std::string hand_model_path;
  std::string object_path;
  std::string hand_pose_path;
  std::string object_pose_path;
  std::string labels_path;
  std::string output_dir = ".";
  double t_vc = 0.8;
  double t_rpl = 20.0;
  double annotation_scale = 20.0;  // s
  double length_scale = 1.0;       // lambda, mm
  double k_rpl = 1e-3;
  double unit_scale = 1.0;  // multiply input geometry (meters -> mm: 1000)
  GeoConfig geo;
  RefineMode mode = RefineMode::kHandAlone;

  static PipelineConfig load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace cpf
