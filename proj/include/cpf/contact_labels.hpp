#pragma once

#include "cpf/springs.hpp"

namespace cpf {

struct LabelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ground-truth hand-object affinity per object vertex.
struct AffinityRecord {
  bool in_contact = false;
  int region = -1;        // defined only when in contact
  int anchor_index = -1;  // nearest anchor
  double k = 0;           // elasticity in [0, 1]
  double distance = 0;    // anchor-vertex distance, mm
};

struct AffinityAnnotation {
  std::vector<AffinityRecord> records;
  double scale = 20.0;  // mm
};

// Pairs each object vertex with its nearest anchor (lowest index on ties)
// and assigns k = 0.5 cos(pi/s * d) + 0.5 for d < s, else 0.
AffinityAnnotation annotate(const std::vector<Vec3>& gt_hand_vertices,
                            const std::vector<Vec3>& gt_object_vertices,
                            const Mesh& hand_topology,
                            const AnchorSet& anchor_set, double s = 20.0);

// Hard labels from an annotation: vc 0/1, one-hot regions, ae = k.
ContactLabels annotation_to_labels(const AffinityAnnotation& annotation);

struct LossMask {
  std::vector<bool> in_image;    // empty means all true
  std::vector<bool> vc_positive;

  bool image(std::size_t j) const { return in_image.empty() || in_image[j]; }
};

struct FocalParams {
  double gamma = 2.0;
  bool inverse_class_frequency = true;  // otherwise alpha = 1
};

// Binary focal loss over contact probabilities. Class weights are inverse
// class frequencies over the masked set, clamped to [1e-3, 1e3].
double vc_focal_loss(const std::vector<double>& pred_probs,
                     const std::vector<bool>& gt_contact, const LossMask& mask,
                     const FocalParams& params = {});

// Multi-class focal loss over region distributions (no alpha weighting).
double cr_focal_loss(
    const std::vector<std::array<double, kRegionCount>>& pred_region_probs,
    const std::vector<int>& gt_region, const LossMask& mask,
    double gamma = 2.0);

// Binary cross-entropy between predicted and annotated elasticities.
double ae_bce_loss(const std::vector<double>& pred_k,
                   const std::vector<double>& gt_k, const LossMask& mask);

}  // namespace cpf
