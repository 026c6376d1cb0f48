#include "cpf/contact_labels.hpp"

#include <algorithm>
#include <cmath>

namespace cpf {

namespace {
constexpr double kProbEps = 1e-7;

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }
}  // namespace

AffinityAnnotation annotate(const std::vector<Vec3>& gt_hand_vertices,
                            const std::vector<Vec3>& gt_object_vertices,
                            const Mesh& hand_topology,
                            const AnchorSet& anchor_set, double s) {
  if (s <= 0) throw LabelError("annotation scale must be positive");
  const std::vector<Vec3> anchors =
      interpolate_anchors(anchor_set, hand_topology, gt_hand_vertices);
  AffinityAnnotation out;
  out.scale = s;
  out.records.resize(gt_object_vertices.size());
  for (std::size_t j = 0; j < gt_object_vertices.size(); ++j) {
    AffinityRecord& rec = out.records[j];
    int best = -1;
    double best_d = 0;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const double d = (anchors[i] - gt_object_vertices[j]).norm();
      if (best < 0 || d < best_d) {
        best = static_cast<int>(i);
        best_d = d;
      }
    }
    if (best < 0) throw LabelError("empty anchor set");
    rec.anchor_index = best;
    rec.distance = best_d;
    if (best_d < s) {
      rec.k = 0.5 * std::cos(M_PI / s * best_d) + 0.5;
    } else {
      rec.k = 0.0;
    }
    rec.in_contact = rec.k > 0.0;
    rec.region = rec.in_contact ? anchor_set.anchors[best].region : -1;
  }
  return out;
}

ContactLabels annotation_to_labels(const AffinityAnnotation& annotation) {
  ContactLabels labels;
  const std::size_t n = annotation.records.size();
  labels.vc.resize(n);
  labels.ae.resize(n);
  labels.cr.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& rec = annotation.records[j];
    labels.vc[j] = rec.in_contact ? 1.0 : 0.0;
    labels.ae[j] = rec.k;
    labels.cr[j].fill(0.0);
    // Region one-hot; untouched vertices keep a uniform placeholder so the
    // rows stay valid distributions.
    if (rec.in_contact) {
      labels.cr[j][rec.region] = 1.0;
    } else {
      labels.cr[j].fill(1.0 / kRegionCount);
    }
  }
  return labels;
}

double vc_focal_loss(const std::vector<double>& pred_probs,
                     const std::vector<bool>& gt_contact, const LossMask& mask,
                     const FocalParams& params) {
  if (pred_probs.size() != gt_contact.size()) {
    throw LabelError("prediction / target size mismatch");
  }
  double alpha_pos = 1.0, alpha_neg = 1.0;
  if (params.inverse_class_frequency) {
    std::size_t masked = 0, positives = 0;
    for (std::size_t j = 0; j < gt_contact.size(); ++j) {
      if (!mask.image(j)) continue;
      ++masked;
      if (gt_contact[j]) ++positives;
    }
    if (masked > 0) {
      const double p = static_cast<double>(positives) / masked;
      alpha_pos = std::clamp(p > 0 ? 1.0 / p : 1e3, 1e-3, 1e3);
      alpha_neg = std::clamp(p < 1 ? 1.0 / (1.0 - p) : 1e3, 1e-3, 1e3);
    }
  }
  double loss = 0;
  for (std::size_t j = 0; j < pred_probs.size(); ++j) {
    if (!mask.image(j)) continue;
    const double p = clamp_prob(pred_probs[j]);
    const double f = gt_contact[j] ? p : 1.0 - p;
    const double alpha = gt_contact[j] ? alpha_pos : alpha_neg;
    loss += -alpha * std::pow(1.0 - f, params.gamma) * std::log(f);
  }
  return loss;
}

double cr_focal_loss(
    const std::vector<std::array<double, kRegionCount>>& pred_region_probs,
    const std::vector<int>& gt_region, const LossMask& mask, double gamma) {
  if (pred_region_probs.size() != gt_region.size()) {
    throw LabelError("prediction / target size mismatch");
  }
  double loss = 0;
  for (std::size_t j = 0; j < pred_region_probs.size(); ++j) {
    const bool vc = j < mask.vc_positive.size() ? mask.vc_positive[j] : false;
    if (!vc || !mask.image(j)) continue;
    double sum = 0;
    for (double p : pred_region_probs[j]) sum += p;
    if (std::abs(sum - 1.0) > 1e-6) {
      throw LabelError("region prediction row is not a distribution");
    }
    if (gt_region[j] < 0 || gt_region[j] >= kRegionCount) {
      throw LabelError("ground-truth region out of range");
    }
    const double m = clamp_prob(pred_region_probs[j][gt_region[j]]);
    loss += -std::pow(1.0 - m, gamma) * std::log(m);
  }
  return loss;
}

double ae_bce_loss(const std::vector<double>& pred_k,
                   const std::vector<double>& gt_k, const LossMask& mask) {
  if (pred_k.size() != gt_k.size()) {
    throw LabelError("prediction / target size mismatch");
  }
  double loss = 0;
  for (std::size_t j = 0; j < pred_k.size(); ++j) {
    const bool vc = j < mask.vc_positive.size() ? mask.vc_positive[j] : false;
    if (!vc || !mask.image(j)) continue;
    const double p = clamp_prob(pred_k[j]);
    const double q = std::clamp(gt_k[j], 0.0, 1.0);
    loss += -(q * std::log(p) + (1.0 - q) * std::log(1.0 - p));
  }
  return loss;
}

}  // namespace cpf
