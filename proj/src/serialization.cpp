#include "cpf/serialization.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace cpf {
namespace {

using Json = nlohmann::ordered_json;

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  return j;
}

void write_json(const Json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

Json vec3_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec3(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw IoError(what + ": expected a 3-element array");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

void expect_schema(const Json& j, const std::string& schema,
                   const std::string& path) {
  if (!j.contains("schema") || j["schema"] != schema) {
    throw IoError(path + ": expected schema '" + schema + "'");
  }
}

Json rigid_pose_json(const RigidPose& pose) {
  return Json{{"rotation", vec3_json(pose.rotation.axis_angle)},
              {"translation", vec3_json(pose.translation)}};
}

RigidPose json_rigid_pose(const Json& j, const std::string& what) {
  if (!j.contains("rotation") || !j.contains("translation")) {
    throw IoError(what + ": pose needs 'rotation' and 'translation'");
  }
  RigidPose pose;
  pose.rotation.axis_angle = json_vec3(j["rotation"], what + ".rotation");
  pose.translation = json_vec3(j["translation"], what + ".translation");
  return pose;
}

}  // namespace

void save_rigid_pose(const RigidPose& pose, const std::string& path) {
  Json j{{"schema", "cpf.rigid_pose.v1"}};
  j["pose"] = rigid_pose_json(pose);
  write_json(j, path);
}

RigidPose load_rigid_pose(const std::string& path) {
  const Json j = read_json(path);
  expect_schema(j, "cpf.rigid_pose.v1", path);
  return json_rigid_pose(j.at("pose"), path);
}

void save_hand_pose(const HandPose& pose, const std::string& path) {
  pose.validate();
  Json j{{"schema", "cpf.hand_pose.v1"}};
  j["wrist"] = rigid_pose_json(pose.wrist);
  Json joints = Json::array();
  for (const auto& r : pose.joint_rotations) joints.push_back(vec3_json(r.axis_angle));
  j["joint_rotations"] = std::move(joints);
  write_json(j, path);
}

HandPose load_hand_pose(const std::string& path) {
  const Json j = read_json(path);
  expect_schema(j, "cpf.hand_pose.v1", path);
  HandPose pose;
  pose.wrist = json_rigid_pose(j.at("wrist"), path + ".wrist");
  const Json& joints = j.at("joint_rotations");
  if (!joints.is_array() || joints.size() != kArticulations) {
    throw IoError(path + ": expected " + std::to_string(kArticulations) +
                  " joint rotations");
  }
  for (const auto& r : joints) {
    pose.joint_rotations.push_back({json_vec3(r, path + ".joint_rotations")});
  }
  pose.validate();
  return pose;
}

void save_hand_model(const SkinnedHand& hand, const std::string& path,
                     const std::string& obj_path) {
  hand.validate();
  write_obj(hand.template_mesh,
            (std::filesystem::path(path).parent_path() / obj_path).string());
  Json j{{"schema", "cpf.hand_model.v1"}};
  j["template_obj"] = obj_path;  // relative to the JSON file
  Json tree;
  tree["parent"] = hand.tree.parent;
  Json rest = Json::array();
  for (const auto& p : hand.tree.rest_positions) rest.push_back(vec3_json(p));
  tree["rest_positions"] = std::move(rest);
  Json knuckle = Json::array();
  for (bool k : hand.tree.knuckle) knuckle.push_back(k);
  tree["knuckle"] = std::move(knuckle);
  Json tips = Json::object();
  for (const auto& [joint, tip] : hand.tree.tip_positions) {
    tips[std::to_string(joint)] = vec3_json(tip);
  }
  tree["tip_positions"] = std::move(tips);
  j["tree"] = std::move(tree);
  Json weights = Json::array();
  for (const auto& per_vertex : hand.skin_weights) {
    Json entry = Json::array();
    for (const auto& sw : per_vertex) {
      entry.push_back(Json::array({sw.joint, sw.weight}));
    }
    weights.push_back(std::move(entry));
  }
  j["skin_weights"] = std::move(weights);
  write_json(j, path);
}

SkinnedHand load_hand_model(const std::string& path) {
  const Json j = read_json(path);
  expect_schema(j, "cpf.hand_model.v1", path);
  SkinnedHand hand;
  const std::string obj_rel = j.at("template_obj").get<std::string>();
  const auto obj_path = std::filesystem::path(path).parent_path() / obj_rel;
  try {
    hand.template_mesh = read_obj(obj_path.string());
  } catch (const MeshError& e) {
    throw IoError(path + ": template mesh: " + e.what());
  }
  const Json& tree = j.at("tree");
  hand.tree.parent = tree.at("parent").get<std::vector<int>>();
  for (const auto& p : tree.at("rest_positions")) {
    hand.tree.rest_positions.push_back(json_vec3(p, path + ".rest_positions"));
  }
  for (const auto& k : tree.at("knuckle")) {
    hand.tree.knuckle.push_back(k.get<bool>());
  }
  for (const auto& [key, tip] : tree.at("tip_positions").items()) {
    hand.tree.tip_positions[std::stoi(key)] =
        json_vec3(tip, path + ".tip_positions");
  }
  for (const auto& entry : j.at("skin_weights")) {
    std::vector<SkinWeight> per_vertex;
    for (const auto& sw : entry) {
      if (!sw.is_array() || sw.size() != 2) {
        throw IoError(path + ": skin weight entries are [joint, weight] pairs");
      }
      per_vertex.push_back({sw[0].get<int>(), sw[1].get<double>()});
    }
    hand.skin_weights.push_back(std::move(per_vertex));
  }
  try {
    hand.validate();
  } catch (const std::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  return hand;
}

void save_anchor_set(const AnchorSet& set, const std::string& path) {
  Json j{{"schema", "cpf.anchors.v1"}};
  Json anchors = Json::array();
  for (const auto& a : set.anchors) {
    anchors.push_back(Json{{"face", a.face},
                           {"x1", a.x1},
                           {"x2", a.x2},
                           {"region", a.region}});
  }
  j["anchors"] = std::move(anchors);
  write_json(j, path);
}

AnchorSet load_anchor_set(const std::string& path) {
  const Json j = read_json(path);
  expect_schema(j, "cpf.anchors.v1", path);
  AnchorSet set;
  for (const auto& a : j.at("anchors")) {
    AnchorRecord rec;
    rec.face = a.at("face").get<int>();
    rec.x1 = a.at("x1").get<double>();
    rec.x2 = a.at("x2").get<double>();
    rec.region = a.at("region").get<int>();
    if (rec.face < 0 || rec.region < 0 || rec.region >= kRegionCount) {
      throw IoError(path + ": anchor record out of range");
    }
    set.anchors.push_back(rec);
  }
  return set;
}

void save_contact_labels(const ContactLabels& labels, const std::string& path) {
  labels.validate();
  Json j{{"schema", "cpf.contact_labels.v1"}};
  j["vc"] = labels.vc;
  Json cr = Json::array();
  for (const auto& row : labels.cr) {
    cr.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["cr"] = std::move(cr);
  j["ae"] = labels.ae;
  write_json(j, path);
}

ContactLabels load_contact_labels(const std::string& path) {
  const Json j = read_json(path);
  expect_schema(j, "cpf.contact_labels.v1", path);
  ContactLabels labels;
  labels.vc = j.at("vc").get<std::vector<double>>();
  for (const auto& row : j.at("cr")) {
    if (!row.is_array() || row.size() != kRegionCount) {
      throw IoError(path + ": cr rows need " + std::to_string(kRegionCount) +
                    " entries");
    }
    std::array<double, kRegionCount> arr;
    for (int r = 0; r < kRegionCount; ++r) arr[r] = row[r].get<double>();
    labels.cr.push_back(arr);
  }
  labels.ae = j.at("ae").get<std::vector<double>>();
  try {
    labels.validate();
  } catch (const std::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  return labels;
}

void save_annotation(const AffinityAnnotation& annotation,
                     const std::string& path) {
  Json j{{"schema", "cpf.affinity.v1"}};
  j["scale"] = annotation.scale;
  Json records = Json::array();
  for (const auto& r : annotation.records) {
    records.push_back(Json{{"in_contact", r.in_contact},
                           {"region", r.region},
                           {"anchor_index", r.anchor_index},
                           {"k", r.k},
                           {"distance", r.distance}});
  }
  j["records"] = std::move(records);
  write_json(j, path);
}

AffinityAnnotation load_annotation(const std::string& path) {
  const Json j = read_json(path);
  expect_schema(j, "cpf.affinity.v1", path);
  AffinityAnnotation annotation;
  annotation.scale = j.at("scale").get<double>();
  for (const auto& r : j.at("records")) {
    AffinityRecord rec;
    rec.in_contact = r.at("in_contact").get<bool>();
    rec.region = r.at("region").get<int>();
    rec.anchor_index = r.at("anchor_index").get<int>();
    rec.k = r.at("k").get<double>();
    rec.distance = r.at("distance").get<double>();
    annotation.records.push_back(rec);
  }
  return annotation;
}

void save_spring_system(const SpringSystem& system, const std::string& path) {
  Json j{{"schema", "cpf.springs.v1"}};
  j["t_rpl"] = system.t_rpl;
  j["t_vc"] = system.t_vc;
  j["length_scale"] = system.length_scale;
  Json attractive = Json::array();
  for (const auto& s : system.attractive) {
    attractive.push_back(
        Json::array({s.anchor_index, s.object_vertex_index, s.k}));
  }
  j["attractive"] = std::move(attractive);
  Json repulsive = Json::array();
  for (const auto& s : system.repulsive) {
    repulsive.push_back(
        Json::array({s.hand_vertex_index, s.object_vertex_index, s.k}));
  }
  j["repulsive"] = std::move(repulsive);
  write_json(j, path);
}

SpringSystem load_spring_system(const std::string& path) {
  const Json j = read_json(path);
  expect_schema(j, "cpf.springs.v1", path);
  SpringSystem system;
  system.t_rpl = j.at("t_rpl").get<double>();
  system.t_vc = j.at("t_vc").get<double>();
  system.length_scale = j.at("length_scale").get<double>();
  for (const auto& s : j.at("attractive")) {
    if (!s.is_array() || s.size() != 3) {
      throw IoError(path + ": attractive springs are [anchor, vertex, k]");
    }
    system.attractive.push_back(
        {s[0].get<int>(), s[1].get<int>(), s[2].get<double>()});
  }
  for (const auto& s : j.at("repulsive")) {
    if (!s.is_array() || s.size() != 3) {
      throw IoError(path + ": repulsive springs are [hand, vertex, k]");
    }
    system.repulsive.push_back(
        {s[0].get<int>(), s[1].get<int>(), s[2].get<double>()});
  }
  return system;
}

void save_energy_trace(const EnergyTrace& trace, const std::string& path) {
  Json j{{"schema", "cpf.energy_trace.v1"}};
  Json rows = Json::array();
  for (std::size_t i = 0; i < trace.per_iteration.size(); ++i) {
    const auto& c = trace.per_iteration[i];
    rows.push_back(Json{{"elastic", c.elastic},
                        {"anatomical", c.anatomical},
                        {"offset", c.offset},
                        {"total", c.total},
                        {"step_size", trace.step_size[i]}});
  }
  j["iterations"] = std::move(rows);
  write_json(j, path);
}

void save_metrics_report(const MetricsReport& report, const std::string& path) {
  Json j{{"schema", "cpf.metrics.v1"}};
  j["hand_mpvpe_mm"] = report.hand_mpvpe;
  j["object_mpvpe_mm"] = report.object_mpvpe;
  j["penetration_depth_mm"] = report.penetration_depth;
  j["intersection_volume_cm3"] = report.intersection_volume;
  j["disjointedness_mm"] = report.disjointedness;
  if (report.simulation_displacement) {
    j["simulation_displacement_mm"] = *report.simulation_displacement;
  } else {
    j["simulation_displacement_mm"] = nullptr;
  }
  write_json(j, path);
}

void save_metrics_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "hand_mpvpe_mm,object_mpvpe_mm,penetration_depth_mm,"
         "intersection_volume_cm3,disjointedness_mm,simulation_displacement_mm\n";
  char line[512];
  std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g,%.9g,%.9g,",
                report.hand_mpvpe, report.object_mpvpe,
                report.penetration_depth, report.intersection_volume,
                report.disjointedness);
  out << line;
  if (report.simulation_displacement) {
    std::snprintf(line, sizeof line, "%.9g", *report.simulation_displacement);
    out << line;
  }
  out << "\n";
  if (!out) throw IoError("write failed for " + path);
}

void save_tsb_frames(const std::vector<TsbFrame>& frames,
                     const std::string& path) {
  Json j{{"schema", "cpf.tsb_frames.v1"}};
  Json rows = Json::array();
  for (const auto& f : frames) {
    rows.push_back(Json{{"twist", vec3_json(f.twist)},
                        {"splay", vec3_json(f.splay)},
                        {"bend", vec3_json(f.bend)}});
  }
  j["frames"] = std::move(rows);
  write_json(j, path);
}

void save_subregion_histogram(const SubregionMap& map, const std::string& path) {
  Json j{{"schema", "cpf.subregion_histogram.v1"}};
  const std::vector<int> counts = map.histogram();
  Json rows = Json::array();
  for (std::size_t r = 0; r < counts.size(); ++r) {
    rows.push_back(Json{{"region", static_cast<int>(r)},
                        {"name", map.region_names[r]},
                        {"vertices", counts[r]}});
  }
  j["regions"] = std::move(rows);
  write_json(j, path);
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  const Json j = read_json(path);
  expect_schema(j, "cpf.config.v1", path);
  PipelineConfig c;
  auto opt_str = [&](const char* key, std::string& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::string>();
  };
  auto opt_num = [&](const Json& src, const char* key, auto& dst) {
    if (src.contains(key)) dst = src.at(key).get<std::decay_t<decltype(dst)>>();
  };
  opt_str("hand_model", c.hand_model_path);
  opt_str("object", c.object_path);
  opt_str("hand_pose", c.hand_pose_path);
  opt_str("object_pose", c.object_pose_path);
  opt_str("labels", c.labels_path);
  opt_str("output_dir", c.output_dir);
  opt_num(j, "t_vc", c.t_vc);
  opt_num(j, "t_rpl", c.t_rpl);
  opt_num(j, "annotation_scale", c.annotation_scale);
  opt_num(j, "length_scale", c.length_scale);
  opt_num(j, "k_rpl", c.k_rpl);
  opt_num(j, "unit_scale", c.unit_scale);
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "hand_alone") {
      c.mode = RefineMode::kHandAlone;
    } else if (mode == "hand_object") {
      c.mode = RefineMode::kHandObject;
    } else {
      throw IoError(path + ": mode must be 'hand_alone' or 'hand_object'");
    }
  }
  if (j.contains("geo")) {
    const Json& g = j.at("geo");
    opt_num(g, "iterations", c.geo.iterations);
    opt_num(g, "step_size", c.geo.step_size);
    opt_num(g, "plateau_patience", c.geo.plateau_patience);
    opt_num(g, "plateau_factor", c.geo.plateau_factor);
    opt_num(g, "step_floor", c.geo.step_floor);
    opt_num(g, "max_grad_norm", c.geo.max_grad_norm);
    opt_num(g, "w_elast", c.geo.w_elast);
    opt_num(g, "w_anat", c.geo.w_anat);
    opt_num(g, "w_offset", c.geo.w_offset);
    opt_num(g, "w_offset_hand", c.geo.w_offset_hand);
    opt_num(g, "w_offset_object", c.geo.w_offset_object);
    opt_num(g, "seed", c.geo.seed);
  }
  return c;
}

void PipelineConfig::save(const std::string& path) const {
  Json j{{"schema", "cpf.config.v1"}};
  j["hand_model"] = hand_model_path;
  j["object"] = object_path;
  j["hand_pose"] = hand_pose_path;
  j["object_pose"] = object_pose_path;
  j["labels"] = labels_path;
  j["output_dir"] = output_dir;
  j["t_vc"] = t_vc;
  j["t_rpl"] = t_rpl;
  j["annotation_scale"] = annotation_scale;
  j["length_scale"] = length_scale;
  j["k_rpl"] = k_rpl;
  j["unit_scale"] = unit_scale;
  j["mode"] = mode == RefineMode::kHandAlone ? "hand_alone" : "hand_object";
  j["geo"] = Json{{"iterations", geo.iterations},
                  {"step_size", geo.step_size},
                  {"plateau_patience", geo.plateau_patience},
                  {"plateau_factor", geo.plateau_factor},
                  {"step_floor", geo.step_floor},
                  {"max_grad_norm", geo.max_grad_norm},
                  {"w_elast", geo.w_elast},
                  {"w_anat", geo.w_anat},
                  {"w_offset", geo.w_offset},
                  {"w_offset_hand", geo.w_offset_hand},
                  {"w_offset_object", geo.w_offset_object},
                  {"seed", geo.seed}};
  write_json(j, path);
}

}  // namespace cpf
