// Command-line front end for the grasp-refinement pipeline: synthetic scene
// generation, hand-model inspection, contact annotation, energy-based
// refinement and metric evaluation.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "cpf/metrics.hpp"
#include "cpf/scene.hpp"
#include "cpf/serialization.hpp"

namespace fs = std::filesystem;
using namespace cpf;

namespace {

Mesh scaled_mesh(const std::string& path, double unit_scale) {
  Mesh mesh = read_obj(path);
  if (unit_scale != 1.0) {
    for (auto& v : mesh.vertices) v *= unit_scale;
  }
  ensure_vertex_normals(mesh);
  return mesh;
}

struct DerivedHand {
  std::vector<ControlPoint> cps;
  SubregionMap subregions;
  AnchorSet anchors;

  explicit DerivedHand(const SkinnedHand& hand)
      : cps(build_control_points(hand)),
        subregions(assign_subregions(hand, cps)),
        anchors(derive_anchors(hand, cps, subregions)) {}
};

void write_scene(const GraspScene& scene, const fs::path& dir) {
  fs::create_directories(dir);
  save_hand_model(scene.hand, (dir / "hand.json").string(), "hand.obj");
  write_obj(scene.object, (dir / "object.obj").string());
  save_hand_pose(scene.gt_pose, (dir / "gt_pose.json").string());
  save_hand_pose(scene.initial_pose, (dir / "initial_pose.json").string());
  save_annotation(scene.annotation, (dir / "annotation.json").string());
  save_contact_labels(scene.labels, (dir / "labels.json").string());
  save_anchor_set(scene.anchors, (dir / "anchors.json").string());
}

int cmd_synth(std::uint64_t seed, int count, int jobs, const std::string& out,
              double translation_mm, double rotation_deg) {
  std::vector<std::thread> workers;
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::mutex log_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
        const GraspScene scene =
            make_sphere_grasp_scene(s, translation_mm, rotation_deg);
        write_scene(scene, fs::path(out) / ("seed_" + std::to_string(s)));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "synth: " << e.what() << "\n";
        failed.store(true);
      }
    }
  };
  const int n = std::max(1, std::min(jobs, count));
  for (int t = 0; t < n; ++t) workers.emplace_back(worker);
  for (auto& w : workers) w.join();
  return failed.load() ? 2 : 0;
}

int cmd_frames(const std::string& model, const std::string& out) {
  const SkinnedHand hand = load_hand_model(model);
  save_tsb_frames(derive_tsb_frames(hand.tree), out);
  return 0;
}

int cmd_anchors(const std::string& model, const std::string& out,
                const std::string& histogram) {
  const SkinnedHand hand = load_hand_model(model);
  const DerivedHand derived(hand);
  save_anchor_set(derived.anchors, out);
  if (!histogram.empty()) {
    save_subregion_histogram(derived.subregions, histogram);
  }
  return 0;
}

int cmd_annotate(const std::string& model, const std::string& object_path,
                 const std::string& pose_path, double scale,
                 double unit_scale, const std::string& out,
                 const std::string& annotation_out) {
  const SkinnedHand hand = load_hand_model(model);
  const DerivedHand derived(hand);
  const Mesh object = scaled_mesh(object_path, unit_scale);
  const HandPose pose = load_hand_pose(pose_path);
  const Mesh posed = pose_hand(hand, pose);
  const AffinityAnnotation annotation = annotate(
      posed.vertices, object.vertices, hand.template_mesh, derived.anchors,
      scale);
  save_contact_labels(annotation_to_labels(annotation), out);
  if (!annotation_out.empty()) save_annotation(annotation, annotation_out);
  return 0;
}

int cmd_refine(const PipelineConfig& config) {
  const SkinnedHand hand = load_hand_model(config.hand_model_path);
  const DerivedHand derived(hand);
  Mesh object = scaled_mesh(config.object_path, config.unit_scale);
  if (!config.object_pose_path.empty()) {
    object = transform_mesh(object, load_rigid_pose(config.object_pose_path));
  }
  const HandPose initial_pose = load_hand_pose(config.hand_pose_path);
  const ContactLabels labels = load_contact_labels(config.labels_path);

  SpringRecoveryOptions options;
  options.t_vc = config.t_vc;
  options.t_rpl = config.t_rpl;
  options.k_rpl = config.k_rpl;
  options.length_scale = config.length_scale;
  const Mesh initial_hand = pose_hand(hand, initial_pose);
  const SpringSystem springs = recover_springs(
      object.vertices, initial_hand.vertices, derived.anchors, labels,
      options);

  const GraspCost cost(hand, derived.anchors, object, springs, initial_pose,
                       config.geo);
  const RefineResult result =
      refine(cost, OptimVariables::from_hand_pose(initial_pose), config.geo,
             config.mode);

  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  save_spring_system(springs, (dir / "springs.json").string());
  save_hand_pose(result.variables.hand_pose(),
                 (dir / "refined_hand_pose.json").string());
  if (config.mode == RefineMode::kHandObject) {
    save_rigid_pose(result.variables.object_pose,
                    (dir / "refined_object_pose.json").string());
  }
  Mesh refined_hand = hand.template_mesh;
  refined_hand.vertices = result.hand_vertices;
  compute_vertex_normals(refined_hand);
  write_obj(refined_hand, (dir / "refined_hand.obj").string());
  Mesh refined_object = object;
  refined_object.vertices = result.object_vertices;
  compute_vertex_normals(refined_object);
  write_obj(refined_object, (dir / "refined_object.obj").string());
  save_energy_trace(result.trace, (dir / "trace.json").string());
  std::cout << "cost " << result.initial_cost.total << " -> "
            << result.final_cost.total << "\n";
  return 0;
}

int cmd_eval(const std::string& model, const std::string& pred_hand,
             const std::string& pred_object, const std::string& gt_hand,
             const std::string& gt_object, int resolution,
             const std::string& out, const std::string& csv) {
  const SkinnedHand hand = load_hand_model(model);
  const DerivedHand derived(hand);
  const MetricsReport report = evaluate_grasp(
      read_obj(pred_hand), read_obj(pred_object), read_obj(gt_hand),
      read_obj(gt_object), derived.subregions, resolution);
  save_metrics_report(report, out);
  if (!csv.empty()) save_metrics_csv(report, csv);
  std::cout << "hand_mpvpe " << report.hand_mpvpe << " mm, pd "
            << report.penetration_depth << " mm, siv "
            << report.intersection_volume << " cm^3, dd "
            << report.disjointedness << " mm\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contact-energy grasp refinement pipeline"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand(
      "synth", "Generate self-contained synthetic grasp scenes");
  std::uint64_t seed = 0;
  int count = 1, jobs = 1;
  std::string out_dir = "scenes";
  double translation_mm = 15.0, rotation_deg = 10.0;
  synth->add_option("--seed", seed, "First scene seed");
  synth->add_option("--count", count, "Number of consecutive seeds")
      ->check(CLI::PositiveNumber);
  synth->add_option("--jobs", jobs, "Worker threads across scenes")
      ->check(CLI::PositiveNumber);
  synth->add_option("--out", out_dir, "Output directory");
  synth->add_option("--translation", translation_mm,
                    "Wrist perturbation, mm");
  synth->add_option("--rotation", rotation_deg, "Wrist perturbation, deg");

  // frames
  auto* frames =
      app.add_subcommand("frames", "Derive per-joint twist/splay/bend frames");
  std::string model_path, out_file;
  frames->add_option("--model", model_path, "Hand model bundle")->required();
  frames->add_option("--out", out_file, "Frame table output")->required();

  // anchors
  auto* anchors =
      app.add_subcommand("anchors", "Derive the palm-side anchor manifest");
  std::string anchors_model, anchors_out, histogram_out;
  anchors->add_option("--model", anchors_model, "Hand model bundle")
      ->required();
  anchors->add_option("--out", anchors_out, "Anchor manifest output")
      ->required();
  anchors->add_option("--histogram", histogram_out,
                      "Optional subregion vertex-count table");

  // annotate
  auto* annotate_cmd = app.add_subcommand(
      "annotate", "Annotate object vertices with contact labels");
  std::string ann_model, ann_object, ann_pose, ann_out, ann_annotation;
  double ann_scale = 20.0, ann_unit_scale = 1.0;
  annotate_cmd->add_option("--model", ann_model, "Hand model bundle")
      ->required();
  annotate_cmd->add_option("--object", ann_object, "Object mesh (OBJ)")
      ->required();
  annotate_cmd->add_option("--hand-pose", ann_pose, "Ground-truth hand pose")
      ->required();
  annotate_cmd->add_option("--scale", ann_scale, "Annotation distance scale, mm");
  annotate_cmd->add_option("--unit-scale", ann_unit_scale,
                           "Multiplier applied to the object geometry");
  annotate_cmd->add_option("--out", ann_out, "Contact label output")
      ->required();
  annotate_cmd->add_option("--annotation", ann_annotation,
                           "Optional full annotation record output");

  // refine
  auto* refine_cmd = app.add_subcommand(
      "refine", "Refine a hand pose by minimizing the contact energy");
  std::string config_path, mode_override, refine_out;
  double k_rpl_override = -1.0;
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
  refine_cmd->add_option("--config", config_path, "Pipeline configuration")
      ->required();
  refine_cmd->add_option("--mode", mode_override,
                         "Override: hand_alone | hand_object");
  refine_cmd->add_option("--k-rpl", k_rpl_override,
                         "Override repulsion magnitude");
  refine_cmd
      ->add_option_function<std::uint64_t>(
          "--seed",
          [&](std::uint64_t v) {
            seed_override = v;
            has_seed_override = true;
          },
          "Override solver seed")
      ->expected(1);
  refine_cmd->add_option("--out", refine_out, "Override output directory");

  // eval
  auto* eval_cmd =
      app.add_subcommand("eval", "Score a predicted grasp against the truth");
  std::string eval_model, pred_hand, pred_object, gt_hand, gt_object;
  std::string eval_out = "metrics.json", eval_csv;
  int resolution = 80;
  eval_cmd->add_option("--model", eval_model, "Hand model bundle")->required();
  eval_cmd->add_option("--pred-hand", pred_hand, "Predicted hand mesh")
      ->required();
  eval_cmd->add_option("--pred-object", pred_object, "Predicted object mesh")
      ->required();
  eval_cmd->add_option("--gt-hand", gt_hand, "Ground-truth hand mesh")
      ->required();
  eval_cmd->add_option("--gt-object", gt_object, "Ground-truth object mesh")
      ->required();
  eval_cmd->add_option("--resolution", resolution,
                       "Intersection-volume voxel resolution");
  eval_cmd->add_option("--out", eval_out, "Metrics report output");
  eval_cmd->add_option("--csv", eval_csv, "Optional CSV table output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(seed, count, jobs, out_dir, translation_mm,
                       rotation_deg);
    }
    if (frames->parsed()) return cmd_frames(model_path, out_file);
    if (anchors->parsed()) {
      return cmd_anchors(anchors_model, anchors_out, histogram_out);
    }
    if (annotate_cmd->parsed()) {
      return cmd_annotate(ann_model, ann_object, ann_pose, ann_scale,
                          ann_unit_scale, ann_out, ann_annotation);
    }
    if (refine_cmd->parsed()) {
      PipelineConfig config = PipelineConfig::load(config_path);
      if (!mode_override.empty()) {
        if (mode_override == "hand_alone") {
          config.mode = RefineMode::kHandAlone;
        } else if (mode_override == "hand_object") {
          config.mode = RefineMode::kHandObject;
        } else {
          std::cerr << "refine: unknown mode '" << mode_override << "'\n";
          return 1;
        }
      }
      if (k_rpl_override > 0) config.k_rpl = k_rpl_override;
      if (has_seed_override) config.geo.seed = seed_override;
      if (!refine_out.empty()) config.output_dir = refine_out;
      return cmd_refine(config);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_model, pred_hand, pred_object, gt_hand, gt_object,
                      resolution, eval_out, eval_csv);
    }
  } catch (const std::exception& e) {
    std::cerr << argv[0] << ": " << e.what() << "\n";
    return 2;
  }
  return 1;
}
