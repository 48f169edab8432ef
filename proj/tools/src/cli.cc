#include "cli.h"

#include <CLI11.hpp>
#include <pthread.h>
#include <signal.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "pointscene/config.h"
#include "pointscene/error.h"
#include "pointscene/io.h"
#include "pointscene/parallel.h"
#include "pointscene/ply.h"
#include "pointscene/render_pipeline.h"
#include "pointscene/service.h"
#include "pointscene/synthetic.h"
#include "pointscene/workspace.h"

namespace pointscene::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* CategoryName(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kValidation: return "validation";
    case ErrorCategory::kIo: return "io";
    case ErrorCategory::kBackend: return "backend";
  }
  return "io";
}

int ExitCode(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kValidation: return 1;
    case ErrorCategory::kIo: return 2;
    case ErrorCategory::kBackend: return 3;
  }
  return 2;
}

// Config file first, then whichever flags were given on the command line.
struct ConfigFlags {
  std::string config;
  std::optional<int> threads;
  std::optional<double> tau;
  std::optional<int> min_violations;
  std::optional<int> min_observations;
  std::optional<double> eta;
  std::optional<int> closing_radius;
  std::optional<int> min_group_points;
  std::optional<int> splat_radius;
  std::optional<std::string> backend;
  std::optional<std::string> endpoint;
  std::optional<double> timeout_secs;
  bool no_depth_scale = false;
  bool rigid_poses = false;

  PipelineConfig Resolve() const {
    PipelineConfig cfg;
    if (!config.empty()) cfg.MergeJson(ReadJson(config));
    if (threads) cfg.threads = *threads;
    if (tau) cfg.filter.tau = *tau;
    if (min_violations) cfg.filter.min_violations = *min_violations;
    if (min_observations) cfg.filter.min_observations = *min_observations;
    if (eta) cfg.unify.eta = *eta;
    if (closing_radius) cfg.unify.closing_radius = *closing_radius;
    if (min_group_points) cfg.unify.min_group_points = *min_group_points;
    if (splat_radius) cfg.splat.splat_radius = *splat_radius;
    if (backend) cfg.backend = *backend;
    if (endpoint) cfg.external.endpoint = *endpoint;
    if (timeout_secs) cfg.external.timeout_secs = *timeout_secs;
    if (no_depth_scale) cfg.depth_scale_align = false;
    if (rigid_poses) cfg.pose_estimate_scale = false;
    cfg.Validate();
    SetNumThreads(cfg.threads);
    return cfg;
  }
};

void AddCommonFlags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--config", f.config, "Pipeline config JSON (flags override it)")
      ->check(CLI::ExistingFile);
  app->add_option("--threads", f.threads, "Worker threads, 0 = all cores");
}

void AddFilterFlags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--tau", f.tau, "Depth consistency ratio (default 0.75)");
  app->add_option("--min-violations", f.min_violations,
                  "Failed tests needed to flag a point (default 1)");
  app->add_option("--min-observations", f.min_observations,
                  "Tests needed before a point can be flagged (default 1)");
}

void AddUnifyFlags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--eta", f.eta, "Mask IoU merge threshold (default 1/3)");
  app->add_option("--closing-radius", f.closing_radius,
                  "Closing radius for projected masks (default 1)");
  app->add_option("--min-group-points", f.min_group_points,
                  "Smallest lifted mask kept (default 20)");
}

void AddSplatFlag(CLI::App* app, ConfigFlags& f) {
  app->add_option("--splat-radius", f.splat_radius,
                  "Square splat half-width in pixels (default 0)");
}

void AddBackendFlags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--backend", f.backend, "Inpainting backend: baseline|external");
  app->add_option("--endpoint", f.endpoint, "External backend base URL");
  app->add_option("--timeout-secs", f.timeout_secs,
                  "External backend request timeout");
}

void AddMetricFlags(CLI::App* app, ConfigFlags& f) {
  app->add_flag("--no-depth-scale", f.no_depth_scale,
                "Score depth without median scale alignment");
  app->add_flag("--rigid", f.rigid_poses,
                "Align poses with a rigid transform (scale fixed to 1)");
}

struct Paths {
  std::string bundle;
  std::string workspace = ".";
};

void AddBundleFlags(CLI::App* app, Paths& p) {
  app->add_option("--bundle", p.bundle, "Scene bundle directory")->required();
  app->add_option("--workspace", p.workspace,
                  "Workspace directory for stage artifacts (default .)");
}

Camera CameraFromFile(const std::string& path) {
  return CameraFromJson(ReadJson(path), path);
}

void WriteReferenceMasks(const fs::path& dir, const SceneState& state,
                         int splat_radius) {
  const std::vector<PointIndex> removed = state.log.AllRemoved();
  const std::vector<BoolMask> masks = ReferenceMasks(
      removed, state.cloud, state.bundle.frames, splat_radius);
  for (size_t i = 0; i < masks.size(); ++i) {
    WritePngMask(dir / ("ref_mask_" + state.bundle.frames[i].view_id + ".png"),
                 masks[i]);
  }
}

// Target cameras for `render` and `project`, keyed by output name.
struct Target {
  std::string name;
  Camera camera;
};

struct TargetFlags {
  std::string view;
  std::string camera;
  std::string gt;

  void Add(CLI::App* app, bool allow_gt) {
    auto* v = app->add_option("--view", view, "Render from an input view's camera");
    auto* c = app->add_option("--camera", camera, "Camera JSON file")
                  ->check(CLI::ExistingFile);
    v->excludes(c);
    if (allow_gt) {
      auto* g = app->add_option(
          "--gt", gt,
          "Ground-truth directory: render every test view, aligned to the "
          "bundle frame");
      g->excludes(v)->excludes(c);
    }
  }

  std::vector<Target> Resolve(const SceneBundle& bundle,
                              const PipelineConfig& cfg) const {
    if (!view.empty()) {
      const int idx = bundle.IndexOf(view);
      PS_CHECK(idx >= 0, ErrorCode::kUnknownView, view);
      return {{view, bundle.frames[idx].camera()}};
    }
    if (!camera.empty()) {
      return {{fs::path(camera).stem().string(), CameraFromFile(camera)}};
    }
    if (!gt.empty()) {
      const GroundTruth truth = LoadGroundTruth(gt);
      const SimilarityTransform align =
          AlignBundleToGroundTruth(bundle, truth, cfg.pose_estimate_scale);
      std::vector<Target> out;
      for (size_t i = 0; i < truth.test_ids.size(); ++i) {
        Camera c = truth.test_cameras[i];
        c.pose = align.MapPose(c.pose);
        out.push_back({truth.test_ids[i], c});
      }
      return out;
    }
    throw Error(ErrorCode::kInvalidArgument,
                "one of --view, --camera or --gt is required");
  }
};

sigset_t ShutdownSignals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  return set;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Instance-aware point-cloud scene pipeline", "pointscene"};
  app.require_subcommand(1);
  std::function<void()> action;
  ConfigFlags flags;
  Paths paths;

  // synth
  SynthConfig synth;
  std::string synth_out;
  std::optional<double> offset_scale, offset_yaw_deg;
  std::vector<double> offset_translation;
  {
    auto* cmd = app.add_subcommand(
        "synth", "Generate a synthetic box room: bundle plus ground truth");
    cmd->add_option("--out", synth_out, "Output directory")->required();
    cmd->add_option("--views", synth.num_views, "Input views")
        ->capture_default_str();
    cmd->add_option("--objects", synth.num_objects, "Box objects")
        ->capture_default_str();
    cmd->add_option("--test-views", synth.num_test_views,
                    "Held-out test views")
        ->capture_default_str();
    cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    cmd->add_option("--width", synth.width, "Image width")->capture_default_str();
    cmd->add_option("--height", synth.height, "Image height")
        ->capture_default_str();
    cmd->add_option("--focal", synth.focal, "Focal length in pixels")
        ->capture_default_str();
    cmd->add_option("--floaters", synth.floater_fraction,
                    "Fraction of pixels per view turned into floaters")
        ->capture_default_str();
    cmd->add_option("--floater-depth-ratio", synth.floater_depth_ratio,
                    "Floater depth as a fraction of the true depth")
        ->capture_default_str();
    cmd->add_option("--offset-scale", offset_scale,
                    "Scale of the ground-truth to bundle transform");
    cmd->add_option("--offset-yaw-deg", offset_yaw_deg,
                    "Yaw (about +z) of the ground-truth to bundle transform");
    cmd->add_option("--offset-translation", offset_translation,
                    "Translation of the ground-truth to bundle transform")
        ->expected(3);
    cmd->callback([&] {
      action = [&] {
        if (offset_scale || offset_yaw_deg || !offset_translation.empty()) {
          SimilarityTransform t;
          t.scale = offset_scale.value_or(1.0);
          t.rotation = Eigen::AngleAxisd(
                           offset_yaw_deg.value_or(0.0) * M_PI / 180.0,
                           Eigen::Vector3d::UnitZ())
                           .toRotationMatrix();
          if (!offset_translation.empty()) {
            t.translation = Eigen::Vector3d(offset_translation[0],
                                            offset_translation[1],
                                            offset_translation[2]);
          }
          synth.offset = t;
        }
        const SynthScene scene = GenerateScene(synth);
        WriteSynthScene(synth_out, scene);
        size_t floater_pixels = 0;
        for (const BoolMask& m : scene.floaters) floater_pixels += CountTrue(m);
        out << json{{"command", "synth"},
                    {"bundle", (fs::path(synth_out) / "bundle").string()},
                    {"gt", (fs::path(synth_out) / "gt").string()},
                    {"views", synth.num_views},
                    {"objects", synth.num_objects},
                    {"floater_pixels", floater_pixels}}
                   .dump()
            << "\n";
      };
    });
  }

  // ingest
  {
    auto* cmd = app.add_subcommand(
        "ingest", "Validate a bundle and write the unfiltered cloud");
    AddBundleFlags(cmd, paths);
    AddCommonFlags(cmd, flags);
    cmd->callback([&] {
      action = [&] {
        flags.Resolve();
        const SceneBundle bundle = LoadSceneBundle(paths.bundle);
        const ScenePointCloud cloud =
            AssemblePointCloud(UnprojectAll(bundle.frames), bundle.frames);
        fs::create_directories(paths.workspace);
        json views = json::array();
        for (size_t i = 0; i < bundle.frames.size(); ++i) {
          const ViewFrame& f = bundle.frames[i];
          size_t valid = 0;
          for (float d : f.depth.data()) valid += d > 0.0f;
          views.push_back({{"view_id", f.view_id},
                           {"width", f.width()},
                           {"height", f.height()},
                           {"valid_pixels", valid},
                           {"has_masks", f.masks.has_value()}});
        }
        const json summary = {{"scene_id", bundle.metadata.scene_id},
                              {"units", bundle.metadata.units},
                              {"convention", bundle.metadata.convention},
                              {"views", views},
                              {"num_points", cloud.size()}};
        WriteJson(fs::path(paths.workspace) / ws::kIngest, summary);
        WritePly(fs::path(paths.workspace) / ws::kCloud, cloud);
        out << json{{"command", "ingest"},
                    {"views", bundle.frames.size()},
                    {"points", cloud.size()}}
                   .dump()
            << "\n";
      };
    });
  }

  // filter
  {
    auto* cmd = app.add_subcommand(
        "filter", "Flag points that float in front of other views' surfaces");
    AddBundleFlags(cmd, paths);
    AddCommonFlags(cmd, flags);
    AddFilterFlags(cmd, flags);
    cmd->callback([&] {
      action = [&] {
        const PipelineConfig cfg = flags.Resolve();
        const SceneBundle bundle = LoadSceneBundle(paths.bundle);
        const FilterStage stage = RunFilter(bundle, cfg.filter);
        WriteFilterStage(paths.workspace, stage, cfg.filter);
        out << json{{"command", "filter"},
                    {"flagged", stage.report.TotalFlagged()},
                    {"points", stage.cloud.size()}}
                   .dump()
            << "\n";
      };
    });
  }

  // segment
  std::string masks_dir;
  {
    auto* cmd = app.add_subcommand(
        "segment", "Lift per-view masks into unified 3D instances");
    AddBundleFlags(cmd, paths);
    AddCommonFlags(cmd, flags);
    AddUnifyFlags(cmd, flags);
    cmd->add_option("--masks", masks_dir,
                    "Directory with masks.json and binary mask PNGs (replaces "
                    "the bundle's masks.png)")
        ->check(CLI::ExistingDirectory);
    cmd->callback([&] {
      action = [&] {
        const PipelineConfig cfg = flags.Resolve();
        SceneBundle bundle = LoadSceneBundle(paths.bundle);
        if (!masks_dir.empty()) ApplyMaskDirectory(bundle, masks_dir);
        bool any_masks = false;
        for (const ViewFrame& f : bundle.frames) any_masks |= f.masks.has_value();
        PS_CHECK(any_masks, ErrorCode::kInvalidArgument,
                 "no instance masks: bundle has no masks.png and --masks was "
                 "not given");
        const std::vector<PointMap> maps =
            LoadFilteredPointmaps(bundle, paths.workspace);
        const ScenePointCloud cloud = AssemblePointCloud(maps, bundle.frames);
        const SegmentStage stage = RunSegment(bundle, maps, cloud, cfg.unify);
        fs::create_directories(paths.workspace);
        WriteSegmentStage(paths.workspace, stage);
        out << json{{"command", "segment"},
                    {"instances", stage.instances.size()},
                    {"passes", stage.stats.passes},
                    {"unions", stage.stats.unions}}
                   .dump()
            << "\n";
      };
    });
  }

  // edit
  std::optional<int32_t> remove_id, translate_id;
  std::vector<double> delta;
  bool undo = false;
  {
    auto* cmd = app.add_subcommand(
        "edit", "Append an edit to edits.json (or undo the last one)");
    AddBundleFlags(cmd, paths);
    AddCommonFlags(cmd, flags);
    AddSplatFlag(cmd, flags);
    auto* rm = cmd->add_option("--remove", remove_id, "Instance id to remove");
    auto* tr = cmd->add_option("--translate", translate_id,
                               "Instance id to translate (needs --delta)");
    auto* dl = cmd->add_option("--delta", delta, "Translation dx dy dz")
                   ->expected(3);
    auto* un = cmd->add_flag("--undo", undo, "Drop the last edit");
    rm->excludes(tr)->excludes(un);
    tr->excludes(un)->needs(dl);
    dl->needs(tr);
    cmd->callback([&] {
      action = [&] {
        const PipelineConfig cfg = flags.Resolve();
        SceneState state = LoadSceneState(paths.bundle, paths.workspace);
        json summary = {{"command", "edit"}};
        if (undo) {
          const std::optional<EditLog> shorter = state.log.WithoutLast();
          PS_CHECK(shorter.has_value(), ErrorCode::kInvalidArgument,
                   "nothing to undo");
          state.cloud = state.original;
          state.log = ApplyEdits(state.cloud, shorter->ops());
          summary["undone"] = true;
        } else {
          EditOp op;
          if (remove_id) {
            op.kind = EditKind::kRemove;
            op.instance_id = *remove_id;
          } else if (translate_id) {
            op.kind = EditKind::kTranslate;
            op.instance_id = *translate_id;
            op.delta = Eigen::Vector3d(delta[0], delta[1], delta[2]);
          } else {
            throw Error(ErrorCode::kInvalidArgument,
                        "one of --remove, --translate or --undo is required");
          }
          state.log.Apply(state.cloud, op);
          summary["op"] = op.ToJson();
        }
        WriteEdits(paths.workspace, state.log);
        WriteReferenceMasks(paths.workspace, state, cfg.splat.splat_radius);
        summary["edits"] = state.log.size();
        summary["alive"] = state.cloud.NumAlive();
        out << summary.dump() << "\n";
      };
    });
  }

  // project
  TargetFlags project_target;
  std::string project_out;
  {
    auto* cmd = app.add_subcommand(
        "project", "Z-buffer the edited cloud into a camera");
    AddBundleFlags(cmd, paths);
    AddCommonFlags(cmd, flags);
    AddSplatFlag(cmd, flags);
    project_target.Add(cmd, false);
    cmd->add_option("--out", project_out,
                    "Output directory (default <workspace>/projections/<name>)");
    cmd->callback([&] {
      action = [&] {
        const PipelineConfig cfg = flags.Resolve();
        const SceneState state = LoadSceneState(paths.bundle, paths.workspace);
        const Target t = project_target.Resolve(state.bundle, cfg).front();
        const fs::path dir =
            project_out.empty()
                ? fs::path(paths.workspace) / "projections" / t.name
                : fs::path(project_out);
        const ProjectionResult result = ProjectPoints(
            state.cloud, t.camera.intrinsics, t.camera.pose, cfg.splat);
        WriteProjectionResult(dir, result);
        out << json{{"command", "project"},
                    {"target", t.name},
                    {"covered", CountTrue(result.coverage)},
                    {"out", dir.string()}}
                   .dump()
            << "\n";
      };
    });
  }

  // render
  TargetFlags render_target;
  std::string render_out, render_job;
  {
    auto* cmd = app.add_subcommand(
        "render", "Build render jobs and complete them with a backend");
    cmd->add_option("--bundle", paths.bundle, "Scene bundle directory");
    cmd->add_option("--workspace", paths.workspace,
                    "Workspace directory for stage artifacts (default .)");
    AddCommonFlags(cmd, flags);
    AddSplatFlag(cmd, flags);
    AddBackendFlags(cmd, flags);
    render_target.Add(cmd, true);
    cmd->add_option("--job", render_job,
                                "Re-dispatch an existing job directory")
                    ->check(CLI::ExistingDirectory);
    cmd->add_option("--out", render_out,
                    "Output PNG (single target or --job; default "
                    "<workspace>/renders/<name>.png)");
    AddMetricFlags(cmd, flags);
    cmd->callback([&] {
      action = [&] {
        const PipelineConfig cfg = flags.Resolve();
        std::unique_ptr<RenderBackend> backend =
            MakeBackend(cfg.backend, cfg.external);
        json rendered = json::array();
        if (!render_job.empty()) {
          PS_CHECK(!render_out.empty(), ErrorCode::kInvalidArgument,
                   "--job needs --out");
          const RenderJob j = ReadRenderJob(render_job);
          WritePngRgb(render_out, Dispatch(j, *backend));
          rendered.push_back({{"job", j.job_id}, {"out", render_out}});
        } else {
          PS_CHECK(!paths.bundle.empty(), ErrorCode::kInvalidArgument,
                   "--bundle is required");
          const SceneState state =
              LoadSceneState(paths.bundle, paths.workspace);
          const std::vector<Target> targets =
              render_target.Resolve(state.bundle, cfg);
          PS_CHECK(render_out.empty() || targets.size() == 1,
                   ErrorCode::kInvalidArgument,
                   "--out needs a single target");
          for (const Target& t : targets) {
            const RenderJob j =
                BuildRenderJob(state.cloud, t.camera, state.bundle.frames,
                               state.log, cfg.splat, t.name);
            WriteRenderJob(fs::path(paths.workspace) / "jobs" / t.name, j);
            const fs::path png =
                render_out.empty()
                    ? fs::path(paths.workspace) / "renders" / (t.name + ".png")
                    : fs::path(render_out);
            WritePngRgb(png, Dispatch(j, *backend));
            rendered.push_back({{"job", t.name}, {"out", png.string()}});
          }
        }
        out << json{{"command", "render"},
                    {"backend", backend->name()},
                    {"rendered", rendered}}
                   .dump()
            << "\n";
      };
    });
  }

  // eval
  std::string gt_dir, eval_out;
  {
    auto* cmd = app.add_subcommand(
        "eval", "Score a workspace against synthetic ground truth");
    AddBundleFlags(cmd, paths);
    AddCommonFlags(cmd, flags);
    AddMetricFlags(cmd, flags);
    cmd->add_option("--gt", gt_dir, "Ground-truth directory")->required();
    cmd->add_option("--out", eval_out,
                    "Report path (default <workspace>/eval_report.json)");
    cmd->callback([&] {
      action = [&] {
        const PipelineConfig cfg = flags.Resolve();
        const json report =
            EvaluateWorkspace(paths.bundle, gt_dir, paths.workspace, cfg);
        const fs::path path = eval_out.empty()
                                  ? fs::path(paths.workspace) / ws::kEvalReport
                                  : fs::path(eval_out);
        WriteJson(path, report);
        json summary = {{"command", "eval"},
                        {"report", path.string()},
                        {"depth_mean_rmse", report["depth"]["mean_rmse"]},
                        {"pose_center_rmse", report["poses"]["center_rmse"]}};
        if (!report["instances"].is_null()) {
          summary["ap"] = report["instances"]["ap"];
        }
        out << summary.dump() << "\n";
      };
    });
  }

  // serve
  ServiceOptions serve_opts;
  {
    auto* cmd = app.add_subcommand(
        "serve", "Serve the scene over HTTP until SIGINT/SIGTERM");
    AddBundleFlags(cmd, paths);
    AddCommonFlags(cmd, flags);
    AddFilterFlags(cmd, flags);
    AddUnifyFlags(cmd, flags);
    AddSplatFlag(cmd, flags);
    AddBackendFlags(cmd, flags);
    cmd->add_option("--host", serve_opts.host, "Bind address")
        ->capture_default_str();
    cmd->add_option("--port", serve_opts.port, "Port, 0 picks a free one")
        ->capture_default_str();
    cmd->add_option("--workers", serve_opts.render_workers,
                    "Render worker threads")
        ->capture_default_str();
    cmd->add_option("--cors-origin", serve_opts.cors_origin,
                    "Access-Control-Allow-Origin value")
        ->capture_default_str();
    cmd->callback([&] {
      action = [&] {
        const PipelineConfig cfg = flags.Resolve();
        const fs::path dir = paths.workspace;
        // Run the missing stages once; later starts reuse their artifacts.
        if (!fs::exists(dir / ws::kReport)) {
          const SceneBundle bundle = LoadSceneBundle(paths.bundle);
          WriteFilterStage(dir, RunFilter(bundle, cfg.filter), cfg.filter);
        }
        if (!fs::exists(dir / ws::kLabeled)) {
          const SceneBundle bundle = LoadSceneBundle(paths.bundle);
          bool any_masks = false;
          for (const ViewFrame& f : bundle.frames) {
            any_masks |= f.masks.has_value();
          }
          if (any_masks) {
            const std::vector<PointMap> maps =
                LoadFilteredPointmaps(bundle, dir);
            const ScenePointCloud cloud =
                AssemblePointCloud(maps, bundle.frames);
            WriteSegmentStage(dir, RunSegment(bundle, maps, cloud, cfg.unify));
          }
        }
        // Block shutdown signals before any thread starts so sigwait below
        // is the only receiver.
        const sigset_t signals = ShutdownSignals();
        pthread_sigmask(SIG_BLOCK, &signals, nullptr);
        SceneService service(LoadSceneState(paths.bundle, dir), cfg, dir,
                             serve_opts);
        const int port = service.Start();
        out << json{{"command", "serve"},
                    {"host", serve_opts.host},
                    {"port", port}}
                   .dump()
            << std::endl;
        int sig = 0;
        sigwait(&signals, &sig);
        service.Stop();
        pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << json{{"error", "invalid_argument"},
                {"category", "validation"},
                {"detail", e.what()}}
               .dump()
        << "\n";
    return 1;
  }

  try {
    action();
    return 0;
  } catch (const Error& e) {
    const ErrorCategory cat = CategoryOf(e.code());
    err << json{{"error", std::string(ErrorCodeName(e.code()))},
                {"category", CategoryName(cat)},
                {"detail", e.detail()}}
               .dump()
        << "\n";
    return ExitCode(cat);
  } catch (const std::exception& e) {
    err << json{{"error", "io"}, {"category", "io"}, {"detail", e.what()}}.dump()
        << "\n";
    return 2;
  }
}

}  // namespace pointscene::cli
