/*
 * Copyright 2026 The gaussfuse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gaussfuse/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "gaussfuse/config.hpp"
#include "gaussfuse/file_source.hpp"
#include "gaussfuse/map_archive.hpp"
#include "gaussfuse/metrics.hpp"
#include "gaussfuse/pipeline.hpp"
#include "gaussfuse/ply.hpp"
#include "gaussfuse/scene_io.hpp"
#include "gaussfuse/splatting.hpp"
#include "gaussfuse/synthetic_source.hpp"
#include "gaussfuse/trajectory_io.hpp"

namespace gaussfuse {
namespace {

namespace fs = std::filesystem;

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

Config LoadConfigOrDefault(const std::string& path, std::optional<std::uint64_t> seed) {
  Config config = path.empty() ? Config{} : LoadConfig(path);
  if (seed) config.seed = *seed;
  return config;
}

struct RunArgs {
  std::string config;
  std::string synthetic;
  std::string source;
  std::string output;
  bool densify = false;
  bool debug_renders = false;
};

int DoRun(const RunArgs& a, std::optional<std::uint64_t> seed, std::ostream& out) {
  Config config = LoadConfigOrDefault(a.config, seed);
  if (a.densify) config.densify = true;
  fs::create_directories(a.output);

  std::unique_ptr<ObservationSource> source;
  std::optional<SceneSpec> spec;
  if (!a.synthetic.empty()) {
    spec = LoadScene(a.synthetic);
    source = std::make_unique<SyntheticSource>(spec->scene, spec->noise, config.seed);
  } else {
    source = std::make_unique<FileSource>(a.source);
  }

  const RunResult result = Run(*source, config);
  const fs::path dir(a.output);
  ExportMap(result.map, (dir / "map.bin").string());
  ExportMapPly(result.map, (dir / "map.ply").string());
  WriteTum(result.trajectory, (dir / "traj.tum").string());

  Trajectory gt_traj;
  for (const TrajectoryEntry& e : result.trajectory.entries()) {
    if (const auto gt = source->GroundTruthPose(e.frame_id)) {
      gt_traj.Append({e.frame_id, e.timestamp, *gt});
    }
  }
  EvaluationInputs inputs;
  const CameraIntrinsics intrinsics = source->Intrinsics();
  inputs.intrinsics = &intrinsics;
  if (gt_traj.size() == result.trajectory.size() && gt_traj.size() >= 3) {
    inputs.ground_truth_trajectory = &gt_traj;
  }
  PointCloud gt_cloud;
  std::vector<VecX> embeddings;
  if (spec) {
    std::vector<RigidPose> poses;
    for (int f : result.processed_frames) poses.push_back(spec->scene.trajectory[static_cast<std::size_t>(f)]);
    gt_cloud = GroundTruthCloud(spec->scene, poses);
    inputs.ground_truth_cloud = &gt_cloud;
    embeddings = ClassEmbeddings(spec->scene);
    inputs.class_embeddings = embeddings;
  }
  const MetricsReport report = Evaluate(result.map, result.trajectory, inputs, config);
  WriteText(dir / "metrics.json", report.ToJson() + "\n");

  if (a.debug_renders && !result.trajectory.empty()) {
    const DepthRender render =
        RenderExpectedDepth(result.map.gaussians(), result.trajectory.entries().back().pose,
                            intrinsics, RenderOptions::FromConfig(config));
    WriteDepthPfm(render, (dir / "depth.pfm").string());
    WriteAlphaPgm(render, (dir / "alpha.pgm").string());
  }

  std::size_t skipped = 0;
  for (const FrameLog& log : result.log) skipped += log.status == FrameStatus::kSkipped ? 1 : 0;
  out << "frames integrated: " << result.trajectory.size() << ", skipped: " << skipped
      << ", Gaussians: " << result.map.size() << "\n"
      << report.ToText();
  return kExitOk;
}

struct SynthArgs {
  std::string scene;
  std::string noise;
  std::string output;
  int stride = 10;
};

int DoSynth(const SynthArgs& a, std::optional<std::uint64_t> seed, std::ostream& out) {
  SceneSpec spec = LoadScene(a.scene);
  if (!a.noise.empty()) {
    std::ifstream in(a.noise);
    if (!in) throw Error("cannot open " + a.noise);
    std::ostringstream ss;
    ss << in.rdbuf();
    spec.noise = NoiseModelFromJson(ss.str());
  }
  SyntheticSource source(spec.scene, spec.noise, seed.value_or(0));
  const fs::path dir(a.output);
  fs::create_directories(dir);

  const std::vector<int> frames = ProcessedFrames(source.FrameCount(), a.stride);
  const std::vector<PoseHint> hints{{frames.front(), *source.GroundTruthPose(frames.front())}};
  Trajectory gt;
  std::vector<RigidPose> poses;
  for (int f : frames) {
    const int request[1] = {f};
    const std::vector<Prediction> preds = source.Infer(request, hints);
    WritePredictionBundle(preds.front(), (dir / BundleDirectoryName(f)).string(),
                          source.Timestamp(f));
    gt.Append({f, source.Timestamp(f), *source.GroundTruthPose(f)});
    poses.push_back(*source.GroundTruthPose(f));
  }
  WriteTum(gt, (dir / "gt.tum").string());
  WritePointCloudPly(GroundTruthCloud(spec.scene, poses), (dir / "gt.ply").string());
  SaveEmbeddings(ClassEmbeddings(spec.scene), (dir / "embeddings.txt").string());
  out << "wrote " << frames.size() << " bundles to " << dir.string() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string map;
  std::string trajectory;
  std::string gt_trajectory;
  std::string gt_cloud;
  std::string embeddings;
  std::string config;
  std::string output;
  double fps = 30.0;
};

int DoEval(const EvalArgs& a, std::optional<std::uint64_t> seed, std::ostream& out) {
  const Config config = LoadConfigOrDefault(a.config, seed);
  const Trajectory est = ReadTum(a.trajectory, a.fps);
  const Trajectory gt = ReadTum(a.gt_trajectory, a.fps);
  const GaussianMap map = a.map.empty() ? GaussianMap(config.voxel_size) : ImportMap(a.map);

  EvaluationInputs inputs;
  inputs.ground_truth_trajectory = &gt;
  PointCloud gt_cloud;
  if (!a.gt_cloud.empty()) {
    gt_cloud = ReadPointCloudPly(a.gt_cloud);
    inputs.ground_truth_cloud = &gt_cloud;
  }
  std::vector<VecX> embeddings;
  if (!a.embeddings.empty()) {
    embeddings = LoadEmbeddings(a.embeddings);
    inputs.class_embeddings = embeddings;
  }
  Config eval_config = config;
  eval_config.densify = false;  // no intrinsics here
  const MetricsReport report = Evaluate(map, est, inputs, eval_config);
  if (!a.output.empty()) WriteText(a.output, report.ToJson() + "\n");
  out << report.ToText();
  return kExitOk;
}

struct SegmentArgs {
  std::string map;
  std::string embeddings;
  std::string output;
  std::string gt_cloud;
  std::string metrics;
};

int DoSegment(const SegmentArgs& a, std::ostream& out) {
  const GaussianMap map = ImportMap(a.map);
  const std::vector<VecX> embeddings = LoadEmbeddings(a.embeddings);
  const Segmentation seg = SegmentMap(map, embeddings);
  ExportMapPly(map, a.output, seg.classes);
  const auto low = std::count(seg.low_confidence.begin(), seg.low_confidence.end(), 1);
  out << "labeled " << map.size() << " Gaussians, " << low << " low-confidence\n";
  if (!a.gt_cloud.empty()) {
    const PointCloud gt = ReadPointCloudPly(a.gt_cloud);
    std::vector<Vec3> centers;
    for (const Gaussian& g : map.gaussians()) centers.push_back(g.mean);
    const SegmentationMetrics m = EvaluateSegmentation(centers, seg.classes, gt);
    MetricsReport report;
    report.miou = m.miou;
    report.f_miou = m.f_miou;
    report.acc = m.acc;
    if (!a.metrics.empty()) WriteText(a.metrics, report.ToJson() + "\n");
    out << report.ToText();
  }
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Incremental Gaussian-mixture mapping from pixel-aligned predictions", "gaussfuse"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Seed for all randomness");

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Map a prediction source");
  run->add_option("--config", run_args.config, "Config JSON");
  auto* synthetic = run->add_option("--synthetic", run_args.synthetic, "Synthetic scene JSON");
  auto* source = run->add_option("--source", run_args.source, "Directory of prediction bundles");
  synthetic->excludes(source);
  run->add_option("-o,--output", run_args.output, "Output directory")->required();
  run->add_flag("--densify", run_args.densify, "Densify the map before reconstruction metrics");
  run->add_flag("--debug-renders", run_args.debug_renders,
                "Write expected depth and alpha of the final frame");

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Write synthetic prediction bundles");
  synth->add_option("--scene", synth_args.scene, "Scene JSON")->required();
  synth->add_option("--noise", synth_args.noise, "Noise model JSON");
  synth->add_option("-o,--output", synth_args.output, "Output directory")->required();
  synth->add_option("--stride", synth_args.stride, "Frame stride")->check(CLI::PositiveNumber);

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Score a map and trajectory");
  eval->add_option("--map", eval_args.map, "Map archive");
  eval->add_option("--trajectory", eval_args.trajectory, "Estimated TUM trajectory")->required();
  eval->add_option("--gt-trajectory", eval_args.gt_trajectory, "Ground-truth TUM trajectory")
      ->required();
  eval->add_option("--gt-cloud", eval_args.gt_cloud, "Ground-truth PLY");
  eval->add_option("--embeddings", eval_args.embeddings, "Class embeddings");
  eval->add_option("--config", eval_args.config, "Config JSON");
  eval->add_option("--fps", eval_args.fps, "Frame rate mapping timestamps to frame ids");
  eval->add_option("-o,--output", eval_args.output, "Metrics JSON");

  SegmentArgs segment_args;
  CLI::App* segment = app.add_subcommand("segment", "Label map Gaussians by class embeddings");
  segment->add_option("--map", segment_args.map, "Map archive")->required();
  segment->add_option("--embeddings", segment_args.embeddings, "Class embeddings")->required();
  segment->add_option("-o,--output", segment_args.output, "Labeled PLY")->required();
  segment->add_option("--gt-cloud", segment_args.gt_cloud, "Labeled ground-truth PLY");
  segment->add_option("--metrics", segment_args.metrics, "Metrics JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (run->parsed() && run_args.synthetic.empty() && run_args.source.empty()) {
      throw CLI::RequiredError("run needs --synthetic or --source");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return DoRun(run_args, seed, out);
    if (synth->parsed()) return DoSynth(synth_args, seed, out);
    if (eval->parsed()) return DoEval(eval_args, seed, out);
    if (segment->parsed()) return DoSegment(segment_args, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int RunCli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return RunCli(args, std::cout, std::cerr);
}

}  // namespace gaussfuse
