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

#include "gaussfuse/pipeline.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "gaussfuse/em_mapping.hpp"
#include "gaussfuse/icp.hpp"
#include "gaussfuse/init_cluster.hpp"
#include "gaussfuse/localization.hpp"

namespace gaussfuse {

FrameBuffer::FrameBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error("frame buffer: capacity must be positive");
}

void FrameBuffer::Push(BufferEntry entry) {
  if (!entries_.empty() && entry.frame_id <= entries_.back().frame_id) {
    throw Error("frame buffer: frame " + std::to_string(entry.frame_id) + " out of order");
  }
  entries_.push_back(std::move(entry));
  while (entries_.size() > capacity_) entries_.pop_front();
}

const BufferEntry& FrameBuffer::Newest() const {
  if (entries_.empty()) throw Error("frame buffer: empty");
  return entries_.back();
}

std::vector<int> FrameBuffer::FrameIds() const {
  std::vector<int> ids;
  ids.reserve(entries_.size());
  for (const BufferEntry& e : entries_) ids.push_back(e.frame_id);
  return ids;
}

InputSet BuildInputSet(const FrameBuffer& buffer, int current, int anchor,
                       const RigidPose& anchor_pose, std::optional<int> lookahead) {
  InputSet set;
  auto add = [&](int f) {
    if (std::find(set.frames.begin(), set.frames.end(), f) == set.frames.end()) {
      set.frames.push_back(f);
    }
  };
  for (int f : buffer.FrameIds()) add(f);
  add(current);
  if (lookahead) add(*lookahead);
  add(anchor);
  set.hints.push_back({anchor, anchor_pose});
  return set;
}

std::vector<int> ProcessedFrames(int frame_count, int stride) {
  std::vector<int> frames;
  for (int f = 0; f < frame_count; f += std::max(stride, 1)) frames.push_back(f);
  return frames;
}

namespace {

std::uint64_t FrameSeed(std::uint64_t seed, int frame_id) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(frame_id + 1));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

const Prediction& PredictionOf(const std::vector<Prediction>& preds,
                               const std::vector<int>& frames, int frame_id) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i] == frame_id) return preds[i];
  }
  throw Error("pipeline: source did not return frame " + std::to_string(frame_id));
}

}  // namespace

RunResult Run(ObservationSource& source, const Config& config, const RunOptions& options) {
  if (const auto errors = config.Validate(); !errors.empty()) {
    throw Error("config: " + errors.front());
  }
  const std::vector<int> frames = ProcessedFrames(source.FrameCount(), config.frame_stride);
  const auto buffer_size = static_cast<std::size_t>(config.buffer_size);
  if (frames.size() < buffer_size + 1) {
    throw Error("pipeline: source yields " + std::to_string(frames.size()) +
                " frames at stride " + std::to_string(config.frame_stride) + ", need at least " +
                std::to_string(buffer_size + 1));
  }

  const int anchor = frames.front();
  const RigidPose anchor_pose = options.anchor_pose
                                    ? *options.anchor_pose
                                    : source.GroundTruthPose(anchor).value_or(RigidPose::Identity());
  const std::vector<PoseHint> hints{{anchor, anchor_pose}};

  RunResult result{GaussianMap(config.voxel_size, source.FeatureDim()), {}, {}, {}, frames};
  FrameBuffer buffer(buffer_size);

  // Initialization from the first |S| frames of one request.
  const std::vector<int> init_frames(frames.begin(), frames.begin() + static_cast<long>(buffer_size));
  {
    std::vector<Prediction> preds = source.Infer(init_frames, hints);
    BuildStats stats;
    result.map = InitializeMap(preds, config, &stats);
    for (Prediction& p : preds) {
      result.trajectory.Append({p.frame_id, source.Timestamp(p.frame_id), p.pose});
      FrameLog log;
      log.frame_id = p.frame_id;
      log.status = FrameStatus::kInitialized;
      log.request_size = init_frames.size();
      log.map_size = result.map.size();
      result.log.push_back(log);
      buffer.Push({p.frame_id, std::move(p)});
    }
    spdlog::debug("initialized {} Gaussians from {} frames", result.map.size(),
                  init_frames.size());
  }

  for (std::size_t i = buffer_size; i < frames.size(); ++i) {
    const int current = frames[i];
    const std::optional<int> lookahead =
        i + 1 < frames.size() ? std::optional<int>(frames[i + 1]) : std::nullopt;
    const InputSet input = BuildInputSet(buffer, current, anchor, anchor_pose, lookahead);
    const std::vector<Prediction> preds = source.Infer(input.frames, input.hints);

    FrameLog log;
    log.frame_id = current;
    log.request_size = input.frames.size();
    const BufferEntry& shared = buffer.Newest();

    LocalizationResult loc;
    try {
      if (options.inject_failures.count(current) != 0) {
        throw RegistrationError("injected failure");
      }
      loc = Localize(PredictionOf(preds, input.frames, current),
                     PredictionOf(preds, input.frames, shared.frame_id), shared.aligned,
                     result.map, config);
    } catch (const RegistrationError& e) {
      log.status = FrameStatus::kSkipped;
      log.message = e.what();
      log.map_size = result.map.size();
      spdlog::warn("frame {} skipped: {}", current, e.what());
      result.log.push_back(log);
      continue;
    }
    log.coarse_residual = loc.coarse.residual;
    log.refine_rmse = loc.refinement.rmse;

    const GateResult gate = GatePoints(loc.aligned, loc.submap, result.map, config);
    const GatedAssignment assignment =
        ComputeResponsibilities(loc.aligned, gate, result.map, config);
    const EmUpdateResult em = EmUpdate(result.map, loc.aligned, assignment, config);
    log.gate_rejected = gate.rejected.size();
    log.em_integrated = em.integrated_points;
    log.em_updated = em.updated;

    std::vector<std::size_t> leftovers = em.leftovers;
    leftovers.insert(leftovers.end(), gate.rejected.begin(), gate.rejected.end());
    std::sort(leftovers.begin(), leftovers.end());
    log.leftovers = leftovers.size();
    log.refine = Refine(result.map, loc.submap, leftovers, loc.aligned, loc.camera_pose, config,
                        FrameSeed(config.seed, current));
    log.map_size = result.map.size();

    result.trajectory.Append({current, source.Timestamp(current), loc.camera_pose});
    result.provisional.erase(current);
    if (lookahead) {
      // Newest frame chained through this request's relative prediction.
      const Prediction& next = PredictionOf(preds, input.frames, *lookahead);
      result.provisional[*lookahead] = loc.world_from_prediction * next.pose;
    }
    buffer.Push({current, loc.aligned});
    spdlog::debug("frame {}: rejected {} integrated {} built {} merged {} appended {} map {}",
                  current, log.gate_rejected, log.em_integrated, log.refine.built,
                  log.refine.merged, log.refine.appended, log.map_size);
    if (options.on_frame) options.on_frame(log, result.map);
    result.log.push_back(std::move(log));
  }
  return result;
}

}  // namespace gaussfuse
