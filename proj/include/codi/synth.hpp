#pragma once

#include <cstddef>
#include <cstdint>

#include "codi/pipeline.hpp"
#include "codi/pose_eval.hpp"

// Desk-scale fixtures. Every generator is a pure function of its arguments, so the same
// seed always yields the same bytes.
namespace codi::synth {

struct SceneShape {
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t dim = 16;
  std::size_t layers = 3;
  std::size_t subject_tokens = 2;
};

/// One image: subject tokens on a disk share an identity prototype; the rest is background.
HarvestedImage image(std::uint64_t seed, std::size_t index, const SceneShape& shape = {});

/// Reference (index 0) plus `targets` target images.
PipelineInputs inputs(std::uint64_t seed, std::size_t targets, const SceneShape& shape = {});

/// Perturbed, randomly posed copies of one skeleton with confidences in [0.4, 1].
PoseSet keypoints(std::uint64_t seed, std::size_t images = 5, std::size_t joints = 17);

}  // namespace codi::synth
