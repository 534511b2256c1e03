#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "codi/attention.hpp"
#include "codi/ot.hpp"
#include "codi/subject_mask.hpp"
#include "codi/tensor.hpp"

namespace codi {

struct PipelineConfig {
  std::size_t total_steps = 50;
  std::size_t t_switch = 10;  // identity transport runs for steps t <= t_switch
  double alpha = kDefaultAlpha;
  TransportMode transport_mode = TransportMode::barycentric;
  Normalization normalization = Normalization::retained;
  std::uint64_t seed = 0;

  /// Throws ParameterError on out-of-range fields.
  void validate() const;
};

/// Flat key=value text; '#' starts a comment. Unknown keys are rejected.
PipelineConfig parse_config(std::string_view text);
std::string format_config(const PipelineConfig& cfg);

enum class Stage { identity_transport, identity_refinement };
std::string_view stage_name(Stage stage);

/// Pass-1 output for one image: its final-step features and cross-attention stack.
struct HarvestedImage {
  TokenMatrix features;
  AttentionStack attention;
};

struct PipelineInputs {
  HarvestedImage reference;
  std::vector<HarvestedImage> targets;
};

struct SubjectState {
  SubjectMask mask;
  std::vector<double> weights;
  double threshold = 0.0;
  bool degenerate = false;
};

struct RunArtifacts {
  PipelineConfig config;
  SubjectState reference;
  std::vector<SubjectState> targets;
  std::vector<CostMatrix> costs;
  std::vector<TransportPlan> plans;
  std::vector<double> saliency;
  SelectionSet selection;
  std::vector<Stage> stages;  // stages[t - 1] is the stage of step t
  std::vector<TokenMatrix> reference_snapshots;            // after each step
  std::vector<std::vector<TokenMatrix>> target_snapshots;  // [step][target]
};

/// Deterministic stand-in for one backbone step: every row is rotated by an orthogonal
/// matrix and shifted by a bias, both drawn from (seed, step) by a counter-based hash.
TokenMatrix toy_denoise_step(const TokenMatrix& x, std::size_t step, std::uint64_t seed);

/// Masks, costs, plans and the reference selection; no denoising.
RunArtifacts prepare_run(const PipelineConfig& cfg, const PipelineInputs& inputs);

/// Two-stage schedule over the toy denoiser. Plans are solved once before step 1.
RunArtifacts run_pipeline(const PipelineConfig& cfg, const PipelineInputs& inputs);

// Directory layout shared with the CLI:
//   ref_features.cft, ref_attention.cft, target_<k>_features.cft, target_<k>_attention.cft
PipelineInputs read_inputs(const std::filesystem::path& dir);
void write_inputs(const PipelineInputs& inputs, const std::filesystem::path& dir);
void write_artifacts(const RunArtifacts& run, const std::filesystem::path& dir);

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);
/// Uniform double in [0, 1) from counter_hash.
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

}  // namespace codi
