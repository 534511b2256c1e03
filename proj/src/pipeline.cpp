#include "codi/pipeline.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "codi/errors.hpp"

namespace codi {
namespace {

constexpr std::uint64_t kRotationStream = 0x524f54;  // "ROT"
constexpr std::uint64_t kBiasStream = 0x424941;      // "BIA"
constexpr double kBiasAmplitude = 0.05;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SubjectState subject_state(const HarvestedImage& image) {
  if (image.attention.tokens != image.features.rows()) {
    throw ShapeError("attention covers " + std::to_string(image.attention.tokens) +
                     " tokens but features have " + std::to_string(image.features.rows()));
  }
  const auto saliency = average_attention(image.attention);
  auto otsu = otsu_threshold(saliency);
  SubjectState s;
  s.weights = importance_weights(saliency, otsu.mask);
  s.mask = std::move(otsu.mask);
  s.threshold = otsu.threshold;
  s.degenerate = otsu.degenerate;
  return s;
}

}  // namespace

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return splitmix64(splitmix64(seed ^ splitmix64(stream)) + counter);
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return static_cast<double>(counter_hash(seed, stream, counter) >> 11) * 0x1.0p-53;
}

std::string_view stage_name(Stage stage) {
  return stage == Stage::identity_transport ? "IT" : "IR";
}

void PipelineConfig::validate() const {
  if (total_steps == 0) throw ParameterError("total_steps must be positive");
  if (t_switch > total_steps) {
    throw ParameterError("t_switch must lie in [0, total_steps], got " + std::to_string(t_switch));
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ParameterError("alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
}

TokenMatrix toy_denoise_step(const TokenMatrix& x, std::size_t step, std::uint64_t seed) {
  const std::size_t d = x.cols();
  const std::uint64_t stream_step = static_cast<std::uint64_t>(step) << 20;
  std::vector<double> cos_t(d > 1 ? d - 1 : 0);
  std::vector<double> sin_t(cos_t.size());
  for (std::size_t k = 0; k + 1 < d; ++k) {
    const double theta = 2.0 * std::numbers::pi * counter_uniform(seed, kRotationStream, stream_step + k);
    cos_t[k] = std::cos(theta);
    sin_t[k] = std::sin(theta);
  }
  std::vector<double> bias(d);
  for (std::size_t k = 0; k < d; ++k) {
    bias[k] = kBiasAmplitude * (2.0 * counter_uniform(seed, kBiasStream, stream_step + k) - 1.0);
  }

  TokenMatrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t k = 0; k + 1 < d; ++k) {
      const double p = row[k];
      const double q = row[k + 1];
      row[k] = cos_t[k] * p - sin_t[k] * q;
      row[k + 1] = sin_t[k] * p + cos_t[k] * q;
    }
    for (std::size_t k = 0; k < d; ++k) row[k] += bias[k];
  }
  return out;
}

RunArtifacts prepare_run(const PipelineConfig& cfg, const PipelineInputs& inputs) {
  cfg.validate();
  if (inputs.targets.empty()) throw ParameterError("pipeline needs at least one target image");
  const std::size_t dim = inputs.reference.features.cols();
  for (const auto& t : inputs.targets) {
    if (t.features.cols() != dim) throw ShapeError("target feature dimension differs from reference");
  }

  RunArtifacts run;
  run.config = cfg;
  run.reference = subject_state(inputs.reference);
  const TokenMatrix ref_subject = extract_subject(inputs.reference.features, run.reference.mask);

  // Each target is solved independently against the same reference subject.
  for (const auto& target : inputs.targets) {
    run.targets.push_back(subject_state(target));
    const TokenMatrix target_subject = extract_subject(target.features, run.targets.back().mask);
    run.costs.push_back(cost_matrix(ref_subject, target_subject));
    run.plans.push_back(solve_ot(run.reference.weights, run.targets.back().weights, run.costs.back()));
  }
  run.saliency = saliency_scores(run.plans, run.costs);
  run.selection = select_top_alpha(run.saliency, cfg.alpha);
  return run;
}

RunArtifacts run_pipeline(const PipelineConfig& cfg, const PipelineInputs& inputs) {
  RunArtifacts run = prepare_run(cfg, inputs);
  const std::size_t n_targets = inputs.targets.size();

  TokenMatrix reference = inputs.reference.features;
  std::vector<TokenMatrix> targets;
  for (const auto& t : inputs.targets) targets.push_back(t.features);

  for (std::size_t t = 1; t <= cfg.total_steps; ++t) {
    const Stage stage = t <= cfg.t_switch ? Stage::identity_transport : Stage::identity_refinement;
    run.stages.push_back(stage);
    const TokenMatrix ref_subject = extract_subject(reference, run.reference.mask);

    for (std::size_t n = 0; n < n_targets; ++n) {
      if (stage == Stage::identity_transport) {
        const TokenMatrix moved = transport_features(run.plans[n], ref_subject, cfg.transport_mode);
        targets[n] = compose_features(targets[n], run.targets[n].mask, moved);
      } else {
        const AttentionBundle bundle{targets[n], targets[n], targets[n], ref_subject, ref_subject};
        targets[n] = refine_attention(bundle, run.selection, cfg.normalization);
      }
    }

    reference = toy_denoise_step(reference, t - 1, cfg.seed);
    for (auto& x : targets) x = toy_denoise_step(x, t - 1, cfg.seed);
    run.reference_snapshots.push_back(reference);
    run.target_snapshots.push_back(targets);
  }
  return run;
}

}  // namespace codi
