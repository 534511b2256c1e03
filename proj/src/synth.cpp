#include "codi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace codi::synth {
namespace {

constexpr std::uint64_t kPrototypeStream = 1;
constexpr std::uint64_t kLayoutStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr std::uint64_t kPoseStream = 4;

// Sequential draws from the counter-based hash.
class Draws {
 public:
  Draws(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  double uniform() { return counter_uniform(seed_, stream_, counter_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

float to_float(double v) { return static_cast<float>(v); }

}  // namespace

HarvestedImage image(std::uint64_t seed, std::size_t index, const SceneShape& shape) {
  const std::size_t tokens = shape.height * shape.width;

  Draws proto(seed, kPrototypeStream);
  std::vector<double> identity(shape.dim);
  std::vector<double> background(shape.dim);
  for (auto& v : identity) v = proto.normal();
  for (auto& v : background) v = proto.normal();

  Draws layout(seed, (kLayoutStream << 32) + index);
  const double cy = layout.uniform(0.3, 0.7) * static_cast<double>(shape.height);
  const double cx = layout.uniform(0.3, 0.7) * static_cast<double>(shape.width);
  const double radius = layout.uniform(0.22, 0.32) * static_cast<double>(std::min(shape.height, shape.width));

  Draws noise(seed, (kNoiseStream << 32) + index);
  std::vector<bool> subject(tokens);
  std::vector<double> features(tokens * shape.dim);
  for (std::size_t t = 0; t < tokens; ++t) {
    const double y = static_cast<double>(t / shape.width) + 0.5;
    const double x = static_cast<double>(t % shape.width) + 0.5;
    subject[t] = std::hypot(y - cy, x - cx) <= radius;
    const auto& base = subject[t] ? identity : background;
    for (std::size_t k = 0; k < shape.dim; ++k) {
      // Values are rounded to float so that file round-trips are exact.
      features[t * shape.dim + k] = to_float(base[k] + 0.35 * noise.normal());
    }
  }

  std::vector<double> attention(shape.layers * tokens * shape.subject_tokens);
  for (std::size_t l = 0; l < shape.layers; ++l) {
    for (std::size_t t = 0; t < tokens; ++t) {
      for (std::size_t s = 0; s < shape.subject_tokens; ++s) {
        const double signal = subject[t] ? 2.0 : 0.0;
        attention[(l * tokens + t) * shape.subject_tokens + s] = to_float(signal + 0.3 * noise.normal());
      }
    }
  }

  HarvestedImage img;
  img.features = TokenMatrix(tokens, shape.dim, std::move(features));
  img.attention.layers = shape.layers;
  img.attention.tokens = tokens;
  img.attention.subject_tokens = shape.subject_tokens;
  img.attention.weights = std::move(attention);
  return img;
}

PipelineInputs inputs(std::uint64_t seed, std::size_t targets, const SceneShape& shape) {
  PipelineInputs in;
  in.reference = image(seed, 0, shape);
  for (std::size_t k = 0; k < targets; ++k) in.targets.push_back(image(seed, k + 1, shape));
  return in;
}

PoseSet keypoints(std::uint64_t seed, std::size_t images, std::size_t joints) {
  Draws draw(seed, kPoseStream);
  std::vector<Point2> skeleton(joints);
  for (auto& p : skeleton) p = {draw.uniform(-0.2, 0.2), draw.uniform(-0.25, 0.25)};

  PoseSet set{"synthetic-" + std::to_string(seed), {}};
  for (std::size_t n = 0; n < images; ++n) {
    const double angle = draw.uniform(-0.5, 0.5);
    const double scale = draw.uniform(0.7, 1.2);
    const double tx = draw.uniform(0.4, 0.6);
    const double ty = draw.uniform(0.4, 0.6);
    KeypointSet kp;
    kp.id = "img" + std::to_string(n);
    for (const auto& base : skeleton) {
      const double px = base[0] + 0.03 * draw.normal();
      const double py = base[1] + 0.03 * draw.normal();
      const double x = scale * (std::cos(angle) * px - std::sin(angle) * py) + tx;
      const double y = scale * (std::sin(angle) * px + std::cos(angle) * py) + ty;
      kp.points.push_back({to_float(std::clamp(x, 0.0, 1.0)), to_float(std::clamp(y, 0.0, 1.0))});
      kp.confidences.push_back(to_float(draw.uniform(0.4, 1.0)));
    }
    set.images.push_back(std::move(kp));
  }
  return set;
}

}  // namespace codi::synth
