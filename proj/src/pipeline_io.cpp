#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "codi/errors.hpp"
#include "codi/pipeline.hpp"
#include "codi/stable_json.hpp"

namespace codi {
namespace fs = std::filesystem;
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParameterError("config key '" + std::string(key) + "': cannot parse '" +
                         std::string(text) + "'");
  }
  return value;
}

Normalization parse_normalization(std::string_view text) {
  if (text == "retained") return Normalization::retained;
  if (text == "reference_only") return Normalization::reference_only;
  throw ParameterError("unknown normalization '" + std::string(text) +
                       "' (expected retained or reference_only)");
}

std::string step_name(std::size_t step) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "step_%03zu", step);
  return buf;
}

std::string target_file(std::size_t k, std::string_view what) {
  return "target_" + std::to_string(k) + "_" + std::string(what) + ".cft";
}

HarvestedImage read_image(const fs::path& features, const fs::path& attention) {
  HarvestedImage img;
  img.features = to_token_matrix(read_tensor(features));
  img.attention = AttentionStack::from_tensor(read_tensor(attention));
  return img;
}

Tensor attention_tensor(const AttentionStack& s) {
  return Tensor({static_cast<std::uint32_t>(s.layers), static_cast<std::uint32_t>(s.tokens),
                 static_cast<std::uint32_t>(s.subject_tokens)},
                std::vector<float>(s.weights.begin(), s.weights.end()));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParameterError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "total_steps") {
      cfg.total_steps = parse_number<std::size_t>(key, value);
    } else if (key == "t_switch") {
      cfg.t_switch = parse_number<std::size_t>(key, value);
    } else if (key == "alpha") {
      cfg.alpha = parse_number<double>(key, value);
    } else if (key == "transport_mode") {
      cfg.transport_mode = parse_transport_mode(value);
    } else if (key == "normalization") {
      cfg.normalization = parse_normalization(value);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(key, value);
    } else {
      throw ParameterError("config line " + std::to_string(line_no) + ": unknown key '" +
                           std::string(key) + "'");
    }
  }
  cfg.validate();
  return cfg;
}

std::string format_config(const PipelineConfig& cfg) {
  char alpha[32];
  std::snprintf(alpha, sizeof alpha, "%.17g", cfg.alpha);
  std::ostringstream out;
  out << "total_steps=" << cfg.total_steps << "\n"
      << "t_switch=" << cfg.t_switch << "\n"
      << "alpha=" << alpha << "\n"
      << "transport_mode=" << to_string(cfg.transport_mode) << "\n"
      << "normalization="
      << (cfg.normalization == Normalization::retained ? "retained" : "reference_only") << "\n"
      << "seed=" << cfg.seed << "\n";
  return out.str();
}

PipelineInputs read_inputs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("inputs directory not found: " + dir.string());
  PipelineInputs inputs;
  inputs.reference = read_image(dir / "ref_features.cft", dir / "ref_attention.cft");
  for (std::size_t k = 0; fs::exists(dir / target_file(k, "features")); ++k) {
    inputs.targets.push_back(read_image(dir / target_file(k, "features"), dir / target_file(k, "attention")));
  }
  if (inputs.targets.empty()) throw IoError("no target_0_features.cft in " + dir.string());
  return inputs;
}

void write_inputs(const PipelineInputs& inputs, const fs::path& dir) {
  fs::create_directories(dir);
  write_tensor(to_tensor(inputs.reference.features), dir / "ref_features.cft");
  write_tensor(attention_tensor(inputs.reference.attention), dir / "ref_attention.cft");
  for (std::size_t k = 0; k < inputs.targets.size(); ++k) {
    write_tensor(to_tensor(inputs.targets[k].features), dir / target_file(k, "features"));
    write_tensor(attention_tensor(inputs.targets[k].attention), dir / target_file(k, "attention"));
  }
}

void write_artifacts(const RunArtifacts& run, const fs::path& dir) {
  fs::create_directories(dir / "snapshots");
  write_text(dir / "config.cfg", format_config(run.config));

  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t t = 0; t < run.stages.size(); ++t) {
    steps.push_back({{"step", t + 1}, {"stage", std::string(stage_name(run.stages[t]))}});
  }
  write_text(dir / "stage_log.json",
             dump_stable({{"steps", steps},
                          {"t_switch", run.config.t_switch},
                          {"total_steps", run.config.total_steps},
                          {"targets", run.targets.size()}}));

  const auto describe = [](const SubjectState& s) {
    return nlohmann::json{{"mask_count", s.mask.count},
                          {"threshold", s.threshold},
                          {"degenerate", s.degenerate}};
  };
  nlohmann::json targets = nlohmann::json::array();
  for (std::size_t k = 0; k < run.targets.size(); ++k) {
    auto entry = describe(run.targets[k]);
    entry["objective"] = run.plans[k].objective;
    entry["pivots"] = run.plans[k].pivots;
    targets.push_back(entry);
  }
  write_text(dir / "run.json", dump_stable({{"alpha", run.config.alpha},
                                            {"reference", describe(run.reference)},
                                            {"selection", run.selection.indices},
                                            {"targets", targets}}));

  write_tensor(mask_tensor(run.reference.mask), dir / "mask_ref.cft");
  write_tensor(vector_tensor(run.reference.weights), dir / "weights_ref.cft");
  write_tensor(vector_tensor(run.saliency), dir / "saliency.cft");
  for (std::size_t k = 0; k < run.targets.size(); ++k) {
    write_tensor(mask_tensor(run.targets[k].mask), dir / target_file(k, "mask"));
    write_tensor(vector_tensor(run.targets[k].weights), dir / target_file(k, "weights"));
    write_tensor(cost_tensor(run.costs[k]), dir / ("cost_" + std::to_string(k) + ".cft"));
    write_tensor(plan_tensor(run.plans[k]), dir / ("plan_" + std::to_string(k) + ".cft"));
  }
  for (std::size_t t = 0; t < run.reference_snapshots.size(); ++t) {
    const auto base = dir / "snapshots" / step_name(t + 1);
    write_tensor(to_tensor(run.reference_snapshots[t]), base.string() + "_ref.cft");
    for (std::size_t k = 0; k < run.target_snapshots[t].size(); ++k) {
      write_tensor(to_tensor(run.target_snapshots[t][k]),
                   base.string() + "_target_" + std::to_string(k) + ".cft");
    }
  }
  if (!run.reference_snapshots.empty()) {
    write_tensor(to_tensor(run.reference_snapshots.back()), dir / "final_ref.cft");
    for (std::size_t k = 0; k < run.target_snapshots.back().size(); ++k) {
      write_tensor(to_tensor(run.target_snapshots.back()[k]), dir / target_file(k, "final"));
    }
  }
}

}  // namespace codi
