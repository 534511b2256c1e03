#include "codi/commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "codi/attention.hpp"
#include "codi/errors.hpp"
#include "codi/ot.hpp"
#include "codi/pipeline.hpp"
#include "codi/pose_eval.hpp"
#include "codi/stable_json.hpp"
#include "codi/subject_mask.hpp"
#include "codi/synth.hpp"
#include "codi/tensor.hpp"

namespace codi::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

void emit(const json& doc, const std::string& out_path, std::ostream& out) {
  const std::string text = dump_stable(doc);
  if (out_path.empty()) {
    out << text;
  } else {
    write_text(out_path, text);
  }
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<double> read_vector(const fs::path& path) {
  const Tensor t = read_tensor(path);
  if (t.rank() != 1) throw ShapeError(path.string() + ": expected a rank-1 tensor");
  return tensor_values(t);
}

double max_abs_diff(std::span<const double> lhs, std::span<const double> rhs) {
  double worst = 0.0;
  for (std::size_t k = 0; k < lhs.size(); ++k) worst = std::max(worst, std::abs(lhs[k] - rhs[k]));
  return worst;
}

double mean_row_norm(const TokenMatrix& m) {
  double total = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sq = 0.0;
    for (double v : m.row(r)) sq += v * v;
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(m.rows());
}

// --- mask -------------------------------------------------------------------------

struct MaskArgs {
  std::string attention;
  std::string out_mask;
  std::string out_weights;
};

int cmd_mask(const MaskArgs& a, std::ostream& out) {
  const auto stack = AttentionStack::from_tensor(read_tensor(a.attention));
  const auto saliency = average_attention(stack);
  const auto otsu = otsu_threshold(saliency);
  const auto weights = importance_weights(saliency, otsu.mask);
  write_tensor(mask_tensor(otsu.mask), a.out_mask);
  write_tensor(vector_tensor(weights), a.out_weights);

  json doc{{"bin", otsu.bin},
           {"degenerate", otsu.degenerate},
           {"mask_count", otsu.mask.count},
           {"threshold", otsu.threshold},
           {"tokens", saliency.size()}};
  if (otsu.degenerate) doc["warning"] = "saliency has no usable contrast; mask covers every token";
  out << dump_stable(doc);
  return kOk;
}

// --- ot -----------------------------------------------------------------------------

struct OtCostArgs {
  std::string reference;
  std::string target;
  std::string out;
};

int cmd_ot_cost(const OtCostArgs& a, std::ostream& out) {
  const auto c = cost_matrix(to_token_matrix(read_tensor(a.reference)),
                             to_token_matrix(read_tensor(a.target)));
  write_tensor(cost_tensor(c), a.out);
  out << dump_stable({{"cols", c.cols}, {"rows", c.rows}});
  return kOk;
}

struct OtSolveArgs {
  std::string a;
  std::string b;
  std::string cost;
  std::string out;
  std::string mode = "barycentric";
  std::string reference;
  std::string transported;
};

int cmd_ot_solve(const OtSolveArgs& args, std::ostream& out) {
  const auto mode = parse_transport_mode(args.mode);
  if (args.reference.empty() != args.transported.empty()) {
    throw ParameterError("--reference and --transported must be given together");
  }
  const auto a = read_vector(args.a);
  const auto b = read_vector(args.b);
  const auto cost = cost_from_tensor(read_tensor(args.cost));
  const auto plan = solve_ot(a, b, cost);
  write_tensor(plan_tensor(plan), args.out);

  std::size_t positive = 0;
  for (double t : plan.values) positive += t > 0.0 ? 1 : 0;
  json doc{{"objective", plan.objective},
           {"pivots", plan.pivots},
           {"positive_entries", positive},
           {"row_residual", max_abs_diff(plan.row_sums(), a)},
           {"col_residual", max_abs_diff(plan.col_sums(), b)},
           {"mode", std::string(to_string(mode))}};
  if (!args.reference.empty()) {
    const auto moved = transport_features(plan, to_token_matrix(read_tensor(args.reference)), mode);
    write_tensor(to_tensor(moved), args.transported);
    doc["transported_rows"] = moved.rows();
  }
  out << dump_stable(doc);
  return kOk;
}

// --- refine -------------------------------------------------------------------------

struct RefineArgs {
  std::string bundle_dir;
  std::string saliency;
  double alpha = kDefaultAlpha;
  std::string out;
  std::string normalization = "retained";
};

int cmd_refine(const RefineArgs& a, std::ostream& out) {
  const fs::path dir = a.bundle_dir;
  const auto load = [&](const char* name) { return to_token_matrix(read_tensor(dir / name)); };
  const AttentionBundle bundle{load("Qn.cft"), load("Kn.cft"), load("Vn.cft"), load("Kid.cft"),
                               load("Vid.cft")};
  const auto scores = read_vector(a.saliency);
  if (scores.size() != bundle.ref_keys.rows()) {
    throw ShapeError("saliency has " + std::to_string(scores.size()) + " entries, reference has " +
                     std::to_string(bundle.ref_keys.rows()) + " tokens");
  }
  const auto selection = select_top_alpha(scores, a.alpha);
  const auto norm = a.normalization == "retained" ? Normalization::retained : Normalization::reference_only;
  const auto z = refine_attention(bundle, selection, norm);
  write_tensor(to_tensor(z), a.out);
  out << dump_stable({{"alpha", a.alpha}, {"selected", selection.indices}, {"rows", z.rows()}});
  return kOk;
}

// --- run / report -------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string inputs;
  std::string out;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  std::ifstream f(a.config);
  if (!f) throw IoError("cannot open config " + a.config);
  std::stringstream text;
  text << f.rdbuf();
  const auto cfg = parse_config(text.str());
  const auto run = run_pipeline(cfg, read_inputs(a.inputs));
  write_artifacts(run, a.out);

  std::size_t it_steps = 0;
  for (auto s : run.stages) it_steps += s == Stage::identity_transport ? 1 : 0;
  out << dump_stable({{"ir_steps", run.stages.size() - it_steps},
                      {"it_steps", it_steps},
                      {"selected", run.selection.indices.size()},
                      {"targets", run.targets.size()}});
  return kOk;
}

struct ReportArgs {
  std::string run_dir;
  std::string out;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const fs::path dir = a.run_dir;
  const fs::path log_path = dir / "stage_log.json";
  if (!fs::exists(log_path)) throw IoError("missing run artifact " + log_path.string());
  const json log = read_json(log_path);
  if (!log.contains("steps") || !log.contains("targets")) {
    throw FormatError(log_path.string() + " lacks steps/targets");
  }
  const std::size_t targets = log["targets"].get<std::size_t>();
  const json& steps = log["steps"];

  const auto a_ref = read_vector(dir / "weights_ref.cft");
  json plans = json::array();
  for (std::size_t k = 0; k < targets; ++k) {
    const auto plan = plan_from_tensor(read_tensor(dir / ("plan_" + std::to_string(k) + ".cft")));
    const auto b = read_vector(dir / ("target_" + std::to_string(k) + "_weights.cft"));
    if (plan.rows != a_ref.size() || plan.cols != b.size()) {
      throw ShapeError("plan " + std::to_string(k) + " does not match its mass vectors");
    }
    plans.push_back({{"target", k},
                     {"row_residual", max_abs_diff(plan.row_sums(), a_ref)},
                     {"col_residual", max_abs_diff(plan.col_sums(), b)}});
  }

  json norms = json::array();
  for (std::size_t t = 1; t <= steps.size(); ++t) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "step_%03zu", t);
    const fs::path base = dir / "snapshots" / stem;
    json per_target = json::array();
    for (std::size_t k = 0; k < targets; ++k) {
      per_target.push_back(mean_row_norm(
          to_token_matrix(read_tensor(base.string() + "_target_" + std::to_string(k) + ".cft"))));
    }
    norms.push_back({{"step", t},
                     {"reference", mean_row_norm(to_token_matrix(read_tensor(base.string() + "_ref.cft")))},
                     {"targets", per_target}});
  }
  emit({{"stages", steps}, {"plans", plans}, {"feature_norms", norms}}, a.out, out);
  return kOk;
}

// --- eval ---------------------------------------------------------------------------

struct PoseArgs {
  std::string keypoints;
  double tau = kDefaultTau;
  std::vector<double> sweep;
  bool literal_frame = false;
  bool proper_rotation = false;
  std::string out;
};

int cmd_eval_pose(const PoseArgs& a, std::ostream& out) {
  const auto sets = parse_keypoints(read_json(a.keypoints));
  const ProcrustesOptions options{a.proper_rotation, a.literal_frame};
  json doc = report_json(pose_diversity(sets, a.tau, options));
  doc["tau"] = a.tau;
  if (!a.sweep.empty()) {
    json sweep = json::array();
    for (const auto& p : tau_sweep(sets, a.sweep, options)) sweep.push_back({{"tau", p.tau}, {"score", p.score}});
    doc["sweep"] = sweep;
  }
  emit(doc, a.out, out);
  return kOk;
}

struct ConsistencyArgs {
  std::string embeddings;
  std::string kind = "similarity";
  std::string out;
};

int cmd_eval_consistency(const ConsistencyArgs& a, std::ostream& out) {
  const auto kind = parse_consistency_kind(a.kind);
  const Tensor t = read_tensor(a.embeddings);
  std::vector<TokenMatrix> sets;
  if (t.rank() == 2) {
    sets.push_back(to_token_matrix(t));
  } else if (t.rank() == 3) {
    const std::size_t stride = std::size_t{t.shape[1]} * t.shape[2];
    for (std::size_t k = 0; k < t.shape[0]; ++k) {
      sets.emplace_back(t.shape[1], t.shape[2],
                        std::vector<double>(t.data.begin() + static_cast<std::ptrdiff_t>(k * stride),
                                            t.data.begin() + static_cast<std::ptrdiff_t>((k + 1) * stride)));
    }
  } else {
    throw ShapeError("embeddings must be rank 2 (N, e) or rank 3 (K, N, e)");
  }
  EvalReport report;
  std::vector<double> scores;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const auto r = embedding_consistency(sets[k], kind);
    report.per_set.push_back({std::to_string(k), r.value, true, r.evaluated, r.skipped});
    scores.push_back(r.value);
  }
  report.overall = dataset_average(scores);
  json doc = report_json(report);
  doc["kind"] = a.kind;
  emit(doc, a.out, out);
  return kOk;
}

// --- synth --------------------------------------------------------------------------

struct SynthArgs {
  std::string kind;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t targets = 3;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const synth::SceneShape shape;
  if (a.kind == "features") {
    const auto img = synth::image(a.seed, 0, shape);
    auto t = to_tensor(img.features);
    t.shape = {static_cast<std::uint32_t>(shape.height), static_cast<std::uint32_t>(shape.width),
               static_cast<std::uint32_t>(shape.dim)};
    write_tensor(t, a.out);
  } else if (a.kind == "attention") {
    const auto img = synth::image(a.seed, 0, shape);
    write_tensor(Tensor({static_cast<std::uint32_t>(img.attention.layers),
                         static_cast<std::uint32_t>(img.attention.tokens),
                         static_cast<std::uint32_t>(img.attention.subject_tokens)},
                        std::vector<float>(img.attention.weights.begin(), img.attention.weights.end())),
                 a.out);
  } else if (a.kind == "keypoints") {
    const PoseSet set = synth::keypoints(a.seed);
    write_text(a.out, dump_stable(keypoints_json(std::span(&set, 1))));
  } else {
    write_inputs(synth::inputs(a.seed, a.targets, shape), a.out);
  }
  out << dump_stable({{"kind", a.kind}, {"out", a.out}, {"seed", a.seed}});
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParameterError*>(&e)) return kUsage;
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const CorruptionError*>(&e) ||
      dynamic_cast<const IoError*>(&e) || dynamic_cast<const ShapeError*>(&e)) {
    return kInputFormat;
  }
  if (dynamic_cast<const json::exception*>(&e)) return kInputFormat;
  return kValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"codi: subject-consistent feature transport, refinement and evaluation"};
  app.require_subcommand(1);
  std::function<int()> action;

  MaskArgs mask;
  auto* mask_cmd = app.add_subcommand("mask", "Subject mask and importance weights from an attention stack");
  mask_cmd->add_option("--attn", mask.attention, "CFT1 rank-3 (L, tokens, S) attention stack")->required();
  mask_cmd->add_option("--out-mask", mask.out_mask, "Output mask (rank-1, 0/1)")->required();
  mask_cmd->add_option("--out-weights", mask.out_weights, "Output importance weights")->required();
  mask_cmd->callback([&] { action = [&] { return cmd_mask(mask, out); }; });

  auto* ot_cmd = app.add_subcommand("ot", "Optimal transport between subject feature sets");
  ot_cmd->require_subcommand(1);
  OtCostArgs cost;
  auto* cost_cmd = ot_cmd->add_subcommand("cost", "Cosine-distance cost matrix");
  cost_cmd->add_option("--reference", cost.reference, "Reference subject features (rows x d)")->required();
  cost_cmd->add_option("--target", cost.target, "Target subject features (rows x d)")->required();
  cost_cmd->add_option("--out", cost.out, "Output cost matrix")->required();
  cost_cmd->callback([&] { action = [&] { return cmd_ot_cost(cost, out); }; });

  OtSolveArgs solve;
  auto* solve_cmd = ot_cmd->add_subcommand("solve", "Exact transport plan by network simplex");
  solve_cmd->add_option("--a", solve.a, "Reference masses (rank-1)")->required();
  solve_cmd->add_option("--b", solve.b, "Target masses (rank-1)")->required();
  solve_cmd->add_option("--cost", solve.cost, "Cost matrix (rank-2)")->required();
  solve_cmd->add_option("--out", solve.out, "Output plan")->required();
  solve_cmd->add_option("--mode", solve.mode, "Feature transport mode")
      ->check(CLI::IsMember({"barycentric", "literal"}));
  solve_cmd->add_option("--reference", solve.reference, "Reference subject features to transport");
  solve_cmd->add_option("--transported", solve.transported, "Output transported features");
  solve_cmd->callback([&] { action = [&] { return cmd_ot_solve(solve, out); }; });

  RefineArgs refine;
  auto* refine_cmd = app.add_subcommand("refine", "Top-alpha filtered cross-image attention");
  refine_cmd->add_option("--bundle-dir", refine.bundle_dir, "Directory with Qn/Kn/Vn/Kid/Vid .cft")->required();
  refine_cmd->add_option("--saliency", refine.saliency, "Reference saliency scores (rank-1)")->required();
  refine_cmd->add_option("--alpha", refine.alpha, "Fraction of reference tokens kept");
  refine_cmd->add_option("--out", refine.out, "Output attention result")->required();
  refine_cmd->add_option("--normalization", refine.normalization, "Row normalization set")
      ->check(CLI::IsMember({"retained", "reference_only"}));
  refine_cmd->callback([&] { action = [&] { return cmd_refine(refine, out); }; });

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Two-stage schedule over the toy denoiser");
  run_cmd->add_option("--config", run_args.config, "key=value config file")->required();
  run_cmd->add_option("--inputs", run_args.inputs, "Directory of harvested features/attention")->required();
  run_cmd->add_option("--out", run_args.out, "Artifact directory")->required();
  run_cmd->callback([&] { action = [&] { return cmd_run(run_args, out); }; });

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Plot-ready JSON summary of a run directory");
  report_cmd->add_option("--run-dir", report.run_dir, "Directory written by `codi run`")->required();
  report_cmd->add_option("--out", report.out, "Output JSON (stdout if omitted)");
  report_cmd->callback([&] { action = [&] { return cmd_report(report, out); }; });

  auto* eval_cmd = app.add_subcommand("eval", "Evaluation protocol");
  eval_cmd->require_subcommand(1);
  PoseArgs pose;
  auto* pose_cmd = eval_cmd->add_subcommand("pose", "Procrustes pose-diversity score");
  pose_cmd->add_option("--keypoints", pose.keypoints, "Keypoint JSON")->required();
  pose_cmd->add_option("--tau", pose.tau, "Confidence threshold");
  pose_cmd->add_option("--sweep", pose.sweep, "Extra thresholds to sweep")->delimiter(',');
  pose_cmd->add_flag("--literal-frame", pose.literal_frame, "Compare against raw target keypoints");
  pose_cmd->add_flag("--proper-rotation", pose.proper_rotation, "Disallow reflections");
  pose_cmd->add_option("--out", pose.out, "Output JSON (stdout if omitted)");
  pose_cmd->callback([&] { action = [&] { return cmd_eval_pose(pose, out); }; });

  ConsistencyArgs consistency;
  auto* cons_cmd = eval_cmd->add_subcommand("consistency", "Pairwise embedding consistency");
  cons_cmd->add_option("--embeddings", consistency.embeddings, "CFT1 (N, e) or (K, N, e)")->required();
  cons_cmd->add_option("--kind", consistency.kind, "similarity or distance")
      ->check(CLI::IsMember({"similarity", "distance"}));
  cons_cmd->add_option("--out", consistency.out, "Output JSON (stdout if omitted)");
  cons_cmd->callback([&] { action = [&] { return cmd_eval_consistency(consistency, out); }; });

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Deterministic synthetic fixtures");
  synth_cmd->add_option("--kind", synth_args.kind, "features | attention | keypoints | inputs")
      ->required()
      ->check(CLI::IsMember({"features", "attention", "keypoints", "inputs"}));
  synth_cmd->add_option("--seed", synth_args.seed, "Generator seed");
  synth_cmd->add_option("--out", synth_args.out, "Output file (directory for inputs)")->required();
  synth_cmd->add_option("--targets", synth_args.targets, "Target images for kind=inputs");
  synth_cmd->callback([&] { action = [&] { return cmd_synth(synth_args, out); }; });

  std::vector<const char*> argv{"codi"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    return action();
  } catch (const std::exception& e) {
    err << "codi: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace codi::cli
