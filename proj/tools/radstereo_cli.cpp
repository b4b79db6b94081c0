// radstereo: batch front-end for the distortion-model comparison.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 usage, 3 malformed or unreadable
// file, 4 invalid value, 5 numerical failure.

#include "radstereo/error.hpp"
#include "radstereo/format.hpp"
#include "radstereo/io.hpp"
#include "radstereo/pipeline.hpp"
#include "radstereo/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

using namespace radstereo;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kUsage = 2, kFormat = 3, kInvalid = 4, kNumerical = 5 };

struct Inputs {
  std::string calib;
  std::string dataset;
  std::string division;
};

// Loads a file and records its digest in the report config.
std::string digest_into(Report& rep, const std::string& key, const std::string& path) {
  std::string bytes = read_file(path);
  rep.config["input." + key + ".sha256"] = sha256_hex(bytes);
  return bytes;
}

std::optional<DivisionFile> load_optional_division(Report& rep, const std::string& path) {
  if (path.empty()) return std::nullopt;
  return parse_division(digest_into(rep, "division", path));
}

void print_rows(const std::vector<EvalRow>& rows) {
  std::printf("%-16s %14s %14s %14s %7s\n", "", "P-average(mm)", "D-average(mm)", "R(px)", "failed");
  for (const auto& r : rows)
    std::printf("%-16s %14.6f %14.6f %14.6f %7zu\n", r.label.c_str(), r.p_average, r.d_average, r.r,
                r.failed);
}

void add_eval_config(Report& rep, const EvalReport& er) {
  for (const auto& [k, v] : er.config) rep.config["eval." + k] = v;
}

void add_sweep_config(Report& rep, const SweepConfig& s) {
  rep.config["sweep.z_min"] = format_double(s.z_min);
  rep.config["sweep.z_max"] = format_double(s.z_max);
  rep.config["sweep.step"] = format_double(s.step);
  rep.config["sweep.score"] = s.score == SweepScore::squared_distance ? "squared-distance" : "distance";
}

void add_search_config(Report& rep, const CoefficientSearch& s) {
  rep.config["search.min"] = format_double(s.min);
  rep.config["search.max"] = format_double(s.max);
  rep.config["search.step"] = format_double(s.step);
  rep.config["search.tolerance"] = format_double(s.tolerance);
  rep.config["search.max_sweeps"] = std::to_string(s.max_sweeps);
}

void add_board_config(Report& rep, const BoardSetConfig& b, const NoiseSpec& n) {
  rep.config["boards.count"] = std::to_string(b.count);
  rep.config["boards.rows"] = std::to_string(b.gt.rows);
  rep.config["boards.cols"] = std::to_string(b.gt.cols);
  rep.config["boards.spacing"] = format_double(b.gt.spacing);
  rep.config["boards.depth_min"] = format_double(b.depth_min);
  rep.config["boards.depth_max"] = format_double(b.depth_max);
  rep.config["boards.max_tilt"] = format_double(b.max_tilt);
  rep.config["boards.seed"] = std::to_string(b.seed);
  rep.config["noise.sigma"] = format_double(n.sigma);
  rep.config["noise.seed"] = std::to_string(n.seed);
  rep.config["noise.round_to_tenth"] = n.round_to_tenth ? "true" : "false";
}

std::string lambda_text(const DivisionFile& d) {
  return format_double(d.left.lambda()) + " " + format_double(d.right.lambda());
}

// synth ---------------------------------------------------------------------

struct SynthArgs {
  Inputs in;
  std::string model = "poly";
  int boards = 19;
  std::uint64_t seed = 0;
  double noise = 0.0;
  bool round = false;
  std::string out, report;
};

int run_synth(const SynthArgs& a) {
  Report rep;
  rep.command = "synth";
  const CalibrationFile calib = parse_calibration(digest_into(rep, "calib", a.in.calib));
  rep.config["model"] = a.model;

  StereoModel truth{calib.left, calib.right, calib.rig};
  if (a.model == "division") {
    if (a.in.division.empty()) throw InvalidArgument("--model division needs --division");
    const DivisionFile d = parse_division(digest_into(rep, "division", a.in.division));
    truth = model_for(ReconstructionMethod::division_triangulate, calib, d);
  }

  BoardSetConfig bc;
  bc.count = a.boards;
  bc.seed = a.seed;
  const NoiseSpec noise{a.noise, a.seed, a.round};
  add_board_config(rep, bc, noise);

  const Dataset ds = synthesize_dataset(truth, calib.image, bc, noise);
  save_dataset(a.out, ds);
  rep.summary["boards"] = std::to_string(ds.boards.size());
  rep.summary["points"] = std::to_string(ds.boards.size() * static_cast<std::size_t>(bc.gt.point_count()));
  rep.summary["output.sha256"] = sha256_hex(serialize_dataset(ds));
  write_file(a.report, serialize_report(rep));

  std::printf("%-6s %8s %12s\n", "board", "points", "mean Z(mm)");
  for (const auto& b : ds.boards) {
    double z = 0.0;
    for (const auto& p : b.truth) z += p.position.z();
    std::printf("%-6d %8zu %12.4f\n", b.index, b.observations.size(), z / static_cast<double>(b.truth.size()));
  }
  return kOk;
}

// estimate-division ---------------------------------------------------------

struct EstimateArgs {
  Inputs in;
  std::string space = "pixel";
  CoefficientSearch search;
  std::string out, report;
};

CoordinateSpace parse_space(const std::string& s) {
  return s == "normalized" ? CoordinateSpace::normalized : CoordinateSpace::pixel;
}

int run_estimate(const EstimateArgs& a) {
  Report rep;
  rep.command = "estimate-division";
  const CalibrationFile calib = parse_calibration(digest_into(rep, "calib", a.in.calib));
  const Dataset ds = parse_dataset(digest_into(rep, "dataset", a.in.dataset));
  rep.config["space"] = a.space;
  rep.config["aggregate"] = "mean";
  add_search_config(rep, a.search);

  const DivisionFile d = estimate_division_from_boards(ds.boards, calib, parse_space(a.space), a.search);
  save_division(a.out, d);
  rep.summary["lambda_left"] = format_double(d.left.lambda());
  rep.summary["lambda_right"] = format_double(d.right.lambda());
  rep.summary["boards"] = std::to_string(d.boards.size());
  rep.summary["output.sha256"] = sha256_hex(serialize_division(d));
  write_file(a.report, serialize_report(rep));

  std::printf("%-6s %14s %14s %14s\n", "board", "lambda", "lambda'", "residual");
  for (const auto& b : d.boards)
    std::printf("%-6d %14.8f %14.8f %14.6e\n", b.board, b.lambda_left, b.lambda_right, b.residual);
  std::printf("%-6s %14.8f %14.8f\n", "mean", d.left.lambda(), d.right.lambda());
  return kOk;
}

// reconstruct / evaluate ----------------------------------------------------

struct ReconstructArgs {
  Inputs in;
  std::string method = "baseline";
  std::string triangulation = "midpoint";
  SweepConfig sweep;
  std::string out, report;
};

ReconstructOptions reconstruct_options(const ReconstructArgs& a) {
  ReconstructOptions opts;
  opts.sweep = a.sweep;
  opts.triangulation = a.triangulation == "linear" ? TriangulationKind::linear : TriangulationKind::midpoint;
  return opts;
}

void add_method_config(Report& rep, const ReconstructArgs& a, ReconstructionMethod m) {
  rep.config["method"] = to_string(m);
  if (m == ReconstructionMethod::division_sweep) add_sweep_config(rep, a.sweep);
  if (m == ReconstructionMethod::baseline || m == ReconstructionMethod::division_triangulate)
    rep.config["triangulation"] = a.triangulation;
}

int run_reconstruct(const ReconstructArgs& a) {
  Report rep;
  rep.command = "reconstruct";
  const CalibrationFile calib = parse_calibration(digest_into(rep, "calib", a.in.calib));
  const Dataset ds = parse_dataset(digest_into(rep, "dataset", a.in.dataset));
  const auto division = load_optional_division(rep, a.in.division);
  const ReconstructionMethod method = method_from_string(a.method);
  add_method_config(rep, a, method);

  const auto results = reconstruct_boards(method, ds.boards, calib, division, reconstruct_options(a));
  ReconstructionResult merged;
  merged.method = method;
  for (const auto& r : results) merged.points.insert(merged.points.end(), r.points.begin(), r.points.end());
  const std::string points = serialize_points(merged);
  write_file(a.out, points);
  rep.summary["points"] = std::to_string(merged.points.size());
  rep.summary["failed"] = std::to_string(merged.failed_count());
  rep.summary["output.sha256"] = sha256_hex(points);
  write_file(a.report, serialize_report(rep));

  std::printf("%-6s %8s %8s %12s\n", "board", "points", "failed", "mean Z(mm)");
  for (std::size_t i = 0; i < results.size(); ++i) {
    double z = 0.0;
    std::size_t ok = 0;
    for (const auto& p : results[i].points)
      if (p.ok()) z += p.position.z(), ++ok;
    std::printf("%-6d %8zu %8zu %12.4f\n", ds.boards[i].index, results[i].points.size(),
                results[i].failed_count(), ok ? z / static_cast<double>(ok) : 0.0);
  }
  return kOk;
}

struct EvaluateArgs {
  ReconstructArgs rec;
  bool ransac = false;
  bool median = false;
  RansacConfig ransac_cfg;
};

int run_evaluate(const EvaluateArgs& a) {
  Report rep;
  rep.command = "evaluate";
  const CalibrationFile calib = parse_calibration(digest_into(rep, "calib", a.rec.in.calib));
  const Dataset ds = parse_dataset(digest_into(rep, "dataset", a.rec.in.dataset));
  const auto division = load_optional_division(rep, a.rec.in.division);
  const ReconstructionMethod method = method_from_string(a.rec.method);
  add_method_config(rep, a.rec, method);

  EvalConfig ecfg;
  ecfg.planarity.use_ransac = a.ransac;
  ecfg.planarity.ransac = a.ransac_cfg;
  ecfg.use_median = a.median;

  const auto results = reconstruct_boards(method, ds.boards, calib, division, reconstruct_options(a.rec));
  const EvalReport er = evaluate_boards(ds.boards, results, ds.gt, model_for(method, calib, division), ecfg);
  add_eval_config(rep, er);
  rep.tables.push_back({"planes", er.rows});
  write_file(a.rec.report, serialize_report(rep));
  print_rows(er.rows);
  return kOk;
}

// crossval ------------------------------------------------------------------

struct CrossvalArgs {
  Inputs in;
  std::string method = "division-triangulate";
  std::string space = "pixel";
  CrossvalConfig cfg;
  std::string report;
};

int run_crossval_cmd(CrossvalArgs a) {
  Report rep;
  rep.command = "crossval";
  const CalibrationFile calib = parse_calibration(digest_into(rep, "calib", a.in.calib));
  const Dataset ds = parse_dataset(digest_into(rep, "dataset", a.in.dataset));
  a.cfg.method = method_from_string(a.method);
  a.cfg.space = parse_space(a.space);
  rep.config["method"] = a.method;
  rep.config["space"] = a.space;
  rep.config["train"] = std::to_string(a.cfg.train);
  rep.config["eval"] = std::to_string(a.cfg.eval);
  rep.config["tests"] = std::to_string(a.cfg.tests);
  rep.config["seed"] = std::to_string(a.cfg.seed);
  add_search_config(rep, a.cfg.search);
  if (a.cfg.method == ReconstructionMethod::division_sweep) add_sweep_config(rep, a.cfg.reconstruct.sweep);

  const auto splits = run_crossval(ds, calib, a.cfg);
  for (std::size_t t = 0; t < splits.size(); ++t) {
    const auto& s = splits[t];
    const std::string name = "test " + std::to_string(t + 1);
    add_eval_config(rep, s.report);
    std::string train, eval;
    for (int b : s.train_boards) train += (train.empty() ? "" : " ") + std::to_string(b);
    for (int b : s.eval_boards) eval += (eval.empty() ? "" : " ") + std::to_string(b);
    rep.summary[name + ".train_boards"] = train;
    rep.summary[name + ".eval_boards"] = eval;
    if (s.division) rep.summary[name + ".lambdas"] = lambda_text(*s.division);
    rep.tables.push_back({name, s.report.rows});

    std::printf("%s  train [%s]  eval [%s]\n", name.c_str(), train.c_str(), eval.c_str());
    if (s.division) std::printf("  lambda %.8f  lambda' %.8f\n", s.division->left.lambda(), s.division->right.lambda());
    print_rows(s.report.rows);
  }
  write_file(a.report, serialize_report(rep));
  return kOk;
}

// compare-models ------------------------------------------------------------

struct CompareArgs {
  Inputs in;
  std::uint64_t seed = 0;
  int boards = 19;
  double noise = 0.0;
  bool round = false;
  std::string report;
};

int run_compare(const CompareArgs& a) {
  Report rep;
  rep.command = "compare-models";
  const CalibrationFile calib = parse_calibration(digest_into(rep, "calib", a.in.calib));
  rep.config["seed"] = std::to_string(a.seed);

  // Division coefficients come from a file or from boards rendered with the
  // polynomial truth.
  DivisionFile division;
  if (!a.in.division.empty()) {
    division = parse_division(digest_into(rep, "division", a.in.division));
  } else {
    BoardSetConfig bc;
    bc.count = a.boards;
    bc.seed = a.seed;
    add_board_config(rep, bc, NoiseSpec{});
    const Dataset ds = synthesize_dataset({calib.left, calib.right, calib.rig}, calib.image, bc, {});
    const CoefficientSearch search;
    add_search_config(rep, search);
    division = estimate_division_from_boards(ds.boards, calib, CoordinateSpace::pixel, search);
  }
  rep.summary["lambdas"] = lambda_text(division);

  ComparisonConfig cc;
  cc.noise = {a.noise, a.seed, a.round};
  rep.config["scene.noise.sigma"] = format_double(cc.noise.sigma);
  rep.config["scene.noise.round_to_tenth"] = cc.noise.round_to_tenth ? "true" : "false";
  add_sweep_config(rep, cc.sweep);
  const ComparisonOutcome out =
      comparison_experiment(to_stereo_calibration(calib), DivisionCamera{calib.left.intrinsics, division.left},
                            DivisionCamera{calib.right.intrinsics, division.right}, cc);
  add_eval_config(rep, out.report);
  rep.tables.push_back({"comparison", out.report.rows});
  write_file(a.report, serialize_report(rep));
  std::printf("lambda %.8f  lambda' %.8f\n", division.left.lambda(), division.right.lambda());
  print_rows(out.report.rows);
  return kOk;
}

void add_sweep_options(CLI::App* cmd, SweepConfig& s) {
  cmd->add_option("--z-min", s.z_min, "Sweep start depth (mm)")->capture_default_str();
  cmd->add_option("--z-max", s.z_max, "Sweep end depth (mm)")->capture_default_str();
  cmd->add_option("--z-step", s.step, "Sweep step (mm)")->capture_default_str();
}

const std::vector<std::string> kMethods{"baseline", "division-triangulate", "division-sweep",
                                        "distorted-direct"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo reconstruction with polynomial and division distortion models"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Render synthetic checkerboards through a calibration");
  c_synth->add_option("--calib", synth.in.calib, "Calibration file")->required();
  c_synth->add_option("--model", synth.model, "Truth model")
      ->check(CLI::IsMember({"poly", "division"}))->capture_default_str();
  c_synth->add_option("--division", synth.in.division, "Division file for --model division");
  c_synth->add_option("--boards", synth.boards, "Number of boards")->capture_default_str();
  c_synth->add_option("--seed", synth.seed, "Seed for poses and noise")->capture_default_str();
  c_synth->add_option("--noise", synth.noise, "Pixel noise sigma")->capture_default_str();
  c_synth->add_flag("--round", synth.round, "Round pixels to 0.1");
  c_synth->add_option("--out", synth.out, "Dataset CSV to write")->required();
  c_synth->add_option("--report", synth.report, "Report file to write")->required();

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate-division", "Estimate division coefficients per board");
  c_est->add_option("--calib", est.in.calib, "Calibration file")->required();
  c_est->add_option("--dataset", est.in.dataset, "Dataset CSV")->required();
  c_est->add_option("--space", est.space, "Coordinate space")
      ->check(CLI::IsMember({"pixel", "normalized"}))->capture_default_str();
  c_est->add_option("--lambda-min", est.search.min)->capture_default_str();
  c_est->add_option("--lambda-max", est.search.max)->capture_default_str();
  c_est->add_option("--lambda-step", est.search.step)->capture_default_str();
  c_est->add_option("--out", est.out, "Division file to write")->required();
  c_est->add_option("--report", est.report, "Report file to write")->required();

  ReconstructArgs rec;
  auto* c_rec = app.add_subcommand("reconstruct", "Reconstruct 3D corners");
  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Reconstruct and score each board");
  for (auto [cmd, r] : {std::pair{c_rec, &rec}, std::pair{c_ev, &ev.rec}}) {
    cmd->add_option("--calib", r->in.calib, "Calibration file")->required();
    cmd->add_option("--dataset", r->in.dataset, "Dataset CSV")->required();
    cmd->add_option("--division", r->in.division, "Division file (division methods)");
    cmd->add_option("--method", r->method, "Reconstruction method")
        ->check(CLI::IsMember(kMethods))->capture_default_str();
    cmd->add_option("--triangulation", r->triangulation, "Triangulation primitive")
        ->check(CLI::IsMember({"midpoint", "linear"}))->capture_default_str();
    add_sweep_options(cmd, r->sweep);
    cmd->add_option("--report", r->report, "Report file to write")->required();
  }
  c_rec->add_option("--out", rec.out, "Points CSV to write")->required();
  c_ev->add_flag("--ransac", ev.ransac, "RANSAC plane fit for P");
  c_ev->add_flag("--median", ev.median, "Median instead of mean for D");
  c_ev->add_option("--seed", ev.ransac_cfg.seed, "RANSAC seed")->capture_default_str();
  c_ev->add_option("--ransac-threshold", ev.ransac_cfg.threshold_fraction)->capture_default_str();
  c_ev->add_option("--ransac-iterations", ev.ransac_cfg.iterations)->capture_default_str();

  CrossvalArgs cv;
  auto* c_cv = app.add_subcommand("crossval", "Estimate on training boards, evaluate on the rest");
  c_cv->add_option("--calib", cv.in.calib, "Calibration file")->required();
  c_cv->add_option("--dataset", cv.in.dataset, "Dataset CSV")->required();
  c_cv->add_option("--method", cv.method, "Reconstruction method")
      ->check(CLI::IsMember(kMethods))->capture_default_str();
  c_cv->add_option("--space", cv.space, "Division coordinate space")
      ->check(CLI::IsMember({"pixel", "normalized"}))->capture_default_str();
  c_cv->add_option("--train", cv.cfg.train)->capture_default_str();
  c_cv->add_option("--eval", cv.cfg.eval)->capture_default_str();
  c_cv->add_option("--tests", cv.cfg.tests)->capture_default_str();
  c_cv->add_option("--seed", cv.cfg.seed)->capture_default_str();
  add_sweep_options(c_cv, cv.cfg.reconstruct.sweep);
  c_cv->add_option("--report", cv.report, "Report file to write")->required();

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare-models", "Six-point comparison of the pipelines");
  c_cmp->add_option("--calib", cmp.in.calib, "Calibration file (polynomial truth)")->required();
  c_cmp->add_option("--division", cmp.in.division, "Division file; estimated from synthetic boards if absent");
  c_cmp->add_option("--seed", cmp.seed)->capture_default_str();
  c_cmp->add_option("--boards", cmp.boards, "Boards for the division estimate")->capture_default_str();
  c_cmp->add_option("--noise", cmp.noise, "Pixel noise on the six-point scene")->capture_default_str();
  c_cmp->add_flag("--round", cmp.round, "Round the scene's pixels to 0.1");
  c_cmp->add_option("--report", cmp.report, "Report file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c_synth->parsed()) return run_synth(synth);
    if (c_est->parsed()) return run_estimate(est);
    if (c_rec->parsed()) return run_reconstruct(rec);
    if (c_ev->parsed()) return run_evaluate(ev);
    if (c_cv->parsed()) return run_crossval_cmd(cv);
    if (c_cmp->parsed()) return run_compare(cmp);
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFormat;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kUsage;
}
