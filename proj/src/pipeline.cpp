#include "radstereo/pipeline.hpp"

#include "radstereo/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace radstereo {

DivisionDistortion division_template(CoordinateSpace space, const Intrinsics& intr, ImageSize image) {
  if (space == CoordinateSpace::pixel) return DivisionDistortion::pixel(0.0, image);
  double reach = 0.0;
  for (const PixelPoint& corner : {PixelPoint{0.0, 0.0}, PixelPoint{double(image.width), 0.0},
                                   PixelPoint{0.0, double(image.height)},
                                   PixelPoint{double(image.width), double(image.height)}})
    reach = std::max(reach, unproject(intr, corner).vec().norm());
  return DivisionDistortion::normalized(0.0, reach);
}

PlanarCorrespondences board_correspondences(const Board& board, CoordinateSpace space,
                                            const Intrinsics& left, const Intrinsics& right) {
  PlanarCorrespondences pc;
  pc.space = space;
  pc.pairs.reserve(board.observations.size());
  for (const auto& o : board.observations) {
    if (space == CoordinateSpace::pixel) {
      pc.pairs.push_back({{o.left.vec(), space}, {o.right.vec(), space}});
    } else {
      pc.pairs.push_back({{unproject(left, o.left).vec(), space},
                          {unproject(right, o.right).vec(), space}});
    }
  }
  return pc;
}

DivisionFile estimate_division_from_boards(std::span<const Board> boards,
                                           const CalibrationFile& calib, CoordinateSpace space,
                                           const CoefficientSearch& search) {
  if (boards.empty()) throw InvalidArgument("division estimate needs at least one board");
  const Intrinsics& il = calib.left.intrinsics;
  const Intrinsics& ir = calib.right.intrinsics;
  const DivisionDistortion tl = division_template(space, il, calib.image);
  const DivisionDistortion tr = division_template(space, ir, calib.image);

  DivisionFile out;
  double sum_l = 0.0, sum_r = 0.0;
  for (const auto& b : boards) {
    const DivisionPairEstimate e =
        estimate_division_pair(board_correspondences(b, space, il, ir), tl, tr, search);
    out.boards.push_back({b.index, e.lambda_left, e.lambda_right, e.residual});
    sum_l += e.lambda_left;
    sum_r += e.lambda_right;
  }
  const double n = static_cast<double>(boards.size());
  out.left = DivisionDistortion(sum_l / n, tl.center(), tl.scale(), space, tl.working_radius());
  out.right = DivisionDistortion(sum_r / n, tr.center(), tr.scale(), space, tr.working_radius());
  return out;
}

StereoModel model_for(ReconstructionMethod method, const CalibrationFile& calib,
                      const std::optional<DivisionFile>& division) {
  if (method == ReconstructionMethod::baseline) return {calib.left, calib.right, calib.rig};
  if (!division)
    throw InvalidArgument(std::string("method ") + to_string(method) + " needs division coefficients");
  return {DivisionCamera{calib.left.intrinsics, division->left},
          DivisionCamera{calib.right.intrinsics, division->right}, calib.rig};
}

std::vector<ReconstructionResult> reconstruct_boards(ReconstructionMethod method,
                                                     std::span<const Board> boards,
                                                     const CalibrationFile& calib,
                                                     const std::optional<DivisionFile>& division,
                                                     const ReconstructOptions& opts) {
  const StereoModel model = model_for(method, calib, division);
  std::vector<ReconstructionResult> out;
  out.reserve(boards.size());
  for (const auto& b : boards) {
    switch (method) {
      case ReconstructionMethod::baseline:
        out.push_back(reconstruct_baseline(std::get<PolyCamera>(model.left),
                                           std::get<PolyCamera>(model.right), model.rig,
                                           b.observations, opts.triangulation));
        break;
      case ReconstructionMethod::division_triangulate:
        out.push_back(reconstruct_division_triangulate(std::get<DivisionCamera>(model.left),
                                                       std::get<DivisionCamera>(model.right),
                                                       model.rig, b.observations, opts.triangulation));
        break;
      case ReconstructionMethod::division_sweep:
        out.push_back(reconstruct_plane_sweep(std::get<DivisionCamera>(model.left),
                                              std::get<DivisionCamera>(model.right), model.rig,
                                              b.observations, opts.sweep));
        break;
      case ReconstructionMethod::distorted_direct:
        out.push_back(reconstruct_distorted_direct(std::get<DivisionCamera>(model.left),
                                                   std::get<DivisionCamera>(model.right), model.rig,
                                                   b.observations));
        break;
    }
  }
  return out;
}

EvalReport evaluate_boards(std::span<const Board> boards,
                           std::span<const ReconstructionResult> results, const BoardGroundTruth& gt,
                           const StereoModel& model, const EvalConfig& cfg) {
  if (boards.size() != results.size())
    throw InvalidArgument("one reconstruction per board is required");
  std::vector<PlaneInput> planes;
  planes.reserve(boards.size());
  for (std::size_t i = 0; i < boards.size(); ++i)
    planes.push_back({"Plane " + std::to_string(i + 1), gt, boards[i].observations, results[i], model});
  return evaluate_planes(planes, cfg);
}

Dataset synthesize_dataset(const StereoModel& truth, ImageSize image, const BoardSetConfig& boards,
                           const NoiseSpec& noise) {
  Dataset ds;
  ds.gt = boards.gt;
  ds.image = image;
  const auto poses = random_board_poses(boards, truth.left, truth.right, truth.rig, image);
  for (int b = 0; b < static_cast<int>(poses.size()); ++b) {
    const SyntheticScene scene = make_board(boards.gt, poses[static_cast<std::size_t>(b)], b);
    const RenderOutput rendered = render_observations(scene, truth.left, truth.right, truth.rig, noise, image);
    if (!rendered.all_ok())
      throw InvalidArgument("board " + std::to_string(b) + ": noise moved a corner out of the image");
    ds.boards.push_back({b, rendered.observations, scene.points});
  }
  ds.validate();
  return ds;
}

StereoCalibration to_stereo_calibration(const CalibrationFile& calib) {
  return {calib.left, calib.right, calib.rig, calib.image};
}

std::vector<CrossvalSplit> run_crossval(const Dataset& ds, const CalibrationFile& calib,
                                        const CrossvalConfig& cfg) {
  const int n = static_cast<int>(ds.boards.size());
  if (cfg.eval <= 0) throw InvalidArgument("cross-validation needs a non-empty evaluation set");
  if (cfg.train < 0 || cfg.tests <= 0) throw InvalidArgument("invalid cross-validation split");
  const bool needs_division = cfg.method != ReconstructionMethod::baseline;
  if (needs_division && cfg.train == 0)
    throw InvalidArgument("division methods need at least one training board");
  if (cfg.train + cfg.eval > n)
    throw InvalidArgument("insufficient boards: split needs " + std::to_string(cfg.train + cfg.eval) +
                          ", dataset has " + std::to_string(n));
  ds.validate();

  EvalConfig ecfg;
  ecfg.planarity.use_ransac = true;
  ecfg.planarity.ransac = {0.15, 500, cfg.seed};
  ecfg.use_median = true;

  std::mt19937_64 rng(cfg.seed);
  std::vector<CrossvalSplit> out;
  for (int t = 0; t < cfg.tests; ++t) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates with an explicit draw: std::shuffle's use of the engine is
    // implementation-defined.
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    std::vector<Board> train, eval;
    CrossvalSplit split;
    for (int i = 0; i < cfg.train + cfg.eval; ++i) {
      const Board& b = ds.boards[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
      if (i < cfg.train) {
        train.push_back(b);
        split.train_boards.push_back(b.index);
      } else {
        eval.push_back(b);
        split.eval_boards.push_back(b.index);
      }
    }
    if (needs_division) split.division = estimate_division_from_boards(train, calib, cfg.space, cfg.search);
    const auto results = reconstruct_boards(cfg.method, eval, calib, split.division, cfg.reconstruct);
    split.report = evaluate_boards(eval, results, ds.gt, model_for(cfg.method, calib, split.division), ecfg);
    out.push_back(std::move(split));
  }
  return out;
}

}  // namespace radstereo
