#pragma once

#include "radstereo/estimation.hpp"
#include "radstereo/evaluation.hpp"
#include "radstereo/io.hpp"
#include "radstereo/reconstruction.hpp"
#include "radstereo/synth.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace radstereo {

// Template division model (lambda = 0) for one camera in the given space.
// Pixel: image center, scale half the width. Normalized: principal point,
// working radius reaching the farthest image corner.
DivisionDistortion division_template(CoordinateSpace space, const Intrinsics& intr, ImageSize image);

// Distorted correspondences of one board, unprojected first for the
// normalized space.
PlanarCorrespondences board_correspondences(const Board& board, CoordinateSpace space,
                                            const Intrinsics& left, const Intrinsics& right);

// Per-board joint estimates; the file's lambdas are their means.
DivisionFile estimate_division_from_boards(std::span<const Board> boards,
                                           const CalibrationFile& calib, CoordinateSpace space,
                                           const CoefficientSearch& search = {});

// Cameras used by a method: the polynomial calibration for the baseline, the
// calibration intrinsics with the division coefficients otherwise.
StereoModel model_for(ReconstructionMethod method, const CalibrationFile& calib,
                      const std::optional<DivisionFile>& division);

struct ReconstructOptions {
  SweepConfig sweep;
  TriangulationKind triangulation = TriangulationKind::midpoint;
};

// One result per board, in dataset order. Division methods need `division`.
std::vector<ReconstructionResult> reconstruct_boards(ReconstructionMethod method,
                                                     std::span<const Board> boards,
                                                     const CalibrationFile& calib,
                                                     const std::optional<DivisionFile>& division,
                                                     const ReconstructOptions& opts = {});

// Rows "Plane 1".."Plane N" in board order.
EvalReport evaluate_boards(std::span<const Board> boards,
                           std::span<const ReconstructionResult> results, const BoardGroundTruth& gt,
                           const StereoModel& model, const EvalConfig& cfg);

// Boards at random poses rendered through `truth`, with ground-truth corner
// positions attached. Throws InvalidArgument when noise pushes a corner out
// of the image.
Dataset synthesize_dataset(const StereoModel& truth, ImageSize image, const BoardSetConfig& boards,
                           const NoiseSpec& noise);

StereoCalibration to_stereo_calibration(const CalibrationFile& calib);

struct CrossvalConfig {
  int train = 10;
  int eval = 9;
  int tests = 3;
  std::uint64_t seed = 0;
  ReconstructionMethod method = ReconstructionMethod::division_triangulate;
  CoordinateSpace space = CoordinateSpace::pixel;
  CoefficientSearch search;
  ReconstructOptions reconstruct;
};

struct CrossvalSplit {
  std::vector<int> train_boards;  // board indices
  std::vector<int> eval_boards;
  std::optional<DivisionFile> division;
  EvalReport report;
};

// Each test shuffles the boards with a generator seeded once from cfg.seed,
// estimates division coefficients on the first `train` boards and evaluates
// the next `eval` ones with RANSAC planarity (0.15, 500 iterations) and the
// median distance error.
std::vector<CrossvalSplit> run_crossval(const Dataset& ds, const CalibrationFile& calib,
                                        const CrossvalConfig& cfg);

}  // namespace radstereo
