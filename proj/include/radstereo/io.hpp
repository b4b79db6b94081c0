#pragma once

#include "radstereo/evaluation.hpp"
#include "radstereo/reconstruction.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace radstereo {

// Standard deviations published next to the calibration values. Keys are
// parameter names (fx, fy, u0, v0, skew, k1, k2, k3).
using Uncertainties = std::map<std::string, double>;

struct CalibrationFile {
  PolyCamera left;
  PolyCamera right;
  Uncertainties left_uncertainty;
  Uncertainties right_uncertainty;
  StereoRig rig;
  ImageSize image;
};

// JSON text. Parse problems raise FormatError with line/column or the field
// path; values that break an invariant raise InvalidArgument naming the
// field, e.g. "left.fx".
CalibrationFile parse_calibration(const std::string& text);
std::string serialize_calibration(const CalibrationFile& calib);
CalibrationFile load_calibration(const std::filesystem::path& path);
void save_calibration(const std::filesystem::path& path, const CalibrationFile& calib);

struct BoardDivisionEstimate {
  int board = 0;
  double lambda_left = 0.0;
  double lambda_right = 0.0;
  double residual = 0.0;
};

// Division coefficients for both cameras (lambda = mean of the per-board
// estimates when produced by estimate-division).
struct DivisionFile {
  DivisionDistortion left;
  DivisionDistortion right;
  std::vector<BoardDivisionEstimate> boards;
};

DivisionFile parse_division(const std::string& text);
std::string serialize_division(const DivisionFile& div);
DivisionFile load_division(const std::filesystem::path& path);
void save_division(const std::filesystem::path& path, const DivisionFile& div);

struct Board {
  int index = 0;
  std::vector<StereoObservation> observations;
  std::vector<IdentifiedPoint> truth;  // optional X,Y,Z columns
};

struct Dataset {
  BoardGroundTruth gt;
  ImageSize image;
  std::vector<Board> boards;

  // Complete grids, unique ids, pixels inside the image.
  void validate() const;
};

// CSV with `# key=value` metadata lines (spacing, rows, cols, width, height)
// followed by the header board,row,col,lx,ly,rx,ry and optionally X,Y,Z.
Dataset parse_dataset(const std::string& text);
std::string serialize_dataset(const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);

// board,row,col,X,Y,Z,status,scale with a `# method=` line.
std::string serialize_points(const ReconstructionResult& result);
ReconstructionResult parse_points(const std::string& text);

struct ReportTable {
  std::string name;
  std::vector<EvalRow> rows;
};

struct Report {
  std::string command;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> summary;
  std::vector<ReportTable> tables;
};

std::string serialize_report(const Report& report);
Report parse_report(const std::string& text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& bytes);

}  // namespace radstereo
