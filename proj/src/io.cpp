#include "radstereo/io.hpp"

#include "radstereo/error.hpp"
#include "radstereo/format.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace radstereo {

namespace {

using json = nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(e.what());
  }
}

// Walks one JSON object, remembering which keys were read so that anything
// left over can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw FormatError(where() + ": expected an object");
  }

  std::string field(const std::string& key) const { return join(path_, key); }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& get(const std::string& key) {
    const auto it = j_.find(key);
    if (it == j_.end()) throw FormatError(field(key) + ": missing");
    seen_.insert(key);
    return *it;
  }

  double number(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number()) throw FormatError(field(key) + ": expected a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  int integer(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number_integer()) throw FormatError(field(key) + ": expected an integer");
    return v.get<int>();
  }

  std::string string(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) throw FormatError(field(key) + ": expected a string");
    return v.get<std::string>();
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vec(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array() || v.size() != N)
      throw FormatError(field(key) + ": expected an array of " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) {
      if (!v[static_cast<std::size_t>(i)].is_number())
        throw FormatError(field(key) + ": expected an array of numbers");
      out(i) = v[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
  }

  ObjectReader object(const std::string& key) { return ObjectReader(get(key), field(key)); }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw FormatError(field(key) + ": unknown key");
  }

 private:
  std::string where() const { return path_.empty() ? "document" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::map<std::string, std::string> string_map(const json& j, const std::string& path) {
  if (!j.is_object()) throw FormatError(path + ": expected an object");
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw FormatError(join(path, k) + ": expected a string");
    out[k] = v.get<std::string>();
  }
  return out;
}

json to_json(const std::map<std::string, std::string>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

void require_finite(double v, const std::string& field) {
  if (!std::isfinite(v)) throw InvalidArgument(field + ": must be finite");
}

const char* kIntrinsicKeys[] = {"fx", "fy", "u0", "v0", "skew", "k1", "k2", "k3"};

PolyCamera read_camera(ObjectReader r, ImageSize image, Uncertainties& unc) {
  PolyCamera cam;
  Intrinsics& in = cam.intrinsics;
  in.fx = r.number("fx");
  in.fy = r.number("fy");
  in.u0 = r.number("u0");
  in.v0 = r.number("v0");
  in.skew = r.number_or("skew", 0.0);
  require_finite(in.fx, r.field("fx"));
  require_finite(in.fy, r.field("fy"));
  require_finite(in.u0, r.field("u0"));
  require_finite(in.v0, r.field("v0"));
  require_finite(in.skew, r.field("skew"));
  if (!(in.fx > 0.0)) throw InvalidArgument(r.field("fx") + ": must be > 0");
  if (!(in.fy > 0.0)) throw InvalidArgument(r.field("fy") + ": must be > 0");
  if (!(in.u0 >= 0.0 && in.u0 < image.width))
    throw InvalidArgument(r.field("u0") + ": principal point outside the image");
  if (!(in.v0 >= 0.0 && in.v0 < image.height))
    throw InvalidArgument(r.field("v0") + ": principal point outside the image");

  const double k1 = r.number("k1"), k2 = r.number("k2"), k3 = r.number("k3");
  const double wr = r.number_or("working_radius", PolyDistortion::kDefaultWorkingRadius);
  try {
    cam.distortion = PolyDistortion(k1, k2, k3, wr);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(r.field("k1..k3") + ": " + e.what());
  }

  if (r.has("uncertainty")) {
    ObjectReader u = r.object("uncertainty");
    for (const char* key : kIntrinsicKeys) {
      if (!u.has(key)) continue;
      const double v = u.number(key);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidArgument(u.field(key) + ": uncertainty must be >= 0");
      unc[key] = v;
    }
    u.finish();
  }
  r.finish();
  return cam;
}

json camera_json(const PolyCamera& cam, const Uncertainties& unc) {
  const Intrinsics& in = cam.intrinsics;
  json j;
  j["fx"] = in.fx;
  j["fy"] = in.fy;
  j["u0"] = in.u0;
  j["v0"] = in.v0;
  j["skew"] = in.skew;
  j["k1"] = cam.distortion.k1();
  j["k2"] = cam.distortion.k2();
  j["k3"] = cam.distortion.k3();
  j["working_radius"] = cam.distortion.working_radius();
  if (!unc.empty()) {
    json u = json::object();
    for (const char* key : kIntrinsicKeys)
      if (const auto it = unc.find(key); it != unc.end()) u[key] = it->second;
    j["uncertainty"] = u;
  }
  return j;
}

CoordinateSpace space_from_string(const std::string& s, const std::string& field) {
  if (s == "pixel") return CoordinateSpace::pixel;
  if (s == "normalized") return CoordinateSpace::normalized;
  throw FormatError(field + ": expected \"pixel\" or \"normalized\"");
}

DivisionDistortion read_division(ObjectReader r, CoordinateSpace space) {
  const double lambda = r.number("lambda");
  const Eigen::Vector2d center = r.vec<2>("center");
  const double scale = r.number("scale");
  const double wr = r.number("working_radius");
  r.finish();
  try {
    return DivisionDistortion(lambda, center, scale, space, wr);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(r.field("lambda") + ": " + e.what());
  }
}

json division_json(const DivisionDistortion& d) {
  json j;
  j["lambda"] = d.lambda();
  j["center"] = {d.center().x(), d.center().y()};
  j["scale"] = d.scale();
  j["working_radius"] = d.working_radius();
  return j;
}

// CSV helpers ---------------------------------------------------------------

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string at_line(int line) { return "line " + std::to_string(line) + ": "; }

double parse_double(const std::string& s, int line, const std::string& column) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
    throw FormatError(at_line(line) + column + ": not a finite number: '" + s + "'");
  return v;
}

int parse_int(const std::string& s, int line, const std::string& column) {
  const std::string t = trim(s);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw FormatError(at_line(line) + column + ": not an integer: '" + s + "'");
  return v;
}

const std::vector<std::string> kDatasetColumns{"board", "row", "col", "lx", "ly", "rx", "ry"};
const std::vector<std::string> kTruthColumns{"X", "Y", "Z"};
const std::vector<std::string> kPointColumns{"board", "row", "col", "X", "Y", "Z", "status", "scale"};

PointStatus status_from_string(const std::string& s, int line) {
  for (PointStatus st : {PointStatus::ok, PointStatus::undistortion_failed, PointStatus::parallel_rays,
                         PointStatus::sweep_at_boundary, PointStatus::rank_deficient})
    if (s == to_string(st)) return st;
  throw FormatError(at_line(line) + "unknown point status '" + s + "'");
}

std::string join_columns(const std::vector<std::string>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  return out;
}

}  // namespace

// Calibration ---------------------------------------------------------------

CalibrationFile parse_calibration(const std::string& text) {
  const json doc = parse_json(text);
  ObjectReader root(doc, "");
  CalibrationFile c;
  if (root.has("image")) {
    ObjectReader im = root.object("image");
    c.image.width = im.integer("width");
    c.image.height = im.integer("height");
    im.finish();
    if (c.image.width <= 0 || c.image.height <= 0)
      throw InvalidArgument("image: width and height must be positive");
  }
  c.left = read_camera(root.object("left"), c.image, c.left_uncertainty);
  c.right = read_camera(root.object("right"), c.image, c.right_uncertainty);

  ObjectReader rig = root.object("rig");
  const Eigen::Vector3d w = rig.vec<3>("rotation");
  c.rig.rotation = {w.x(), w.y(), w.z()};
  c.rig.translation = rig.vec<3>("translation");
  rig.finish();
  for (int i = 0; i < 3; ++i) {
    require_finite(w(i), "rig.rotation");
    require_finite(c.rig.translation(i), "rig.translation");
  }
  if (!(c.rig.baseline() > 0.0)) throw InvalidArgument("rig.translation: zero baseline");
  root.finish();
  return c;
}

std::string serialize_calibration(const CalibrationFile& c) {
  json j;
  j["image"] = {{"width", c.image.width}, {"height", c.image.height}};
  j["left"] = camera_json(c.left, c.left_uncertainty);
  j["right"] = camera_json(c.right, c.right_uncertainty);
  j["rig"]["rotation"] = {c.rig.rotation.wx, c.rig.rotation.wy, c.rig.rotation.wz};
  j["rig"]["translation"] = {c.rig.translation.x(), c.rig.translation.y(), c.rig.translation.z()};
  return j.dump(2) + "\n";
}

CalibrationFile load_calibration(const std::filesystem::path& path) {
  return parse_calibration(read_file(path));
}

void save_calibration(const std::filesystem::path& path, const CalibrationFile& calib) {
  write_file(path, serialize_calibration(calib));
}

// Division coefficients -----------------------------------------------------

DivisionFile parse_division(const std::string& text) {
  const json doc = parse_json(text);
  ObjectReader root(doc, "");
  const CoordinateSpace space = space_from_string(root.string("space"), "space");
  DivisionFile d;
  d.left = read_division(root.object("left"), space);
  d.right = read_division(root.object("right"), space);
  if (root.has("boards")) {
    const json& arr = root.get("boards");
    if (!arr.is_array()) throw FormatError("boards: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      ObjectReader b(arr[i], "boards[" + std::to_string(i) + "]");
      BoardDivisionEstimate e;
      e.board = b.integer("board");
      e.lambda_left = b.number("lambda_left");
      e.lambda_right = b.number("lambda_right");
      e.residual = b.number("residual");
      b.finish();
      d.boards.push_back(e);
    }
  }
  root.finish();
  return d;
}

std::string serialize_division(const DivisionFile& d) {
  json j;
  j["space"] = to_string(d.left.space());
  j["left"] = division_json(d.left);
  j["right"] = division_json(d.right);
  json boards = json::array();
  for (const auto& b : d.boards)
    boards.push_back({{"board", b.board},
                      {"lambda_left", b.lambda_left},
                      {"lambda_right", b.lambda_right},
                      {"residual", b.residual}});
  j["boards"] = boards;
  return j.dump(2) + "\n";
}

DivisionFile load_division(const std::filesystem::path& path) { return parse_division(read_file(path)); }

void save_division(const std::filesystem::path& path, const DivisionFile& div) {
  if (div.left.space() != div.right.space())
    throw InvalidArgument("division models of one file must share a coordinate space");
  write_file(path, serialize_division(div));
}

// Dataset -------------------------------------------------------------------

void Dataset::validate() const {
  gt.validate();
  std::set<int> indices;
  for (const auto& b : boards) {
    if (!indices.insert(b.index).second)
      throw InvalidArgument("dataset: duplicate board " + std::to_string(b.index));
    const std::string where = "board " + std::to_string(b.index);
    if (static_cast<int>(b.observations.size()) != gt.point_count())
      throw InvalidArgument(where + ": expected " + std::to_string(gt.point_count()) +
                            " points, found " + std::to_string(b.observations.size()));
    std::set<std::pair<int, int>> cells;
    for (const auto& o : b.observations) {
      if (o.id.board != b.index) throw InvalidArgument(where + ": observation of another board");
      if (o.id.row < 0 || o.id.row >= gt.rows || o.id.col < 0 || o.id.col >= gt.cols)
        throw InvalidArgument(where + ": corner id outside the grid");
      if (!cells.insert({o.id.row, o.id.col}).second)
        throw InvalidArgument(where + ": duplicate corner id");
      for (const PixelPoint& p : {o.left, o.right})
        if (!(p.x >= 0.0 && p.x < image.width && p.y >= 0.0 && p.y < image.height))
          throw InvalidArgument(where + ": pixel outside the image");
    }
    if (!b.truth.empty() && b.truth.size() != b.observations.size())
      throw InvalidArgument(where + ": ground truth does not cover every observation");
  }
}

Dataset parse_dataset(const std::string& text) {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool header_seen = false, with_truth = false;
  std::map<int, std::size_t> board_pos;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      if (header_seen) throw FormatError(at_line(lineno) + "metadata after the header");
      const std::string body = trim(t.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw FormatError(at_line(lineno) + "expected '# key=value'");
      const std::string key = trim(body.substr(0, eq)), value = body.substr(eq + 1);
      if (key == "spacing") ds.gt.spacing = parse_double(value, lineno, key);
      else if (key == "rows") ds.gt.rows = parse_int(value, lineno, key);
      else if (key == "cols") ds.gt.cols = parse_int(value, lineno, key);
      else if (key == "width") ds.image.width = parse_int(value, lineno, key);
      else if (key == "height") ds.image.height = parse_int(value, lineno, key);
      else throw FormatError(at_line(lineno) + "unknown metadata key '" + key + "'");
      continue;
    }
    const auto cells = split(t, ',');
    if (!header_seen) {
      std::vector<std::string> names;
      for (const auto& c : cells) names.push_back(trim(c));
      std::vector<std::string> full = kDatasetColumns;
      full.insert(full.end(), kTruthColumns.begin(), kTruthColumns.end());
      if (names == full) with_truth = true;
      else if (names != kDatasetColumns)
        throw FormatError(at_line(lineno) + "expected header " + join_columns(kDatasetColumns) +
                          " (optionally followed by X,Y,Z)");
      header_seen = true;
      continue;
    }
    const std::size_t expected = with_truth ? 10 : 7;
    if (cells.size() != expected)
      throw FormatError(at_line(lineno) + "expected " + std::to_string(expected) + " columns, found " +
                        std::to_string(cells.size()));
    StereoObservation o;
    o.id.board = parse_int(cells[0], lineno, "board");
    o.id.row = parse_int(cells[1], lineno, "row");
    o.id.col = parse_int(cells[2], lineno, "col");
    o.left = {parse_double(cells[3], lineno, "lx"), parse_double(cells[4], lineno, "ly")};
    o.right = {parse_double(cells[5], lineno, "rx"), parse_double(cells[6], lineno, "ry")};
    auto [it, fresh] = board_pos.emplace(o.id.board, ds.boards.size());
    if (fresh) ds.boards.push_back(Board{o.id.board, {}, {}});
    Board& b = ds.boards[it->second];
    b.observations.push_back(o);
    if (with_truth)
      b.truth.push_back({o.id, Point3{parse_double(cells[7], lineno, "X"),
                                      parse_double(cells[8], lineno, "Y"),
                                      parse_double(cells[9], lineno, "Z")}});
  }
  if (!header_seen) throw FormatError("dataset: missing header line");
  ds.validate();
  return ds;
}

std::string serialize_dataset(const Dataset& ds) {
  bool with_truth = !ds.boards.empty();
  for (const auto& b : ds.boards) with_truth = with_truth && !b.truth.empty();
  std::string out;
  out += "# spacing=" + format_double(ds.gt.spacing) + "\n";
  out += "# rows=" + std::to_string(ds.gt.rows) + "\n";
  out += "# cols=" + std::to_string(ds.gt.cols) + "\n";
  out += "# width=" + std::to_string(ds.image.width) + "\n";
  out += "# height=" + std::to_string(ds.image.height) + "\n";
  out += join_columns(kDatasetColumns) + (with_truth ? "," + join_columns(kTruthColumns) : "") + "\n";
  for (const auto& b : ds.boards) {
    for (std::size_t i = 0; i < b.observations.size(); ++i) {
      const auto& o = b.observations[i];
      out += std::to_string(o.id.board) + "," + std::to_string(o.id.row) + "," + std::to_string(o.id.col);
      for (double v : {o.left.x, o.left.y, o.right.x, o.right.y}) out += "," + format_double(v);
      if (with_truth)
        for (int k = 0; k < 3; ++k) out += "," + format_double(b.truth[i].position(k));
      out += "\n";
    }
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path)); }

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  write_file(path, serialize_dataset(ds));
}

// Reconstructed points ------------------------------------------------------

std::string serialize_points(const ReconstructionResult& result) {
  std::string out = std::string("# method=") + to_string(result.method) + "\n";
  out += join_columns(kPointColumns) + "\n";
  for (const auto& p : result.points) {
    out += std::to_string(p.id.board) + "," + std::to_string(p.id.row) + "," + std::to_string(p.id.col);
    for (int k = 0; k < 3; ++k) out += "," + format_double(p.position(k));
    out += std::string(",") + to_string(p.status) + ",";
    if (p.scale) out += format_double(*p.scale);
    out += "\n";
  }
  return out;
}

ReconstructionResult parse_points(const std::string& text) {
  ReconstructionResult r;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool method_seen = false, header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string body = trim(t.substr(1));
      if (body.rfind("method=", 0) != 0) throw FormatError(at_line(lineno) + "expected '# method=...'");
      try {
        r.method = method_from_string(body.substr(7));
      } catch (const InvalidArgument& e) {
        throw FormatError(at_line(lineno) + e.what());
      }
      method_seen = true;
      continue;
    }
    const auto cells = split(t, ',');
    if (!header_seen) {
      std::vector<std::string> names;
      for (const auto& c : cells) names.push_back(trim(c));
      if (names != kPointColumns)
        throw FormatError(at_line(lineno) + "expected header " + join_columns(kPointColumns));
      header_seen = true;
      continue;
    }
    if (cells.size() != kPointColumns.size())
      throw FormatError(at_line(lineno) + "expected 8 columns");
    ReconstructedPoint p;
    p.id = {parse_int(cells[0], lineno, "board"), parse_int(cells[1], lineno, "row"),
            parse_int(cells[2], lineno, "col")};
    p.position = {parse_double(cells[3], lineno, "X"), parse_double(cells[4], lineno, "Y"),
                  parse_double(cells[5], lineno, "Z")};
    p.status = status_from_string(trim(cells[6]), lineno);
    if (!trim(cells[7]).empty()) p.scale = parse_double(cells[7], lineno, "scale");
    r.points.push_back(p);
  }
  if (!method_seen || !header_seen) throw FormatError("points file: missing method line or header");
  return r;
}

// Reports -------------------------------------------------------------------

std::string serialize_report(const Report& report) {
  json j;
  j["command"] = report.command;
  j["config"] = to_json(report.config);
  j["summary"] = to_json(report.summary);
  json tables = json::array();
  for (const auto& t : report.tables) {
    json rows = json::array();
    for (const auto& r : t.rows)
      rows.push_back({{"label", r.label},
                      {"p_average", r.p_average},
                      {"d_average", r.d_average},
                      {"r", r.r},
                      {"points", r.points},
                      {"failed", r.failed},
                      {"excluded", r.excluded}});
    tables.push_back({{"name", t.name}, {"rows", rows}});
  }
  j["tables"] = tables;
  return j.dump(2) + "\n";
}

Report parse_report(const std::string& text) {
  const json doc = parse_json(text);
  ObjectReader root(doc, "");
  Report rep;
  rep.command = root.string("command");
  rep.config = string_map(root.get("config"), "config");
  rep.summary = string_map(root.get("summary"), "summary");
  const json& tables = root.get("tables");
  if (!tables.is_array()) throw FormatError("tables: expected an array");
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const std::string path = "tables[" + std::to_string(i) + "]";
    ObjectReader t(tables[i], path);
    ReportTable table;
    table.name = t.string("name");
    const json& rows = t.get("rows");
    if (!rows.is_array()) throw FormatError(path + ".rows: expected an array");
    for (std::size_t k = 0; k < rows.size(); ++k) {
      ObjectReader r(rows[k], path + ".rows[" + std::to_string(k) + "]");
      EvalRow row;
      row.label = r.string("label");
      row.p_average = r.number("p_average");
      row.d_average = r.number("d_average");
      row.r = r.number("r");
      row.points = static_cast<std::size_t>(r.integer("points"));
      row.failed = static_cast<std::size_t>(r.integer("failed"));
      row.excluded = static_cast<std::size_t>(r.integer("excluded"));
      r.finish();
      table.rows.push_back(row);
    }
    t.finish();
    rep.tables.push_back(table);
  }
  root.finish();
  return rep;
}

// Files ---------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << content;
  if (!out) throw FormatError("write failed for " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("sha256 digest failed", 0.0);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

}  // namespace radstereo
