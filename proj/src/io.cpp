#include "rotubes/io.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "rotubes/errors.hpp"

namespace rotubes {

namespace fs = std::filesystem;
using nlohmann::json;

// --- Euler angles --------------------------------------------------------------

namespace {

constexpr double kGimbalTolerance = 1e-9;
constexpr double kDegree = std::numbers::pi / 180.0;

Eigen::Matrix3d axis_rotation(int axis, double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::Unit(axis)).toRotationMatrix();
}

int axis_from_char(char c) {
  switch (c) {
    case 'x':
    case 'X':
      return 0;
    case 'y':
    case 'Y':
      return 1;
    case 'z':
    case 'Z':
      return 2;
    default:
      throw InvalidArgument(std::string("invalid Euler axis '") + c + "'");
  }
}

// +1 for cyclic (x, y, z) order, -1 otherwise
double parity(int i, int j, int k) {
  return ((i + 1) % 3 == j && (j + 1) % 3 == k) ? 1.0 : -1.0;
}

// theta such that m = R_axis(theta)
double angle_about(int axis, const Eigen::Matrix3d& m) {
  const int i1 = (axis + 1) % 3;
  const int i2 = (axis + 2) % 3;
  return std::atan2(m(i2, i1), m(i1, i1));
}

// R = R_i(a) R_j(b) R_k(c). On gimbal lock either c (zero_last) or a is set
// to zero and the remaining rotation is carried by the other outer angle.
EulerAngles decompose_intrinsic(const Eigen::Matrix3d& r, int i, int j, int k, bool zero_last) {
  EulerAngles out;
  double& a = out.radians[0];
  double& b = out.radians[1];
  double& c = out.radians[2];

  if (i != k) {
    const double s = parity(i, j, k);
    b = std::atan2(s * r(i, k), std::hypot(r(i, i), r(i, j)));
    out.gimbal_lock = std::abs(std::numbers::pi / 2 - std::abs(b)) < kGimbalTolerance;
    if (!out.gimbal_lock) {
      a = std::atan2(-s * r(j, k), r(k, k));
      c = std::atan2(-s * r(i, j), r(i, i));
    }
  } else {
    const int l = 3 - i - j;
    const double s = parity(i, j, l);
    b = std::atan2(std::hypot(r(i, j), r(i, l)), r(i, i));
    out.gimbal_lock = b < kGimbalTolerance || std::numbers::pi - b < kGimbalTolerance;
    if (!out.gimbal_lock) {
      a = std::atan2(r(j, i), -s * r(l, i));
      c = std::atan2(r(i, j), s * r(i, l));
    }
  }

  if (out.gimbal_lock) {
    const Eigen::Matrix3d rj_inv = axis_rotation(j, -b);
    if (zero_last) {
      c = 0.0;
      a = angle_about(i, r * rj_inv);
    } else {
      a = 0.0;
      c = angle_about(k, rj_inv * r);
    }
  }
  return out;
}

}  // namespace

void EulerConvention::validate() const {
  for (int a : axes) {
    if (a < 0 || a > 2) throw InvalidArgument("Euler axis index out of range");
  }
  if (axes[0] == axes[1] || axes[1] == axes[2]) {
    throw InvalidArgument("Euler sequence " + axes_string() + " repeats consecutive axes");
  }
}

EulerConvention EulerConvention::parse(const std::string& axes, const std::string& mode) {
  if (axes.size() != 3) throw InvalidArgument("Euler sequence must have 3 axes, got '" + axes + "'");
  EulerConvention conv;
  for (int i = 0; i < 3; ++i) conv.axes[i] = axis_from_char(axes[i]);
  if (mode == "intrinsic") {
    conv.mode = Mode::Intrinsic;
  } else if (mode == "extrinsic") {
    conv.mode = Mode::Extrinsic;
  } else {
    throw InvalidArgument("Euler mode must be 'intrinsic' or 'extrinsic', got '" + mode + "'");
  }
  conv.validate();
  return conv;
}

std::string EulerConvention::axes_string() const {
  std::string s;
  for (int a : axes) s += "xyz"[a];
  return s;
}

std::string EulerConvention::mode_string() const {
  return mode == Mode::Intrinsic ? "intrinsic" : "extrinsic";
}

Rotation euler_to_rotation(const std::array<double, 3>& radians, const EulerConvention& conv) {
  conv.validate();
  const Eigen::Matrix3d r1 = axis_rotation(conv.axes[0], radians[0]);
  const Eigen::Matrix3d r2 = axis_rotation(conv.axes[1], radians[1]);
  const Eigen::Matrix3d r3 = axis_rotation(conv.axes[2], radians[2]);
  return Rotation::trusted(conv.mode == EulerConvention::Mode::Intrinsic ? r1 * r2 * r3
                                                                          : r3 * r2 * r1);
}

EulerAngles rotation_to_euler(const Rotation& r, const EulerConvention& conv) {
  conv.validate();
  const auto& ax = conv.axes;
  if (conv.mode == EulerConvention::Mode::Intrinsic) {
    return decompose_intrinsic(r.matrix(), ax[0], ax[1], ax[2], /*zero_last=*/true);
  }
  // R_c(t3) R_b(t2) R_a(t1) is intrinsic (c, b, a) with angles reversed
  EulerAngles rev = decompose_intrinsic(r.matrix(), ax[2], ax[1], ax[0], /*zero_last=*/false);
  std::swap(rev.radians[0], rev.radians[2]);
  return rev;
}

std::vector<EulerRow> export_euler(const RotationCurve& curve, const EulerConvention& conv) {
  std::vector<EulerRow> rows(curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const EulerAngles e = rotation_to_euler(curve[k], conv);
    rows[k].t = curve.grid()[k];
    for (int i = 0; i < 3; ++i) rows[k].degrees[i] = e.radians[i] / kDegree;
    rows[k].gimbal_lock = e.gimbal_lock;
  }
  return rows;
}

std::string euler_table_csv(const std::vector<EulerRow>& rows, const EulerConvention& conv) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# euler " << conv.axes_string() << " " << conv.mode_string() << ", degrees\n";
  os << "t," << "angle_" << "xyz"[conv.axes[0]] << ",angle_" << "xyz"[conv.axes[1]]
     << ",angle_" << "xyz"[conv.axes[2]] << ",gimbal_lock\n";
  for (const auto& r : rows) {
    os << r.t << ',' << r.degrees[0] << ',' << r.degrees[1] << ',' << r.degrees[2] << ','
       << (r.gimbal_lock ? 1 : 0) << '\n';
  }
  return os.str();
}

// --- CSV ingestion ---------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view cell, double& out) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                      : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

}  // namespace

RotationCurve parse_curve_csv(const std::string& text, const IngestOptions& options,
                              const std::string& source) {
  std::vector<double> times;
  std::vector<Rotation> values;
  std::size_t columns = 0;
  bool seen_row = false;

  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    const auto cells = split_cells(line);
    std::vector<double> nums(cells.size());
    std::size_t bad_col = cells.size();
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_number(cells[c], nums[c])) {
        bad_col = c;
        break;
      }
    }
    if (bad_col != cells.size()) {
      if (!seen_row && columns == 0) {  // header
        columns = cells.size();
        continue;
      }
      throw ParseError(where(source, line_no) + ": column " + std::to_string(bad_col + 1) +
                       " is not a finite number");
    }
    if (!seen_row) {
      if (columns != 0 && columns != cells.size()) {
        throw ParseError(where(source, line_no) + ": row has " + std::to_string(cells.size()) +
                         " columns but the header has " + std::to_string(columns));
      }
      columns = cells.size();
      if (columns != 10 && columns != 4 && columns != 5) {
        throw ParseError(where(source, line_no) + ": expected 10 (matrix), 4 or 5 (Euler) columns, got " +
                         std::to_string(columns));
      }
      seen_row = true;
    } else if (cells.size() != columns) {
      throw ParseError(where(source, line_no) + ": expected " + std::to_string(columns) +
                       " columns, got " + std::to_string(cells.size()));
    }

    if (!times.empty() && !(nums[0] > times.back())) {
      throw NonMonotoneTime(where(source, line_no) + ": time " + std::to_string(nums[0]) +
                            " does not increase");
    }
    times.push_back(nums[0]);

    if (columns == 10) {
      Eigen::Matrix3d m;
      m << nums[1], nums[2], nums[3], nums[4], nums[5], nums[6], nums[7], nums[8], nums[9];
      const double defect = rotation_defect(m);
      if (m.determinant() <= 0.0 || defect > 1e-3) {
        throw NonRotationRow(where(source, line_no) + ": orthogonality defect " +
                             std::to_string(defect));
      }
      values.push_back(defect > kRotationTolerance ? project_to_so3(m) : Rotation::trusted(m));
    } else {
      // a fifth Euler column is the exported gimbal_lock flag
      values.push_back(euler_to_rotation({nums[1] * kDegree, nums[2] * kDegree, nums[3] * kDegree},
                                         options.convention));
    }
  }

  if (times.size() < 2) throw ParseError(source + ": need at least 2 data rows");
  const double t0 = times.front();
  const double span = times.back() - t0;
  for (double& t : times) t = (t - t0) / span;
  times.front() = 0.0;
  times.back() = 1.0;

  const RotationCurve raw_curve(TimeGrid(std::move(times)), std::move(values));
  const TimeGrid target = TimeGrid::uniform(options.grid_size);
  std::vector<Rotation> resampled(target.size());
  for (std::size_t k = 0; k < target.size(); ++k) {
    resampled[k] = geodesic_interpolate(raw_curve, target[k]);
  }
  return RotationCurve(target, std::move(resampled));
}

RotationCurve ingest_curve_csv(const fs::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_curve_csv(ss.str(), options, path.string());
}

std::string curve_csv(const RotationCurve& curve) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "t,r11,r12,r13,r21,r22,r23,r31,r32,r33\n";
  for (std::size_t k = 0; k < curve.size(); ++k) {
    os << curve.grid()[k];
    const Eigen::Matrix3d& m = curve[k].matrix();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) os << ',' << m(i, j);
    }
    os << '\n';
  }
  return os.str();
}

CurveSample ingest_directory(const fs::path& dir, const IngestOptions& options) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .csv files in " + dir.string());
  std::vector<RotationCurve> curves;
  curves.reserve(files.size());
  for (const auto& f : files) curves.push_back(ingest_curve_csv(f, options));
  return CurveSample(std::move(curves));
}

// --- JSON records -----------------------------------------------------------------

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

namespace {

void check_schema(const json& j, const char* kind) {
  if (!j.is_object() || j.value("schema", "") != kSchemaVersion) {
    throw ParseError(std::string(kind) + ": missing or unsupported schema (expected " +
                     kSchemaVersion + ")");
  }
}

json rotation_row_major(const Rotation& r) {
  json a = json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a.push_back(r(i, j));
  }
  return a;
}

Eigen::Matrix3d matrix_from_row_major(const json& a, const char* what) {
  if (!a.is_array() || a.size() != 9) {
    throw ParseError(std::string(what) + ": expected 9 row-major numbers");
  }
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = a.at(i).get<double>();
  return m;
}

template <class Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

SpatioTemporalAction parse_alignment(const json& j) {
  return guarded("alignment", [&] {
    check_schema(j, "alignment");
    const Rotation p(matrix_from_row_major(j.at("P"), "alignment P"));
    const Rotation q(matrix_from_row_major(j.at("Q"), "alignment Q"));
    std::vector<Warp::Knot> knots;
    if (j.contains("warp")) {
      for (const auto& k : j.at("warp")) {
        if (!k.is_array() || k.size() != 2) throw ParseError("alignment warp: knots are [u, v] pairs");
        knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
      }
    } else {
      knots = Warp::identity().knots();
    }
    return SpatioTemporalAction{p, q, Warp(std::move(knots))};
  });
}

SpatioTemporalAction load_alignment(const fs::path& path) { return parse_alignment(read_json(path)); }

json alignment_json(const SpatioTemporalAction& act) {
  json warp = json::array();
  for (const auto& [u, v] : act.warp.knots()) warp.push_back({u, v});
  return {{"schema", kSchemaVersion},
          {"P", rotation_row_major(act.left)},
          {"Q", rotation_row_major(act.right)},
          {"warp", warp}};
}

CurveSample apply_manifest_alignment(const CurveSample& sample, const SpatioTemporalAction& act) {
  return apply_action(sample, act);
}

json tube_json(const ConfidenceTube& tube) {
  json center = json::array();
  json cov = json::array();
  for (std::size_t k = 0; k < tube.center.size(); ++k) {
    center.push_back(rotation_row_major(tube.center[k]));
    const Eigen::Matrix3d& s = tube.covariance[k];
    cov.push_back({s(0, 0), s(0, 1), s(0, 2), s(1, 1), s(1, 2), s(2, 2)});
  }
  return {{"schema", kSchemaVersion},
          {"kind", "confidence_tube"},
          {"grid", tube.grid().values()},
          {"center", center},
          {"covariance_upper", cov},
          {"hquant", tube.hquant},
          {"alpha", tube.alpha},
          {"n", tube.n},
          {"lkc", tube.lkc}};
}

ConfidenceTube parse_tube(const json& j) {
  return guarded("tube", [&] {
    check_schema(j, "tube");
    TimeGrid grid(j.at("grid").get<std::vector<double>>());
    const json& c = j.at("center");
    const json& s = j.at("covariance_upper");
    if (c.size() != grid.size() || s.size() != grid.size()) {
      throw ParseError("tube: center/covariance length does not match grid");
    }
    std::vector<Rotation> center;
    std::vector<Eigen::Matrix3d> cov;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      center.emplace_back(matrix_from_row_major(c.at(k), "tube center"));
      const auto u = s.at(k).get<std::vector<double>>();
      if (u.size() != 6) throw ParseError("tube: covariance rows need 6 upper-triangle entries");
      Eigen::Matrix3d m;
      m << u[0], u[1], u[2], u[1], u[3], u[4], u[2], u[4], u[5];
      check_covariance(m, k, grid[k]);
      cov.push_back(m);
    }
    ConfidenceTube tube{RotationCurve(grid, std::move(center)), std::move(cov),
                        j.at("hquant").get<double>(), j.at("alpha").get<double>(),
                        j.at("n").get<int>(), j.value("lkc", 0.0)};
    if (!(tube.hquant >= 0.0)) throw ParseError("tube: hquant must be >= 0");
    if (tube.n < 4) throw ParseError("tube: n must be >= 4");
    return tube;
  });
}

ConfidenceTube load_tube(const fs::path& path) { return parse_tube(read_json(path)); }

json overlap_json(const OverlapReport& report) {
  json loci = json::array();
  for (const auto& l : report.loci) {
    loci.push_back({{"first_index", l.first},
                    {"last_index", l.last},
                    {"t_start", l.t_first},
                    {"t_end", l.t_last},
                    {"percent_start", 100.0 * l.t_first},
                    {"percent_end", 100.0 * l.t_last}});
  }
  json sep = json::array();
  for (double v : report.separation) {
    if (std::isfinite(v)) {
      sep.push_back(v);
    } else {
      sep.push_back(nullptr);
    }
  }
  return {{"schema", kSchemaVersion},
          {"kind", "overlap_report"},
          {"grid", report.grid.values()},
          {"overlap", report.overlap},
          {"separation", sep},
          {"loci", loci}};
}

json coverage_json(const CoverageReport& r) {
  std::vector<double> confidence;
  for (double a : r.alphas) confidence.push_back(1.0 - a);
  return {{"schema", kSchemaVersion},
          {"kind", "coverage_report"},
          {"spec",
           {{"family", r.spec.family},
            {"modulation", r.spec.modulation},
            {"mixing", r.spec.mixing},
            {"sigma", r.spec.sigma},
            {"label", r.spec.label()}}},
          {"n", r.n},
          {"replications", r.replications},
          {"seed", r.seed},
          {"grid_size", r.grid_size},
          {"alphas", r.alphas},
          {"confidence", confidence},
          {"rates", r.rates},
          {"mc_stderr", r.mc_stderr},
          {"covered", r.covered},
          {"failed", r.failed}};
}

std::string coverage_table(const CoverageReport& r) {
  std::ostringstream os;
  os << r.spec.label() << "  N=" << r.n << "  M=" << r.replications << "  seed=" << r.seed << "\n";
  os << "  1-alpha   coverage   stderr\n";
  os << std::fixed;
  for (std::size_t i = 0; i < r.alphas.size(); ++i) {
    os << "  " << std::setprecision(3) << std::setw(7) << 1.0 - r.alphas[i] << "   "
       << std::setprecision(1) << std::setw(7) << 100.0 * r.rates[i] << "%   "
       << std::setprecision(2) << std::setw(5) << 100.0 * r.mc_stderr[i] << " pp\n";
  }
  if (r.failed > 0) os << "  failed replications: " << r.failed << "\n";
  return os.str();
}

// --- manifest ------------------------------------------------------------------------

DatasetManifest DatasetManifest::load(const fs::path& path) {
  const json j = read_json(path);
  return guarded("manifest", [&] {
    check_schema(j, "manifest");
    DatasetManifest m;
    m.grid_size = j.value("grid_size", std::size_t{101});
    if (m.grid_size < 2) throw ParseError("manifest: grid_size must be >= 2");
    if (j.contains("euler_convention")) {
      const json& e = j.at("euler_convention");
      m.convention = EulerConvention::parse(e.value("axes", std::string("zxy")),
                                            e.value("mode", std::string("intrinsic")));
    }
    const fs::path base = path.parent_path();
    for (const auto& [label, entry] : j.at("sessions").items()) {
      std::vector<fs::path> files;
      auto add = [&](const std::string& p) {
        fs::path full = fs::path(p).is_absolute() ? fs::path(p) : base / p;
        if (fs::is_directory(full)) {
          std::vector<fs::path> found;
          for (const auto& de : fs::directory_iterator(full)) {
            if (de.is_regular_file() && de.path().extension() == ".csv") found.push_back(de.path());
          }
          std::sort(found.begin(), found.end());
          files.insert(files.end(), found.begin(), found.end());
        } else {
          files.push_back(full);
        }
      };
      if (entry.is_string()) {
        add(entry.get<std::string>());
      } else {
        for (const auto& p : entry) add(p.get<std::string>());
      }
      if (!m.sessions.emplace(label, std::move(files)).second) {
        throw ParseError("manifest: duplicate session label " + label);
      }
    }
    return m;
  });
}

CurveSample DatasetManifest::load_session(const std::string& label) const {
  const auto it = sessions.find(label);
  if (it == sessions.end()) throw InvalidArgument("manifest has no session '" + label + "'");
  if (it->second.empty()) throw InvalidArgument("session '" + label + "' lists no curves");
  const IngestOptions opts{grid_size, convention};
  std::vector<RotationCurve> curves;
  for (const auto& f : it->second) curves.push_back(ingest_curve_csv(f, opts));
  return CurveSample(std::move(curves));
}

std::string coverage_battery_report(std::size_t grid_size, int reps, std::uint64_t seed,
                                    unsigned threads, std::ostream* progress) {
  const std::vector<double> alphas{0.15, 0.10, 0.05};
  const TimeGrid grid = TimeGrid::uniform(grid_size);
  std::ostringstream os;
  os << "coverage in percent, simulated (reference), M=" << reps << ", seed=" << seed << "\n";
  os << "  N  sigma  f  M |        family 1        |        family 2        |        family 3\n";
  os << std::fixed;
  std::uint64_t config = 0;
  for (const auto& row : reference_coverage_table()) {
    os << std::setw(3) << row.n << "  " << std::setprecision(2) << std::setw(4) << row.sigma
       << "  " << row.modulation << "  " << row.mixing << " |";
    for (int fam = 1; fam <= 3; ++fam) {
      const ErrorProcessSpec spec{fam, row.modulation, row.mixing, row.sigma};
      const CoverageReport r =
          coverage_experiment(spec, row.n, reps, alphas, grid, seed + 1000 * config++,
                              CoverageOptions{{}, threads});
      for (int a = 0; a < 3; ++a) {
        os << ' ' << std::setprecision(1) << std::setw(4) << 100.0 * r.rates[a] << '('
           << std::setw(4) << row.percent[fam - 1][a] << ')';
      }
      os << (fam < 3 ? " |" : "\n");
    }
    if (progress != nullptr) *progress << "row " << config / 3 << " of " << reference_coverage_table().size() << " done\n" << std::flush;
  }
  return os.str();
}

}  // namespace rotubes
