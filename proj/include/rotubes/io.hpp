#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rotubes/curve.hpp"
#include "rotubes/gp_sim.hpp"
#include "rotubes/tubes.hpp"

namespace rotubes {

inline constexpr const char* kSchemaVersion = "rotubes/1";

/// Axis sequence for Euler/Cardan angles. Axes are 0 = x, 1 = y, 2 = z.
/// Intrinsic (a, b, c): R = R_a(t1) R_b(t2) R_c(t3); extrinsic:
/// R = R_c(t3) R_b(t2) R_a(t1).
struct EulerConvention {
  enum class Mode { Intrinsic, Extrinsic };

  std::array<int, 3> axes{2, 0, 1};
  Mode mode = Mode::Intrinsic;

  /// Parses "zxy" etc.; throws InvalidArgument on an invalid sequence.
  static EulerConvention parse(const std::string& axes, const std::string& mode = "intrinsic");
  std::string axes_string() const;
  std::string mode_string() const;
  void validate() const;
};

Rotation euler_to_rotation(const std::array<double, 3>& radians, const EulerConvention& conv);

struct EulerAngles {
  std::array<double, 3> radians{};
  /// Middle angle at its singular value; the third angle was set to 0.
  bool gimbal_lock = false;
};

EulerAngles rotation_to_euler(const Rotation& r, const EulerConvention& conv);

struct EulerRow {
  double t = 0.0;
  std::array<double, 3> degrees{};
  bool gimbal_lock = false;
};

std::vector<EulerRow> export_euler(const RotationCurve& curve, const EulerConvention& conv);
std::string euler_table_csv(const std::vector<EulerRow>& rows, const EulerConvention& conv);

struct IngestOptions {
  std::size_t grid_size = 101;
  EulerConvention convention;
};

/**
 * Reads a curve from CSV. Rows are either "t,r11,...,r33" (row-major matrix)
 * or "t,angle1,angle2,angle3" (degrees, under `options.convention`). A header
 * row is optional and lines starting with '#' are ignored. Times are
 * normalized to [0, 1] and the curve is resampled by geodesic interpolation
 * onto a uniform grid of `options.grid_size` points.
 */
RotationCurve ingest_curve_csv(const std::filesystem::path& path, const IngestOptions& options = {});
RotationCurve parse_curve_csv(const std::string& text, const IngestOptions& options = {},
                              const std::string& source = "<memory>");

/// Matrix-schema CSV with 17 significant digits.
std::string curve_csv(const RotationCurve& curve);

/// All *.csv files of a directory, sorted by name.
CurveSample ingest_directory(const std::filesystem::path& dir, const IngestOptions& options = {});

struct DatasetManifest {
  std::map<std::string, std::vector<std::filesystem::path>> sessions;
  std::size_t grid_size = 101;
  EulerConvention convention;

  /// Relative curve paths resolve against the manifest's directory.
  static DatasetManifest load(const std::filesystem::path& path);
  CurveSample load_session(const std::string& label) const;
};

/// Rotations as 9 row-major numbers, warp as [u, v] pairs.
SpatioTemporalAction parse_alignment(const nlohmann::json& j);
SpatioTemporalAction load_alignment(const std::filesystem::path& path);
nlohmann::json alignment_json(const SpatioTemporalAction& act);

CurveSample apply_manifest_alignment(const CurveSample& sample, const SpatioTemporalAction& act);

nlohmann::json tube_json(const ConfidenceTube& tube);
ConfidenceTube parse_tube(const nlohmann::json& j);
ConfidenceTube load_tube(const std::filesystem::path& path);

nlohmann::json overlap_json(const OverlapReport& report);
nlohmann::json coverage_json(const CoverageReport& report);
std::string coverage_table(const CoverageReport& report);

/// Runs every configuration of the reference coverage table and prints the
/// simulated rates next to the reference values. Configuration c uses seed
/// seed + 1000 c.
std::string coverage_battery_report(std::size_t grid_size, int reps, std::uint64_t seed,
                                    unsigned threads = 0, std::ostream* progress = nullptr);

nlohmann::json read_json(const std::filesystem::path& path);

/// Writes to a temporary sibling file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace rotubes
