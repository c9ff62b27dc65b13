#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "vphoto/errors.hpp"
#include "vphoto/image.hpp"
#include "vphoto/image_io.hpp"

namespace vphoto {

// World frame: +y up, yaw rotates +z toward +x (counter-clockwise about +y),
// pitch positive upward. Longitude of a direction equals its yaw, so turning
// right in a view moves right across the equirectangular image.

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const { return *this * (1.0 / norm()); }
};

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

inline Vec3 direction_from_angles(double yaw_deg, double pitch_deg) {
  const double yaw = deg2rad(yaw_deg);
  const double pitch = deg2rad(pitch_deg);
  return {std::sin(yaw) * std::cos(pitch), std::sin(pitch), std::cos(yaw) * std::cos(pitch)};
}

struct ViewSpec {
  double yaw = 0.0;    // degrees, [0, 360)
  double pitch = 0.0;  // degrees, [-90, 90]
  double fov = 90.0;   // degrees, (0, 180)
  int out_size = 512;

  void validate() const {
    if (!(fov > 0.0 && fov < 180.0)) throw std::invalid_argument("ViewSpec: fov must lie in (0,180)");
    if (!(pitch >= -90.0 && pitch <= 90.0)) throw std::invalid_argument("ViewSpec: pitch out of range");
    if (out_size < 1) throw std::invalid_argument("ViewSpec: out_size must be >= 1");
  }
};

/// Orthonormal camera basis for a view.
struct CameraBasis {
  Vec3 forward, right, up;

  explicit CameraBasis(const ViewSpec& spec) {
    const double yaw = deg2rad(spec.yaw);
    forward = direction_from_angles(spec.yaw, spec.pitch);
    right = {std::cos(yaw), 0.0, -std::sin(yaw)};
    up = forward.cross(right);
  }
};

/// Gnomonic camera: normalized view coordinates (u right, v down) to a unit ray.
inline Vec3 pixel_to_ray(const ViewSpec& spec, double u, double v) {
  const CameraBasis cam(spec);
  const double t = std::tan(deg2rad(spec.fov) / 2.0);
  const double xc = (2.0 * u - 1.0) * t;
  const double yc = (1.0 - 2.0 * v) * t;
  return (cam.forward + cam.right * xc + cam.up * yc).normalized();
}

/// Inverse of pixel_to_ray; empty when the ray points behind the camera.
inline std::optional<std::array<double, 2>> ray_to_pixel(const ViewSpec& spec, const Vec3& ray) {
  const CameraBasis cam(spec);
  const double depth = ray.dot(cam.forward);
  if (depth <= 0.0) return std::nullopt;
  const double t = std::tan(deg2rad(spec.fov) / 2.0);
  const double xc = ray.dot(cam.right) / depth;
  const double yc = ray.dot(cam.up) / depth;
  return std::array<double, 2>{(xc / t + 1.0) / 2.0, (1.0 - yc / t) / 2.0};
}

/// Equirectangular image covering 360 x 180 degrees.
class Panorama {
 public:
  explicit Panorama(RasterImage image, double yaw_origin_deg = 0.0)
      : image_(std::move(image)), yaw_origin_(yaw_origin_deg) {
    if (image_.width() != 2 * image_.height()) {
      throw InvalidInput("panorama must be equirectangular with width == 2*height, got " +
                         std::to_string(image_.width()) + "x" + std::to_string(image_.height()));
    }
  }

  const RasterImage& image() const { return image_; }
  double yaw_origin() const { return yaw_origin_; }

  /// Normalized equirect coordinates of a ray: u = 0.5 + longitude/360, v = (90 - latitude)/180.
  std::array<double, 2> ray_to_equirect(const Vec3& ray) const {
    const double lon = rad2deg(std::atan2(ray.x, ray.z)) - yaw_origin_;
    const double lat = rad2deg(std::asin(std::clamp(ray.y / ray.norm(), -1.0, 1.0)));
    double u = 0.5 + lon / 360.0;
    u -= std::floor(u);
    return {u, (90.0 - lat) / 180.0};
  }

  Vec3 equirect_to_ray(double u, double v) const {
    return direction_from_angles((u - 0.5) * 360.0 + yaw_origin_, 90.0 - v * 180.0);
  }

  /// Bilinear sample with horizontal wraparound and vertical clamp.
  Rgb sample(double u, double v) const {
    const int w = image_.width();
    const int h = image_.height();
    const double px = u * w - 0.5;
    const double py = std::clamp(v * h - 0.5, 0.0, static_cast<double>(h - 1));
    const double fx = std::floor(px);
    const double fy = std::floor(py);
    const double ax = px - fx;
    const double ay = py - fy;
    auto wrap = [w](long long x) { return static_cast<int>(((x % w) + w) % w); };
    const int x0 = wrap(static_cast<long long>(fx));
    const int x1 = wrap(static_cast<long long>(fx) + 1);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h - 1);
    Rgb out;
    double* o[3] = {&out.r, &out.g, &out.b};
    for (int c = 0; c < 3; ++c) {
      const double top = image_.at(x0, y0, c) * (1 - ax) + image_.at(x1, y0, c) * ax;
      const double bot = image_.at(x0, y1, c) * (1 - ax) + image_.at(x1, y1, c) * ax;
      *o[c] = top * (1 - ay) + bot * ay;
    }
    return out;
  }

 private:
  RasterImage image_;
  double yaw_origin_;
};

inline RasterImage project(const Panorama& pano, const ViewSpec& spec) {
  spec.validate();
  RasterImage out(spec.out_size, spec.out_size);
  const double n = spec.out_size;
  for (int j = 0; j < spec.out_size; ++j) {
    for (int i = 0; i < spec.out_size; ++i) {
      const Vec3 ray = pixel_to_ray(spec, (i + 0.5) / n, (j + 0.5) / n);
      const auto uv = pano.ray_to_equirect(ray);
      Rgb p = pano.sample(uv[0], uv[1]);
      out.set_pixel(i, j, {clamp01(p.r), clamp01(p.g), clamp01(p.b)});
    }
  }
  return out;
}

inline constexpr int kStandardViewCount = 6;
inline constexpr double kStandardViewSeparation = 60.0;
inline constexpr double kStandardViewPitch = 10.0;
inline constexpr double kStandardViewFov = 90.0;

inline std::vector<ViewSpec> standard_view_specs(int out_size) {
  std::vector<ViewSpec> specs;
  for (int k = 0; k < kStandardViewCount; ++k) {
    specs.push_back({k * kStandardViewSeparation, kStandardViewPitch, kStandardViewFov, out_size});
  }
  return specs;
}

inline std::vector<RasterImage> standard_views(const Panorama& pano, int out_size) {
  std::vector<RasterImage> views;
  for (const auto& spec : standard_view_specs(out_size)) views.push_back(project(pano, spec));
  return views;
}

/// Reads a panorama collection manifest: one path per line, `#` starts a
/// comment. Relative paths resolve against the manifest's directory.
inline std::vector<std::filesystem::path> read_path_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  std::vector<std::filesystem::path> paths;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    std::filesystem::path p = line.substr(b, e - b + 1);
    if (p.is_relative()) p = manifest.parent_path() / p;
    paths.push_back(p);
  }
  return paths;
}

}  // namespace vphoto
