#include "spatialqa/render.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spatialqa/errors.hpp"

namespace spatialqa {

namespace {

constexpr double kNearPlane = 0.05;  // meters in front of the camera

struct CamPoint {
  double x, y_rel, z;  // camera frame, y relative to camera height
};

CamPoint to_cam(const Vec3& p, const CameraPose& cam) {
  const CamFramePoint c = normalize_to_camera(p, cam);
  return {c.x_prime, c.y - cam.position.y, c.z_prime};
}

Pixel project(const CamPoint& c, const Intrinsics& K) {
  return {K.cx() + K.fx() * c.x / c.z, K.cy() - K.fy() * c.y_rel / c.z};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

/// Clips the segment a-b against z >= near; false when fully behind.
bool clip_segment(CamPoint& a, CamPoint& b) {
  if (a.z < kNearPlane && b.z < kNearPlane) return false;
  auto lerp = [](const CamPoint& p, const CamPoint& q, double t) {
    return CamPoint{p.x + (q.x - p.x) * t, p.y_rel + (q.y_rel - p.y_rel) * t,
                    p.z + (q.z - p.z) * t};
  };
  if (a.z < kNearPlane) a = lerp(a, b, (kNearPlane - a.z) / (b.z - a.z));
  if (b.z < kNearPlane) b = lerp(b, a, (kNearPlane - b.z) / (a.z - b.z));
  return true;
}

double cross2(const Pixel& o, const Pixel& a, const Pixel& b) {
  return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
}

/// Andrew monotone chain; returns the hull in counterclockwise order.
std::vector<Pixel> convex_hull(std::vector<Pixel> pts) {
  std::sort(pts.begin(), pts.end(), [](const Pixel& a, const Pixel& b) {
    return a.u < b.u || (a.u == b.u && a.v < b.v);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Pixel& a, const Pixel& b) { return a.u == b.u && a.v == b.v; }),
            pts.end());
  const size_t n = pts.size();
  if (n < 3) return pts;
  std::vector<Pixel> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = n - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

const std::pair<int, int> kBoxEdges[12] = {
    {0, 1}, {1, 2}, {2, 3}, {3, 0},  // bottom
    {4, 5}, {5, 6}, {6, 7}, {7, 4},  // top
    {0, 4}, {1, 5}, {2, 6}, {3, 7},  // verticals
};

void emit_line(std::ostringstream& out, const Vec3& a, const Vec3& b, const CameraPose& cam,
               const Intrinsics& K) {
  CamPoint ca = to_cam(a, cam);
  CamPoint cb = to_cam(b, cam);
  if (!clip_segment(ca, cb)) return;
  const Pixel pa = project(ca, K);
  const Pixel pb = project(cb, K);
  out << "<line x1=\"" << fmt(pa.u) << "\" y1=\"" << fmt(pa.v) << "\" x2=\"" << fmt(pb.u)
      << "\" y2=\"" << fmt(pb.v) << "\"/>\n";
}

}  // namespace

Rgb class_color(const std::string& class_name) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : class_name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return {80 + static_cast<int>(h % 151), 80 + static_cast<int>((h >> 8) % 151),
          80 + static_cast<int>((h >> 16) % 151)};
}

std::string render_frame_svg(const Frame& frame) {
  const Scene& scene = frame.state;
  const Intrinsics& K = scene.intrinsics;
  const CameraPose& cam = scene.camera;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << K.width << "\" height=\""
      << K.height << "\" viewBox=\"0 0 " << K.width << " " << K.height << "\">\n";
  out << "<rect width=\"" << K.width << "\" height=\"" << K.height << "\" fill=\"#f7f5f0\"/>\n";

  // Floor grid at 0.5 m spacing, plus the room boundary.
  out << "<g stroke=\"#d8d4cc\" stroke-width=\"1\">\n";
  const double y0 = scene.room.floor_y;
  for (double x = 0.0; x <= scene.room.width + 1e-9; x += 0.5) {
    emit_line(out, {x, y0, 0.0}, {x, y0, scene.room.depth}, cam, K);
  }
  for (double z = 0.0; z <= scene.room.depth + 1e-9; z += 0.5) {
    emit_line(out, {0.0, y0, z}, {scene.room.width, y0, z}, cam, K);
  }
  out << "</g>\n";
  out << "<g stroke=\"#8a857c\" stroke-width=\"2\">\n";
  emit_line(out, {0, y0, 0}, {scene.room.width, y0, 0}, cam, K);
  emit_line(out, {scene.room.width, y0, 0}, {scene.room.width, y0, scene.room.depth}, cam, K);
  emit_line(out, {scene.room.width, y0, scene.room.depth}, {0, y0, scene.room.depth}, cam, K);
  emit_line(out, {0, y0, scene.room.depth}, {0, y0, 0}, cam, K);
  out << "</g>\n";

  // Objects far-to-near so nearer silhouettes overdraw farther ones.
  std::vector<std::pair<double, size_t>> order;
  for (size_t i = 0; i < scene.objects.size(); ++i) {
    const double z = normalize_to_camera(scene.objects[i].center(), cam).z_prime;
    order.push_back({z, i});
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  out << "<g stroke=\"#44403a\" stroke-width=\"1\">\n";
  for (const auto& [depth, i] : order) {
    const ObjectInstance& obj = scene.objects[i];
    std::vector<Pixel> pts;
    const auto corners = obj.box_corners();
    for (const auto& [e0, e1] : kBoxEdges) {
      CamPoint a = to_cam(corners[static_cast<size_t>(e0)], cam);
      CamPoint b = to_cam(corners[static_cast<size_t>(e1)], cam);
      if (!clip_segment(a, b)) continue;
      pts.push_back(project(a, K));
      pts.push_back(project(b, K));
    }
    if (pts.size() < 3) continue;
    const auto hull = convex_hull(std::move(pts));
    if (hull.size() < 3) continue;
    const Rgb c = class_color(obj.class_name);
    const auto center_px = project_to_image(obj.center(), cam, K);
    out << "<polygon data-id=\"" << obj.instance_id << "\" data-class=\"" << obj.class_name
        << "\" data-depth=\"" << fmt(depth) << "\"";
    if (center_px) {
      out << " data-cx=\"" << fmt(center_px->u) << "\" data-cy=\"" << fmt(center_px->v) << "\"";
    }
    out << " fill=\"rgb(" << c.r << "," << c.g << "," << c.b << ")\" fill-opacity=\"0.85\""
        << " points=\"";
    for (size_t k = 0; k < hull.size(); ++k) {
      if (k) out << " ";
      out << fmt(hull[k].u) << "," << fmt(hull[k].v);
    }
    out << "\"/>\n";
  }
  out << "</g>\n";

  if (frame.mark) {
    const double s = 10.0;
    out << "<g stroke=\"#c0392b\" stroke-width=\"3\">\n";
    out << "<line x1=\"" << fmt(frame.mark->u - s) << "\" y1=\"" << fmt(frame.mark->v - s)
        << "\" x2=\"" << fmt(frame.mark->u + s) << "\" y2=\"" << fmt(frame.mark->v + s)
        << "\"/>\n";
    out << "<line x1=\"" << fmt(frame.mark->u - s) << "\" y1=\"" << fmt(frame.mark->v + s)
        << "\" x2=\"" << fmt(frame.mark->u + s) << "\" y2=\"" << fmt(frame.mark->v - s)
        << "\"/>\n";
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_frame_svgs(const std::vector<Frame>& frames, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const Frame& f : frames) {
    std::ofstream out(fs::path(dir) / (f.frame_id + ".svg"), std::ios::binary);
    if (!out) throw IoError("cannot write render for " + f.frame_id);
    out << render_frame_svg(f);
  }
}

}  // namespace spatialqa
