#include <doctest.h>

#include <cmath>

#include "spatialqa/render.hpp"

using namespace spatialqa;

namespace {

Frame simple_frame() {
  Frame f;
  f.frame_id = "r_f00";
  Scene& s = f.state;
  s.scene_id = "r";
  s.room.width = 6;
  s.room.depth = 6;
  s.camera.position = {3, 1.5, 0.5};
  s.camera.yaw = 0;
  auto add = [&](const std::string& id, const std::string& cls, Vec3 pos) {
    ObjectInstance o;
    o.instance_id = id;
    o.class_name = cls;
    o.chosen_phrase = "plain " + cls;
    o.position = pos;
    o.footprint_w = 0.6;
    o.footprint_d = 0.6;
    o.height = 0.8;
    s.objects.push_back(o);
  };
  add("o00", "box", {3.0, 0, 3.5});   // z' = 3.0
  add("o01", "stool", {2.4, 0, 1.5});  // z' = 1.0, drawn last (nearer)
  return f;
}

std::vector<double> polygon_depths(const std::string& svg) {
  std::vector<double> depths;
  size_t pos = 0;
  while ((pos = svg.find("data-depth=\"", pos)) != std::string::npos) {
    pos += 12;
    depths.push_back(std::stod(svg.substr(pos)));
  }
  return depths;
}

}  // namespace

TEST_CASE("empty room renders grid only, deterministically") {
  Frame f;
  f.frame_id = "empty";
  f.state.scene_id = "empty";
  f.state.room.width = 5;
  f.state.room.depth = 5;
  f.state.camera.position = {2.5, 1.5, 0.5};
  const std::string svg = render_frame_svg(f);
  CHECK(svg.find("<polygon") == std::string::npos);
  CHECK(svg.find("<line") != std::string::npos);
  CHECK(svg == render_frame_svg(f));
}

TEST_CASE("painter order is far to near") {
  const Frame f = simple_frame();
  const std::string svg = render_frame_svg(f);
  const auto depths = polygon_depths(svg);
  REQUIRE(depths.size() == 2);
  for (size_t i = 1; i < depths.size(); ++i) CHECK(depths[i] <= depths[i - 1]);
  // Every visible object appears.
  CHECK(svg.find("data-id=\"o00\"") != std::string::npos);
  CHECK(svg.find("data-id=\"o01\"") != std::string::npos);
  // Identical inputs give identical bytes.
  CHECK(svg == render_frame_svg(simple_frame()));
}

TEST_CASE("rendered centroid matches project_to_image") {
  const Frame f = simple_frame();
  const std::string svg = render_frame_svg(f);
  for (const auto& obj : f.state.objects) {
    const auto px = project_to_image(obj.center(), f.state.camera, f.state.intrinsics);
    REQUIRE(px.has_value());
    const std::string marker = "data-id=\"" + obj.instance_id + "\"";
    const size_t at = svg.find(marker);
    REQUIRE(at != std::string::npos);
    const size_t cx_at = svg.find("data-cx=\"", at);
    const size_t cy_at = svg.find("data-cy=\"", at);
    REQUIRE(cx_at != std::string::npos);
    const double cx = std::stod(svg.substr(cx_at + 9));
    const double cy = std::stod(svg.substr(cy_at + 9));
    CHECK(std::fabs(cx - px->u) <= 0.5);
    CHECK(std::fabs(cy - px->v) <= 0.5);
  }
}

TEST_CASE("mark glyph appears only when set") {
  Frame f = simple_frame();
  CHECK(render_frame_svg(f).find("#c0392b") == std::string::npos);
  f.mark = Pixel{200, 300};
  const std::string svg = render_frame_svg(f);
  CHECK(svg.find("#c0392b") != std::string::npos);
}

TEST_CASE("class colors are stable and in the pastel band") {
  const Rgb a = class_color("chair");
  const Rgb b = class_color("chair");
  CHECK(a.r == b.r);
  CHECK(a.g == b.g);
  CHECK(a.b == b.b);
  for (const char* cls : {"chair", "sofa", "cup", "floor lamp"}) {
    const Rgb c = class_color(cls);
    CHECK(c.r >= 80);
    CHECK(c.r <= 230);
    CHECK(c.g >= 80);
    CHECK(c.g <= 230);
    CHECK(c.b >= 80);
    CHECK(c.b <= 230);
  }
}
