#include "lgc/render.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "lgc/error.hpp"

namespace lgc {

ColorBy parse_color_by(std::string_view name) {
  if (name == "curvature") return ColorBy::Curvature;
  if (name == "egen" || name == "e_gen") return ColorBy::EGen;
  if (name == "saturation") return ColorBy::Saturation;
  throw UsageError("unknown colouring '" + std::string(name) + "' (expected curvature, egen or saturation)");
}

XScale parse_x_scale(std::string_view name) {
  if (name == "linear") return XScale::Linear;
  if (name == "sqrt") return XScale::Sqrt;
  throw UsageError("unknown x scale '" + std::string(name) + "' (expected linear or sqrt)");
}

double x_axis_value(double e_train, XScale scale) {
  return scale == XScale::Sqrt ? std::sqrt(std::max(0.0, e_train)) : e_train;
}

namespace {

using Rgb = std::array<std::uint8_t, 3>;

// 5x7 glyphs, one byte per row, bit 4 is the leftmost column.
const std::map<char, std::array<std::uint8_t, 7>>& glyphs() {
  static const std::map<char, std::array<std::uint8_t, 7>> g = {
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}}, {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
      {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}}, {'>', {0x08, 0x04, 0x02, 0x01, 0x02, 0x04, 0x08}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}}, {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
      {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}}, {'|', {0x04, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'<', {0x02, 0x04, 0x08, 0x10, 0x08, 0x04, 0x02}}, {' ', {0, 0, 0, 0, 0, 0, 0}},
      {'A', {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
      {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
      {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
      {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
      {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
      {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
      {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
      {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
      {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
      {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
  };
  return g;
}

class Canvas {
 public:
  Canvas(int w, int h) : img_{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, 255)} {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    auto* p = &img_.rgb[(static_cast<std::size_t>(y) * img_.width + x) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  void fill(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) set(x, y, c);
  }

  void text(int x, int y, std::string_view s, Rgb c) {
    for (char ch : s) {
      const char key = (ch >= 'a' && ch <= 'z') ? static_cast<char>(ch - 'a' + 'A') : ch;
      const auto it = glyphs().find(key);
      if (it != glyphs().end())
        for (int r = 0; r < 7; ++r)
          for (int col = 0; col < 5; ++col)
            if (it->second[r] & (0x10 >> col)) set(x + col, y + r, c);
      x += 6;
    }
  }

  static int text_width(std::string_view s) { return static_cast<int>(s.size()) * 6; }

  Image take() { return std::move(img_); }

 private:
  Image img_;
};

Rgb curvature_colour(const std::optional<Curvature>& c) {
  if (!c) return {150, 150, 150};
  switch (c->kind) {
    case CurvatureClass::Convex: return {31, 119, 180};
    case CurvatureClass::Concave: return {44, 160, 44};
    case CurvatureClass::Saddle: return {255, 127, 14};
    case CurvatureClass::Singular: return {214, 39, 40};
  }
  return {0, 0, 0};
}

// Piecewise-linear approximation of the viridis colour map.
Rgb colour_map(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops = {{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  Rgb out;
  for (int k = 0; k < 3; ++k)
    out[k] = static_cast<std::uint8_t>(std::lround(stops[i][k] + f * (stops[i + 1][k] - stops[i][k])));
  return out;
}

std::string tick_label(double v) {
  char buf[32];
  if (v == 0.0) return "0";
  const double a = std::abs(v);
  if (a >= 1e-2 && a < 1e4)
    std::snprintf(buf, sizeof buf, "%.3g", v);
  else
    std::snprintf(buf, sizeof buf, "%.1E", v);
  return buf;
}

std::string pane_name(const std::optional<Curvature>& c) {
  return c ? std::string(to_string(c->kind)) : std::string("skipped");
}

struct Frame {
  double x_max = 1.0;
  double y_max = 1.0;
  double c_min = 0.0;
  double c_max = 1.0;
};

Image draw(const std::vector<const StepRecord*>& points, const Frame& frame, const RenderOptions& opt,
           std::string_view title) {
  Canvas cv(opt.width, opt.height);
  const int left = 70, right = opt.width - (opt.color_by == ColorBy::Curvature ? 20 : 90);
  const int top = 30, bottom = opt.height - 50;
  const Rgb black{0, 0, 0};

  for (int x = left; x <= right; ++x) {
    cv.set(x, top, black);
    cv.set(x, bottom, black);
  }
  for (int y = top; y <= bottom; ++y) {
    cv.set(left, y, black);
    cv.set(right, y, black);
  }
  for (int k = 0; k <= 4; ++k) {
    const double fx = k / 4.0;
    const int px = left + static_cast<int>(std::lround(fx * (right - left)));
    const int py = bottom - static_cast<int>(std::lround(fx * (bottom - top)));
    cv.fill(px, bottom, px, bottom + 4, black);
    cv.fill(left - 4, py, left, py, black);
    // Ticks are labelled in data units; under sqrt scale the label is the squared position.
    const double xv = fx * frame.x_max;
    const std::string xl = tick_label(opt.x_scale == XScale::Sqrt ? xv * xv : xv);
    cv.text(px - Canvas::text_width(xl) / 2, bottom + 8, xl, black);
    const std::string yl = tick_label(fx * frame.y_max);
    cv.text(left - 8 - Canvas::text_width(yl), py - 3, yl, black);
  }
  const std::string xt = opt.x_scale == XScale::Sqrt ? "E_T (SQRT SCALE)" : "E_T";
  cv.text((left + right) / 2 - Canvas::text_width(xt) / 2, bottom + 26, xt, black);
  cv.text(8, top - 18, "|G_T|", black);
  cv.text((left + right) / 2 - Canvas::text_width(title) / 2, 10, title, black);

  for (const StepRecord* r : points) {
    const double fx = x_axis_value(r->e_train, opt.x_scale) / frame.x_max;
    const double fy = r->grad_norm / frame.y_max;
    const int px = left + static_cast<int>(std::lround(fx * (right - left)));
    const int py = bottom - static_cast<int>(std::lround(fy * (bottom - top)));
    Rgb c;
    switch (opt.color_by) {
      case ColorBy::Curvature: c = curvature_colour(r->curvature); break;
      case ColorBy::EGen: c = colour_map((*r->e_gen - frame.c_min) / (frame.c_max - frame.c_min)); break;
      case ColorBy::Saturation: c = colour_map(r->saturation ? r->saturation->value : 0.0); break;
    }
    cv.fill(px - 1, py - 1, px + 1, py + 1, c);
  }

  if (opt.color_by != ColorBy::Curvature) {
    const int bx0 = right + 20, bx1 = right + 35;
    for (int y = top; y <= bottom; ++y) {
      const double t = static_cast<double>(bottom - y) / (bottom - top);
      cv.fill(bx0, y, bx1, y, colour_map(t));
    }
    cv.text(bx0, top - 12, tick_label(frame.c_max), black);
    cv.text(bx0, bottom + 6, tick_label(frame.c_min), black);
    cv.text(bx0, bottom + 16, opt.color_by == ColorBy::EGen ? "E_G" : "SAT", black);
  } else {
    int ly = top + 6;
    for (auto cls : {CurvatureClass::Convex, CurvatureClass::Concave, CurvatureClass::Saddle,
                     CurvatureClass::Singular}) {
      cv.fill(right - 90, ly, right - 84, ly + 6, curvature_colour(Curvature{cls, 0, 0, 0}));
      cv.text(right - 78, ly, to_string(cls), black);
      ly += 12;
    }
  }
  return cv.take();
}

}  // namespace

std::vector<std::pair<std::string, Image>> render_lgc_images(const Cloud& cloud, const RenderOptions& opt) {
  if (opt.width < 200 || opt.height < 150) throw UsageError("plot must be at least 200x150 pixels");
  if (cloud.records.empty()) throw DataError("cannot render an empty cloud");
  std::vector<const StepRecord*> kept;
  for (const auto& r : cloud.records)
    if (!opt.e_train_filter || r.e_train < *opt.e_train_filter) kept.push_back(&r);
  if (kept.empty()) throw DataError("no records pass the e_train filter");

  if (opt.color_by == ColorBy::EGen &&
      std::any_of(kept.begin(), kept.end(), [](const StepRecord* r) { return !r->e_gen; }))
    throw UsageError("colouring by E_g needs a generalisation error on every record (none for XOR)");
  if (opt.color_by == ColorBy::Saturation &&
      std::none_of(kept.begin(), kept.end(), [](const StepRecord* r) { return r->saturation.has_value(); }))
    throw UsageError("colouring by saturation needs saturation readings (none recorded for this activation)");
  if (opt.panes_by_curvature &&
      std::none_of(kept.begin(), kept.end(), [](const StepRecord* r) { return r->curvature.has_value(); }))
    throw UsageError("curvature panes need curvature classes (Hessians were skipped for this cloud)");

  Frame frame;
  double xm = 0.0, ym = 0.0;
  double cmin = INFINITY, cmax = -INFINITY;
  for (const StepRecord* r : kept) {
    xm = std::max(xm, x_axis_value(r->e_train, opt.x_scale));
    ym = std::max(ym, r->grad_norm);
    if (opt.color_by == ColorBy::EGen) {
      cmin = std::min(cmin, *r->e_gen);
      cmax = std::max(cmax, *r->e_gen);
    }
  }
  frame.x_max = xm > 0 ? 1.05 * xm : 1.0;
  frame.y_max = ym > 0 ? 1.05 * ym : 1.0;
  if (opt.color_by == ColorBy::EGen) {
    frame.c_min = cmin;
    frame.c_max = cmax > cmin ? cmax : cmin + 1.0;
  }

  std::vector<std::pair<std::string, Image>> out;
  const std::string base = cloud.cell.empty() ? std::string("LGC") : cloud.cell;
  if (!opt.panes_by_curvature) {
    out.emplace_back("", draw(kept, frame, opt, base));
    return out;
  }
  std::map<std::string, std::vector<const StepRecord*>> panes;
  for (const StepRecord* r : kept) panes[pane_name(r->curvature)].push_back(r);
  for (const auto& [name, pts] : panes) out.emplace_back(name, draw(pts, frame, opt, base + " " + name));
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  std::FILE* fp = std::fopen(tmp.string().c_str(), "wb");
  if (!fp) throw Error("cannot write " + tmp.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    std::filesystem::remove(tmp);
    throw Error("PNG encoding failed for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    png_write_row(png, image.rgb.data() + static_cast<std::size_t>(y) * image.width * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw Error("cannot close " + tmp.string());
  std::filesystem::rename(tmp, path);
}

std::vector<std::filesystem::path> render_lgc(const Cloud& cloud, const std::filesystem::path& stem,
                                              const RenderOptions& options) {
  std::vector<std::filesystem::path> written;
  for (const auto& [pane, image] : render_lgc_images(cloud, options)) {
    std::filesystem::path p = pane.empty() ? stem.string() + ".png" : stem.string() + "_" + pane + ".png";
    write_png(p, image);
    written.push_back(std::move(p));
  }
  return written;
}

}  // namespace lgc
