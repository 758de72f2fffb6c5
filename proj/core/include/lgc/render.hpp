#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "lgc/cloud.hpp"

namespace lgc {

enum class ColorBy { Curvature, EGen, Saturation };
enum class XScale { Linear, Sqrt };

ColorBy parse_color_by(std::string_view name);
XScale parse_x_scale(std::string_view name);

struct RenderOptions {
  bool panes_by_curvature = false;
  ColorBy color_by = ColorBy::Curvature;
  XScale x_scale = XScale::Linear;
  std::optional<double> e_train_filter;  // keep records with e_train below this
  int width = 800;
  int height = 600;
};

/// Horizontal axis coordinate of a training error under the chosen scale.
double x_axis_value(double e_train, XScale scale);

/// RGB raster, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

/// Scatter of e_train (x) against grad_norm (y). With panes_by_curvature one image
/// is produced per curvature class present (plus "skipped" when some records have
/// no class), otherwise a single image. Throws UsageError for colourings the cloud
/// cannot support and DataError when nothing is left to plot.
std::vector<std::pair<std::string, Image>> render_lgc_images(const Cloud& cloud, const RenderOptions& options);

/// Renders and writes PNG files `<stem>.png` or `<stem>_<pane>.png`. Returns the paths.
std::vector<std::filesystem::path> render_lgc(const Cloud& cloud, const std::filesystem::path& stem,
                                              const RenderOptions& options);

void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace lgc
