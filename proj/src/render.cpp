// Skeleton rasterizer: fixed camera box, bones as lines, joints as discs.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "signtok/errors.hpp"
#include "signtok/pose.hpp"

namespace signtok {

namespace {

constexpr int kWidth = 320;
constexpr int kHeight = 320;
// World box covering normalized upper-body poses with margin.
constexpr double kXMin = -1.7, kXMax = 1.7;
constexpr double kYMin = -0.7, kYMax = 1.7;

struct Canvas {
  std::vector<std::uint8_t> px;  // rgb
  Canvas() : px(static_cast<std::size_t>(kWidth * kHeight * 3), 255) {}

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= kWidth || y >= kHeight) {
      return;
    }
    const std::size_t i = 3 * static_cast<std::size_t>(y * kWidth + x);
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }

  void line(int x0, int y0, int x1, int y1) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, 70, 70, 70);
      if (x0 == x1 && y0 == y1) {
        break;
      }
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void disc(int cx, int cy, int rad, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (int y = -rad; y <= rad; ++y) {
      for (int x = -rad; x <= rad; ++x) {
        if (x * x + y * y <= rad * rad) {
          set(cx + x, cy + y, r, g, b);
        }
      }
    }
  }
};

int px_x(double x) {
  return static_cast<int>(std::lround((x - kXMin) / (kXMax - kXMin) * (kWidth - 1)));
}

int px_y(double y) {
  // y axis points up in pose space, down on the canvas
  return static_cast<int>(std::lround((kYMax - y) / (kYMax - kYMin) * (kHeight - 1)));
}

}  // namespace

std::size_t render_sequence(const PoseSequence& seq, const Skeleton& skeleton,
                            const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) {
    throw IoError("render_sequence: cannot create directory " + out_dir);
  }
  std::size_t written = 0;
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const PoseFrame& frame = seq.frames[f];
    Canvas canvas;
    for (const auto& [a, b] : skeleton.edges) {
      const auto& pa = frame.coords[static_cast<std::size_t>(a)];
      const auto& pb = frame.coords[static_cast<std::size_t>(b)];
      canvas.line(px_x(pa[0]), px_y(pa[1]), px_x(pb[0]), px_y(pb[1]));
    }
    for (std::size_t j = 0; j < frame.joint_count(); ++j) {
      const auto& c = frame.coords[j];
      // low-confidence joints drawn lighter
      const auto shade = static_cast<std::uint8_t>(200 - 170 * frame.confidence[j]);
      canvas.disc(px_x(c[0]), px_y(c[1]), 3, shade, shade, 220);
    }
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.ppm", f);
    const fs::path path = fs::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      throw IoError("render_sequence: cannot write " + path.string());
    }
    out << "P6\n" << kWidth << ' ' << kHeight << "\n255\n";
    out.write(reinterpret_cast<const char*>(canvas.px.data()),
              static_cast<std::streamsize>(canvas.px.size()));
    if (!out) {
      throw IoError("render_sequence: write failed for " + path.string());
    }
    ++written;
  }
  return written;
}

}  // namespace signtok
