#include "tome/ppm.hpp"

#include <fstream>
#include <string>

#include "tome/errors.hpp"
#include "tome/rng.hpp"

namespace tome {

namespace {

void fill_block(RgbImage& img, std::size_t tx, std::size_t ty, std::size_t scale,
                const std::uint8_t color[3]) {
  for (std::size_t y = ty * scale; y < (ty + 1) * scale; ++y)
    for (std::size_t x = tx * scale; x < (tx + 1) * scale; ++x)
      std::copy_n(color, 3, img.pixel(x, y));
}

RgbImage blank(std::size_t w, std::size_t h) {
  RgbImage img;
  img.width = w;
  img.height = h;
  img.rgb.assign(w * h * 3, 0);
  return img;
}

}  // namespace

RgbImage partition_image(const PartitionPlan& plan, std::size_t batch_index, std::size_t scale) {
  const auto& g = plan.shape();
  const auto& mask = plan.mask(batch_index);
  RgbImage img = blank(g.width * scale, g.height * scale);
  constexpr std::uint8_t white[3] = {255, 255, 255};
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) fill_block(img, i % g.width, i / g.width, scale, white);
  return img;
}

RgbImage merge_map_image(const MergePlan& plan, std::size_t height, std::size_t width,
                         std::size_t scale) {
  if (height * width != plan.tokens()) throw ShapeError("merge map grid does not match plan");
  RgbImage img = blank(width * scale, height * scale);
  constexpr std::uint8_t grey[3] = {48, 48, 48};
  const auto& groups = plan.groups();
  for (std::size_t row = 0; row < groups.size(); ++row) {
    const auto& members = groups[row];
    std::uint8_t tint[3];
    if (members.size() > 1) {
      const std::uint64_t h = splitmix64(row);
      // Keep tints bright so they stand apart from the grey background.
      for (int k = 0; k < 3; ++k) tint[k] = static_cast<std::uint8_t>(96 + ((h >> (8 * k)) % 160));
    } else {
      std::copy_n(grey, 3, tint);
    }
    for (std::size_t t : members) fill_block(img, t % width, t / width, scale, tint);
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || maxval != 255) throw IoError("'" + path.string() + "' is not an 8-bit P6 file");
  in.get();
  RgbImage img = blank(w, h);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!in) throw IoError("truncated pixmap '" + path.string() + "'");
  return img;
}

void write_edge_list(const std::filesystem::path& path, const MergePlan& plan) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const Edge& e : plan.edges()) out << e.src << ' ' << e.dst << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace tome
