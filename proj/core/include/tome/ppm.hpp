#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tome/matching.hpp"
#include "tome/partition.hpp"

namespace tome {

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  ///< width * height * 3

  std::uint8_t* pixel(std::size_t x, std::size_t y) { return rgb.data() + 3 * (y * width + x); }
  const std::uint8_t* pixel(std::size_t x, std::size_t y) const {
    return rgb.data() + 3 * (y * width + x);
  }
};

/// dst tokens white, src tokens black; each token drawn as a scale x scale block.
RgbImage partition_image(const PartitionPlan& plan, std::size_t batch_index, std::size_t scale = 1);

/// Every merged group (a dst plus the src tokens merged into it) shares one
/// tint; untouched tokens are dark grey.
RgbImage merge_map_image(const MergePlan& plan, std::size_t height, std::size_t width,
                         std::size_t scale = 1);

/// Binary P6 portable pixmap. Throws IoError when the file cannot be written.
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);

/// `src_index dst_index` per line, in selection order.
void write_edge_list(const std::filesystem::path& path, const MergePlan& plan);

}  // namespace tome
