#include "tome/partition.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tome/errors.hpp"

namespace tome {

namespace {

std::size_t parse_count(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw PartitionError("invalid " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

std::pair<std::size_t, std::size_t> parse_pair(std::string_view s, std::string_view what) {
  const auto x = s.find('x');
  if (x == std::string_view::npos) {
    throw PartitionError("expected AxB for " + std::string(what) + ", got '" + std::string(s) +
                         "'");
  }
  return {parse_count(s.substr(0, x), what), parse_count(s.substr(x + 1), what)};
}

using Mask = std::vector<std::uint8_t>;

Mask alternating_mask(const GridShape& g) {
  Mask m(g.tokens(), 0);
  for (std::size_t i = 1; i < m.size(); i += 2) m[i] = 1;
  return m;
}

Mask strided_mask(const GridShape& g, const scheme::Strided& s) {
  Mask m(g.tokens(), 0);
  for (std::size_t y = 0; y < g.height; y += s.sy)
    for (std::size_t x = 0; x < g.width; x += s.sx) m[y * g.width + x] = 1;
  return m;
}

Mask random_mask(const GridShape& g, const scheme::Random& s, RngStream rs) {
  const std::size_t n = g.tokens();
  // nearbyint under the default rounding mode rounds half to even.
  const auto k = static_cast<std::size_t>(std::nearbyint(s.dst_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Mask m(n, 0);
  for (std::size_t i = 0; i < k && i < n; ++i) {
    const std::size_t j = i + rs.next_index(n - i);
    std::swap(order[i], order[j]);
    m[order[i]] = 1;
  }
  return m;
}

Mask rand_tile_mask(const GridShape& g, const scheme::RandTile& s, RngStream rs) {
  Mask m(g.tokens(), 0);
  for (std::size_t y0 = 0; y0 < g.height; y0 += s.ty) {
    const std::size_t th = std::min(s.ty, g.height - y0);
    for (std::size_t x0 = 0; x0 < g.width; x0 += s.tx) {
      const std::size_t tw = std::min(s.tx, g.width - x0);
      const std::size_t pick = rs.next_index(th * tw);
      m[(y0 + pick / tw) * g.width + x0 + pick % tw] = 1;
    }
  }
  return m;
}

}  // namespace

bool PartitionScheme::is_random() const noexcept {
  return std::holds_alternative<scheme::Random>(variant) ||
         std::holds_alternative<scheme::RandTile>(variant);
}

PartitionScheme parse_partition(std::string_view text) {
  PartitionScheme out;
  if (text == "alt") {
    out.variant = scheme::Alternating{};
  } else if (text == "rand") {
    out.variant = scheme::Random{0.25};
  } else if (text == "rand2x2") {
    out.variant = scheme::RandTile{2, 2};
  } else if (text.starts_with("strided:")) {
    const auto [sy, sx] = parse_pair(text.substr(8), "stride");
    out.variant = scheme::Strided{sy, sx};
  } else if (text.starts_with("randtile:")) {
    const auto [ty, tx] = parse_pair(text.substr(9), "tile");
    out.variant = scheme::RandTile{ty, tx};
  } else if (text.starts_with("rand:")) {
    const std::string frac(text.substr(5));
    std::size_t used = 0;
    double f = 0.0;
    try {
      f = std::stod(frac, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != frac.size() || frac.empty()) {
      throw PartitionError("invalid dst fraction '" + frac + "'");
    }
    out.variant = scheme::Random{f};
  } else {
    throw PartitionError("unknown partition scheme '" + std::string(text) +
                         "' (expected alt, strided:SYxSX, rand:F, rand2x2 or randtile:TYxTX)");
  }
  validate(out);
  return out;
}

std::string to_string(const PartitionVariant& v) {
  struct Visitor {
    std::string operator()(const scheme::Alternating&) const { return "alt"; }
    std::string operator()(const scheme::Strided& s) const {
      return "strided:" + std::to_string(s.sy) + "x" + std::to_string(s.sx);
    }
    std::string operator()(const scheme::Random& s) const {
      std::ostringstream os;
      os << "rand:" << s.dst_fraction;
      return os.str();
    }
    std::string operator()(const scheme::RandTile& s) const {
      return "randtile:" + std::to_string(s.ty) + "x" + std::to_string(s.tx);
    }
  };
  return std::visit(Visitor{}, v);
}

void validate(const PartitionScheme& s) {
  if (const auto* st = std::get_if<scheme::Strided>(&s.variant)) {
    if (st->sy < 1 || st->sx < 1) throw PartitionError("strides must be >= 1");
  } else if (const auto* r = std::get_if<scheme::Random>(&s.variant)) {
    if (!(r->dst_fraction > 0.0 && r->dst_fraction < 1.0)) {
      throw PartitionError("random dst fraction must lie in (0, 1)");
    }
  } else if (const auto* t = std::get_if<scheme::RandTile>(&s.variant)) {
    if (t->ty < 1 || t->tx < 1) throw PartitionError("tile dimensions must be >= 1");
  }
}

PartitionPlan::PartitionPlan(GridShape shape, std::vector<std::vector<std::uint8_t>> dst_mask)
    : shape_(shape), mask_(std::move(dst_mask)) {
  if (mask_.size() != shape_.batch) throw PartitionError("one mask per batch element required");
  for (std::size_t b = 0; b < mask_.size(); ++b) {
    if (mask_[b].size() != shape_.tokens()) throw PartitionError("mask length mismatch");
    const auto count = static_cast<std::size_t>(std::count(mask_[b].begin(), mask_[b].end(), 1));
    if (b == 0) {
      dst_count_ = count;
    } else if (count != dst_count_) {
      throw PartitionError("dst count differs across batch elements");
    }
  }
  if (dst_count_ == 0) throw PartitionError("partition leaves the dst set empty");
  if (dst_count_ == shape_.tokens()) throw PartitionError("partition leaves the src set empty");
}

const std::vector<std::uint8_t>& PartitionPlan::mask(std::size_t batch_index) const {
  if (batch_index >= mask_.size()) throw IndexError("batch index out of range");
  return mask_[batch_index];
}

std::vector<std::size_t> PartitionPlan::dst_indices(std::size_t batch_index) const {
  const auto& m = mask(batch_index);
  std::vector<std::size_t> out;
  out.reserve(dst_count_);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) out.push_back(i);
  return out;
}

std::vector<std::size_t> PartitionPlan::src_indices(std::size_t batch_index) const {
  const auto& m = mask(batch_index);
  std::vector<std::size_t> out;
  out.reserve(m.size() - dst_count_);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!m[i]) out.push_back(i);
  return out;
}

bool PartitionPlan::identical_across_batch() const noexcept {
  for (std::size_t b = 1; b < mask_.size(); ++b)
    if (mask_[b] != mask_[0]) return false;
  return true;
}

PartitionPlan make_partition(const GridShape& shape, const PartitionScheme& scheme,
                             const Rng& rng, std::size_t step, std::size_t layer) {
  if (shape.batch < 1 || shape.height < 1 || shape.width < 1) {
    throw PartitionError("grid dimensions must be >= 1");
  }
  validate(scheme);

  auto build = [&](std::uint64_t lane) -> Mask {
    const RngStream rs = rng.stream(RngPurpose::Partition, step, layer, lane);
    struct Visitor {
      const GridShape& g;
      const RngStream& rs;
      Mask operator()(const scheme::Alternating&) const { return alternating_mask(g); }
      Mask operator()(const scheme::Strided& s) const { return strided_mask(g, s); }
      Mask operator()(const scheme::Random& s) const { return random_mask(g, s, rs); }
      Mask operator()(const scheme::RandTile& s) const { return rand_tile_mask(g, s, rs); }
    };
    return std::visit(Visitor{shape, rs}, scheme.variant);
  };

  std::vector<Mask> masks;
  masks.reserve(shape.batch);
  if (scheme.batch_fix || !scheme.is_random()) {
    masks.assign(shape.batch, build(0));
  } else {
    for (std::size_t b = 0; b < shape.batch; ++b) masks.push_back(build(b + 1));
  }
  return PartitionPlan(shape, std::move(masks));
}

double dst_fraction(const PartitionPlan& plan) noexcept {
  return static_cast<double>(plan.dst_count()) / static_cast<double>(plan.tokens());
}

}  // namespace tome
