#include "vidfeat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace vidfeat {

GrayFrame random_texture(int width, int height, std::uint64_t seed, int max_side) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("random_texture: empty size");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> level(0, 255);
  GrayFrame img(width, height, static_cast<std::uint8_t>(level(rng)));
  const int area = width * height;
  max_side = std::max(4, std::min({width, height, max_side}));
  // Roughly constant coverage: about 2.5 rectangle layers over every pixel.
  const int n_rects = std::max(8, static_cast<int>(2.5 * area / ((3.0 + max_side) * (3.0 + max_side) / 4.0)));
  std::uniform_int_distribution<int> side(3, max_side);
  std::uniform_real_distribution<double> slope(-1.0, 1.0);
  for (int i = 0; i < n_rects; ++i) {
    const int w = side(rng);
    const int h = side(rng);
    const int x0 = std::uniform_int_distribution<int>(-w + 1, width - 1)(rng);
    const int y0 = std::uniform_int_distribution<int>(-h + 1, height - 1)(rng);
    const double v = level(rng);
    // Linear shading across the rectangle, up to +-64 grey levels.
    const double gx = slope(rng) * 64.0 / w;
    const double gy = slope(rng) * 64.0 / h;
    for (int y = std::max(y0, 0); y < std::min(y0 + h, height); ++y) {
      for (int x = std::max(x0, 0); x < std::min(x0 + w, width); ++x) {
        const double shaded = v + gx * (x - x0 - w / 2.0) + gy * (y - y0 - h / 2.0);
        img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(shaded), 0L, 255L));
      }
    }
  }
  return img;
}

Point2 SynthObject::position(int frame) const {
  const double t = frame - first_frame;
  return {x + vx * t, y + vy * t};
}

Point2 SynthObject::centroid(int frame) const {
  const Point2 p = position(frame);
  return {p.x + (width - 1) / 2.0, p.y + (height - 1) / 2.0};
}

namespace {

void paint(GrayFrame& frame, const GrayFrame& texture, Point2 pos) {
  const int x_begin = std::max(0, static_cast<int>(std::ceil(pos.x)));
  const int y_begin = std::max(0, static_cast<int>(std::ceil(pos.y)));
  const int x_end = std::min(frame.width - 1, static_cast<int>(std::floor(pos.x + texture.width - 1)));
  const int y_end = std::min(frame.height - 1, static_cast<int>(std::floor(pos.y + texture.height - 1)));
  const bool integral = pos.x == std::floor(pos.x) && pos.y == std::floor(pos.y);
  for (int y = y_begin; y <= y_end; ++y) {
    for (int x = x_begin; x <= x_end; ++x) {
      const double u = x - pos.x;
      const double v = y - pos.y;
      frame.at(x, y) = integral ? texture.at(static_cast<int>(u), static_cast<int>(v))
                                : static_cast<std::uint8_t>(std::lround(sample_bilinear(texture, u, v)));
    }
  }
}

}  // namespace

SynthSequence synth_sequence(const SceneSpec& spec) {
  if (spec.width < 64 || spec.height < 64) {
    throw std::invalid_argument("synth_sequence: frames must be at least 64x64");
  }
  if (spec.n_frames < 1) throw std::invalid_argument("synth_sequence: frame count must be >= 1");
  std::vector<GrayFrame> textures;
  for (const SynthObject& obj : spec.objects) {
    if (obj.width < 1 || obj.height < 1 || obj.width > spec.width || obj.height > spec.height) {
      throw std::invalid_argument("synth_sequence: object " + std::to_string(obj.id) + " (" +
                                  std::to_string(obj.width) + "x" + std::to_string(obj.height) +
                                  ") does not fit in the frame");
    }
    textures.push_back(random_texture(obj.width, obj.height, obj.texture_seed, obj.texture_scale));
  }

  const GrayFrame background = spec.textured_background ? random_texture(spec.width, spec.height, spec.seed, spec.texture_scale)
                                                        : GrayFrame(spec.width, spec.height, 128);
  SynthSequence out;
  out.frames.reserve(static_cast<std::size_t>(spec.n_frames));
  for (int n = 0; n < spec.n_frames; ++n) {
    GrayFrame frame = background;
    frame.index = n;
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
      const SynthObject& obj = spec.objects[i];
      if (!obj.visible(n)) continue;
      paint(frame, textures[i], obj.position(n));
      const Point2 c = obj.centroid(n);
      out.truth.push_back({n, obj.id, c.x, c.y});
    }
    out.frames.push_back(std::move(frame));
  }
  return out;
}

SceneSpec preset_scene(const std::string& name, int width, int height, int n_frames, std::uint64_t seed) {
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.n_frames = n_frames;
  spec.seed = seed;
  if (name == "static") return spec;
  if (name == "moving") {
    SynthObject obj;
    obj.id = 1;
    obj.width = width / 2;
    obj.height = height / 2;
    obj.texture_seed = seed + 1000;
    obj.x = width / 8.0;
    obj.y = height / 8.0;
    obj.vx = 1.5;
    obj.vy = 1.0;
    spec.objects.push_back(obj);
    return spec;
  }
  if (name == "multi") {
    const int segment = std::max(1, (n_frames + 2) / 3);
    for (int k = 0; k < 3; ++k) {
      SynthObject obj;
      obj.id = k + 1;
      obj.width = width * 3 / 8;
      obj.height = height * 3 / 8;
      obj.texture_seed = seed + 2000 + static_cast<std::uint64_t>(k);
      obj.x = width / 4.0 + 20.0 * k;
      obj.y = height / 4.0 - 10.0 * k;
      obj.vx = k == 1 ? -1.0 : 1.0;
      obj.vy = 0.5;
      obj.first_frame = k * segment;
      obj.last_frame = std::min(n_frames, (k + 1) * segment) - 1;
      spec.objects.push_back(obj);
    }
    return spec;
  }
  throw std::invalid_argument("unknown scene '" + name + "' (expected static, moving or multi)");
}

ObjectReference object_reference(const SynthObject& obj, int margin) {
  if (margin < 0) throw std::invalid_argument("object_reference: negative margin");
  ObjectReference ref;
  ref.image = GrayFrame(obj.width + 2 * margin, obj.height + 2 * margin, 128);
  paint(ref.image, random_texture(obj.width, obj.height, obj.texture_seed, obj.texture_scale), {double(margin), double(margin)});
  const double m = margin;
  ref.corners = {Point2{m, m}, Point2{m + obj.width - 1, m}, Point2{m + obj.width - 1, m + obj.height - 1},
                 Point2{m, m + obj.height - 1}};
  return ref;
}

}  // namespace vidfeat
