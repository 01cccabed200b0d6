#include "vidfeat/sequence_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace fs = std::filesystem;

namespace vidfeat {
namespace {

std::runtime_error io_error(const fs::path& path, const std::string& what) {
  return std::runtime_error(path.string() + ": " + what);
}

std::uint8_t luma(int r, int g, int b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

// Next whitespace-separated token of a PNM header, skipping comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int pnm_int(std::istream& in, const fs::path& path) {
  const std::string tok = pnm_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw io_error(path, "malformed PNM header");
  }
}

GrayFrame read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path, "cannot open");
  const std::string magic = pnm_token(in);
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    throw io_error(path, "unsupported PNM type '" + magic + "'");
  }
  const int w = pnm_int(in, path);
  const int h = pnm_int(in, path);
  const int maxval = pnm_int(in, path);
  if (w <= 0 || h <= 0) throw io_error(path, "invalid dimensions");
  if (maxval <= 0 || maxval > 255) throw io_error(path, "only 8-bit images are supported");
  const bool colour = magic == "P3" || magic == "P6";
  const bool ascii = magic == "P2" || magic == "P3";
  const std::size_t channels = colour ? 3 : 1;
  const std::size_t n = static_cast<std::size_t>(w) * h * channels;

  std::vector<std::uint8_t> raw(n);
  if (ascii) {
    for (auto& v : raw) v = static_cast<std::uint8_t>(pnm_int(in, path));
  } else {
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n)) throw io_error(path, "truncated pixel data");
  }
  auto rescale = [maxval](int v) { return maxval == 255 ? v : (v * 255 + maxval / 2) / maxval; };

  std::vector<std::uint8_t> gray(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    if (colour) {
      gray[i] = luma(rescale(raw[3 * i]), rescale(raw[3 * i + 1]), rescale(raw[3 * i + 2]));
    } else {
      gray[i] = static_cast<std::uint8_t>(rescale(raw[i]));
    }
  }
  return GrayFrame(w, h, std::move(gray));
}

GrayFrame read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw io_error(path, std::string("cannot decode PNG: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    png_image_free(&image);
    throw io_error(path, std::string("cannot decode PNG: ") + image.message);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = luma(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  return GrayFrame(w, h, std::move(gray));
}

std::string lower_ext(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

bool is_image(const fs::path& p) {
  const std::string ext = lower_ext(p);
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".png";
}

std::optional<long long> stem_number(const fs::path& p) {
  const std::string stem = p.stem().string();
  std::string digits;
  for (char c : stem) {
    if (std::isdigit(static_cast<unsigned char>(c))) digits.push_back(c);
  }
  if (digits.empty() || digits.size() > 18) return std::nullopt;
  return std::stoll(digits);
}

}  // namespace

GrayFrame read_image(const fs::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  throw io_error(path, "unsupported image format");
}

std::vector<GrayFrame> load_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw io_error(dir, "not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image(entry.path())) files.push_back(entry.path());
  }
  if (files.empty()) throw io_error(dir, "no PGM/PPM/PNG frames found");

  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    const auto na = stem_number(a);
    const auto nb = stem_number(b);
    if (na && nb && *na != *nb) return *na < *nb;
    if (na.has_value() != nb.has_value()) return na.has_value();
    return a.filename() < b.filename();
  });

  std::vector<GrayFrame> frames;
  frames.reserve(files.size());
  for (const auto& f : files) {
    GrayFrame frame = read_image(f);
    if (!frames.empty() && (frame.width != frames.front().width || frame.height != frames.front().height)) {
      throw io_error(f, "dimensions " + std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                            " differ from the first frame (" + std::to_string(frames.front().width) + "x" +
                            std::to_string(frames.front().height) + ")");
    }
    frame.index = static_cast<int>(frames.size());
    frames.push_back(std::move(frame));
  }
  return frames;
}

void write_pgm(const fs::path& path, const GrayFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error(path, "cannot open for writing");
  out << "P5\n" << frame.width << ' ' << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.data.data()), static_cast<std::streamsize>(frame.data.size()));
  if (!out) throw io_error(path, "write failed");
}

void write_sequence(const fs::path& dir, const std::vector<GrayFrame>& frames) {
  fs::create_directories(dir);
  const int digits = std::max(3, static_cast<int>(std::to_string(frames.size()).size()));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::string name = std::to_string(i);
    name.insert(0, static_cast<std::size_t>(digits) - std::min<std::size_t>(name.size(), digits), '0');
    write_pgm(dir / (name + ".pgm"), frames[i]);
  }
}

}  // namespace vidfeat
