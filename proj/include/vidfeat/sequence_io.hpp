#pragma once

#include <filesystem>
#include <vector>

#include "vidfeat/image.hpp"

namespace vidfeat {

// Reads a PGM (P2/P5), PPM (P3/P6) or PNG image. Colour input is converted to
// luma with weights 0.299, 0.587, 0.114. Throws std::runtime_error naming the
// file on failure.
GrayFrame read_image(const std::filesystem::path& path);

// Every image in `dir` ordered by the numeric value of its file stem (stems
// without digits sort after, by name). Frame indices are assigned 0..N-1.
// Throws std::runtime_error for an empty directory, an unreadable file or
// inconsistent dimensions.
std::vector<GrayFrame> load_sequence(const std::filesystem::path& dir);

// Binary PGM (P5).
void write_pgm(const std::filesystem::path& path, const GrayFrame& frame);

// Writes frames as 000.pgm, 001.pgm, ... (zero-padded to at least 3 digits).
void write_sequence(const std::filesystem::path& dir, const std::vector<GrayFrame>& frames);

}  // namespace vidfeat
