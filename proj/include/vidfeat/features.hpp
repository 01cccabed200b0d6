#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <string>

namespace vidfeat {

// Keypoint geometry in original-frame coordinates.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double sigma = 1.0;  // original-frame pixels per layer pixel
  double theta = 0.0;  // radians, (-pi, pi]
  double score = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

inline constexpr int kDescriptorBits = 512;
inline constexpr int kDescriptorBytes = kDescriptorBits / 8;

// 512-bit binary descriptor. Bit j lives in word j / 64 at position j % 64.
class BinaryDescriptor {
 public:
  static constexpr int kWords = kDescriptorBits / 64;

  bool test(int bit) const { return (words_[bit >> 6] >> (bit & 63)) & 1u; }
  void set(int bit, bool value = true) {
    const std::uint64_t m = std::uint64_t{1} << (bit & 63);
    if (value) {
      words_[bit >> 6] |= m;
    } else {
      words_[bit >> 6] &= ~m;
    }
  }
  int count() const {
    int n = 0;
    for (auto w : words_) n += std::popcount(w);
    return n;
  }
  const std::array<std::uint64_t, kWords>& words() const { return words_; }

  // 64 bytes, MSB first within each byte; bit 0 is the MSB of byte 0.
  std::array<std::uint8_t, kDescriptorBytes> to_bytes() const;
  static BinaryDescriptor from_bytes(std::span<const std::uint8_t> bytes);

  std::string to_hex() const;
  static BinaryDescriptor from_hex(const std::string& hex);

  friend bool operator==(const BinaryDescriptor&, const BinaryDescriptor&) = default;

 private:
  std::array<std::uint64_t, kWords> words_{};
};

int hamming(const BinaryDescriptor& a, const BinaryDescriptor& b);

// Serialized descriptors; throws std::invalid_argument on length mismatch.
int hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

enum class Origin { Detected, Propagated };

struct Feature {
  Keypoint kp;
  BinaryDescriptor desc;
  Origin origin = Origin::Detected;
  int age = 0;  // frames since detection; 0 iff detected in this frame
};

const char* to_string(Origin origin);

}  // namespace vidfeat
