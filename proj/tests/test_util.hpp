#pragma once
// Shared helpers for the test suites.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "wwe/image.hpp"

namespace testutil {

inline double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Float-valued samples so PFM containers round-trip bitwise.
inline wwe::Image random_image(int h, int w, int c, uint64_t seed) {
  std::mt19937_64 rng(seed);
  wwe::Image img(h, w, c);
  for (double& v : img.data) v = static_cast<float>(u01(rng));
  return img;
}

inline std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "wwe_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

inline double max_abs_diff(const wwe::Image& a, const wwe::Image& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace testutil
