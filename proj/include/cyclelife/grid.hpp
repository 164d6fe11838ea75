#pragma once

#include <array>
#include <cstddef>

namespace cyclelife {

// Descending voltage grid from 3.5 V to 2.0 V in 0.01 V steps.
struct VoltageGrid {
  static constexpr std::size_t kSize = 151;
  static constexpr double kHigh = 3.5;
  static constexpr double kLow = 2.0;
  static constexpr double kStep = 0.01;

  std::array<double, kSize> points{};

  VoltageGrid() {
    // Integer centivolts keep both endpoints exact.
    for (std::size_t k = 0; k < kSize; ++k) points[k] = static_cast<double>(350 - static_cast<int>(k)) / 100.0;
  }

  std::size_t size() const { return kSize; }
  double operator[](std::size_t k) const { return points[k]; }
  auto begin() const { return points.begin(); }
  auto end() const { return points.end(); }
};

inline const VoltageGrid& default_grid() {
  static const VoltageGrid grid;
  return grid;
}

}  // namespace cyclelife
