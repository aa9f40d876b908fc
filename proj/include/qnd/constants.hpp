#pragma once

namespace qnd::si {

// CODATA 2018 exact values.
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double c = 299792458.0;         // m / s
inline constexpr double pi = 3.14159265358979323846;

}  // namespace qnd::si
