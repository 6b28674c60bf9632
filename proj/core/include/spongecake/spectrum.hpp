#pragma once

#include <algorithm>
#include <cmath>

namespace spongecake {

/// RGB radiometric triple. Channels are expected to stay finite and non-negative.
struct Spectrum {
  double r = 0.0, g = 0.0, b = 0.0;

  constexpr Spectrum() = default;
  constexpr explicit Spectrum(double v) : r(v), g(v), b(v) {}
  constexpr Spectrum(double r_, double g_, double b_) : r(r_), g(g_), b(b_) {}

  constexpr double operator[](int i) const { return i == 0 ? r : (i == 1 ? g : b); }
  constexpr double& operator[](int i) { return i == 0 ? r : (i == 1 ? g : b); }

  constexpr Spectrum operator+(const Spectrum& o) const { return {r + o.r, g + o.g, b + o.b}; }
  constexpr Spectrum operator-(const Spectrum& o) const { return {r - o.r, g - o.g, b - o.b}; }
  constexpr Spectrum operator*(const Spectrum& o) const { return {r * o.r, g * o.g, b * o.b}; }
  constexpr Spectrum operator*(double s) const { return {r * s, g * s, b * s}; }
  constexpr Spectrum operator/(double s) const { return {r / s, g / s, b / s}; }
  constexpr Spectrum& operator+=(const Spectrum& o) {
    r += o.r;
    g += o.g;
    b += o.b;
    return *this;
  }
  constexpr Spectrum& operator*=(const Spectrum& o) {
    r *= o.r;
    g *= o.g;
    b *= o.b;
    return *this;
  }
  constexpr Spectrum& operator*=(double s) {
    r *= s;
    g *= s;
    b *= s;
    return *this;
  }
  constexpr bool operator==(const Spectrum&) const = default;

  constexpr double max_component() const { return std::max({r, g, b}); }
  constexpr double average() const { return (r + g + b) / 3.0; }
  constexpr bool is_black() const { return r == 0.0 && g == 0.0 && b == 0.0; }
  bool is_valid() const {
    return std::isfinite(r) && std::isfinite(g) && std::isfinite(b) && r >= 0.0 && g >= 0.0 &&
           b >= 0.0;
  }
};

constexpr Spectrum operator*(double s, const Spectrum& v) { return v * s; }

}  // namespace spongecake
