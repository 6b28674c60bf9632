#include "spongecake/bsdf_table.hpp"

#include <cmath>
#include <fstream>

#include "spongecake/binary_io.hpp"
#include "spongecake/errors.hpp"
#include "spongecake/parallel.hpp"

namespace spongecake {

namespace {

constexpr double kGrazingBinCos = 0.02;

std::size_t phi_bin(const Vec3& w, std::uint32_t n_phi) {
  double phi = std::atan2(w.y, w.x);
  if (phi < 0.0) phi += 2.0 * kPi;
  const auto p = static_cast<std::size_t>(phi / (2.0 * kPi) * n_phi);
  return std::min<std::size_t>(p, n_phi - 1);
}

}  // namespace

std::string_view to_string(TransportMode mode) {
  switch (mode) {
    case TransportMode::single_only:
      return "single";
    case TransportMode::multiple_only:
      return "multiple";
    case TransportMode::full:
      return "full";
    case TransportMode::full_delta:
      return "full+delta";
  }
  return "?";
}

TransportMode transport_mode_from_string(std::string_view text) {
  if (text == "single") return TransportMode::single_only;
  if (text == "multiple") return TransportMode::multiple_only;
  if (text == "full") return TransportMode::full;
  if (text == "full+delta") return TransportMode::full_delta;
  throw ParameterError("unknown transport mode '" + std::string(text) +
                       "' (expected single, multiple, full or full+delta)");
}

Vec3 DirectionGrid::wi_center(std::size_t i) const {
  const std::size_t c = i / n_phi;
  const std::size_t p = i % n_phi;
  return spherical_direction((c + 0.5) / n_cos, (p + 0.5) / n_phi * 2.0 * kPi);
}

Vec3 DirectionGrid::wo_center(std::size_t j) const {
  const std::size_t c = j / n_phi;
  const std::size_t p = j % n_phi;
  return spherical_direction(-1.0 + (c + 0.5) / n_cos, (p + 0.5) / n_phi * 2.0 * kPi);
}

void DirectionGrid::wo_bounds(std::size_t j, double& cos_lo, double& cos_hi, double& phi_lo,
                              double& phi_hi) const {
  const std::size_t c = j / n_phi;
  const std::size_t p = j % n_phi;
  cos_lo = -1.0 + static_cast<double>(c) / n_cos;
  cos_hi = -1.0 + static_cast<double>(c + 1) / n_cos;
  phi_lo = 2.0 * kPi * p / n_phi;
  phi_hi = 2.0 * kPi * (p + 1) / n_phi;
}

std::size_t DirectionGrid::wo_index(const Vec3& w) const {
  const auto c = static_cast<std::size_t>(std::clamp((w.z + 1.0) * n_cos, 0.0, 2.0 * n_cos - 1.0));
  return std::min<std::size_t>(c, 2 * std::size_t{n_cos} - 1) * n_phi + phi_bin(w, n_phi);
}

std::size_t DirectionGrid::wi_index(const Vec3& w) const {
  const auto c = static_cast<std::size_t>(std::clamp(w.z * n_cos, 0.0, n_cos - 1.0));
  return c * n_phi + phi_bin(w, n_phi);
}

double DirectionGrid::wo_projected_solid_angle(std::size_t j) const {
  double c0, c1, p0, p1;
  wo_bounds(j, c0, c1, p0, p1);
  // ∫ |c| dc over [c0, c1]; bins never straddle zero.
  const double integral = 0.5 * std::abs(c1 * std::abs(c1) - c0 * std::abs(c0));
  return integral * (p1 - p0);
}

bool DirectionGrid::wo_is_grazing(std::size_t j) const {
  double c0, c1, p0, p1;
  wo_bounds(j, c0, c1, p0, p1);
  return c0 < kGrazingBinCos && c1 > -kGrazingBinCos;
}

void BsdfTable::validate() const {
  if (grid.n_cos < 1 || grid.n_phi < 1) throw FormatError("table grid resolution must be >= 1");
  if (values.size() != grid.wi_count() * grid.wo_count() * 3)
    throw FormatError("table payload length does not match its grid");
  for (float v : values)
    if (!std::isfinite(v) || v < 0.0f) throw FormatError("table contains a negative or non-finite value");
}

void save_table(const BsdfTable& table, const std::filesystem::path& path) {
  table.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write table file " + path.string());
  out.write("SPTB", 4);
  binio::write_le<std::uint32_t>(out, kTableFormatVersion);
  binio::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(table.mode));
  binio::write_le<std::uint32_t>(out, table.grid.n_cos);
  binio::write_le<std::uint32_t>(out, table.grid.n_phi);
  binio::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(table.parameterization));
  binio::write_le<std::uint64_t>(out, table.samples_per_wi);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.material.size()));
  out.write(table.material.data(), static_cast<std::streamsize>(table.material.size()));
  for (float v : table.values) binio::write_le<float>(out, v);
  if (!out) throw IoError("failed writing table file " + path.string());
}

BsdfTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open table file " + path.string());
  binio::expect_magic(in, "SPTB");
  const auto version = binio::read_le<std::uint32_t>(in, "version");
  if (version != kTableFormatVersion)
    throw FormatError("unsupported table version " + std::to_string(version));
  BsdfTable table;
  const auto mode = binio::read_le<std::uint8_t>(in, "mode");
  if (mode > 3) throw FormatError("unknown table mode " + std::to_string(mode));
  table.mode = static_cast<TransportMode>(mode);
  table.grid.n_cos = binio::read_le<std::uint32_t>(in, "resolution");
  table.grid.n_phi = binio::read_le<std::uint32_t>(in, "resolution");
  const auto param = binio::read_le<std::uint8_t>(in, "parameterization");
  if (param != 0) throw FormatError("unknown direction parameterization " + std::to_string(param));
  table.samples_per_wi = binio::read_le<std::uint64_t>(in, "sample count");
  const auto text_len = binio::read_le<std::uint32_t>(in, "material length");
  table.material.resize(text_len);
  if (!in.read(table.material.data(), text_len))
    throw FormatError("truncated file while reading material text");
  if (table.grid.n_cos < 1 || table.grid.n_phi < 1 || table.grid.n_cos > 4096 ||
      table.grid.n_phi > 4096)
    throw FormatError("table resolution out of range");
  const std::size_t count = table.grid.wi_count() * table.grid.wo_count() * 3;
  table.values.resize(count);
  for (auto& v : table.values) v = binio::read_le<float>(in, "payload");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after payload");
  table.validate();
  return table;
}

BsdfTable tabulate_analytic(const DirectionalBsdf& f, const DirectionGrid& grid, TransportMode mode,
                            unsigned supersample, unsigned threads) {
  if (grid.n_cos < 1 || grid.n_phi < 1) throw ParameterError("table resolution must be >= 1");
  if (supersample < 1) throw ParameterError("supersample must be >= 1");
  BsdfTable table;
  table.grid = grid;
  table.mode = mode;
  table.resize();
  const double s = supersample;
  parallel_for(grid.wi_count(), threads, [&](std::size_t i) {
    const Vec3 wi = grid.wi_center(i);
    for (std::size_t j = 0; j < grid.wo_count(); ++j) {
      double c0, c1, p0, p1;
      grid.wo_bounds(j, c0, c1, p0, p1);
      Spectrum sum;
      double weight = 0.0;
      for (unsigned a = 0; a < supersample; ++a) {
        const double c = c0 + (a + 0.5) / s * (c1 - c0);
        for (unsigned b = 0; b < supersample; ++b) {
          const Vec3 wo = spherical_direction(c, p0 + (b + 0.5) / s * (p1 - p0));
          sum += f(wi, wo) * std::abs(c);
          weight += std::abs(c);
        }
      }
      const Spectrum avg = weight > 0.0 ? sum / weight : Spectrum{};
      for (int ch = 0; ch < 3; ++ch) table.at(i, j, ch) = static_cast<float>(avg[ch]);
    }
  });
  return table;
}

}  // namespace spongecake
