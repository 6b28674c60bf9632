#include "spongecake/mlp.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "spongecake/binary_io.hpp"
#include "spongecake/errors.hpp"

namespace spongecake {

double apply_range_map(RangeMap map, double x) {
  switch (map) {
    case RangeMap::identity:
      return x;
    case RangeMap::sigmoid:
      return 1.0 / (1.0 + std::exp(-x));
    case RangeMap::softplus:
      // log(1 + e^x) without overflow for large x.
      return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    case RangeMap::tanh:
      return std::tanh(x);
  }
  return x;
}

void MlpWeights::validate() const {
  if (layers.empty()) throw FormatError("network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& d = layers[l];
    const std::string where = "dense layer " + std::to_string(l);
    if (d.rows == 0 || d.cols == 0) throw FormatError(where + " has an empty shape");
    if (d.weights.size() != std::size_t{d.rows} * d.cols || d.bias.size() != d.rows)
      throw FormatError(where + " payload does not match its shape");
    if (l > 0 && d.cols != layers[l - 1].rows)
      throw FormatError(where + " input width does not match the previous layer");
    for (float w : d.weights)
      if (!std::isfinite(w)) throw FormatError(where + " contains a non-finite weight");
    for (float b : d.bias)
      if (!std::isfinite(b)) throw FormatError(where + " contains a non-finite bias");
  }
  if (output_maps.size() != output_width())
    throw FormatError("range-map count does not match the output width");
  if (hidden != Activation::relu && hidden != Activation::tanh)
    throw FormatError("unknown hidden activation");
  for (RangeMap m : output_maps)
    if (static_cast<std::uint8_t>(m) > 3) throw FormatError("unknown range map tag");
}

std::vector<double> MlpWeights::forward(std::span<const double> input) const {
  if (input.size() != input_width())
    throw FormatError("network expects " + std::to_string(input_width()) + " inputs, got " +
                      std::to_string(input.size()));
  std::vector<double> x(input.begin(), input.end());
  std::vector<double> y;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& d = layers[l];
    y.assign(d.rows, 0.0);
    for (std::uint32_t r = 0; r < d.rows; ++r) {
      double acc = d.bias[r];
      const float* row = d.weights.data() + std::size_t{r} * d.cols;
      for (std::uint32_t c = 0; c < d.cols; ++c) acc += static_cast<double>(row[c]) * x[c];
      y[r] = acc;
    }
    if (l + 1 < layers.size()) {
      for (double& v : y) v = hidden == Activation::relu ? std::max(0.0, v) : std::tanh(v);
    }
    x.swap(y);
  }
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = apply_range_map(output_maps[i], x[i]);
  return x;
}

MlpWeights make_mlp(std::span<const std::uint32_t> widths, Activation hidden,
                    std::vector<RangeMap> output_maps) {
  MlpWeights net;
  net.hidden = hidden;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    DenseLayer d;
    d.cols = widths[l - 1];
    d.rows = widths[l];
    d.weights.assign(std::size_t{d.rows} * d.cols, 0.0f);
    d.bias.assign(d.rows, 0.0f);
    net.layers.push_back(std::move(d));
  }
  net.output_maps = std::move(output_maps);
  net.validate();
  return net;
}

void save_weights(const MlpWeights& weights, const std::filesystem::path& path) {
  weights.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write weight file " + path.string());
  out.write("SPCK", 4);
  binio::write_le<std::uint32_t>(out, kWeightFormatVersion);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(weights.layers.size()));
  for (const DenseLayer& d : weights.layers) {
    binio::write_le<std::uint32_t>(out, d.rows);
    binio::write_le<std::uint32_t>(out, d.cols);
    for (float w : d.weights) binio::write_le<float>(out, w);
    for (float b : d.bias) binio::write_le<float>(out, b);
  }
  binio::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(weights.hidden));
  for (RangeMap m : weights.output_maps) binio::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(m));
  if (!out) throw IoError("failed writing weight file " + path.string());
}

MlpWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file " + path.string());
  binio::expect_magic(in, "SPCK");
  const auto version = binio::read_le<std::uint32_t>(in, "version");
  if (version != kWeightFormatVersion)
    throw FormatError("unsupported weight file version " + std::to_string(version));
  const auto count = binio::read_le<std::uint32_t>(in, "layer count");
  if (count == 0 || count > 64) throw FormatError("implausible dense layer count");
  MlpWeights net;
  for (std::uint32_t l = 0; l < count; ++l) {
    DenseLayer d;
    d.rows = binio::read_le<std::uint32_t>(in, "rows");
    d.cols = binio::read_le<std::uint32_t>(in, "cols");
    if (d.rows == 0 || d.cols == 0 || d.rows > (1u << 16) || d.cols > (1u << 16))
      throw FormatError("implausible dense layer shape");
    d.weights.resize(std::size_t{d.rows} * d.cols);
    for (float& w : d.weights) w = binio::read_le<float>(in, "weights");
    d.bias.resize(d.rows);
    for (float& b : d.bias) b = binio::read_le<float>(in, "biases");
    net.layers.push_back(std::move(d));
  }
  net.hidden = static_cast<Activation>(binio::read_le<std::uint8_t>(in, "activation tag"));
  net.output_maps.resize(net.output_width());
  for (RangeMap& m : net.output_maps)
    m = static_cast<RangeMap>(binio::read_le<std::uint8_t>(in, "range-map tags"));
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in weight file");
  net.validate();
  return net;
}

}  // namespace spongecake
