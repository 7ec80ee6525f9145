#include "ecgbal/channel_equalizer.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "csv_util.hpp"
#include "ecgbal/error.hpp"
#include "ecgbal/kernels.hpp"

namespace ecgbal {

ChannelMagnitudeStats channel_stats(const Dataset& d) {
  if (d.empty()) throw EmptyDataset("channel_stats needs at least one record");
  const std::size_t C = d.channels();
  const std::size_t M = d.num_classes();

  std::vector<double> sum_sq(C, 0.0), sum_abs(C, 0.0);
  std::vector<std::vector<double>> class_rms_sum(M, std::vector<double>(C, 0.0));
  std::vector<std::size_t> class_n(M, 0);
  double total_samples = 0.0;
  double grand_rms_sum = 0.0;

  for (const auto& r : d.records()) {
    if (!r.label()) throw DataError("channel_stats needs labels; '" + r.record_id() + "' has none");
    const std::size_t m = *r.label();
    ++class_n[m];
    total_samples += static_cast<double>(r.length());
    for (std::size_t c = 0; c < C; ++c) {
      const double ss = kernels::sum_squares(r.channel(c));
      sum_sq[c] += ss;
      sum_abs[c] += kernels::sum_abs(r.channel(c));
      const double rms = std::sqrt(ss / static_cast<double>(r.length()));
      class_rms_sum[m][c] += rms;
      grand_rms_sum += rms;
    }
  }

  ChannelMagnitudeStats s;
  s.per_channel_rms.resize(C);
  s.per_channel_mean_power.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    s.per_channel_rms[c] = std::sqrt(sum_sq[c] / total_samples);
    s.per_channel_mean_power[c] = sum_abs[c] / total_samples;
  }
  const double grand = grand_rms_sum / static_cast<double>(d.size() * C);
  s.per_class_scale.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    if (class_n[m] == 0) continue;
    std::vector<double> row(C);
    for (std::size_t c = 0; c < C; ++c) {
      const double mean = class_rms_sum[m][c] / static_cast<double>(class_n[m]);
      // An all-zero dataset has no magnitude gap; report unit scales.
      row[c] = grand > 0.0 ? mean / grand : 1.0;
    }
    s.per_class_scale[m] = std::move(row);
  }
  return s;
}

double channel_magnitude(const EcgRecord& r, std::size_t channel, MagnitudeStat stat) {
  const double ss = kernels::sum_squares(r.channel(channel));
  if (stat == MagnitudeStat::Rms) return std::sqrt(ss / static_cast<double>(r.length()));
  return std::sqrt(ss);
}

std::vector<double> negated_softmax(const std::vector<double>& g) {
  if (g.empty()) return {};
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return g[a] < g[b]; });
  const double g_min = g[order.front()];

  std::vector<double> e(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) e[c] = std::exp(-(g[c] - g_min));
  double total = 0.0;
  for (std::size_t c : order) total += e[c];
  for (double& v : e) v /= total;
  return e;
}

ChannelScaleFactors cme_factors(const EcgRecord& r, MagnitudeStat stat) {
  std::vector<double> g(r.channels());
  for (std::size_t c = 0; c < r.channels(); ++c) g[c] = channel_magnitude(r, c, stat);
  return {negated_softmax(g)};
}

EcgRecord scale_channels(const EcgRecord& r, const ChannelScaleFactors& k) {
  if (k.k.size() != r.channels()) {
    throw DimensionError("scale factor length " + std::to_string(k.k.size()) +
                         " does not match channel count " + std::to_string(r.channels()));
  }
  std::vector<double> out(r.samples().size());
  for (std::size_t c = 0; c < r.channels(); ++c) {
    kernels::scale(k.k[c], r.channel(c),
                   std::span<double>(out).subspan(c * r.length(), r.length()));
  }
  return r.with_samples(std::move(out));
}

namespace {

// Position of output index j on an input grid of n points when `count`
// outputs span it endpoint to endpoint.
struct GridPoint {
  std::size_t lower;
  double frac;
};

GridPoint grid_point(std::size_t j, std::size_t count, std::size_t n) {
  if (count == 1 || n == 1) return {0, 0.0};
  const std::size_t num = j * (n - 1);
  const std::size_t den = count - 1;
  const std::size_t lower = num / den;
  const double frac = static_cast<double>(num % den) / static_cast<double>(den);
  return {lower, frac};
}

double lerp_one(double a, double b, double t) {
  double out;
  kernels::table(kernels::Backend::Scalar).lerp_clamped(&a, &b, t, &out, 1);
  return out;
}

}  // namespace

EncodedImage encode_image(const EcgRecord& r, std::size_t height, std::size_t width) {
  const std::size_t C = r.channels();
  const std::size_t L = r.length();
  if (L < 2) throw EncodeError("encode_image needs at least 2 samples per channel");
  if (height < C) {
    throw EncodeError("image height " + std::to_string(height) + " is below channel count " +
                      std::to_string(C));
  }
  if (width < 2) throw EncodeError("image width must be at least 2");

  // Stage 1: time axis, L -> W per channel.
  std::vector<GridPoint> cols(width);
  for (std::size_t j = 0; j < width; ++j) cols[j] = grid_point(j, width, L);
  std::vector<double> rows(C * width);
  for (std::size_t c = 0; c < C; ++c) {
    const auto x = r.channel(c);
    double* out = rows.data() + c * width;
    for (std::size_t j = 0; j < width; ++j) {
      const auto [i0, t] = cols[j];
      out[j] = (t == 0.0) ? x[i0] : lerp_one(x[i0], x[i0 + 1], t);
    }
  }

  // Stage 2: channel axis, C -> H rows.
  EncodedImage img;
  img.height = height;
  img.width = width;
  img.source_id = r.record_id();
  img.pixels.resize(height * width);
  for (std::size_t i = 0; i < height; ++i) {
    const auto [c0, t] = grid_point(i, height, C);
    const std::span<const double> a(rows.data() + c0 * width, width);
    const std::span<double> dst(img.pixels.data() + i * width, width);
    if (t == 0.0) {
      std::copy(a.begin(), a.end(), dst.begin());
    } else {
      const std::span<const double> b(rows.data() + (c0 + 1) * width, width);
      kernels::lerp_clamped(a, b, t, dst);
    }
  }
  return img;
}

EncodedImage cme_pipeline(const EcgRecord& r, const PipelineConfig& cfg) {
  const EcgRecord w = window_record(r, cfg.skip, cfg.take);
  const ChannelScaleFactors k = cme_factors(w, cfg.stat);
  return encode_image(scale_channels(w, k), cfg.height, cfg.width);
}

void write_image_csv(const EncodedImage& img, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write '" + file.string() + "'");
  std::string line;
  for (std::size_t i = 0; i < img.height; ++i) {
    line.clear();
    for (std::size_t j = 0; j < img.width; ++j) {
      if (j) line += ',';
      detail::append_double(line, img.at(i, j));
    }
    line += '\n';
    out << line;
  }
}

namespace {

template <typename T>
void put_le(std::ofstream& out, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.write(reinterpret_cast<const char*>(bits.data()), bits.size());
}

template <typename T>
T get_le(std::ifstream& in) {
  std::array<unsigned char, sizeof(T)> bits{};
  in.read(reinterpret_cast<char*>(bits.data()), bits.size());
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_image_bin(const EncodedImage& img, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write '" + file.string() + "'");
  put_le<std::uint64_t>(out, img.height);
  put_le<std::uint64_t>(out, img.width);
  for (double v : img.pixels) put_le<double>(out, v);
}

EncodedImage read_image_bin(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot read '" + file.string() + "'");
  EncodedImage img;
  img.height = get_le<std::uint64_t>(in);
  img.width = get_le<std::uint64_t>(in);
  if (!in) throw DataError("truncated image header in '" + file.string() + "'");
  img.pixels.resize(img.height * img.width);
  for (double& v : img.pixels) v = get_le<double>(in);
  if (!in) throw DataError("truncated image payload in '" + file.string() + "'");
  img.source_id = file.stem().string();
  return img;
}

void write_channel_stats_csv(const ChannelMagnitudeStats& s,
                             const std::vector<std::string>& class_names,
                             const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write '" + file.string() + "'");
  std::string line = "channel,rms,mean_power";
  for (const auto& name : class_names) line += ",scale_" + name;
  out << line << '\n';
  for (std::size_t c = 0; c < s.per_channel_rms.size(); ++c) {
    line = std::to_string(c) + ',';
    detail::append_double(line, s.per_channel_rms[c]);
    line += ',';
    detail::append_double(line, s.per_channel_mean_power[c]);
    for (const auto& row : s.per_class_scale) {
      line += ',';
      if (row) detail::append_double(line, (*row)[c]);
      else line += "NA";
    }
    out << line << '\n';
  }
}

}  // namespace ecgbal
