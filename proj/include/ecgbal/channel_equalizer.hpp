#pragma once

// Channel-wise magnitude equalization: an inverted, parameter-free
// squeeze-and-excitation over ECG leads. Each lead gets a factor from a
// softmax over its negated magnitude, so quiet leads are excited and loud
// leads squeezed; the scaled leads are then resampled into a fixed-size image.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ecgbal/ecg_data.hpp"

namespace ecgbal {

struct ChannelMagnitudeStats {
  std::vector<double> per_channel_rms;         // pooled over every sample of the dataset
  std::vector<double> per_channel_mean_power;  // (1/T) sum |x(t)|, pooled
  // Row m: class-conditional mean record RMS per channel divided by the grand
  // mean record RMS. nullopt when class m has no records.
  std::vector<std::optional<std::vector<double>>> per_class_scale;
};

ChannelMagnitudeStats channel_stats(const Dataset& d);

enum class MagnitudeStat {
  Rms,     // sqrt(mean x^2); independent of record length
  L2Norm,  // sqrt(sum x^2), the unnormalized norm
};

struct ChannelScaleFactors {
  std::vector<double> k;
};

double channel_magnitude(const EcgRecord& r, std::size_t channel, MagnitudeStat stat);

ChannelScaleFactors cme_factors(const EcgRecord& r, MagnitudeStat stat = MagnitudeStat::Rms);

// Softmax of -g computed with max-subtraction. The normalizer is summed in
// ascending order of g so the result is exactly permutation-equivariant.
std::vector<double> negated_softmax(const std::vector<double>& g);

EcgRecord scale_channels(const EcgRecord& r, const ChannelScaleFactors& k);

struct EncodedImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // row-major H x W
  std::string source_id;

  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

// Piecewise-linear resampling of each channel to `width` columns (endpoints to
// endpoints), then linear interpolation across channels to `height` rows.
EncodedImage encode_image(const EcgRecord& r, std::size_t height, std::size_t width);

struct PipelineConfig {
  std::size_t skip = 500;
  std::size_t take = 2500;
  std::size_t height = 128;
  std::size_t width = 128;
  MagnitudeStat stat = MagnitudeStat::Rms;
};

// window -> cme_factors -> scale_channels -> encode_image
EncodedImage cme_pipeline(const EcgRecord& r, const PipelineConfig& cfg = {});

void write_image_csv(const EncodedImage& img, const std::filesystem::path& file);
// 16-byte header (H, W as little-endian uint64) followed by H*W little-endian float64.
void write_image_bin(const EncodedImage& img, const std::filesystem::path& file);
EncodedImage read_image_bin(const std::filesystem::path& file);

void write_channel_stats_csv(const ChannelMagnitudeStats& s, const std::vector<std::string>& class_names,
                             const std::filesystem::path& file);

}  // namespace ecgbal
