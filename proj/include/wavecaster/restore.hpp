#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace wavecaster::restore {

inline constexpr std::size_t kDefaultOrder = 32;

/// Autoregressive model estimated by Burg's method.
///
/// Prediction convention: x[n] ~= sum_{k=1..p} coefficients[k-1] * x[n-k].
/// `reflection` holds the lattice coefficients k_1..k_p of the error filter;
/// `errors` holds the mean-square prediction error for orders 0..p.
struct ArModel {
  std::size_t order = 0;
  std::vector<double> coefficients;
  std::vector<double> reflection;
  std::vector<double> errors;

  double final_error() const { return errors.back(); }
};

/// Burg recursion: minimizes the summed forward and backward prediction
/// error directly over the observations, stage by stage.
/// Requires samples.size() > 2 * order, order >= 1 and finite samples;
/// throws std::invalid_argument otherwise.
ArModel burg_coefficients(std::span<const double> samples, std::size_t order);

/// Continues `history` by `count` samples using the model's predictor,
/// seeded with the last `order` samples of history.
std::vector<double> extrapolate(const ArModel& model, std::span<const double> history,
                                std::size_t count);

struct GapFillOptions {
  std::size_t order = kDefaultOrder;
  /// Samples used on each side for fitting; 0 picks 32 * order.
  std::size_t context = 0;
};

/// Repairs samples [gap_start, gap_start + gap_length) from both sides.
///
/// A model fitted on the preceding context predicts forward; a model fitted
/// on the time-reversed following context predicts backward. The two are
/// blended with a linear crossfade whose forward weight falls from 1 to 0
/// across the gap. Samples outside the gap are copied untouched. Needs at
/// least 2 * order samples on each side.
std::vector<double> gap_fill(std::span<const double> samples, std::size_t gap_start,
                             std::size_t gap_length, const GapFillOptions& options = {});

struct WavData {
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 16;
  bool is_float = false;
  std::vector<double> samples;  // mono, scaled to [-1, 1]
};

/// Reads mono PCM (8/16/24/32-bit integer or 32-bit float) WAV files.
WavData read_wav(const std::filesystem::path& path);
/// Writes in the same sample format as `wav` describes, clipping to [-1, 1].
void write_wav(const std::filesystem::path& path, const WavData& wav);

}  // namespace wavecaster::restore
