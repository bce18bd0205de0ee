#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcpid/features/features.hpp"
#include "tcpid/tensor.hpp"

namespace tcpid::preprocess {

inline constexpr double kGridInterval = 0.005;  // seconds
inline constexpr double kEwmaAlpha = 0.3;
inline constexpr std::size_t kWindowLength = 3000;  // grid points
inline constexpr std::size_t kLstmSteps = 20;
inline constexpr std::size_t kTrainStride = 1500;
inline constexpr std::size_t kTestStride = kWindowLength;
inline constexpr double kStdFloor = 1e-8;

// Linear interpolation onto first + k * interval, k = 0..floor((last - first) / interval).
// Never extrapolates past the last real sample.
features::FeatureSeries resample_linear(const features::FeatureSeries& series,
                                        double interval = kGridInterval);

// y[0] = x[0]; y[t] = alpha * x[t] + (1 - alpha) * y[t-1], per channel.
features::FeatureSeries ewma(const features::FeatureSeries& series, double alpha = kEwmaAlpha);

// A labeled window of `steps` consecutive grid points, shape {steps, channels}.
struct Sample {
  Tensor window;
  int label = 0;
  std::string trace_id;
  std::size_t start = 0;

  std::size_t steps() const { return window.shape.at(0); }
  std::size_t channels() const { return window.shape.at(1); }
};

struct WindowSet {
  std::vector<Sample> samples;
  std::optional<std::string> warning;
};

// floor((length - window) / stride) + 1, or 0 when the series is too short.
std::size_t window_count(std::size_t length, std::size_t window, std::size_t stride);

WindowSet make_windows(const features::FeatureSeries& series, std::size_t stride,
                       std::size_t window = kWindowLength, const std::string& trace_id = {});

// {steps, channels} -> {lstm_steps, steps * channels / lstm_steps}; time-major,
// so the flat data is unchanged.
Tensor to_lstm_layout(const Tensor& window, std::size_t lstm_steps = kLstmSteps);
Tensor from_lstm_layout(const Tensor& lstm, std::size_t channels);

// Subtracts each window's own per-channel mean. Absolute levels mostly encode
// the link (capacity, BDP, buffer) rather than the sender's algorithm.
void center_windows(std::span<Sample> samples);

struct NormStats {
  std::vector<std::string> channels;
  std::vector<double> mean;
  std::vector<double> stddev;
};

NormStats fit_normalization(std::span<const Sample> train,
                            const std::vector<std::string>& channel_names);
void apply_normalization(std::vector<Sample>& samples, const NormStats& stats);

// Fits on `train` only and transforms both sets in place.
NormStats normalize(std::vector<Sample>& train, std::vector<Sample>& other,
                    const std::vector<std::string>& channel_names);

}  // namespace tcpid::preprocess
