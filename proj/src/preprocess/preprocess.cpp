#include "tcpid/preprocess/preprocess.hpp"

#include <cmath>
#include <stdexcept>

namespace tcpid::preprocess {

using features::FeatureError;
using features::FeatureSeries;

FeatureSeries resample_linear(const FeatureSeries& series, double interval) {
  series.check_alignment();
  if (series.size() < 2) throw FeatureError("resampling needs at least 2 samples");
  if (!(interval > 0.0)) throw std::invalid_argument("interval must be > 0");

  const double first = series.timestamps.front();
  const double last = series.timestamps.back();
  const auto points =
      static_cast<std::size_t>(std::floor((last - first) / interval + 1e-9)) + 1;

  FeatureSeries out;
  out.label = series.label;
  out.scenario = series.scenario;
  out.channel_names = series.channel_names;
  out.timestamps.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    out.timestamps[k] = first + static_cast<double>(k) * interval;
  }
  out.channels.assign(series.num_channels(), std::vector<double>(points));

  const auto& ts = series.timestamps;
  std::size_t j = 0;
  for (std::size_t k = 0; k < points; ++k) {
    const double t = out.timestamps[k];
    while (j + 1 < ts.size() && ts[j + 1] <= t) ++j;
    for (std::size_t c = 0; c < series.num_channels(); ++c) {
      const auto& v = series.channels[c];
      double value;
      if (j + 1 >= ts.size() || t <= ts[j]) {
        value = v[j];
      } else {
        const double w = (t - ts[j]) / (ts[j + 1] - ts[j]);
        value = v[j] + w * (v[j + 1] - v[j]);
      }
      out.channels[c][k] = value;
    }
  }
  return out;
}

FeatureSeries ewma(const FeatureSeries& series, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0, 1]");
  FeatureSeries out = series;
  for (auto& channel : out.channels) {
    for (std::size_t t = 1; t < channel.size(); ++t) {
      channel[t] = alpha * channel[t] + (1.0 - alpha) * channel[t - 1];
    }
  }
  return out;
}

std::size_t window_count(std::size_t length, std::size_t window, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("stride must be >= 1");
  if (length < window) return 0;
  return (length - window) / stride + 1;
}

WindowSet make_windows(const FeatureSeries& series, std::size_t stride, std::size_t window,
                       const std::string& trace_id) {
  series.check_alignment();
  WindowSet out;
  const std::size_t count = window_count(series.size(), window, stride);
  if (count == 0) {
    out.warning = "trace '" + trace_id + "' has " + std::to_string(series.size()) +
                  " grid points, shorter than one window of " + std::to_string(window);
    return out;
  }
  const std::size_t channels = series.num_channels();
  out.samples.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    Sample s;
    s.start = w * stride;
    s.label = ccsim::class_id(series.label);
    s.trace_id = trace_id;
    s.window = Tensor({window, channels});
    for (std::size_t t = 0; t < window; ++t) {
      for (std::size_t c = 0; c < channels; ++c) {
        s.window.at(t, c) = static_cast<float>(series.channels[c][s.start + t]);
      }
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

Tensor to_lstm_layout(const Tensor& window, std::size_t lstm_steps) {
  if (window.rank() != 2 || lstm_steps == 0 || window.shape[0] % lstm_steps != 0) {
    throw std::invalid_argument("window length must be a multiple of the LSTM step count");
  }
  return Tensor({lstm_steps, window.size() / lstm_steps}, window.data);
}

Tensor from_lstm_layout(const Tensor& lstm, std::size_t channels) {
  if (lstm.rank() != 2 || channels == 0 || lstm.size() % channels != 0) {
    throw std::invalid_argument("LSTM tensor size is not a multiple of the channel count");
  }
  return Tensor({lstm.size() / channels, channels}, lstm.data);
}

void center_windows(std::span<Sample> samples) {
  for (auto& s : samples) {
    const std::size_t steps = s.steps();
    for (std::size_t c = 0; c < s.channels(); ++c) {
      double mean = 0.0;
      for (std::size_t t = 0; t < steps; ++t) mean += s.window.at(t, c);
      mean /= static_cast<double>(steps);
      for (std::size_t t = 0; t < steps; ++t) {
        s.window.at(t, c) = static_cast<float>(s.window.at(t, c) - mean);
      }
    }
  }
}

NormStats fit_normalization(std::span<const Sample> train,
                            const std::vector<std::string>& channel_names) {
  if (train.empty()) throw std::invalid_argument("normalization needs training samples");
  const std::size_t channels = train.front().channels();
  if (channel_names.size() != channels) {
    throw std::invalid_argument("channel name count does not match the windows");
  }
  NormStats stats;
  stats.channels = channel_names;
  stats.mean.assign(channels, 0.0);
  stats.stddev.assign(channels, 0.0);
  double count = 0.0;
  for (const auto& s : train) {
    if (s.channels() != channels) throw std::invalid_argument("inconsistent channel counts");
    for (std::size_t t = 0; t < s.steps(); ++t) {
      for (std::size_t c = 0; c < channels; ++c) stats.mean[c] += s.window.at(t, c);
    }
    count += static_cast<double>(s.steps());
  }
  for (auto& m : stats.mean) m /= count;
  for (const auto& s : train) {
    for (std::size_t t = 0; t < s.steps(); ++t) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = s.window.at(t, c) - stats.mean[c];
        stats.stddev[c] += d * d;
      }
    }
  }
  for (auto& sd : stats.stddev) sd = std::max(std::sqrt(sd / count), kStdFloor);
  return stats;
}

void apply_normalization(std::vector<Sample>& samples, const NormStats& stats) {
  for (auto& s : samples) {
    if (s.channels() != stats.mean.size()) {
      throw std::invalid_argument("normalization stats do not match the window channels");
    }
    for (std::size_t t = 0; t < s.steps(); ++t) {
      for (std::size_t c = 0; c < s.channels(); ++c) {
        float& v = s.window.at(t, c);
        v = static_cast<float>((v - stats.mean[c]) / stats.stddev[c]);
      }
    }
  }
}

NormStats normalize(std::vector<Sample>& train, std::vector<Sample>& other,
                    const std::vector<std::string>& channel_names) {
  NormStats stats = fit_normalization(train, channel_names);
  apply_normalization(train, stats);
  apply_normalization(other, stats);
  return stats;
}

}  // namespace tcpid::preprocess
