#pragma once

#include "qsi/model.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsi {

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniformly sampled numeric behaviour of named variables.
struct Trace {
  std::vector<double> times;
  std::map<std::string, std::vector<double>> series;

  [[nodiscard]] std::size_t size() const { return times.size(); }
  /// Throws TraceError on length mismatch, fewer than 5 samples or non-uniform spacing.
  void validate() const;
};

/// CSV with header `t,var1,var2,...`.
Trace parse_trace_csv(std::string_view text);
Trace read_trace_csv(const std::string& path);
std::string format_trace_csv(const Trace& t);

/// Central differences at interior points 1..N-2, without division by the time step:
/// first = ((x_i - x_{i-1}) + (x_{i+1} - x_i)) / 2, second = (x_i - x_{i-1}) - (x_{i+1} - x_i).
struct Differences {
  std::vector<double> first;
  std::vector<double> second;
};
Differences central_diff(const std::vector<double>& x);

/// Low-pass filter: convolution with a normalized Blackman window of `window_len` taps, evaluated
/// through the FFT on an edge-padded copy so that constant series pass unchanged.
std::vector<double> blackman_smooth(const std::vector<double>& x, std::size_t window_len);

/// Default window: N/8 rounded to odd, at least 5 (and at most N).
std::size_t default_window(std::size_t n);

Sign to_qmag(double value, double zero_band);

struct ConversionParams {
  std::optional<std::size_t> window;
  /// Zero band as a fraction of each series' range; an explicit `eps` overrides it.
  double eps_fraction = 0.02;
  std::optional<double> eps;
  /// Domains used to keep emitted values legal (nonnegative variables never read negative).
  std::map<std::string, Domain> domains;
  /// Variables whose value is known and fixed (exogenous inputs).
  ExoBindings fixed;
  /// Rate variable -> the variable it is the derivative of, when both are in the trace.
  std::map<std::string, std::string> derivative_of;
  /// Optional reference envisionment for TP/FP/FN accounting.
  std::optional<std::vector<QualState>> reference;
};

struct ConversionReport {
  std::vector<QualState> states;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
};

ConversionReport trace_to_states(const Trace& t, const ConversionParams& params);

/// TP/FP/FN of `states` against `reference`, comparing on the reference's variables.
void score_against(ConversionReport& report, const std::vector<QualState>& reference);

}  // namespace qsi
