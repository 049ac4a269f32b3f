#include "qsi/quant2qual.hpp"

#include "text_util.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

namespace qsi {

void Trace::validate() const {
  if (times.size() < 5) throw TraceError("trace needs at least 5 samples");
  for (const auto& [name, s] : series) {
    if (s.size() != times.size()) throw TraceError("series '" + name + "' length differs from the time column");
  }
  const double dt = times[1] - times[0];
  if (!(dt > 0)) throw TraceError("time column must increase");
  for (std::size_t i = 1; i < times.size(); ++i) {
    double d = times[i] - times[i - 1];
    if (std::abs(d - dt) > 1e-6 * std::max(1.0, std::abs(dt))) throw TraceError("trace sampling is not uniform");
  }
}

Trace parse_trace_csv(std::string_view content) {
  Trace t;
  std::vector<std::string> names;
  bool header = true;
  int lineno = 0;
  for (auto raw : text::lines(content)) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto cells = text::split(line, ',');
    if (header) {
      header = false;
      if (text::trim(cells[0]) != "t") throw ParseError("trace CSV header must start with 't'");
      for (std::size_t i = 1; i < cells.size(); ++i) {
        names.emplace_back(text::trim(cells[i]));
        t.series[names.back()];
      }
      continue;
    }
    if (cells.size() != names.size() + 1) throw ParseError("line " + std::to_string(lineno) + ": wrong column count");
    try {
      t.times.push_back(std::stod(std::string(text::trim(cells[0]))));
      for (std::size_t i = 1; i < cells.size(); ++i) t.series[names[i - 1]].push_back(std::stod(std::string(text::trim(cells[i]))));
    } catch (const std::logic_error&) {
      throw ParseError("line " + std::to_string(lineno) + ": bad number");
    }
  }
  if (header) throw ParseError("trace CSV is empty");
  t.validate();
  return t;
}

Trace read_trace_csv(const std::string& path) { return parse_trace_csv(read_text_file(path)); }

std::string format_trace_csv(const Trace& t) {
  std::ostringstream out;
  out.precision(10);
  out << "t";
  for (const auto& [name, s] : t.series) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    out << t.times[i];
    for (const auto& [name, s] : t.series) out << ',' << s[i];
    out << '\n';
  }
  return out.str();
}

Differences central_diff(const std::vector<double>& x) {
  if (x.size() < 3) throw TraceError("central differences need at least 3 samples");
  Differences d;
  d.first.reserve(x.size() - 2);
  d.second.reserve(x.size() - 2);
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    double back = x[i] - x[i - 1];
    double fwd = x[i + 1] - x[i];
    d.first.push_back((back + fwd) / 2.0);
    d.second.push_back(back - fwd);
  }
  return d;
}

std::size_t default_window(std::size_t n) {
  std::size_t w = n / 8;
  if (w % 2 == 0) ++w;
  w = std::max<std::size_t>(w, 5);
  if (w > n) w = n % 2 == 1 ? n : n - 1;
  return w;
}

namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

std::vector<double> blackman_smooth(const std::vector<double>& x, std::size_t window_len) {
  if (window_len < 3) throw TraceError("Blackman window needs at least 3 taps");
  if (window_len > x.size()) throw TraceError("Blackman window is longer than the series");
  const std::size_t half = window_len / 2;
  std::vector<double> w(window_len);
  double sum = 0;
  for (std::size_t n = 0; n < window_len; ++n) {
    double a = 2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(window_len - 1);
    w[n] = 0.42 - 0.5 * std::cos(a) + 0.08 * std::cos(2.0 * a);
    sum += w[n];
  }
  for (auto& v : w) v /= sum;

  // Padded with least-squares lines through each end, long enough that the circular wrap never
  // reaches the kept samples.
  const std::size_t len = x.size() + 2 * window_len;
  const auto ns = static_cast<std::ptrdiff_t>(x.size());
  const auto seg = static_cast<std::ptrdiff_t>(std::min(window_len, x.size()));
  auto fit = [&](std::ptrdiff_t from) {
    double mt = 0;
    double mx = 0;
    for (std::ptrdiff_t k = 0; k < seg; ++k) {
      mt += static_cast<double>(from + k);
      mx += x[static_cast<std::size_t>(from + k)];
    }
    mt /= static_cast<double>(seg);
    mx /= static_cast<double>(seg);
    double sxx = 0;
    double sxy = 0;
    for (std::ptrdiff_t k = 0; k < seg; ++k) {
      const double dt = static_cast<double>(from + k) - mt;
      sxx += dt * dt;
      sxy += dt * (x[static_cast<std::size_t>(from + k)] - mx);
    }
    const double slope = sxx > 0 ? sxy / sxx : 0.0;
    return std::pair{slope, mx - slope * mt};
  };
  const auto [head_slope, head_icpt] = fit(0);
  const auto [tail_slope, tail_icpt] = fit(ns - seg);
  std::vector<double> padded(len);
  for (std::size_t i = 0; i < len; ++i) {
    auto j = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(window_len);
    if (j < 0) {
      padded[i] = head_icpt + head_slope * static_cast<double>(j);
    } else if (j >= ns) {
      padded[i] = tail_icpt + tail_slope * static_cast<double>(j);
    } else {
      padded[i] = x[static_cast<std::size_t>(j)];
    }
  }
  // Kernel centred at index 0 (circularly).
  std::vector<double> kernel(len, 0.0);
  for (std::size_t n = 0; n < window_len; ++n) {
    auto pos = (static_cast<std::ptrdiff_t>(n) - static_cast<std::ptrdiff_t>(half) + static_cast<std::ptrdiff_t>(len)) %
               static_cast<std::ptrdiff_t>(len);
    kernel[static_cast<std::size_t>(pos)] = w[n];
  }
  const std::size_t nc = len / 2 + 1;
  std::vector<std::complex<double>> fx(nc);
  std::vector<std::complex<double>> fk(nc);
  std::vector<double> out(len);
  fftw_plan px;
  fftw_plan pk;
  fftw_plan pinv;
  {
    std::lock_guard lock(fftw_mutex());
    px = fftw_plan_dft_r2c_1d(static_cast<int>(len), padded.data(), reinterpret_cast<fftw_complex*>(fx.data()),
                              FFTW_ESTIMATE);
    pk = fftw_plan_dft_r2c_1d(static_cast<int>(len), kernel.data(), reinterpret_cast<fftw_complex*>(fk.data()),
                              FFTW_ESTIMATE);
    pinv = fftw_plan_dft_c2r_1d(static_cast<int>(len), reinterpret_cast<fftw_complex*>(fx.data()), out.data(),
                                FFTW_ESTIMATE);
  }
  fftw_execute(px);
  fftw_execute(pk);
  for (std::size_t i = 0; i < nc; ++i) fx[i] *= fk[i];
  fftw_execute(pinv);
  {
    std::lock_guard lock(fftw_mutex());
    fftw_destroy_plan(px);
    fftw_destroy_plan(pk);
    fftw_destroy_plan(pinv);
  }
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = out[i + window_len] / static_cast<double>(len);
  return y;
}

Sign to_qmag(double value, double zero_band) {
  if (zero_band < 0) throw ContractViolation("zero band must be non-negative");
  if (value < -zero_band) return Sign::neg;
  if (value > zero_band) return Sign::pos;
  return Sign::zero;
}

namespace {

double band_for(const std::vector<double>& s, const ConversionParams& p) {
  if (p.eps) return *p.eps;
  auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  return p.eps_fraction * (*hi - *lo);
}

// Second smoothing pass on the samples whose neighbourhood straddles the zero band.
void refilter_zero_crossings(std::vector<double>& s, std::size_t window, double eps) {
  if (s.size() < window) return;
  auto smoothed = blackman_smooth(s, window);
  const std::size_t half = window / 2;
  std::vector<double> out = s;
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::size_t b = i >= half ? i - half : 0;
    std::size_t e = std::min(s.size(), i + half + 1);
    bool above = false;
    bool below = false;
    for (std::size_t j = b; j < e; ++j) {
      above = above || s[j] > eps;
      below = below || s[j] < -eps;
    }
    if (above && below) out[i] = smoothed[i];
  }
  s = std::move(out);
}

}  // namespace

void score_against(ConversionReport& report, const std::vector<QualState>& reference) {
  std::set<QualState> ref(reference.begin(), reference.end());
  std::set<std::string> vars;
  for (const auto& s : reference) {
    for (const auto& [name, v] : s.bindings) vars.insert(name);
  }
  std::set<QualState> seen;
  for (const auto& s : report.states) {
    QualState proj;
    for (const auto& [name, v] : s.bindings) {
      if (vars.contains(name)) proj.bindings[name] = v;
    }
    seen.insert(proj);
  }
  report.true_positive = 0;
  report.false_positive = 0;
  for (const auto& s : seen) {
    if (ref.contains(s)) {
      ++report.true_positive;
    } else {
      ++report.false_positive;
    }
  }
  report.false_negative = ref.size() - report.true_positive;
}

ConversionReport trace_to_states(const Trace& t, const ConversionParams& params) {
  t.validate();
  const std::size_t n = t.size();
  const std::size_t window = params.window ? *params.window : default_window(n - 2);

  // Smoothed signs of each series and of its first and second differences, aligned with samples.
  struct Signs {
    std::vector<Sign> value, first, second;
  };
  std::map<std::string, Signs> signs;
  for (const auto& [name, x] : t.series) {
    if (params.fixed.contains(name)) continue;
    auto d = central_diff(x);
    const std::size_t w = std::min(window, d.first.size());
    auto first = blackman_smooth(d.first, w);
    // The printed second difference is (x_i - x_{i-1}) - (x_{i+1} - x_i), the negated curvature.
    std::vector<double> second(d.second.size());
    for (std::size_t i = 0; i < second.size(); ++i) second[i] = -d.second[i];
    second = blackman_smooth(second, w);
    std::vector<double> value = x;
    const double eps_v = band_for(value, params);
    const double eps_1 = params.eps ? *params.eps : band_for(first, params);
    const double eps_2 = params.eps ? *params.eps : band_for(second, params);
    refilter_zero_crossings(value, window, eps_v);
    refilter_zero_crossings(first, w, eps_1);
    refilter_zero_crossings(second, w, eps_2);
    Signs sg;
    sg.value.assign(n, Sign::zero);
    sg.first.assign(n, Sign::zero);
    sg.second.assign(n, Sign::zero);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      sg.value[i] = to_qmag(value[i], eps_v);
      sg.first[i] = to_qmag(first[i - 1], eps_1);
      sg.second[i] = to_qmag(second[i - 1], eps_2);
    }
    signs.emplace(name, std::move(sg));
  }
  for (const auto& [rate, integrand] : params.derivative_of) {
    if (!signs.contains(rate) || !signs.contains(integrand)) {
      throw ContractViolation("derivative pair " + rate + "/" + integrand + " is not in the trace");
    }
  }

  std::map<std::string, std::vector<QualValue>> per_var;
  for (const auto& [name, x] : t.series) {
    std::vector<QualValue> vals(n);
    if (auto it = params.fixed.find(name); it != params.fixed.end()) {
      std::fill(vals.begin(), vals.end(), it->second);
      per_var[name] = std::move(vals);
      continue;
    }
    const auto& own = signs.at(name);
    const std::vector<Sign>* mag = &own.value;
    const std::vector<Sign>* dir = &own.first;
    if (auto it = params.derivative_of.find(name); it != params.derivative_of.end()) {
      // A rate reads its magnitude from the integrand's slope; its direction comes from its own
      // slope when it is integrated further, otherwise from the integrand's curvature.
      const auto& base = signs.at(it->second);
      mag = &base.first;
      bool integrated = false;
      for (const auto& [r, u] : params.derivative_of) integrated = integrated || u == name;
      dir = integrated ? &own.first : &base.second;
    }
    Domain dom = Domain::unrestricted;
    if (auto it = params.domains.find(name); it != params.domains.end()) dom = it->second;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      QualValue q{(*mag)[i], as_dir((*dir)[i])};
      if (dom == Domain::nonnegative) {
        if (q.mag == Sign::neg) q.mag = Sign::zero;
        if (q.mag == Sign::zero && q.dir == Dir::dec) q.dir = Dir::std;
      }
      vals[i] = q;
    }
    per_var[name] = std::move(vals);
  }

  ConversionReport report;
  std::set<QualState> seen;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    QualState s;
    for (const auto& [name, vals] : per_var) s.bindings[name] = vals[i];
    for (const auto& [name, v] : params.fixed) s.bindings[name] = v;
    if (seen.insert(s).second) report.states.push_back(std::move(s));
  }
  if (params.reference) score_against(report, *params.reference);
  return report;
}

}  // namespace qsi
