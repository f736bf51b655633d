#include "qgfc/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "qgfc/correlation.hpp"
#include "qgfc/error.hpp"
#include "qgfc/parallel.hpp"
#include "qgfc/seed.hpp"

namespace qgfc {
namespace {

constexpr double kSegmentEvents = 65536.0;
constexpr std::size_t kPairChunk = 65536;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

// Nudges exact ties forward so the sequence is strictly increasing.
void make_strictly_increasing(std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] <= v[i - 1]) v[i] = std::nextafter(v[i - 1], std::numeric_limits<double>::infinity());
}

double wrap(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r = std::nextafter(period, 0.0);
  return r;
}

}  // namespace

void validate(const EventStream& stream) {
  const auto& t = stream.timestamps;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] >= 0.0 && t[i] < stream.duration_s))
      throw InvalidArgument("event stream: timestamp " + std::to_string(i) +
                            " outside [0, duration)");
    if (i > 0 && !(t[i] > t[i - 1]))
      throw InvalidArgument("event stream: timestamps not strictly increasing at " +
                            std::to_string(i));
  }
}

EventStream sample_singles(double rate_hz, double duration_s, std::uint64_t seed, int detector_id,
                           unsigned threads) {
  require(std::isfinite(rate_hz) && rate_hz > 0.0, "sample_singles: rate must be > 0");
  require(std::isfinite(duration_s) && duration_s >= 0.0, "sample_singles: duration must be >= 0");
  EventStream out{detector_id, {}, duration_s, rate_hz, seed};
  if (duration_s == 0.0) return out;

  const auto segments =
      static_cast<std::size_t>(std::max(1.0, std::ceil(rate_hz * duration_s / kSegmentEvents)));
  const double seg_len = duration_s / static_cast<double>(segments);
  std::vector<std::vector<double>> parts(segments);
  parallel_for(segments, threads, [&](std::size_t i) {
    Rng rng = make_rng(seed, "singles", i);
    const double begin = static_cast<double>(i) * seg_len;
    const double end = i + 1 == segments ? duration_s : static_cast<double>(i + 1) * seg_len;
    std::poisson_distribution<std::int64_t> count(rate_hz * (end - begin));
    std::uniform_real_distribution<double> when(begin, end);
    auto& v = parts[i];
    v.resize(static_cast<std::size_t>(count(rng)));
    for (double& t : v) {
      t = when(rng);
      if (t >= end) t = std::nextafter(end, begin);
    }
    std::sort(v.begin(), v.end());
  });

  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  out.timestamps.reserve(total);
  for (const auto& p : parts) out.timestamps.insert(out.timestamps.end(), p.begin(), p.end());
  make_strictly_increasing(out.timestamps);
  return out;
}

EventStream merge_streams(const EventStream& a, const EventStream& b) {
  require(a.detector_id == b.detector_id, "merge_streams: detector ids differ");
  EventStream out{a.detector_id, {}, std::max(a.duration_s, b.duration_s), a.rate_hz + b.rate_hz,
                  a.seed};
  out.timestamps.resize(a.timestamps.size() + b.timestamps.size());
  std::merge(a.timestamps.begin(), a.timestamps.end(), b.timestamps.begin(), b.timestamps.end(),
             out.timestamps.begin());
  make_strictly_increasing(out.timestamps);
  return out;
}

// ---------------------------------------------------------------------------

DelaySampler::DelaySampler(const ModeLattice& lattice, double offset_s, double window_min_s,
                           double window_max_s, double grid_step_s, std::size_t max_grid_points)
    : window_min_(window_min_s), window_max_(window_max_s) {
  require(std::isfinite(window_min_s) && std::isfinite(window_max_s) && window_min_s < window_max_s,
          "delay sampler: window must satisfy min < max");
  require(std::isfinite(grid_step_s) && grid_step_s > 0.0, "delay sampler: grid step must be > 0");
  const double cells_real = std::ceil((window_max_s - window_min_s) / grid_step_s);
  if (cells_real + 1.0 > static_cast<double>(max_grid_points))
    throw RangeError("delay sampler: grid of " + std::to_string(cells_real + 1.0) +
                     " points exceeds cap " + std::to_string(max_grid_points));
  const auto cells = static_cast<std::size_t>(std::max(1.0, cells_real));
  step_ = (window_max_s - window_min_s) / static_cast<double>(cells);

  density_.resize(cells + 1);
  for (std::size_t j = 0; j <= cells; ++j)
    density_[j] = g2_closed(lattice, window_min_s + static_cast<double>(j) * step_ - offset_s);
  cdf_.resize(cells);
  double acc = 0.0;
  for (std::size_t j = 0; j < cells; ++j) {
    acc += 0.5 * (density_[j] + density_[j + 1]) * step_;
    cdf_[j] = acc;
  }
  if (!(acc > 0.0)) throw InvalidArgument("delay sampler: window contains no density mass");
}

double DelaySampler::operator()(double u) const {
  const double target = u * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  std::size_t j = static_cast<std::size_t>(it - cdf_.begin());
  if (j >= cdf_.size()) j = cdf_.size() - 1;
  const double rem = std::max(0.0, target - (j == 0 ? 0.0 : cdf_[j - 1]));
  const double f0 = density_[j];
  const double f1 = density_[j + 1];
  const double h = step_;
  // Solve f0*s + (f1 - f0)*s^2/(2h) = rem for s in [0, h].
  const double a = (f1 - f0) / (2.0 * h);
  const double disc = std::max(0.0, f0 * f0 + 4.0 * a * rem);
  const double denom = f0 + std::sqrt(disc);
  double s = denom > 0.0 ? 2.0 * rem / denom : 0.0;
  s = std::clamp(s, 0.0, h);
  return window_min_ + static_cast<double>(j) * h + s;
}

PairStreams sample_pairs(const ModeLattice& lattice, const DetectorGeometry& geom,
                         double pair_rate_hz, double duration_s, double jitter_sigma_s,
                         std::uint64_t seed, const PairSamplingOptions& options,
                         unsigned threads) {
  validate(geom);
  require(std::isfinite(pair_rate_hz) && pair_rate_hz > 0.0, "sample_pairs: pair_rate must be > 0");
  require(std::isfinite(duration_s) && duration_s > 0.0, "sample_pairs: duration must be > 0");
  require(std::isfinite(jitter_sigma_s) && jitter_sigma_s >= 0.0,
          "sample_pairs: jitter_sigma must be >= 0");

  const double offset = geom.retarded_offset();
  const double period = lattice.period();
  const double wmin = options.window_min_s.value_or(offset - 2.5 * period);
  const double wmax = options.window_max_s.value_or(offset + 2.5 * period);
  const double step = options.grid_step_s.value_or(
      lattice.n_modes() >= 2 ? comb_peak_width(lattice) / 50.0 : (wmax - wmin) / 1e5);
  const DelaySampler sampler(lattice, offset, wmin, wmax, step, options.max_grid_points);

  const auto n_pairs = static_cast<std::size_t>(std::llround(pair_rate_hz * duration_s));
  std::vector<double> t1(n_pairs), t2(n_pairs);
  const std::size_t chunks = (n_pairs + kPairChunk - 1) / kPairChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng = make_rng(seed, "pairs", c);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, jitter_sigma_s > 0.0 ? jitter_sigma_s : 1.0);
    const std::size_t end = std::min(n_pairs, (c + 1) * kPairChunk);
    for (std::size_t k = c * kPairChunk; k < end; ++k) {
      double b = duration_s * unit(rng);
      double a = b + sampler(unit(rng));
      if (jitter_sigma_s > 0.0) {
        a += jitter(rng);
        b += jitter(rng);
      }
      t1[k] = wrap(a, duration_s);
      t2[k] = wrap(b, duration_s);
    }
  });
  std::sort(t1.begin(), t1.end());
  std::sort(t2.begin(), t2.end());
  make_strictly_increasing(t1);
  make_strictly_increasing(t2);

  PairStreams out;
  out.d1 = {1, std::move(t1), duration_s, pair_rate_hz, seed};
  out.d2 = {2, std::move(t2), duration_s, pair_rate_hz, seed};
  out.n_pairs = static_cast<std::int64_t>(n_pairs);
  out.window_min_s = sampler.window_min();
  out.window_max_s = sampler.window_max();
  return out;
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> CoincidenceHistogram::bin_index(double delay) const noexcept {
  if (!(delay >= tau_min && delay < tau_max) || counts.empty()) return std::nullopt;
  const double pos = std::floor((delay - tau_min) / bin_width);
  const auto i = static_cast<std::size_t>(std::max(0.0, pos));
  return std::min(i, counts.size() - 1);
}

bool CoincidenceHistogram::same_binning(const CoincidenceHistogram& other) const noexcept {
  return bin_width == other.bin_width && tau_min == other.tau_min && tau_max == other.tau_max &&
         counts.size() == other.counts.size();
}

void CoincidenceHistogram::merge(const CoincidenceHistogram& other) {
  if (!same_binning(other)) throw InvalidArgument("histogram merge: binning differs");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  total_pairs += other.total_pairs;
}

CoincidenceHistogram make_histogram(double bin_width, double tau_min, double tau_max) {
  require(std::isfinite(bin_width) && bin_width > 0.0, "histogram: bin_width must be > 0");
  require(std::isfinite(tau_min) && std::isfinite(tau_max) && tau_min < tau_max,
          "histogram: need tau_min < tau_max");
  CoincidenceHistogram h;
  h.bin_width = bin_width;
  h.tau_min = tau_min;
  h.tau_max = tau_max;
  const double range = tau_max - tau_min;
  const double ratio = range / bin_width;
  auto bins = static_cast<std::size_t>(std::max<long long>(1, std::llround(ratio)));
  if (std::abs(static_cast<double>(bins) * bin_width - range) > 1e-6 * range) {
    bins = static_cast<std::size_t>(std::ceil(ratio));
    h.tau_max = tau_min + static_cast<double>(bins) * bin_width;
    h.metadata.range_expanded = true;
  }
  h.counts.assign(bins, 0);
  return h;
}

CoincidenceHistogram build_histogram(const EventStream& s1, const EventStream& s2,
                                     double bin_width, double tau_min, double tau_max) {
  const auto& a = s1.timestamps;
  const auto& b = s2.timestamps;
  require(std::is_sorted(a.begin(), a.end()) && std::is_sorted(b.begin(), b.end()),
          "build_histogram: streams must be sorted");
  CoincidenceHistogram h = make_histogram(bin_width, tau_min, tau_max);
  h.metadata.rate1_hz = s1.rate_hz;
  h.metadata.rate2_hz = s2.rate_hz;
  h.metadata.seed1 = s1.seed;
  h.metadata.seed2 = s2.seed;

  const double lo_delay = h.tau_min;
  const double hi_delay = h.tau_max;
  std::size_t lo = 0, hi = 0;
  for (const double t1 : a) {
    // [lo, hi) = t2 values with lo_delay <= t1 - t2 < hi_delay.
    while (lo < b.size() && t1 - b[lo] >= hi_delay) ++lo;
    hi = std::max(hi, lo);
    while (hi < b.size() && t1 - b[hi] >= lo_delay) ++hi;
    for (std::size_t j = lo; j < hi; ++j)
      if (const auto bin = h.bin_index(t1 - b[j])) ++h.counts[*bin];
  }
  for (const auto c : h.counts) h.total_pairs += c;
  return h;
}

// ---------------------------------------------------------------------------

ContrastBreakdown contrast_breakdown(const CoincidenceHistogram& hist,
                                     std::span<const double> peak_centers, double peak_width,
                                     const ContrastOptions& options) {
  if (hist.total_pairs < options.min_total_counts)
    throw StatisticsError("contrast: " + std::to_string(hist.total_pairs) +
                          " counts, below the floor of " +
                          std::to_string(options.min_total_counts));
  require(peak_width > 0.0, "contrast: peak width must be > 0");
  require(!peak_centers.empty(), "contrast: no peak centres given");

  ContrastBreakdown out;
  double peak_sum = 0.0, valley_sum = 0.0;
  for (std::size_t i = 0; i < hist.bins(); ++i) {
    const double x = hist.bin_center(i);
    double dist = std::numeric_limits<double>::infinity();
    for (const double c : peak_centers) dist = std::min(dist, std::abs(x - c));
    if (dist <= peak_width) {
      ++out.peak_bins;
      peak_sum += static_cast<double>(hist.counts[i]);
    } else if (dist >= 3.0 * peak_width) {
      ++out.valley_bins;
      out.valley_counts += hist.counts[i];
      valley_sum += static_cast<double>(hist.counts[i]);
    }
  }
  if (out.peak_bins == 0 || out.valley_bins == 0)
    throw StatisticsError("contrast: histogram needs both peak bins and inter-peak bins");
  out.peak_mean = peak_sum / static_cast<double>(out.peak_bins);
  out.valley_mean = valley_sum / static_cast<double>(out.valley_bins);
  const double denom = out.peak_mean + out.valley_mean;
  if (!(denom > 0.0)) throw StatisticsError("contrast: no counts in peak or valley bins");
  out.contrast = (out.peak_mean - out.valley_mean) / denom;
  return out;
}

ContrastBreakdown contrast_breakdown(const CoincidenceHistogram& hist,
                                     const ContrastOptions& options) {
  if (!hist.metadata.lattice || !hist.metadata.geometry)
    throw InvalidArgument("contrast: histogram metadata lacks lattice/geometry");
  const ModeLattice& lattice = *hist.metadata.lattice;
  const double offset = hist.metadata.geometry->retarded_offset();
  const auto first = static_cast<std::int64_t>(std::floor((hist.tau_min - offset) * lattice.nu_b())) - 1;
  const auto last = static_cast<std::int64_t>(std::ceil((hist.tau_max - offset) * lattice.nu_b())) + 1;
  const auto centers = comb_peak_positions(lattice, *hist.metadata.geometry, first, last);
  return contrast_breakdown(hist, centers, comb_peak_width(lattice), options);
}

double contrast(const CoincidenceHistogram& hist, const ContrastOptions& options) {
  return contrast_breakdown(hist, options).contrast;
}

}  // namespace qgfc
