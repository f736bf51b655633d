#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qgfc/lattice.hpp"

namespace qgfc {

/// Sorted detection times of one detector.
struct EventStream {
  int detector_id = 1;
  std::vector<double> timestamps;  // strictly increasing, within [0, duration_s)
  double duration_s = 0.0;
  double rate_hz = 0.0;
  std::uint64_t seed = 0;
};

/// Throws InvalidArgument if timestamps are not strictly increasing in [0, duration).
void validate(const EventStream& stream);

/// Homogeneous Poisson process.  The duration is cut into fixed segments
/// (about 65536 expected events each) seeded by derive_seed(seed, "singles", i).
EventStream sample_singles(double rate_hz, double duration_s, std::uint64_t seed,
                           int detector_id = 1, unsigned threads = 1);

/// Time-ordered union of two streams of the same detector (e.g. signal plus
/// accidental background).
EventStream merge_streams(const EventStream& a, const EventStream& b);

/// Inverse-CDF sampler of t1 - t2 with density proportional to
/// g2_closed(delay - offset) on [window_min, window_max].  The density is
/// tabulated on a uniform grid and interpolated linearly inside each cell.
class DelaySampler {
 public:
  DelaySampler(const ModeLattice& lattice, double offset_s, double window_min_s,
               double window_max_s, double grid_step_s, std::size_t max_grid_points);

  /// Maps u in [0, 1) to a delay.
  double operator()(double u) const;

  double window_min() const noexcept { return window_min_; }
  double window_max() const noexcept { return window_max_; }
  double grid_step() const noexcept { return step_; }
  std::size_t grid_points() const noexcept { return density_.size(); }
  /// Integral of the tabulated density over the window (seconds, peak = 1).
  double total_mass() const noexcept { return cdf_.empty() ? 0.0 : cdf_.back(); }

 private:
  double window_min_;
  double window_max_;
  double step_;
  std::vector<double> density_;
  std::vector<double> cdf_;  // cdf_[j] = mass of cells 0..j
};

struct PairSamplingOptions {
  /// Delay window for t1 - t2.  Defaults to 5 comb periods centred on (r1 - r2)/c.
  std::optional<double> window_min_s;
  std::optional<double> window_max_s;
  /// Defaults to comb_peak_width/50.
  std::optional<double> grid_step_s;
  std::size_t max_grid_points = 50'000'000;
};

struct PairStreams {
  EventStream d1;
  EventStream d2;
  std::int64_t n_pairs = 0;
  double window_min_s = 0.0;
  double window_max_s = 0.0;
};

/// Generates round(pair_rate * duration) correlated pairs.  t2 is uniform on
/// [0, duration); t1 = t2 + delay with the delay drawn from DelaySampler;
/// each timestamp then gets independent N(0, jitter_sigma) jitter and is
/// wrapped periodically into [0, duration), which keeps both marginals
/// exactly uniform.  Pairs are produced in chunks of 65536 seeded by
/// derive_seed(seed, "pairs", chunk).
PairStreams sample_pairs(const ModeLattice& lattice, const DetectorGeometry& geom,
                         double pair_rate_hz, double duration_s, double jitter_sigma_s,
                         std::uint64_t seed, const PairSamplingOptions& options = {},
                         unsigned threads = 1);

struct HistogramMetadata {
  std::optional<ModeLattice> lattice;
  std::optional<DetectorGeometry> geometry;
  double rate1_hz = 0.0;
  double rate2_hz = 0.0;
  std::uint64_t seed1 = 0;
  std::uint64_t seed2 = 0;
  bool range_expanded = false;
};

/// Binned counts of t1 - t2 over [tau_min, tau_max).
struct CoincidenceHistogram {
  double bin_width = 0.0;
  double tau_min = 0.0;
  double tau_max = 0.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total_pairs = 0;
  HistogramMetadata metadata;

  std::size_t bins() const noexcept { return counts.size(); }
  double bin_lower(std::size_t i) const noexcept { return tau_min + static_cast<double>(i) * bin_width; }
  double bin_center(std::size_t i) const noexcept { return tau_min + (static_cast<double>(i) + 0.5) * bin_width; }
  /// Bin holding `delay`, or nullopt outside [tau_min, tau_max).
  std::optional<std::size_t> bin_index(double delay) const noexcept;

  bool same_binning(const CoincidenceHistogram& other) const noexcept;
  /// Adds counts of a histogram with identical binning.
  void merge(const CoincidenceHistogram& other);
};

/// Empty histogram.  The bin count is round((tau_max - tau_min)/bin_width);
/// when that leaves a remainder above 1e-6 of the range, tau_max is pushed
/// out to the next whole bin and metadata.range_expanded is set.
CoincidenceHistogram make_histogram(double bin_width, double tau_min, double tau_max);

/// All (t1, t2) pairs with t1 - t2 in range, by a two-pointer sweep over the
/// sorted streams: O(n1 + n2 + pairs in range).
CoincidenceHistogram build_histogram(const EventStream& s1, const EventStream& s2,
                                     double bin_width, double tau_min, double tau_max);

struct ContrastOptions {
  std::uint64_t min_total_counts = 1000;
};

struct ContrastBreakdown {
  double contrast = 0.0;
  double peak_mean = 0.0;    // mean count of bins within one peak width of a centre
  double valley_mean = 0.0;  // mean count of bins at least 3 peak widths from every centre
  std::size_t peak_bins = 0;
  std::size_t valley_bins = 0;
  std::uint64_t valley_counts = 0;
};

/// (peak_mean - valley_mean)/(peak_mean + valley_mean) with explicit centres.
ContrastBreakdown contrast_breakdown(const CoincidenceHistogram& hist,
                                     std::span<const double> peak_centers, double peak_width,
                                     const ContrastOptions& options = {});

/// Centres and width taken from the histogram's lattice/geometry metadata.
ContrastBreakdown contrast_breakdown(const CoincidenceHistogram& hist,
                                     const ContrastOptions& options = {});

double contrast(const CoincidenceHistogram& hist, const ContrastOptions& options = {});

}  // namespace qgfc
