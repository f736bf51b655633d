#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qgfc/detection.hpp"
#include "qgfc/lattice.hpp"

namespace qgfc {

struct PeakEstimate {
  double center_s = 0.0;
  double stderr_s = 0.0;
  double counts = 0.0;  // weighted counts inside the centroid window
};

struct PeakSearchOptions {
  /// Minimum prominence as a fraction of the tallest smoothed bin.
  double min_prominence = 0.25;
  /// Main-lobe half width (peak to first zero).  Taken from the histogram's
  /// lattice metadata when absent; failing that it is estimated as twice
  /// the half width at half maximum.
  std::optional<double> peak_width_s;
};

/// Local-maximum scan with a prominence cut on the histogram smoothed over
/// one peak width, followed by an iterated centre-of-mass over +-peak_width
/// (edge bins weighted by overlap).  The standard error is the counting
/// error of that centroid.  Throws StatisticsError when nothing qualifies.
std::vector<PeakEstimate> detect_peaks(const CoincidenceHistogram& hist,
                                       const PeakSearchOptions& options = {});

struct FittedPeak {
  std::int64_t index = 0;
  double center_s = 0.0;
  double stderr_s = 0.0;
  double residual_s = 0.0;
};

/// Line fit of peak centre against comb index: centre = offset + n/nu_b.
///
/// The comb fixes the offset only modulo one period, so offset_est is
/// reported in (-period/2, period/2] and the indices are relabelled to
/// match; ambiguity_period_s carries the period.
struct CombFit {
  double nu_b_est = 0.0;
  double nu_b_stderr = 0.0;
  double period_s = 0.0;
  double period_stderr = 0.0;
  double offset_est = 0.0;
  double offset_stderr = 0.0;
  std::vector<FittedPeak> peaks;
  double residual_rms = 0.0;
  int n_peaks_used = 0;
  double ambiguity_period_s = 0.0;
  /// True when inverse-variance weights from peak stderr were used; false
  /// means equal weights with the scale taken from the residuals.
  bool weighted = false;
};

/// Indices come from rounding (centre - centre_0) * nu_b_hint, or from the
/// ratio to the smallest peak gap when no hint is given; centre_0 is the
/// peak closest to zero.  Throws FitError for < 2 peaks, a rounding
/// residual above 0.25, or when all peaks share one index.
CombFit fit_comb(std::span<const PeakEstimate> peaks, std::optional<double> nu_b_hint = {});

/// comb_peak_width / sqrt(total_pairs / n_peaks): the counting-statistics
/// scale of one peak-centre estimate.  Requires N >= 2.
double resolution_estimate(const ModeLattice& lattice, double total_pairs, double n_peaks = 1.0);

}  // namespace qgfc
