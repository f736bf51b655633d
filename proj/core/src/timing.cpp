#include "qgfc/timing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qgfc/correlation.hpp"
#include "qgfc/error.hpp"

namespace qgfc {
namespace {

std::vector<double> box_smooth(std::span<const std::uint64_t> counts, std::size_t width) {
  const std::size_t half = width / 2;
  const std::size_t n = counts.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + static_cast<double>(counts[i]);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

struct Candidate {
  std::size_t bin;
  double height;
  double prominence;
};

std::vector<Candidate> prominent_maxima(const std::vector<double>& s) {
  std::vector<Candidate> out;
  const std::size_t n = s.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (!(s[i] > s[i - 1])) {
      ++i;
      continue;
    }
    std::size_t j = i;  // end of plateau
    while (j + 1 < n && s[j + 1] == s[i]) ++j;
    if (j + 1 < n && s[j + 1] < s[i]) {
      const double h = s[i];
      double left_min = h;
      for (std::size_t k = i; k-- > 0;) {
        if (s[k] > h) break;
        left_min = std::min(left_min, s[k]);
      }
      double right_min = h;
      for (std::size_t k = j + 1; k < n; ++k) {
        if (s[k] > h) break;
        right_min = std::min(right_min, s[k]);
      }
      out.push_back({(i + j) / 2, h, h - std::max(left_min, right_min)});
    }
    i = j + 1;
  }
  return out;
}

double half_max_radius(const std::vector<double>& s, std::size_t peak, double bin_width) {
  const double half = 0.5 * s[peak];
  std::size_t l = peak, r = peak;
  while (l > 0 && s[l] > half) --l;
  while (r + 1 < s.size() && s[r] > half) ++r;
  return static_cast<double>(std::max(peak - l, r - peak)) * bin_width;
}

PeakEstimate centroid(const CoincidenceHistogram& h, double start, double radius) {
  double center = start;
  double sum = 0.0, spread = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    const double lo = center - radius;
    const double hi = center + radius;
    const auto first = static_cast<std::ptrdiff_t>(std::floor((lo - h.tau_min) / h.bin_width));
    const auto last = static_cast<std::ptrdiff_t>(std::floor((hi - h.tau_min) / h.bin_width));
    sum = 0.0;
    double moment = 0.0;
    for (std::ptrdiff_t b = std::max<std::ptrdiff_t>(first, 0);
         b <= std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(h.bins()) - 1); ++b) {
      const auto bu = static_cast<std::size_t>(b);
      const double a = h.bin_lower(bu);
      const double overlap = std::min(a + h.bin_width, hi) - std::max(a, lo);
      if (overlap <= 0.0) continue;
      const double w = static_cast<double>(h.counts[bu]) * overlap / h.bin_width;
      sum += w;
      moment += w * h.bin_center(bu);
    }
    if (!(sum > 0.0)) break;
    const double next = moment / sum;
    const bool done = std::abs(next - center) <= 1e-9 * h.bin_width;
    center = next;
    if (done) break;
  }
  if (!(sum > 0.0)) return {start, 0.0, 0.0};

  spread = 0.0;
  const double lo = center - radius;
  const double hi = center + radius;
  for (std::size_t b = 0; b < h.bins(); ++b) {
    const double a = h.bin_lower(b);
    const double overlap = std::min(a + h.bin_width, hi) - std::max(a, lo);
    if (overlap <= 0.0) continue;
    const double w = static_cast<double>(h.counts[b]) * overlap / h.bin_width;
    const double d = h.bin_center(b) - center;
    spread += w * d * d;
  }
  const double var_x = spread / sum + h.bin_width * h.bin_width / 12.0;
  return {center, std::sqrt(var_x / sum), sum};
}

}  // namespace

std::vector<PeakEstimate> detect_peaks(const CoincidenceHistogram& hist,
                                       const PeakSearchOptions& options) {
  if (hist.bins() < 3) throw StatisticsError("detect_peaks: histogram has fewer than 3 bins");
  std::optional<double> width = options.peak_width_s;
  if (!width && hist.metadata.lattice && hist.metadata.lattice->n_modes() >= 2)
    width = comb_peak_width(*hist.metadata.lattice);
  if (width && *width / hist.bin_width < 10.0 * (1.0 - 1e-6) && !options.peak_width_s)
    throw InvalidArgument("detect_peaks: need >= 10 bins per peak width (have " +
                          std::to_string(*width / hist.bin_width) + ")");

  std::size_t smooth_bins = 1;
  if (width) smooth_bins = static_cast<std::size_t>(std::max(1.0, std::round(*width / hist.bin_width)));
  if (smooth_bins % 2 == 0) ++smooth_bins;
  const auto smooth = box_smooth(hist.counts, smooth_bins);
  const double top = *std::max_element(smooth.begin(), smooth.end());

  auto candidates = prominent_maxima(smooth);
  std::erase_if(candidates, [&](const Candidate& c) {
    return !(c.prominence > 0.0) || c.prominence < options.min_prominence * top;
  });
  if (candidates.empty()) throw StatisticsError("detect_peaks: no peaks found above prominence");

  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.height > b.height; });
  std::vector<PeakEstimate> out;
  std::vector<double> accepted;
  for (const auto& c : candidates) {
    const double radius = width ? *width : 2.0 * half_max_radius(smooth, c.bin, hist.bin_width);
    const double x = hist.bin_center(c.bin);
    const bool near_stronger = std::any_of(accepted.begin(), accepted.end(),
                                           [&](double a) { return std::abs(a - x) < radius; });
    if (near_stronger) continue;
    accepted.push_back(x);
    out.push_back(centroid(hist, x, std::max(radius, hist.bin_width)));
  }
  std::sort(out.begin(), out.end(),
            [](const PeakEstimate& a, const PeakEstimate& b) { return a.center_s < b.center_s; });
  return out;
}

CombFit fit_comb(std::span<const PeakEstimate> input, std::optional<double> nu_b_hint) {
  if (input.size() < 2) throw FitError("fit_comb: need at least 2 peaks");
  if (nu_b_hint && !(*nu_b_hint > 0.0)) throw InvalidArgument("fit_comb: nu_b hint must be > 0");
  std::vector<PeakEstimate> peaks(input.begin(), input.end());
  std::sort(peaks.begin(), peaks.end(),
            [](const PeakEstimate& a, const PeakEstimate& b) { return a.center_s < b.center_s; });
  const auto ref = std::min_element(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) {
    return std::abs(a.center_s) < std::abs(b.center_s);
  })->center_s;

  double spacing;
  if (nu_b_hint) {
    spacing = 1.0 / *nu_b_hint;
  } else {
    spacing = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < peaks.size(); ++i)
      spacing = std::min(spacing, peaks[i].center_s - peaks[i - 1].center_s);
    if (!(spacing > 0.0)) throw FitError("fit_comb: degenerate peaks (coincident centres)");
  }

  const std::size_t m = peaks.size();
  std::vector<double> idx(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double real = (peaks[i].center_s - ref) / spacing;
    idx[i] = std::nearbyint(real);
    if (std::abs(real - idx[i]) > 0.25)
      throw FitError("fit_comb: index assignment ambiguous (peak at " +
                     std::to_string(peaks[i].center_s) + " s is " +
                     std::to_string(real) + " spacings from the reference)");
  }
  if (std::all_of(idx.begin(), idx.end(), [&](double n) { return n == idx.front(); }))
    throw FitError("fit_comb: degenerate, all peaks share one index");

  const bool weighted = std::all_of(peaks.begin(), peaks.end(),
                                    [](const auto& p) { return p.stderr_s > 0.0; });
  std::vector<double> w(m, 1.0);
  if (weighted)
    for (std::size_t i = 0; i < m; ++i) w[i] = 1.0 / (peaks[i].stderr_s * peaks[i].stderr_s);

  double sw = 0.0, sn = 0.0, sc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sw += w[i];
    sn += w[i] * idx[i];
    sc += w[i] * peaks[i].center_s;
  }
  const double nbar = sn / sw;
  const double cbar = sc / sw;
  double snn = 0.0, snc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dn = idx[i] - nbar;
    snn += w[i] * dn * dn;
    snc += w[i] * dn * (peaks[i].center_s - cbar);
  }
  const double slope = snc / snn;
  if (!(slope > 0.0)) throw FitError("fit_comb: non-positive comb period");
  const double intercept = cbar - slope * nbar;

  double rss_w = 0.0, rss = 0.0;
  std::vector<double> resid(m);
  for (std::size_t i = 0; i < m; ++i) {
    resid[i] = peaks[i].center_s - (intercept + slope * idx[i]);
    rss += resid[i] * resid[i];
    rss_w += w[i] * resid[i] * resid[i];
  }
  const double scale = weighted ? 1.0 : (m > 2 ? rss_w / static_cast<double>(m - 2) : 0.0);

  // Principal interval (-P/2, P/2] for the offset.
  const double shift = std::ceil(intercept / slope - 0.5);
  const double offset = intercept - shift * slope;
  const double nbar_shifted = nbar + shift;

  CombFit fit;
  fit.weighted = weighted;
  fit.period_s = slope;
  fit.period_stderr = std::sqrt(scale / snn);
  fit.nu_b_est = 1.0 / slope;
  fit.nu_b_stderr = fit.period_stderr / (slope * slope);
  fit.offset_est = offset;
  fit.offset_stderr = std::sqrt(scale * (1.0 / sw + nbar_shifted * nbar_shifted / snn));
  fit.residual_rms = std::sqrt(rss / static_cast<double>(m));
  fit.n_peaks_used = static_cast<int>(m);
  fit.ambiguity_period_s = slope;
  for (std::size_t i = 0; i < m; ++i)
    fit.peaks.push_back({static_cast<std::int64_t>(idx[i] + shift), peaks[i].center_s,
                         peaks[i].stderr_s, resid[i]});
  return fit;
}

double resolution_estimate(const ModeLattice& lattice, double total_pairs, double n_peaks) {
  if (lattice.n_modes() < 2) throw InvalidArgument("resolution_estimate: a comb needs N >= 2");
  if (!(total_pairs >= 1.0)) throw InvalidArgument("resolution_estimate: total_pairs must be >= 1");
  if (!(n_peaks >= 1.0)) throw InvalidArgument("resolution_estimate: n_peaks must be >= 1");
  return comb_peak_width(lattice) / std::sqrt(total_pairs / n_peaks);
}

}  // namespace qgfc
