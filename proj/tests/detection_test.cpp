#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qgfc/correlation.hpp"
#include "qgfc/detection.hpp"
#include "qgfc/error.hpp"
#include "support.hpp"

namespace qgfc {
namespace {

EventStream stream_of(std::vector<double> t, double duration, int id = 1) {
  EventStream s;
  s.detector_id = id;
  s.timestamps = std::move(t);
  s.duration_s = duration;
  return s;
}

// All-pairs reference for build_histogram.
std::vector<std::uint64_t> brute_force(const EventStream& a, const EventStream& b,
                                       const CoincidenceHistogram& layout) {
  std::vector<std::uint64_t> counts(layout.bins(), 0);
  for (double t1 : a.timestamps)
    for (double t2 : b.timestamps) {
      const double d = t1 - t2;
      if (d < layout.tau_min || d >= layout.tau_max) continue;
      auto i = static_cast<std::size_t>(std::floor((d - layout.tau_min) / layout.bin_width));
      counts[std::min(i, counts.size() - 1)]++;
    }
  return counts;
}

// Integral of the unnormalized Dirichlet comb (N^2 at peaks) over [a, b],
// composite Simpson on the naive long-double kernel.
double comb_mass(std::int64_t n, double nu_b, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int i = 0; i <= panels; ++i) {
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * static_cast<double>(test::naive_dirichlet_turns(n, static_cast<long double>(nu_b) * (a + i * h)));
  }
  return s * h / 3.0 / double(n * n);
}

TEST(Streams, Validation) {
  EXPECT_NO_THROW(validate(stream_of({0.0, 0.5, 0.9}, 1.0)));
  EXPECT_THROW(validate(stream_of({0.5, 0.5}, 1.0)), InvalidArgument);
  EXPECT_THROW(validate(stream_of({0.5, 1.0}, 1.0)), InvalidArgument);
  EXPECT_THROW(validate(stream_of({-0.1}, 1.0)), InvalidArgument);
}

TEST(Singles, CountAndEmpty) {
  const auto s = sample_singles(1e3, 10.0, 5);
  EXPECT_NEAR(double(s.timestamps.size()), 1e4, 500.0);
  EXPECT_NO_THROW(validate(s));
  EXPECT_TRUE(sample_singles(1e3, 0.0, 5).timestamps.empty());
  EXPECT_THROW(sample_singles(0.0, 1.0, 5), InvalidArgument);
  EXPECT_THROW(sample_singles(1.0, -1.0, 5), InvalidArgument);
}

TEST(Singles, ExponentialInterArrivalsAndUniformity) {
  const double rate = 2e4;
  const auto s = sample_singles(rate, 10.0, 6);  // several segments
  std::vector<double> gaps;
  for (std::size_t i = 1; i < s.timestamps.size(); ++i) gaps.push_back(s.timestamps[i] - s.timestamps[i - 1]);
  EXPECT_GT(test::ks_p_value(gaps, [&](double x) { return 1.0 - std::exp(-rate * x); }), 0.01);
  EXPECT_GT(test::uniformity_p_value(s.timestamps, 0.0, 10.0, 100), 0.01);
}

TEST(Singles, DeterministicAcrossThreads) {
  const auto a = sample_singles(5e4, 20.0, 7, 1, 1);
  const auto b = sample_singles(5e4, 20.0, 7, 1, 4);
  EXPECT_EQ(a.timestamps, b.timestamps);
  EXPECT_NE(a.timestamps, sample_singles(5e4, 20.0, 8, 1, 1).timestamps);
}

TEST(Streams, Merge) {
  const auto m = merge_streams(stream_of({0.1, 0.5}, 1.0), stream_of({0.2, 0.5, 0.7}, 2.0));
  ASSERT_EQ(m.timestamps.size(), 5u);
  EXPECT_NO_THROW(validate(m));
  EXPECT_EQ(m.duration_s, 2.0);
  EXPECT_THROW(merge_streams(stream_of({}, 1.0, 1), stream_of({}, 1.0, 2)), InvalidArgument);
}

TEST(DelaySampler, FollowsClosedFormCdf) {
  const auto l = test::lattice(20);
  const double w = comb_peak_width(l);
  const DelaySampler ds(l, 0.0, -0.5 * l.period(), 0.5 * l.period(), w / 50, 10'000'000);
  test::Gen g(31);
  std::vector<double> x(20000);
  for (double& v : x) v = ds(test::uniform(g, 0.0, 1.0));
  // CDF oracle tabulated with Simpson on a grid much finer than the sampler's.
  const int table = 4000;
  std::vector<double> cdf(table + 1, 0.0);
  const double lo = -0.5 * l.period(), step = l.period() / table;
  for (int i = 0; i < table; ++i) cdf[i + 1] = cdf[i] + comb_mass(20, 20e3, lo + i * step, lo + (i + 1) * step, 8);
  const double total = cdf.back();
  const auto oracle = [&](double t) {
    const double pos = std::clamp((t - lo) / step, 0.0, double(table));
    const auto i = std::min(static_cast<int>(pos), table - 1);
    return (cdf[i] + (pos - i) * (cdf[i + 1] - cdf[i])) / total;
  };
  EXPECT_GT(test::ks_p_value(x, oracle), 0.01);
  EXPECT_NEAR(ds.total_mass() * 20e3, 1.0 / 20.0, 1e-6);  // mean of D/N^2 over a period is 1/N
}

TEST(DelaySampler, MainLobeFractionMatchesOracle) {
  // With a one-period window every delay is drawn from a density that is
  // zero only on a null set, so side lobes receive their share of events.
  const auto l = test::lattice(1000);
  const double w = comb_peak_width(l);
  const DelaySampler ds(l, 0.0, -0.5 * l.period(), 0.5 * l.period(), w / 50, 10'000'000);
  test::Gen g(32);
  const int n = 200000;
  int inside = 0;
  for (int i = 0; i < n; ++i)
    if (std::abs(ds(test::uniform(g, 0.0, 1.0))) <= w) ++inside;
  const double lobe = comb_mass(1000, 20e3, -w, w, 2000);
  const double all = 1.0 / (1000.0 * 20e3);
  const double p = lobe / all;
  EXPECT_NEAR(p, 0.9028, 5e-3);  // Si(2 pi)/pi, the main-lobe share of a wide Dirichlet comb
  EXPECT_NEAR(double(inside) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(DelaySampler, Guards) {
  const auto l = test::lattice(1000);
  EXPECT_THROW(DelaySampler(l, 0.0, 1.0, 0.0, 1e-9, 100), InvalidArgument);
  EXPECT_THROW(DelaySampler(l, 0.0, 0.0, 1.0, 1e-9, 100), RangeError);
}

TEST(Pairs, MarginalsAreFlat) {
  const auto l = test::lattice(1000);
  const auto p = sample_pairs(l, {}, 10.0, 1e4, 0.0, 41);
  EXPECT_EQ(p.n_pairs, 100000);
  EXPECT_GT(test::uniformity_p_value(p.d1.timestamps, 0.0, 1e4, 100), 0.01);
  EXPECT_GT(test::uniformity_p_value(p.d2.timestamps, 0.0, 1e4, 100), 0.01);
  EXPECT_NO_THROW(validate(p.d1));
  EXPECT_NO_THROW(validate(p.d2));
}

TEST(Pairs, DeterministicAcrossThreadsAndRuns) {
  const auto l = test::lattice(100);
  const auto a = sample_pairs(l, {}, 100.0, 2000.0, 1e-9, 42, {}, 1);
  const auto b = sample_pairs(l, {}, 100.0, 2000.0, 1e-9, 42, {}, 4);
  const auto c = sample_pairs(l, {}, 100.0, 2000.0, 1e-9, 42, {}, 1);
  EXPECT_EQ(a.d1.timestamps, b.d1.timestamps);
  EXPECT_EQ(a.d2.timestamps, b.d2.timestamps);
  EXPECT_EQ(a.d1.timestamps, c.d1.timestamps);
}

TEST(Pairs, Preconditions) {
  const auto l = test::lattice(10);
  EXPECT_THROW(sample_pairs(l, {}, 0.0, 1.0, 0.0, 1), InvalidArgument);
  EXPECT_THROW(sample_pairs(l, {}, 1.0, 1.0, -1.0, 1), InvalidArgument);
}

TEST(Histogram, EmptyStreams) {
  const auto h = build_histogram(stream_of({}, 1.0), stream_of({}, 1.0, 2), 1e-3, -5e-3, 5e-3);
  EXPECT_EQ(h.bins(), 10u);
  EXPECT_EQ(h.total_pairs, 0u);
  for (auto c : h.counts) EXPECT_EQ(c, 0u);
}

TEST(Histogram, HandCountedExample) {
  const auto h = build_histogram(stream_of({1.0}, 2.0), stream_of({0.9995}, 2.0, 2), 1e-3, -5e-3, 5e-3);
  ASSERT_EQ(h.bins(), 10u);
  EXPECT_EQ(h.total_pairs, 1u);
  EXPECT_EQ(h.counts[5], 1u);  // [0, 1 ms) holds +0.5 ms
  EXPECT_EQ(h.bin_index(0.5e-3), std::optional<std::size_t>(5));
  EXPECT_FALSE(h.bin_index(5e-3).has_value());
}

TEST(Histogram, TwoPointerEqualsBruteForceProperty) {
  test::Gen g(43);
  for (int trial = 0; trial < 60; ++trial) {
    const double dur = 1.0;
    std::vector<double> a, b;
    const auto na = test::uniform_int(g, 0, 1000), nb = test::uniform_int(g, 0, 1000);
    for (int i = 0; i < na; ++i) a.push_back(test::uniform(g, 0.0, dur));
    for (int i = 0; i < nb; ++i) b.push_back(test::uniform(g, 0.0, dur));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    const double bw = test::uniform(g, 1e-4, 1e-2);
    const double lo = test::uniform(g, -0.3, 0.1);
    const double hi = lo + bw * double(test::uniform_int(g, 1, 400));
    const auto s1 = stream_of(a, dur), s2 = stream_of(b, dur, 2);
    const auto h = build_histogram(s1, s2, bw, lo, hi);
    EXPECT_EQ(h.counts, brute_force(s1, s2, h));
    std::uint64_t sum = 0;
    for (auto c : h.counts) sum += c;
    EXPECT_EQ(sum, h.total_pairs);
  }
}

TEST(Histogram, BinCountAndRangeExpansion) {
  const auto exact = make_histogram(0.1, 0.0, 1.0);
  EXPECT_EQ(exact.bins(), 10u);
  EXPECT_FALSE(exact.metadata.range_expanded);
  const auto expanded = make_histogram(0.3, 0.0, 1.0);
  EXPECT_TRUE(expanded.metadata.range_expanded);
  EXPECT_EQ(expanded.bins(), 4u);
  EXPECT_NEAR(expanded.tau_max, 1.2, 1e-12);
  EXPECT_THROW(make_histogram(0.0, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(make_histogram(0.1, 1.0, 0.0), InvalidArgument);
}

TEST(Histogram, MergeIsAssociativeAndCommutative) {
  test::Gen g(44);
  auto random_hist = [&] {
    auto h = make_histogram(1.0, 0.0, 16.0);
    for (auto& c : h.counts) {
      c = static_cast<std::uint64_t>(test::uniform_int(g, 0, 1000));
      h.total_pairs += c;
    }
    return h;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_hist(), b = random_hist(), c = random_hist();
    auto ab_c = a;
    ab_c.merge(b);
    ab_c.merge(c);
    auto bc = b;
    bc.merge(c);
    auto a_bc = a;
    a_bc.merge(bc);
    auto ba = b;
    ba.merge(a);
    auto ab = a;
    ab.merge(b);
    EXPECT_EQ(ab_c.counts, a_bc.counts);
    EXPECT_EQ(ab_c.total_pairs, a_bc.total_pairs);
    EXPECT_EQ(ab.counts, ba.counts);
  }
  auto x = make_histogram(1.0, 0.0, 16.0);
  EXPECT_THROW(x.merge(make_histogram(0.5, 0.0, 16.0)), InvalidArgument);
}

TEST(Histogram, ShardedStreamsMergeToWhole) {
  const auto l = test::lattice(50);
  const auto p = sample_pairs(l, {}, 100.0, 1000.0, 0.0, 45);
  const double w = comb_peak_width(l);
  const auto whole = build_histogram(p.d1, p.d2, w / 10, -1.25e-4, 1.25e-4);
  // Split detector 1 by time; every (t1, t2) pair falls in exactly one shard.
  std::vector<double> first, second;
  for (double t : p.d1.timestamps) (t < 500.0 ? first : second).push_back(t);
  auto merged = build_histogram(stream_of(first, 1000.0), p.d2, w / 10, -1.25e-4, 1.25e-4);
  merged.merge(build_histogram(stream_of(second, 1000.0), p.d2, w / 10, -1.25e-4, 1.25e-4));
  EXPECT_EQ(merged.counts, whole.counts);
}

TEST(Histogram, MatchesClosedFormShape) {
  const auto l = test::lattice(1000);
  const double T = 1e5, rate = 10.0;
  const auto p = sample_pairs(l, {}, rate, T, 0.0, 46);
  const double w = comb_peak_width(l), bw = w / 10;
  auto h = build_histogram(p.d1, p.d2, bw, -2.5 * l.period(), 2.5 * l.period());
  const double window_mass = 5.0 * l.period() / 1000.0;  // five periods of D/N^2
  const double background = rate * rate * T * bw;        // cross-pair accidentals
  double chi2 = 0.0;
  int dof = 0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double a = h.bin_lower(i);
    const double expect = double(p.n_pairs) * comb_mass(1000, 20e3, a, a + bw, 16) / window_mass + background;
    if (expect < 20.0) continue;
    chi2 += (double(h.counts[i]) - expect) * (double(h.counts[i]) - expect) / expect;
    ++dof;
  }
  ASSERT_GT(dof, 50);
  EXPECT_LT(chi2 / dof, 2.0) << chi2 << " / " << dof;
}

TEST(Histogram, PerPeakCountsEqual) {
  const auto l = test::lattice(1000);
  const auto p = sample_pairs(l, {}, 10.0, 1e5, 0.0, 47);
  const auto h = build_histogram(p.d1, p.d2, comb_peak_width(l) / 10, -2.5 * l.period(), 2.5 * l.period());
  std::vector<double> per_peak(5, 0.0);
  for (std::size_t i = 0; i < h.bins(); ++i)
    per_peak[std::min<std::size_t>(4, i * 5 / h.bins())] += double(h.counts[i]);
  double total = 0.0;
  for (double c : per_peak) total += c;
  double chi2 = 0.0;
  for (double c : per_peak) chi2 += (c - total / 5) * (c - total / 5) / (total / 5);
  boost::math::chi_squared dist(4);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.01);
}

TEST(Contrast, UniformHistogramIsZero) {
  auto h = make_histogram(5e-9, -1.25e-4, 1.25e-4);
  for (auto& c : h.counts) c = 7;
  h.total_pairs = 7 * h.bins();
  h.metadata.lattice = test::lattice(1000);
  h.metadata.geometry = DetectorGeometry{};
  EXPECT_NEAR(contrast(h), 0.0, 1e-15);
}

TEST(Contrast, IdealSimulationNearOne) {
  const auto l = test::lattice(1000);
  const auto p = sample_pairs(l, {}, 10.0, 2e4, 0.0, 48);
  auto h = build_histogram(p.d1, p.d2, comb_peak_width(l) / 10, -2.5 * l.period(), 2.5 * l.period());
  h.metadata.lattice = l;
  h.metadata.geometry = DetectorGeometry{};
  const auto c = contrast_breakdown(h);
  EXPECT_GT(c.contrast, 0.99);
  EXPECT_EQ(c.peak_bins, 5u * 20u);
}

TEST(Contrast, InsufficientStatistics) {
  auto h = make_histogram(5e-9, -1.25e-4, 1.25e-4);
  h.counts[0] = 10;
  h.total_pairs = 10;
  h.metadata.lattice = test::lattice(1000);
  h.metadata.geometry = DetectorGeometry{};
  EXPECT_THROW(contrast(h), StatisticsError);
  ContrastOptions loose;
  loose.min_total_counts = 5;
  EXPECT_NO_THROW(contrast(h, loose));
  auto bare = make_histogram(5e-9, -1.25e-4, 1.25e-4);
  EXPECT_THROW(contrast(bare, loose), InvalidArgument);
}

TEST(Contrast, AccidentalMixtureMatchesArithmetic) {
  const auto l = test::lattice(1000);
  const double T = 10.0, pair_rate = 1e4, acc_rate = 1e4;
  const auto p = sample_pairs(l, {}, pair_rate, T, 0.0, 49);
  const auto a1 = sample_singles(acc_rate, T, 50, 1);
  const auto a2 = sample_singles(acc_rate, T, 51, 2);
  const double w = comb_peak_width(l), bw = w / 10;
  auto h = build_histogram(merge_streams(p.d1, a1), merge_streams(p.d2, a2), bw, -2.5 * l.period(),
                           2.5 * l.period());
  h.metadata.lattice = l;
  h.metadata.geometry = DetectorGeometry{};
  const auto c = contrast_breakdown(h);

  // Expected means: true counts from the closed-form mass in the peak and
  // valley regions, plus a flat accidental floor r1 r2 T bw.
  const double window_mass = 5.0 * l.period() / 1000.0;
  const double per_pair = double(p.n_pairs) / window_mass;
  const double peak_true = per_pair * comb_mass(1000, 20e3, -w, w, 4000) / 20.0;
  double valley_mass = 0.0;
  for (int k = -2; k <= 2; ++k) {
    const double c0 = k * l.period();
    const double lo = std::max(c0 - 0.5 * l.period(), -2.5 * l.period());
    valley_mass += comb_mass(1000, 20e3, lo, c0 - 3 * w, 20000) + comb_mass(1000, 20e3, c0 + 3 * w, c0 + 0.5 * l.period(), 20000);
  }
  const double valley_true = per_pair * valley_mass / double(c.valley_bins);
  const double r = pair_rate + acc_rate;
  const double floor = r * r * T * bw;
  const double expect = (peak_true - valley_true) / (peak_true + valley_true + 2 * floor);
  EXPECT_NEAR(c.contrast, expect, 0.01);
  EXPECT_LT(c.contrast, 0.97);
}

}  // namespace
}  // namespace qgfc
