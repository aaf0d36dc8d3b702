#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cohortnet/error.hpp"
#include "cohortnet/month.hpp"
#include "cohortnet/parallel.hpp"
#include "cohortnet/rng.hpp"
#include "cohortnet/series.hpp"
#include "cohortnet/stats.hpp"

namespace cohortnet {

// Guard for near-zero SSE values.
inline constexpr double kSseEpsilon = 1e-12;

enum class FitVariant {
  independent,  // two unconstrained lines, jump allowed at the break
  continuous,   // hinge model, lines meet at the month before the break
};

[[nodiscard]] inline std::string_view to_string(FitVariant v) {
  return v == FitVariant::independent ? "independent" : "continuous";
}

struct Point {
  double x = 0.0;  // months since series origin
  double y = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double sse = 0.0;
  std::size_t n = 0;

  [[nodiscard]] double at(double x) const { return intercept + slope * x; }
};

struct SegmentedFit {
  LineFit left;
  LineFit right;
  double sse = 0.0;
};

// Ordinary least squares. Throws InsufficientData with fewer than two distinct x values.
[[nodiscard]] inline LineFit fit_line(std::span<const Point> pts) {
  if (pts.size() < 2) throw InsufficientData("fit_line needs at least 2 points");
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  const auto n = static_cast<double>(pts.size());
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    sxy += (p.x - mx) * (p.y - my);
  }
  if (sxx <= 0.0) throw InsufficientData("fit_line needs at least 2 distinct x values");
  LineFit f;
  f.n = pts.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (const auto& p : pts) {
    const double r = p.y - f.at(p.x);
    f.sse += r * r;
  }
  return f;
}

namespace detail {

// y = a + b x + c max(0, x - knot) fitted jointly to both segments.
inline SegmentedFit fit_hinge(std::span<const Point> left, std::span<const Point> right, double knot) {
  const auto n = static_cast<double>(left.size() + right.size());
  auto hinge = [knot](double x) { return x > knot ? x - knot : 0.0; };
  double mx = 0.0, mh = 0.0, my = 0.0;
  for (auto seg : {left, right}) {
    for (const auto& p : seg) {
      mx += p.x;
      mh += hinge(p.x);
      my += p.y;
    }
  }
  mx /= n;
  mh /= n;
  my /= n;
  double sxx = 0.0, shh = 0.0, sxh = 0.0, sxy = 0.0, shy = 0.0;
  for (auto seg : {left, right}) {
    for (const auto& p : seg) {
      const double dx = p.x - mx, dh = hinge(p.x) - mh, dy = p.y - my;
      sxx += dx * dx;
      shh += dh * dh;
      sxh += dx * dh;
      sxy += dx * dy;
      shy += dh * dy;
    }
  }
  const double det = sxx * shh - sxh * sxh;
  if (!(det > 1e-12 * sxx * shh)) throw InsufficientData("continuous segmented fit is singular");
  const double b = (sxy * shh - shy * sxh) / det;
  const double c = (shy * sxx - sxy * sxh) / det;
  const double a = my - b * mx - c * mh;

  SegmentedFit f;
  f.left = LineFit{b, a, 0.0, left.size()};
  f.right = LineFit{b + c, a - c * knot, 0.0, right.size()};
  for (const auto& p : left) f.left.sse += (p.y - f.left.at(p.x)) * (p.y - f.left.at(p.x));
  for (const auto& p : right) f.right.sse += (p.y - f.right.at(p.x)) * (p.y - f.right.at(p.x));
  f.sse = f.left.sse + f.right.sse;
  return f;
}

// Segmented fit with the second segment starting at pts[split].
inline SegmentedFit fit_split(std::span<const Point> pts, std::size_t split, FitVariant variant) {
  const auto left = pts.first(split);
  const auto right = pts.subspan(split);
  if (variant == FitVariant::continuous) return fit_hinge(left, right, pts[split].x - 1.0);
  SegmentedFit f;
  f.left = fit_line(left);
  f.right = fit_line(right);
  f.sse = f.left.sse + f.right.sse;
  return f;
}

struct SplitSearch {
  std::size_t split = 0;
  SegmentedFit fit;
  double sse_single = 0.0;
};

// Minimises segmented SSE over feasible splits; ties go to the earliest split.
inline SplitSearch search_split(std::span<const Point> pts, std::size_t min_seg, FitVariant variant) {
  if (min_seg < 2) throw std::invalid_argument("min_seg must be >= 2");
  if (pts.size() < 2 * min_seg) throw InsufficientData("series too short for a segmented fit");
  const double sse_single = fit_line(pts).sse;
  std::vector<SegmentedFit> fits;
  fits.reserve(pts.size() - 2 * min_seg + 1);
  for (std::size_t s = min_seg; s + min_seg <= pts.size(); ++s) fits.push_back(fit_split(pts, s, variant));
  double best = fits.front().sse;
  for (const auto& f : fits) best = std::min(best, f.sse);
  const double tol = kSseEpsilon * (1.0 + sse_single);
  std::size_t k = 0;
  while (fits[k].sse > best + tol) ++k;
  return SplitSearch{min_seg + k, fits[k], sse_single};
}

inline double sse_ratio(double segmented, double single) {
  if (single < kSseEpsilon) return segmented < kSseEpsilon ? 0.0 : 1.0;
  return segmented / single;
}

}  // namespace detail

// Valid (non-null) points of a series, x measured in months from the first listed month.
[[nodiscard]] inline std::vector<Point> series_points(const MetricSeries& s) {
  std::vector<Point> pts;
  if (s.points.empty()) return pts;
  const MonthKey origin = s.points.front().month;
  for (const auto& p : s.points) {
    if (p.value) pts.push_back({static_cast<double>(months_between(origin, p.month)), *p.value});
  }
  return pts;
}

// Two-segment fit with the second segment starting at month `tau`.
[[nodiscard]] inline SegmentedFit fit_segmented(const MetricSeries& s, const MonthKey& tau, std::size_t min_seg = 6,
                                                FitVariant variant = FitVariant::independent) {
  const auto pts = series_points(s);
  if (s.points.empty()) throw InsufficientData("segment too short");
  const auto x_tau = static_cast<double>(months_between(s.points.front().month, tau));
  const auto split = static_cast<std::size_t>(
      std::lower_bound(pts.begin(), pts.end(), x_tau, [](const Point& p, double x) { return p.x < x; }) - pts.begin());
  if (split < min_seg || pts.size() - split < min_seg) throw InsufficientData("segment too short");
  return detail::fit_split(pts, split, variant);
}

struct BreakpointResult {
  MonthKey tau;
  double sse_segmented = 0.0;
  double sse_single = 0.0;
  double sse_ratio = 0.0;
  bool degenerate = false;  // single-line SSE below the epsilon guard
  SegmentedFit fit;

  std::optional<MonthKey> ci_low;
  std::optional<MonthKey> ci_high;
  std::optional<double> stability;
  std::size_t n_bootstrap = 0;
};

struct BreakpointOptions {
  std::size_t min_seg = 6;
  FitVariant variant = FitVariant::independent;
};

// Single-break segmented regression: the break month minimising total SSE with at least
// min_seg valid months on each side.
[[nodiscard]] inline BreakpointResult find_breakpoint(const MetricSeries& s, const BreakpointOptions& opt = {}) {
  const auto pts = series_points(s);
  if (pts.size() < 2 * opt.min_seg)
    throw InsufficientData("series '" + s.scope + "/" + s.metric + "' has " + std::to_string(pts.size()) +
                           " valid months; need " + std::to_string(2 * opt.min_seg));
  const auto found = detail::search_split(pts, opt.min_seg, opt.variant);
  BreakpointResult r;
  r.tau = s.points.front().month.plus(static_cast<std::int64_t>(pts[found.split].x));
  r.fit = found.fit;
  r.sse_segmented = found.fit.sse;
  r.sse_single = found.sse_single;
  r.sse_ratio = detail::sse_ratio(r.sse_segmented, r.sse_single);
  r.degenerate = r.sse_single < kSseEpsilon;
  return r;
}

struct BootstrapOptions {
  std::size_t iterations = 200;
  std::uint64_t seed = 0;
  std::int64_t stability_window = 3;  // months
  std::size_t workers = 1;
};

// Residual bootstrap of the break month. Residuals of the segmented fit are resampled with
// replacement onto the fitted values and the break re-estimated; the CI is the nearest-rank
// 5th/95th percentile of re-estimated months and stability the share within the window.
[[nodiscard]] inline BreakpointResult bootstrap(const MetricSeries& s, BreakpointResult result,
                                                const BreakpointOptions& opt, const BootstrapOptions& boot) {
  if (boot.iterations == 0) throw std::invalid_argument("bootstrap needs at least one iteration");
  const auto pts = series_points(s);
  const MonthKey origin = s.points.front().month;
  const double x_tau = static_cast<double>(months_between(origin, result.tau));

  std::vector<double> fitted(pts.size());
  std::vector<double> residuals(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    fitted[i] = pts[i].x < x_tau ? result.fit.left.at(pts[i].x) : result.fit.right.at(pts[i].x);
    residuals[i] = pts[i].y - fitted[i];
  }

  std::vector<std::int64_t> taus(boot.iterations);
  parallel_for(boot.iterations, boot.workers, [&](std::size_t b) {
    Rng rng = substream(boot.seed, b);
    std::uniform_int_distribution<std::size_t> pick(0, residuals.size() - 1);
    std::vector<Point> resampled(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) resampled[i] = {pts[i].x, fitted[i] + residuals[pick(rng)]};
    const auto found = detail::search_split(resampled, opt.min_seg, opt.variant);
    taus[b] = static_cast<std::int64_t>(resampled[found.split].x);
  });

  const auto tau_idx = static_cast<std::int64_t>(x_tau);
  const auto near = std::count_if(taus.begin(), taus.end(),
                                  [&](std::int64_t t) { return std::llabs(t - tau_idx) <= boot.stability_window; });
  result.ci_low = origin.plus(nearest_rank(taus, 0.05));
  result.ci_high = origin.plus(nearest_rank(taus, 0.95));
  result.stability = static_cast<double>(near) / static_cast<double>(taus.size());
  result.n_bootstrap = boot.iterations;
  return result;
}

// True when the break lies within `window_months` calendar months of the event month.
[[nodiscard]] inline bool near_event(const MonthKey& tau, const MonthKey& event_month, std::int64_t window_months = 3) {
  return std::llabs(months_between(event_month, tau)) <= window_months;
}

}  // namespace cohortnet
