#include "latsub/statistics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>

#include "latsub/parallel.hpp"

namespace latsub {

namespace {

// Cofactor matrix transpose, so adj * m = det * I.
BigMatrix adjugate(const BigMatrix& m) {
  const std::size_t d = m.rows();
  BigMatrix adj(d, d);
  if (d == 1) {
    adj(0, 0) = 1;
    return adj;
  }
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      BigMatrix minor(d - 1, d - 1);
      for (std::size_t i = 0, mi = 0; i < d; ++i) {
        if (i == r) continue;
        for (std::size_t j = 0, mj = 0; j < d; ++j) {
          if (j == c) continue;
          minor(mi, mj++) = m(i, j);
        }
        ++mi;
      }
      BigInt cof = determinant(minor);
      if ((r + c) % 2 == 1) cof = -cof;
      adj(c, r) = cof;
    }
  return adj;
}

Int to_int_or_throw(const BigInt& v, const char* what) {
  const auto x = to_int(v);
  if (!x) throw BudgetExceeded(std::string(what) + ": value exceeds 64 bits");
  return *x;
}

// First nonempty color of a cluster.
std::size_t anchor_color(const Cluster& p) {
  for (std::size_t c = 0; c < p.colors(); ++c)
    if (!p[c].empty()) return c;
  throw Error("cluster is empty");
}

// Occurrences t + P, anchored at the first point of the first nonempty
// color, with every point inside `inside` and carrying its color in `field`.
template <class Inside>
Int count_in(const ColorField& field, const Cluster& p, const std::vector<IntVec>& anchors_domain,
             Inside&& inside) {
  const std::size_t c0 = anchor_color(p);
  const IntVec& p0 = p[c0][0];
  std::atomic<Int> total{0};
  parallel_for(anchors_domain.size(), [&](std::size_t b, std::size_t e) {
    Int local = 0;
    IntVec y(p0.size());
    for (std::size_t k = b; k < e; ++k) {
      const IntVec t = sub(anchors_domain[k], p0);
      bool ok = true;
      for (std::size_t c = 0; c < p.colors() && ok; ++c)
        for (const auto& q : p[c]) {
          for (std::size_t a = 0; a < y.size(); ++a) y[a] = t[a] + q[a];
          if (!inside(y) || !(field.at(y) >> c & 1U)) {
            ok = false;
            break;
          }
        }
      if (ok) ++local;
    }
    total += local;
  });
  return total.load();
}

Box bounding_box(const Cluster& c) {
  const std::size_t d = c.dim();
  Box b{IntVec(d, 0), IntVec(d, -1)};
  bool first = true;
  for (const auto& pts : c.points())
    for (const auto& x : pts) {
      if (first) {
        b.lo = b.hi = x;
        first = false;
      }
      for (std::size_t a = 0; a < d; ++a) {
        b.lo[a] = std::min(b.lo[a], x[a]);
        b.hi[a] = std::max(b.hi[a], x[a]);
      }
    }
  return b;
}

}  // namespace

VanHoveSequence VanHoveSequence::unit(std::size_t dim, std::vector<int> scales) {
  return {IntVec(dim, 0), IntVec(dim, 1), std::move(scales)};
}

Window::Window(const SubstitutionSystem& sys, const VanHoveSequence& seq, int n) {
  const std::size_t d = sys.dim();
  if (seq.base_lo.size() != d || seq.base_hi.size() != d) throw DimensionError("Window: base box dimension");
  for (std::size_t a = 0; a < d; ++a)
    if (seq.base_hi[a] <= seq.base_lo[a]) throw Error("Window: empty base box");
  if (n < 0) throw Error("Window: negative scale");
  const BigMatrix m = power(to_big(sys.expansion.entries()), n);
  const BigInt det = determinant(m);
  const BigMatrix adj = adjugate(m);

  // Hull: images of the corners of the closed base box.
  IntVec lo(d), hi(d);
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    for (std::size_t r = 0; r < d; ++r) {
      BigInt v = 0;
      for (std::size_t c = 0; c < d; ++c) v += m(r, c) * BigInt(corner >> c & 1U ? seq.base_hi[c] : seq.base_lo[c]);
      const Int x = to_int_or_throw(v, "Window");
      if (corner == 0 || x < lo[r]) lo[r] = x;
      if (corner == 0 || x > hi[r]) hi[r] = x;
    }
  }
  hull_ = Box{lo, hi};
  const Int volume = hull_.volume();
  if (volume > 200'000'000) throw BudgetExceeded("Window: hull too large");

  IntMatrix adj_small(d, d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) adj_small(r, c) = to_int_or_throw(adj(r, c), "Window");
  const Int det_small = to_int_or_throw(det, "Window");
  // lo <= adj x / det < hi
  IntVec bound_lo(d), bound_hi(d);
  for (std::size_t a = 0; a < d; ++a) {
    bound_lo[a] = checked_mul(seq.base_lo[a], det_small);
    bound_hi[a] = checked_mul(seq.base_hi[a], det_small);
  }
  member_.assign(static_cast<std::size_t>(volume), 0);
  std::size_t k = 0;
  hull_.for_each_point([&](const IntVec& x) {
    const IntVec y = latsub::apply(adj_small, x);
    bool in = true;
    for (std::size_t a = 0; a < d && in; ++a)
      in = det_small > 0 ? (y[a] >= bound_lo[a] && y[a] < bound_hi[a]) : (y[a] <= bound_lo[a] && y[a] > bound_hi[a]);
    member_[k++] = in ? 1 : 0;
    if (in) ++count_;
  });
}

std::size_t Window::index(const IntVec& x) const {
  std::size_t k = 0, stride = 1;
  for (std::size_t a = 0; a < x.size(); ++a) {
    k += static_cast<std::size_t>(x[a] - hull_.lo[a]) * stride;
    stride *= static_cast<std::size_t>(hull_.hi[a] - hull_.lo[a] + 1);
  }
  return k;
}

bool Window::contains(const IntVec& x) const { return hull_.contains(x) && member_[index(x)]; }

Window Window::translated(const IntVec& h) const {
  Window w;
  w.hull_ = hull_.translated(h);
  w.member_ = member_;
  w.count_ = count_;
  return w;
}

std::vector<IntVec> Window::points() const {
  std::vector<IntVec> out;
  out.reserve(static_cast<std::size_t>(count_));
  for_each_point([&](const IntVec& x) { out.push_back(x); });
  return out;
}

double Window::boundary_fraction(Int r) const {
  if (count_ == 0) return 0.0;
  const std::size_t d = hull_.dim();
  const auto pts = points();
  std::atomic<Int> edge{0};
  // Windows are parallelepipeds, so checking the cube corners suffices.
  parallel_for(pts.size(), [&](std::size_t b, std::size_t e) {
    Int local = 0;
    IntVec y(d);
    for (std::size_t k = b; k < e; ++k) {
      for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
        for (std::size_t a = 0; a < d; ++a) y[a] = pts[k][a] + (corner >> a & 1U ? r : -r);
        if (!contains(y)) {
          ++local;
          break;
        }
      }
    }
    edge += local;
  });
  return static_cast<double>(edge.load()) / static_cast<double>(count_);
}

ColorField::ColorField(const Cluster& patch, const Box& box) : box_(box) {
  if (patch.colors() > 64) throw Error("ColorField: more than 64 colors");
  masks_.assign(box.empty() ? 0 : static_cast<std::size_t>(box.volume()), 0);
  for (std::size_t c = 0; c < patch.colors(); ++c)
    for (const auto& x : patch[c]) {
      if (!box_.contains(x)) continue;
      std::size_t k = 0, stride = 1;
      for (std::size_t a = 0; a < x.size(); ++a) {
        k += static_cast<std::size_t>(x[a] - box_.lo[a]) * stride;
        stride *= static_cast<std::size_t>(box_.hi[a] - box_.lo[a] + 1);
      }
      masks_[k] |= std::uint64_t{1} << c;
    }
}

ColorField ColorField::covering(const SubstitutionSystem& sys, const Box& box, std::size_t budget) {
  return ColorField(covering_patch(sys, box, 64, budget).patch, box);
}

std::uint64_t ColorField::at(const IntVec& x) const {
  if (!box_.contains(x)) return 0;
  std::size_t k = 0, stride = 1;
  for (std::size_t a = 0; a < x.size(); ++a) {
    k += static_cast<std::size_t>(x[a] - box_.lo[a]) * stride;
    stride *= static_cast<std::size_t>(box_.hi[a] - box_.lo[a] + 1);
  }
  return masks_[k];
}

FrequencyEstimate cluster_frequency(const SubstitutionSystem& sys, const Cluster& p,
                                    const VanHoveSequence& seq, const std::vector<IntVec>& translates,
                                    std::size_t budget) {
  if (seq.scales.empty()) throw Error("cluster_frequency: no scales");
  if (translates.empty()) throw Error("cluster_frequency: no translates");
  anchor_color(p);
  const Box extent = bounding_box(p);
  Int reach = 0;
  for (std::size_t a = 0; a < extent.dim(); ++a) reach = std::max(reach, extent.hi[a] - extent.lo[a]);

  std::vector<Window> windows;
  for (int n : seq.scales) windows.emplace_back(sys, seq, n);
  Box hull = windows[0].hull();
  for (const auto& w : windows)
    for (std::size_t a = 0; a < hull.dim(); ++a) {
      hull.lo[a] = std::min(hull.lo[a], w.hull().lo[a]);
      hull.hi[a] = std::max(hull.hi[a], w.hull().hi[a]);
    }

  FrequencyEstimate out;
  out.scales = seq.scales;
  out.translates = translates;
  out.values.assign(seq.scales.size(), std::vector<double>(translates.size(), 0.0));
  for (std::size_t t = 0; t < translates.size(); ++t) {
    const ColorField field = ColorField::covering(sys, hull.translated(translates[t]), budget);
    for (std::size_t s = 0; s < windows.size(); ++s) {
      const Window w = windows[s].translated(translates[t]);
      const Int count = count_in(field, p, w.points(), [&](const IntVec& y) { return w.contains(y); });
      out.values[s][t] = static_cast<double>(count) / static_cast<double>(w.size());
    }
  }
  for (const auto& row : out.values)
    out.mean.push_back(std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
  const auto& last = out.values.back();
  out.spread = *std::max_element(last.begin(), last.end()) - *std::min_element(last.begin(), last.end());
  out.boundary_bound = windows.back().boundary_fraction(std::max<Int>(reach, 1));
  return out;
}

std::size_t count_occurrences(const Cluster& host, const Cluster& p) {
  if (host.empty()) return 0;
  const std::size_t c0 = anchor_color(p);
  const Box box = bounding_box(host);
  const ColorField field(host, box);
  if (c0 >= host.colors()) return 0;
  const Int n = count_in(field, p, host[c0], [&](const IntVec& y) { return box.contains(y); });
  return static_cast<std::size_t>(n);
}

double supertile_frequency(const SubstitutionSystem& sys, const Cluster& p, int k,
                           const std::vector<double>& volumes, std::size_t budget) {
  const std::size_t m = sys.color_count();
  if (volumes.size() != m) throw DimensionError("supertile_frequency: one volume per color");
  const PFData pf = pf_data(substitution_matrix(sys), sys.expansion);
  double norm = 0.0;
  for (std::size_t i = 0; i < m; ++i) norm += pf.right[i] * volumes[i];
  const double qk = std::pow(static_cast<double>(sys.expansion.absdet()), k);
  double c = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto count = count_occurrences(supertile(sys, i, k, budget), p);
    c += static_cast<double>(count) * pf.right[i] / norm / qk;
  }
  return c * sys.lattice.covolume().convert_to<double>();
}

double DensitySeries::value(std::size_t n) const {
  return compared[n] == 0 ? 0.0 : static_cast<double>(differing[n]) / static_cast<double>(compared[n]);
}

std::vector<double> DensitySeries::values() const {
  std::vector<double> v;
  for (std::size_t n = 0; n < size(); ++n) v.push_back(value(n));
  return v;
}

double DensitySeries::margin(std::size_t n) const {
  return window_size == 0 ? 0.0
                          : static_cast<double>(window_size - compared[n]) / static_cast<double>(window_size);
}

DensitySeries density_symdiff_series(const SubstitutionSystem& sys, const IntVec& alpha, int max_n,
                                     int window_n, std::size_t budget) {
  return density_symdiff_series(sys, compute_lprime(sys, 2, 40, budget).lprime, alpha, max_n, window_n,
                                budget);
}

DensitySeries density_symdiff_series(const SubstitutionSystem& sys, const SubgroupHNF& lprime,
                                     const IntVec& alpha, int max_n, int window_n, std::size_t budget) {
  const std::size_t d = sys.dim();
  if (alpha.size() != d) throw DimensionError("density_symdiff_series: alpha dimension");
  if (!lprime.contains(alpha)) throw Error("density_symdiff_series: alpha is not in L'");
  if (max_n < 0 || window_n < 0) throw Error("density_symdiff_series: negative scale");
  const Window w(sys, VanHoveSequence::unit(d, {window_n}), window_n);
  const ColorField field = ColorField::covering(sys, w.hull(), budget);
  const auto pts = w.points();

  DensitySeries out;
  out.alpha = alpha;
  out.window_n = window_n;
  out.window_size = w.size();
  IntVec shift = alpha;
  for (int n = 0; n <= max_n; ++n) {
    std::atomic<Int> diff{0}, total{0};
    parallel_for(pts.size(), [&](std::size_t b, std::size_t e) {
      Int dl = 0, tl = 0;
      IntVec y(d);
      for (std::size_t k = b; k < e; ++k) {
        for (std::size_t a = 0; a < d; ++a) y[a] = pts[k][a] - shift[a];
        if (!w.contains(y)) continue;
        ++tl;
        if (field.at(pts[k]) != field.at(y)) ++dl;
      }
      diff += dl;
      total += tl;
    });
    out.differing.push_back(diff.load());
    out.compared.push_back(total.load());
    if (n < max_n) shift = sys.expansion(shift);
  }
  return out;
}

bool nonincreasing_within_margin(const DensitySeries& s, std::size_t skip, double extra) {
  for (std::size_t n = skip; n + 1 < s.size(); ++n) {
    const double slack = std::max(s.margin(n), s.margin(n + 1)) + extra;
    if (s.value(n + 1) > s.value(n) + slack) return false;
  }
  return true;
}

std::string to_string(RateKind k) { return k == RateKind::Decaying ? "Decaying" : "NonVanishing"; }

RateFit rate_fit(const DensitySeries& s, double floor) {
  if (s.size() < 5) throw Error("rate_fit: series needs at least 5 terms");
  const auto v = s.values();
  RateFit out;
  const std::size_t start = v.size() / 2;
  out.tail_min = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(start), v.end());
  std::vector<double> xs, ys;
  for (std::size_t n = start; n < v.size(); ++n)
    if (v[n] > 0.0) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(v[n]));
    }
  out.fitted = xs.size();
  if (xs.size() >= 2) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sxy += (xs[k] - mx) * (ys[k] - my);
      sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    const double slope = sxy / sxx;
    out.r = std::exp(slope);
    out.c = std::exp(my - slope * mx);
  }
  // zero tail: r = 0 by convention
  if (out.tail_min > floor && out.r >= kStalledRatio) out.kind = RateKind::NonVanishing;
  return out;
}

DiffractionEstimate diffraction_estimate(const Cluster& patch, const std::vector<double>& weights,
                                         const DiffractionGrid& grid, std::size_t peak_count) {
  const std::size_t d = grid.window.dim();
  if (d == 0 || patch.dim() != d) throw DimensionError("diffraction_estimate: dimension mismatch");
  if (weights.size() != patch.colors()) throw DimensionError("diffraction_estimate: one weight per color");
  if (grid.oversample < 1) throw Error("diffraction_estimate: oversample must be positive");
  if (grid.window.empty() || grid.window.volume() < kMinDiffractionPoints)
    throw Error("diffraction_estimate: window too small (minimum " + std::to_string(kMinDiffractionPoints) +
                " points)");

  DiffractionEstimate out;
  std::size_t total = 1;
  for (std::size_t a = 0; a < d; ++a) {
    const auto len = static_cast<std::size_t>(grid.window.hi[a] - grid.window.lo[a] + 1);
    out.bins.push_back(len * static_cast<std::size_t>(grid.oversample));
    total *= out.bins.back();
  }
  if (total > 64'000'000) throw BudgetExceeded("diffraction_estimate: grid too large");

  fftw_complex* data = fftw_alloc_complex(total);
  std::fill(reinterpret_cast<double*>(data), reinterpret_cast<double*>(data) + 2 * total, 0.0);
  for (std::size_t c = 0; c < patch.colors(); ++c)
    for (const auto& x : patch[c]) {
      if (!grid.window.contains(x)) continue;
      std::size_t k = 0, stride = 1;
      for (std::size_t a = 0; a < d; ++a) {
        k += static_cast<std::size_t>(x[a] - grid.window.lo[a]) * stride;
        stride *= out.bins[a];
      }
      data[k][0] += weights[c];
    }
  // FFTW wants the slowest axis first.
  std::vector<int> dims(d);
  for (std::size_t a = 0; a < d; ++a) dims[a] = static_cast<int>(out.bins[d - 1 - a]);
  {
    static std::mutex planner;
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(planner);
      plan = fftw_plan_dft(static_cast<int>(d), dims.data(), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(planner);
    fftw_destroy_plan(plan);
  }
  const double npoints = static_cast<double>(grid.window.volume());
  out.intensity.resize(total);
  for (std::size_t k = 0; k < total; ++k)
    out.intensity[k] = (data[k][0] * data[k][0] + data[k][1] * data[k][1]) / npoints;
  fftw_free(data);

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.intensity[a] > out.intensity[b]; });
  const double mass = std::accumulate(out.intensity.begin(), out.intensity.end(), 0.0);
  const auto top = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(total))));
  double top_mass = 0.0;
  for (std::size_t k = 0; k < top; ++k) top_mass += out.intensity[order[k]];
  out.concentration = mass > 0.0 ? top_mass / mass : 0.0;
  for (std::size_t k = 0; k < std::min(peak_count, total); ++k) {
    SpectrumPeak peak;
    std::size_t rest = order[k];
    for (std::size_t a = 0; a < d; ++a) {
      peak.frequency.push_back(static_cast<double>(rest % out.bins[a]) / static_cast<double>(out.bins[a]));
      rest /= out.bins[a];
    }
    peak.intensity = out.intensity[order[k]];
    out.peaks.push_back(peak);
  }
  return out;
}

}  // namespace latsub
