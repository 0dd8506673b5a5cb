#include "latsub/tiles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "latsub/parallel.hpp"
#include "latsub/substitution.hpp"

namespace latsub {

namespace {

Int floor_div_double(double x, Int n) { return static_cast<Int>(std::floor(x * static_cast<double>(n))); }
Int ceil_div_double(double x, Int n) { return static_cast<Int>(std::ceil(x * static_cast<double>(n))); }

struct Grid {
  IntVec lo;
  IntVec extent;
  std::vector<std::size_t> stride;
  std::size_t size = 0;

  Grid(IntVec lo_, IntVec extent_) : lo(std::move(lo_)), extent(std::move(extent_)) {
    stride.resize(lo.size());
    std::size_t s = 1;
    for (std::size_t c = 0; c < lo.size(); ++c) {
      stride[c] = s;
      s *= static_cast<std::size_t>(extent[c]);
    }
    size = s;
  }

  // Linear index, or npos when outside.
  std::size_t index(const IntVec& p) const {
    std::size_t k = 0;
    for (std::size_t c = 0; c < lo.size(); ++c) {
      const Int off = p[c] - lo[c];
      if (off < 0 || off >= extent[c]) return npos;
      k += static_cast<std::size_t>(off) * stride[c];
    }
    return k;
  }

  IntVec point(std::size_t k) const {
    IntVec p(lo.size());
    for (std::size_t c = 0; c < lo.size(); ++c) {
      p[c] = lo[c] + static_cast<Int>((k / stride[c]) % static_cast<std::size_t>(extent[c]));
    }
    return p;
  }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
};

std::size_t count_boundary(const Grid& g, const std::vector<char>& bits) {
  std::size_t boundary = 0;
  for (std::size_t k = 0; k < g.size; ++k) {
    if (!bits[k]) continue;
    const IntVec p = g.point(k);
    bool edge = false;
    for (std::size_t c = 0; c < p.size() && !edge; ++c)
      for (Int step : {Int{-1}, Int{1}}) {
        IntVec q = p;
        q[c] += step;
        const std::size_t n = g.index(q);
        if (n == Grid::npos || !bits[n]) {
          edge = true;
          break;
        }
      }
    if (edge) ++boundary;
  }
  return boundary;
}

// Solves a square rational system; nullopt when singular.
std::optional<std::vector<Rational>> solve(RatMatrix a, std::vector<Rational> b) {
  const std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a(pivot, col) == 0) ++pivot;
    if (pivot == n) return std::nullopt;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a(r, col) == 0) continue;
      const Rational f = a(r, col) / a(col, col);
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  for (std::size_t r = 0; r < n; ++r) b[r] /= a(r, r);
  return b;
}

// One endpoint family of the 1-d tile hulls: lo_j = min over (i, a in D_ij)
// of (lo_i + a)/Q (or max). Policy iteration with exact rational solves.
std::optional<std::vector<Rational>> hull_endpoints(const SubstitutionSystem& sys, bool upper) {
  const std::size_t m = sys.color_count();
  const Int q = sys.expansion.entries()(0, 0);
  struct Choice {
    std::size_t source;
    Int digit;
  };
  // Numeric value iteration to pick a policy.
  std::vector<double> v(m, 0.0);
  for (int it = 0; it < 400; ++it) {
    std::vector<double> w(m);
    for (std::size_t j = 0; j < m; ++j) {
      double best = upper ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i)
        for (const auto& a : sys.digit_set(i, j)) {
          const double x = (v[i] + static_cast<double>(a[0])) / static_cast<double>(q);
          best = upper ? std::max(best, x) : std::min(best, x);
        }
      w[j] = best;
    }
    v = std::move(w);
  }
  std::vector<Choice> policy(m);
  for (std::size_t j = 0; j < m; ++j) {
    double best = upper ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < m; ++i)
      for (const auto& a : sys.digit_set(i, j)) {
        const double x = (v[i] + static_cast<double>(a[0])) / static_cast<double>(q);
        if (!any || (upper ? x > best : x < best)) {
          best = x;
          policy[j] = {i, a[0]};
          any = true;
        }
      }
    if (!any) return std::nullopt;
  }
  for (int round = 0; round < 64; ++round) {
    // (q I - P) x = c
    RatMatrix a(m, m);
    std::vector<Rational> c(m);
    for (std::size_t j = 0; j < m; ++j) {
      a(j, j) += Rational(q);
      a(j, policy[j].source) -= Rational(1);
      c[j] = Rational(policy[j].digit);
    }
    auto x = solve(a, c);
    if (!x) return std::nullopt;
    bool improved = false;
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < m; ++i)
        for (const auto& d : sys.digit_set(i, j)) {
          const Rational cand = ((*x)[i] + Rational(d[0])) / Rational(q);
          if (upper ? cand > (*x)[j] : cand < (*x)[j]) {
            policy[j] = {i, d[0]};
            improved = true;
          }
        }
    if (!improved) return x;
  }
  return std::nullopt;
}

// Exact interval tiles for d = 1 and Q > 0, when the hulls tile their images.
std::optional<std::vector<std::pair<Rational, Rational>>> exact_intervals(const SubstitutionSystem& sys) {
  if (sys.dim() != 1 || sys.expansion.entries()(0, 0) <= 0) return std::nullopt;
  const auto lo = hull_endpoints(sys, false);
  const auto hi = hull_endpoints(sys, true);
  if (!lo || !hi) return std::nullopt;
  const std::size_t m = sys.color_count();
  const Rational q(sys.expansion.entries()(0, 0));
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<std::pair<Rational, Rational>> pieces;
    for (std::size_t i = 0; i < m; ++i)
      for (const auto& a : sys.digit_set(i, j))
        pieces.emplace_back((*lo)[i] + Rational(a[0]), (*hi)[i] + Rational(a[0]));
    std::sort(pieces.begin(), pieces.end());
    Rational reach = pieces.front().first;
    if (reach != q * (*lo)[j]) return std::nullopt;
    for (const auto& [a, b] : pieces) {
      if (a > reach) return std::nullopt;  // gap: not an interval
      reach = std::max(reach, b);
    }
    if (reach != q * (*hi)[j]) return std::nullopt;
  }
  std::vector<std::pair<Rational, Rational>> out;
  for (std::size_t j = 0; j < m; ++j) out.emplace_back((*lo)[j], (*hi)[j]);
  return out;
}

std::string num(double x) {
  if (std::abs(x) < 5e-7) x = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                 "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};
  return colors[i % 12];
}

std::vector<double> ambient(const SubstitutionSystem& sys, const std::vector<double>& x) {
  return sys.lattice.to_ambient(x);
}

}  // namespace

bool TileAttractor::contains(const IntVec& p) const {
  const Grid g(lo, extent);
  const std::size_t k = g.index(p);
  return k != Grid::npos && bits[k];
}

std::vector<double> TileAttractor::position(const IntVec& p) const {
  std::vector<double> x(p.size());
  for (std::size_t c = 0; c < p.size(); ++c)
    x[c] = (static_cast<double>(p[c]) + static_cast<double>(sample_offset(c)) / kSampleDenominator) /
           static_cast<double>(subdivisions);
  return x;
}

bool TileAttractor::converged() const { return hausdorff_gap <= kConvergedGap; }

std::vector<TileAttractor> solve_adjoint(const SubstitutionSystem& sys, Int subdivisions,
                                         int max_iterations) {
  if (subdivisions < 1) throw Error("solve_adjoint: subdivisions must be positive");
  const auto exp = is_expansive(sys.expansion);
  if (!exp.expansive)
    throw Error("solve_adjoint: non-contraction, Q is not expansive (margin " +
                std::to_string(exp.margin) + ")");
  const std::size_t d = sys.dim();
  const std::size_t m = sys.color_count();
  const Int n = subdivisions;
  const Int den = checked_mul(n, kSampleDenominator);
  const RealBox box = digit_expansion_box(sys, false);
  IntVec lo(d), extent(d), blo(d), bhi(d);
  double diam = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    lo[c] = floor_div_double(box.lo[c], n);
    extent[c] = ceil_div_double(box.hi[c], n) - lo[c] + 1;
    blo[c] = floor_div_double(box.lo[c], den);
    bhi[c] = ceil_div_double(box.hi[c], den);
    diam = std::max(diam, box.hi[c] - box.lo[c]);
  }
  const Grid g(lo, extent);
  if (g.size * m > 200'000'000) throw BudgetExceeded("solve_adjoint: grid too large");

  // Depth: smallest K with |Q^-K|_inf diam below a quarter cell.
  Eigen::MatrixXd qinv(d, d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) qinv(r, c) = static_cast<double>(sys.expansion.entries()(r, c));
  qinv = qinv.inverse().eval();
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(d, d);
  int depth = 0;
  double gap = diam * static_cast<double>(n);
  while (depth < max_iterations && gap > 0.25) {
    power = (power * qinv).eval();
    ++depth;
    gap = power.cwiseAbs().rowwise().sum().maxCoeff() * diam * static_cast<double>(n);
  }

  struct Move {
    std::size_t target;
    IntVec offset;
  };
  std::vector<std::vector<Move>> moves(m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i)
      for (const auto& a : sys.digit_set(i, j)) {
        IntVec off(d);
        for (std::size_t c = 0; c < d; ++c) off[c] = checked_mul(a[c], den);
        moves[j].push_back({i, off});
      }

  auto inside = [&](const IntVec& u) {
    for (std::size_t c = 0; c < d; ++c)
      if (u[c] < blo[c] || u[c] > bhi[c]) return false;
    return true;
  };
  // Depth-first search for a chain of length `depth` staying in the box.
  auto survives = [&](std::size_t color, const IntVec& start) {
    struct Frame {
      std::size_t color;
      IntVec u;
      IntVec qu;
      std::size_t next;
    };
    if (!inside(start)) return false;
    if (depth == 0) return true;
    std::vector<Frame> stack;
    stack.push_back({color, start, sys.expansion(start), 0});
    IntVec t(d);
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next == moves[f.color].size()) {
        stack.pop_back();
        continue;
      }
      const Move& mv = moves[f.color][f.next++];
      for (std::size_t c = 0; c < d; ++c) t[c] = f.qu[c] - mv.offset[c];
      if (!inside(t)) continue;
      if (static_cast<int>(stack.size()) == depth) return true;
      stack.push_back({mv.target, t, sys.expansion(t), 0});
    }
    return false;
  };

  const auto exact = exact_intervals(sys);
  std::vector<TileAttractor> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    auto& a = out[j];
    a.color = j;
    a.subdivisions = n;
    a.lo = lo;
    a.extent = extent;
    a.iterations = depth;
    a.hausdorff_gap = gap;
    a.bits.assign(g.size, 0);
    parallel_for(g.size, [&](std::size_t b, std::size_t e) {
      IntVec u(d);
      for (std::size_t k = b; k < e; ++k) {
        const IntVec p = g.point(k);
        for (std::size_t c = 0; c < d; ++c) u[c] = p[c] * kSampleDenominator + sample_offset(c);
        a.bits[k] = survives(j, u) ? 1 : 0;
      }
    });
    a.count = static_cast<std::size_t>(std::count(a.bits.begin(), a.bits.end(), 1));
    a.boundary_count = count_boundary(g, a.bits);
    if (exact) a.exact_interval = (*exact)[j];
  }
  return out;
}

VolumeVector volume_check(const SubstitutionSystem& sys, const std::vector<TileAttractor>& attractors,
                          Int side) {
  const std::size_t m = sys.color_count();
  const std::size_t d = sys.dim();
  if (attractors.size() != m) throw DimensionError("volume_check: one attractor per color required");
  for (const auto& a : attractors)
    if (!a.converged())
      throw Error("volume_check: attractor " + std::to_string(a.color) + " has not converged (gap " +
                  std::to_string(a.hausdorff_gap) + " cells)");
  const double covolume = sys.lattice.covolume().convert_to<double>();

  VolumeVector out;
  out.exact = std::all_of(attractors.begin(), attractors.end(),
                          [](const TileAttractor& a) { return a.exact_interval.has_value(); });
  for (const auto& a : attractors) {
    double v;
    if (out.exact) {
      v = (a.exact_interval->second - a.exact_interval->first).convert_to<double>() * covolume;
    } else {
      v = static_cast<double>(a.count) * std::pow(a.cell_size(), static_cast<double>(d)) * covolume;
    }
    out.volumes.push_back(v);
  }
  const auto s = substitution_matrix(sys);
  const double q = static_cast<double>(sys.expansion.absdet());
  const double vmax = *std::max_element(out.volumes.begin(), out.volumes.end());
  for (std::size_t j = 0; j < m; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += static_cast<double>(s(i, j)) * out.volumes[i];
    out.residual = std::max(out.residual, std::abs(q * out.volumes[j] - sum) / vmax);
  }

  if (side <= 0) side = d == 1 ? 65536 : 256;
  const Box window = Box::cube(d, 0, side - 1);
  const auto patch = covering_patch(sys, window).patch;
  const double cells = std::pow(static_cast<double>(side), static_cast<double>(d));
  for (std::size_t i = 0; i < m; ++i) {
    const double dens = static_cast<double>(patch[i].size()) / (cells * covolume);
    out.densities.push_back(dens);
    out.covering_multiplicity += dens * out.volumes[i];
  }
  return out;
}

double boundary_fraction(const TileAttractor& a) {
  return a.count == 0 ? 0.0 : static_cast<double>(a.boundary_count) / static_cast<double>(a.count);
}

std::string svg_document(const SubstitutionSystem& sys, const Cluster& patch,
                         const std::vector<TileAttractor>& attractors) {
  const std::size_t d = sys.dim();
  const std::size_t m = sys.color_count();
  std::vector<std::vector<std::vector<double>>> pts(m);
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool any = false;
  for (std::size_t c = 0; c < patch.colors() && c < m; ++c)
    for (const auto& p : patch[c]) {
      std::vector<double> x(p.begin(), p.end());
      auto a = ambient(sys, x);
      if (d == 1) a.push_back(0.0);
      if (!any) {
        xmin = xmax = a[0];
        ymin = ymax = a[1];
        any = true;
      }
      xmin = std::min(xmin, a[0]);
      xmax = std::max(xmax, a[0]);
      ymin = std::min(ymin, a[1]);
      ymax = std::max(ymax, a[1]);
      pts[c].push_back(a);
    }
  const double pad = 1.5;
  xmin -= pad;
  xmax += pad;
  ymin -= pad;
  ymax += pad;
  const double scale = any ? 800.0 / std::max(1.0, xmax - xmin) : 1.0;
  const double width = any ? (xmax - xmin) * scale : 100.0;
  const double height = any ? (ymax - ymin) * scale : 100.0;
  const double radius = 0.12 * std::min(1.0, std::sqrt(sys.lattice.covolume().convert_to<double>()));

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" width=\""
      << num(width) << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << " "
      << num(height) << "\">\n";
  out << "<title>" << sys.name << "</title>\n";
  if (any && !attractors.empty()) {
    out << "<defs>\n";
    for (const auto& a : attractors) {
      out << "<g id=\"tile-" << a.color << "\">";
      const Grid g(a.lo, a.extent);
      const double h = a.cell_size();
      std::ostringstream path;
      if (d == 1) {
        // Tiles as bars below the axis, one lane per color.
        double lo = 0, hi = 0;
        if (a.exact_interval) {
          lo = a.exact_interval->first.convert_to<double>();
          hi = a.exact_interval->second.convert_to<double>();
        } else if (a.count > 0) {
          bool first = true;
          a.for_each_sample([&](const IntVec& p) {
            const double x = static_cast<double>(p[0]) * h;
            if (first) lo = x, hi = x + h;
            lo = std::min(lo, x);
            hi = std::max(hi, x + h);
            first = false;
          });
        }
        const auto l = ambient(sys, {lo});
        const auto r = ambient(sys, {hi});
        const double y = -0.3 - 0.1 * static_cast<double>(a.color);
        out << "<line x1=\"" << num(l[0]) << "\" y1=\"" << num(y) << "\" x2=\"" << num(r[0])
            << "\" y2=\"" << num(y) << "\"/>";
      } else {
        a.for_each_sample([&](const IntVec& p) {
          for (std::size_t axis = 0; axis < 2; ++axis)
            for (Int step : {Int{-1}, Int{1}}) {
              IntVec q = p;
              q[axis] += step;
              const std::size_t n = g.index(q);
              if (n != Grid::npos && a.bits[n]) continue;
              // Edge between the cells of p and q.
              const double px = (static_cast<double>(p[0]) + 0.5) * h;
              const double py = (static_cast<double>(p[1]) + 0.5) * h;
              const double e = 0.5 * h * static_cast<double>(step);
              std::vector<double> u, v;
              if (axis == 0) {
                u = {px + e, py - 0.5 * h};
                v = {px + e, py + 0.5 * h};
              } else {
                u = {px - 0.5 * h, py + e};
                v = {px + 0.5 * h, py + e};
              }
              const auto au = ambient(sys, u), av = ambient(sys, v);
              path << "M" << num(au[0]) << " " << num(au[1]) << "L" << num(av[0]) << " " << num(av[1]);
            }
        });
        out << "<path d=\"" << path.str() << "\"/>";
      }
      out << "</g>\n";
    }
    out << "</defs>\n";
  }
  out << "<g transform=\"translate(" << num(-xmin * scale) << " " << num(ymax * scale) << ") scale("
      << num(scale) << " " << num(-scale) << ")\">\n";
  if (any && !attractors.empty()) {
    for (std::size_t c = 0; c < m; ++c) {
      out << "<g fill=\"none\" stroke=\"" << palette(c)
          << "\" stroke-width=\"1\" vector-effect=\"non-scaling-stroke\" stroke-opacity=\"0.6\">\n";
      for (const auto& a : pts[c])
        out << "<use xlink:href=\"#tile-" << c << "\" transform=\"translate(" << num(a[0]) << " "
            << num(a[1]) << ")\"/>\n";
      out << "</g>\n";
    }
  }
  for (std::size_t c = 0; c < m; ++c) {
    out << "<g fill=\"" << palette(c) << "\" data-color=\"" << sys.colors[c] << "\">\n";
    for (const auto& a : pts[c])
      out << "<circle cx=\"" << num(a[0]) << "\" cy=\"" << num(a[1]) << "\" r=\"" << num(radius) << "\"/>\n";
    out << "</g>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

void render_svg(const SubstitutionSystem& sys, const Cluster& patch,
                const std::vector<TileAttractor>& attractors, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << svg_document(sys, patch, attractors);
  if (!f) throw Error("write failed: " + path.string());
}

void write_pgm(const TileAttractor& a, const std::filesystem::path& path) {
  if (a.dim() > 2) throw DimensionError("write_pgm: only 1-d and 2-d grids");
  const std::size_t w = static_cast<std::size_t>(a.extent[0]);
  const std::size_t h = a.dim() == 2 ? static_cast<std::size_t>(a.extent[1]) : 1;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << "P5\n" << w << " " << h << "\n255\n";
  for (std::size_t row = 0; row < h; ++row) {
    const std::size_t y = h - 1 - row;  // top row is the largest second coordinate
    for (std::size_t x = 0; x < w; ++x) f.put(a.bits[y * w + x] ? static_cast<char>(255) : 0);
  }
  if (!f) throw Error("write failed: " + path.string());
}

}  // namespace latsub
