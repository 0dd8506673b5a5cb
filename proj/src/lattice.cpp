#include "latsub/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>

namespace latsub {

namespace {

// floor(a / b) for b > 0.
BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if ((a % b) != 0 && a < 0) q -= 1;
  return q;
}

__int128 floor_div128(__int128 a, __int128 b) {
  __int128 q = a / b;
  if ((a % b) != 0 && a < 0) --q;
  return q;
}

// g = s*a + t*b with g >= 0.
void xgcd(const BigInt& a, const BigInt& b, BigInt& g, BigInt& s, BigInt& t) {
  BigInt old_r = a, r = b, old_s = 1, ss = 0, old_t = 0, tt = 1;
  while (r != 0) {
    BigInt q = old_r / r;
    BigInt tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * ss;
    old_s = ss;
    ss = tmp;
    tmp = old_t - q * tt;
    old_t = tt;
    tt = tmp;
  }
  if (old_r < 0) {
    old_r = -old_r;
    old_s = -old_s;
    old_t = -old_t;
  }
  g = old_r;
  s = old_s;
  t = old_t;
}

Eigen::MatrixXd to_double(const IntMatrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          static_cast<double>(m(r, c));
  return out;
}

// Characteristic polynomial det(xI - A), coefficients from constant term up.
std::vector<BigInt> characteristic_polynomial(const IntMatrix& a) {
  const std::size_t n = a.rows();
  BigMatrix big = to_big(a);
  std::vector<BigInt> coeff(n + 1);
  coeff[n] = 1;
  BigMatrix m(n, n);
  for (std::size_t k = 1; k <= n; ++k) {
    BigMatrix next = multiply(big, m);
    for (std::size_t i = 0; i < n; ++i) next(i, i) += coeff[n - k + 1];
    m = next;
    BigMatrix am = multiply(big, m);
    BigInt trace = 0;
    for (std::size_t i = 0; i < n; ++i) trace += am(i, i);
    coeff[n - k] = -trace / static_cast<long long>(k);
  }
  return coeff;
}

// Exact test that `divisor` (monic) divides `poly`.
bool divides(std::vector<BigInt> poly, const std::vector<BigInt>& divisor) {
  const long dd = static_cast<long>(divisor.size()) - 1;
  for (long top = static_cast<long>(poly.size()) - 1; top >= dd; --top) {
    const BigInt lead = poly[static_cast<std::size_t>(top)];
    if (lead == 0) continue;
    for (long i = 0; i <= dd; ++i)
      poly[static_cast<std::size_t>(top - dd + i)] -= lead * divisor[static_cast<std::size_t>(i)];
  }
  return std::all_of(poly.begin(), poly.end(), [](const BigInt& c) { return c == 0; });
}

}  // namespace

BigMatrix to_big(const IntMatrix& m) {
  BigMatrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  return out;
}

BigMatrix multiply(const BigMatrix& a, const BigMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matrix product shape mismatch");
  BigMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (a(i, k) == 0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
    }
  return out;
}

BigMatrix power(const BigMatrix& m, int k) {
  BigMatrix result = BigMatrix::identity(m.rows());
  BigMatrix base = m;
  while (k > 0) {
    if (k & 1) result = multiply(result, base);
    k >>= 1;
    if (k > 0) base = multiply(base, base);
  }
  return result;
}

BigInt determinant(const BigMatrix& input) {
  // Bareiss fraction-free elimination.
  const std::size_t n = input.rows();
  if (n != input.cols()) throw DimensionError("determinant of non-square matrix");
  if (n == 0) return 1;
  BigMatrix m = input;
  BigInt sign = 1, prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m(k, k) == 0) {
      std::size_t swap = k + 1;
      while (swap < n && m(swap, k) == 0) ++swap;
      if (swap == n) return 0;
      for (std::size_t c = 0; c < n; ++c) std::swap(m(k, c), m(swap, c));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j)
        m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
    prev = m(k, k);
  }
  return sign * m(n - 1, n - 1);
}

Rational determinant(const RatMatrix& input) {
  const std::size_t n = input.rows();
  if (n != input.cols()) throw DimensionError("determinant of non-square matrix");
  RatMatrix m = input;
  Rational det = 1;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    while (p < n && m(p, k) == 0) ++p;
    if (p == n) return 0;
    if (p != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m(k, c), m(p, c));
      det = -det;
    }
    det *= m(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      Rational f = m(i, k) / m(k, k);
      if (f == 0) continue;
      for (std::size_t j = k; j < n; ++j) m(i, j) -= f * m(k, j);
    }
  }
  return det;
}

Int checked_add(Int a, Int b) {
  Int r;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("int64 overflow in add");
  return r;
}

Int checked_mul(Int a, Int b) {
  Int r;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("int64 overflow in mul");
  return r;
}

IntVec apply(const IntMatrix& m, const IntVec& x) {
  if (m.cols() != x.size()) throw DimensionError("matrix-vector shape mismatch");
  IntVec y(m.rows(), 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Int acc = 0;
    for (std::size_t c = 0; c < m.cols(); ++c)
      acc = checked_add(acc, checked_mul(m(r, c), x[c]));
    y[r] = acc;
  }
  return y;
}

IntVec add(const IntVec& a, const IntVec& b) {
  if (a.size() != b.size()) throw DimensionError("vector length mismatch");
  IntVec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = checked_add(a[i], b[i]);
  return r;
}

IntVec sub(const IntVec& a, const IntVec& b) {
  if (a.size() != b.size()) throw DimensionError("vector length mismatch");
  IntVec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = checked_add(a[i], -b[i]);
  return r;
}

std::optional<Int> to_int(const BigInt& v) {
  if (v > std::numeric_limits<Int>::max() || v < std::numeric_limits<Int>::min())
    return std::nullopt;
  return static_cast<Int>(v);
}

// ---------------------------------------------------------------- bases

LatticeBasis::LatticeBasis(RatMatrix basis) : basis_(std::move(basis)) {
  if (basis_.rows() == 0 || basis_.rows() != basis_.cols())
    throw DimensionError("lattice basis must be a non-empty square matrix");
  covolume_ = abs(determinant(basis_));
  if (covolume_ == 0) throw Error("lattice basis is singular");
}

LatticeBasis LatticeBasis::standard(std::size_t dim) {
  return LatticeBasis(RatMatrix::identity(dim));
}

std::vector<double> LatticeBasis::to_ambient(const std::vector<double>& coords) const {
  std::vector<double> out(dim(), 0.0);
  for (std::size_t r = 0; r < dim(); ++r)
    for (std::size_t c = 0; c < dim(); ++c)
      out[r] += static_cast<double>(basis_(r, c)) * coords[c];
  return out;
}

ExpansionMatrix::ExpansionMatrix(IntMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols())
    throw DimensionError("expansion matrix must be a non-empty square matrix");
  auto det = to_int(abs(determinant(to_big(entries_))));
  if (!det) throw std::overflow_error("expansion determinant exceeds int64");
  absdet_ = *det;
}

ExpansionMatrix ExpansionMatrix::scalar(std::size_t dim, Int factor) {
  IntMatrix m(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = factor;
  return ExpansionMatrix(std::move(m));
}

ExpansivityResult is_expansive(const ExpansionMatrix& q) {
  constexpr double kTolerance = 1e-9;
  constexpr double kIndeterminateBand = 1e-6;
  ExpansivityResult result;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(to_double(q.entries()), false);
  if (solver.info() != Eigen::Success) {
    result.indeterminate = true;
    result.margin = -1.0;
    return result;
  }
  double min_abs = std::numeric_limits<double>::infinity();
  for (const auto& ev : solver.eigenvalues()) min_abs = std::min(min_abs, std::abs(ev));
  result.margin = min_abs - 1.0;
  result.indeterminate = std::abs(result.margin) < kIndeterminateBand;
  result.expansive = !result.indeterminate && result.margin > kTolerance;
  return result;
}

bool is_inflation(const ExpansionMatrix& q, const LatticeBasis& lattice) {
  if (q.dim() != lattice.dim()) throw DimensionError("Q and L dimension differ");
  if (q.absdet() == 0) return false;
  if (is_expansive(q).expansive) return true;

  // The intersection of all Q^k L is the largest Q-invariant sublattice on
  // which Q is unimodular. It is nonzero iff the characteristic polynomial has
  // a monic integer factor with constant term +-1. Candidate factors come from
  // subsets of the numeric roots and are confirmed by exact division.
  const auto charpoly = characteristic_polynomial(q.entries());
  Eigen::EigenSolver<Eigen::MatrixXd> solver(to_double(q.entries()), false);
  const auto roots = solver.eigenvalues();
  const std::size_t n = static_cast<std::size_t>(roots.size());
  if (n > 20) throw Error("is_inflation: dimension too large for factor search");
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<std::complex<double>> poly{1.0};
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask & (1u << i))) continue;
      std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
      for (std::size_t k = 0; k < poly.size(); ++k) {
        next[k + 1] += poly[k];
        next[k] -= poly[k] * roots[static_cast<Eigen::Index>(i)];
      }
      poly = std::move(next);
    }
    std::vector<BigInt> candidate;
    bool integral = true;
    for (const auto& c : poly) {
      double re = std::round(c.real());
      if (std::abs(c.imag()) > 1e-6 || std::abs(c.real() - re) > 1e-6) {
        integral = false;
        break;
      }
      candidate.emplace_back(static_cast<long long>(re));
    }
    if (!integral || abs(candidate.front()) != 1) continue;
    if (divides(charpoly, candidate)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- HNF

SubgroupHNF::SubgroupHNF(std::size_t dim, BigMatrix basis)
    : dim_(dim), basis_(std::move(basis)) {
  if (basis_.rows() != dim_ && basis_.cols() != 0)
    throw DimensionError("HNF basis row count differs from dimension");
  if (basis_.cols() == 0) basis_ = BigMatrix(dim_, 0);
  std::size_t row = 0;
  for (std::size_t c = 0; c < basis_.cols(); ++c) {
    while (row < dim_ && basis_(row, c) == 0) ++row;
    if (row == dim_) throw Error("HNF basis column is zero");
    pivots_.push_back(row);
    ++row;
  }
  IntMatrix small(dim_, basis_.cols());
  bool fits = true;
  for (std::size_t r = 0; r < dim_ && fits; ++r)
    for (std::size_t c = 0; c < basis_.cols(); ++c) {
      auto v = to_int(basis_(r, c));
      if (!v || *v > (Int{1} << 40) || *v < -(Int{1} << 40)) {
        fits = false;
        break;
      }
      small(r, c) = *v;
    }
  if (fits) small_ = std::move(small);
}

bool SubgroupHNF::contains(const std::vector<BigInt>& x) const {
  if (x.size() != dim_) throw DimensionError("membership test: vector length mismatch");
  std::vector<BigInt> rem = x;
  for (std::size_t c = 0; c < rank(); ++c) {
    const std::size_t p = pivots_[c];
    const BigInt& pivot = basis_(p, c);
    if (rem[p] % pivot != 0) return false;
    BigInt coef = rem[p] / pivot;
    if (coef == 0) continue;
    for (std::size_t r = p; r < dim_; ++r) rem[r] -= coef * basis_(r, c);
  }
  return std::all_of(rem.begin(), rem.end(), [](const BigInt& v) { return v == 0; });
}

bool SubgroupHNF::contains(const IntVec& x) const {
  std::vector<BigInt> big(x.begin(), x.end());
  return contains(big);
}

bool SubgroupHNF::contains(const SubgroupHNF& other) const {
  if (other.dim_ != dim_) throw DimensionError("subgroup dimension mismatch");
  for (std::size_t c = 0; c < other.rank(); ++c)
    if (!contains(other.basis_.column(c))) return false;
  return true;
}

BigInt SubgroupHNF::index() const {
  if (!full_rank()) throw Error("index of a non-full-rank subgroup is infinite");
  BigInt idx = 1;
  for (std::size_t i = 0; i < dim_; ++i) idx *= basis_(i, i);
  return idx;
}

IntVec SubgroupHNF::reduce(const IntVec& x) const {
  if (!full_rank()) throw Error("reduction requires a full-rank subgroup");
  if (x.size() != dim_) throw DimensionError("reduce: vector length mismatch");
  if (small_) {
    std::vector<__int128> v(x.begin(), x.end());
    bool ok = true;
    for (std::size_t i = 0; i < dim_ && ok; ++i) {
      const __int128 q = floor_div128(v[i], (*small_)(i, i));
      if (q == 0) continue;
      for (std::size_t r = i; r < dim_; ++r) {
        v[r] -= q * (*small_)(r, i);
        if (v[r] > (static_cast<__int128>(1) << 100) || v[r] < -(static_cast<__int128>(1) << 100))
          ok = false;
      }
    }
    if (ok) {
      IntVec out(dim_);
      for (std::size_t i = 0; i < dim_; ++i) {
        if (v[i] > std::numeric_limits<Int>::max() || v[i] < std::numeric_limits<Int>::min())
          throw std::overflow_error("coset representative exceeds int64");
        out[i] = static_cast<Int>(v[i]);
      }
      return out;
    }
  }
  std::vector<BigInt> v(x.begin(), x.end());
  for (std::size_t i = 0; i < dim_; ++i) {
    BigInt q = floor_div(v[i], basis_(i, i));
    if (q == 0) continue;
    for (std::size_t r = i; r < dim_; ++r) v[r] -= q * basis_(r, i);
  }
  IntVec out(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    auto val = to_int(v[i]);
    if (!val) throw std::overflow_error("coset representative exceeds int64");
    out[i] = *val;
  }
  return out;
}

std::vector<IntVec> SubgroupHNF::int_columns() const {
  std::vector<IntVec> cols;
  for (std::size_t c = 0; c < rank(); ++c) {
    IntVec col(dim_);
    for (std::size_t r = 0; r < dim_; ++r) {
      auto v = to_int(basis_(r, c));
      if (!v) throw std::overflow_error("HNF entry exceeds int64");
      col[r] = *v;
    }
    cols.push_back(std::move(col));
  }
  return cols;
}

SubgroupHNF hnf(const BigMatrix& gens) {
  const std::size_t d = gens.rows();
  const std::size_t n = gens.cols();
  BigMatrix a = gens;
  auto col_combine = [&](std::size_t c, std::size_t k, const BigInt& s, const BigInt& t,
                         const BigInt& u, const BigInt& v) {
    // (col_c, col_k) <- (s col_c + t col_k, u col_c + v col_k)
    for (std::size_t r = 0; r < d; ++r) {
      BigInt x = a(r, c), y = a(r, k);
      a(r, c) = s * x + t * y;
      a(r, k) = u * x + v * y;
    }
  };
  std::size_t pivot_col = 0;
  std::vector<std::size_t> pivot_rows;
  for (std::size_t row = 0; row < d && pivot_col < n; ++row) {
    for (std::size_t k = pivot_col + 1; k < n; ++k) {
      if (a(row, k) == 0) continue;
      if (a(row, pivot_col) == 0) {
        for (std::size_t r = 0; r < d; ++r) std::swap(a(r, pivot_col), a(r, k));
        continue;
      }
      BigInt g, s, t;
      xgcd(a(row, pivot_col), a(row, k), g, s, t);
      BigInt u = -a(row, k) / g;
      BigInt v = a(row, pivot_col) / g;
      col_combine(pivot_col, k, s, t, u, v);
    }
    if (a(row, pivot_col) == 0) continue;
    if (a(row, pivot_col) < 0)
      for (std::size_t r = 0; r < d; ++r) a(r, pivot_col) = -a(r, pivot_col);
    const BigInt pivot = a(row, pivot_col);
    for (std::size_t j = 0; j < pivot_col; ++j) {
      BigInt q = floor_div(a(row, j), pivot);
      if (q == 0) continue;
      for (std::size_t r = 0; r < d; ++r) a(r, j) -= q * a(r, pivot_col);
    }
    pivot_rows.push_back(row);
    ++pivot_col;
  }
  BigMatrix basis(d, pivot_col);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < pivot_col; ++c) basis(r, c) = a(r, c);
  return SubgroupHNF(d, std::move(basis));
}

SubgroupHNF hnf(const std::vector<IntVec>& generators, std::size_t dim) {
  BigMatrix m(dim, generators.size());
  for (std::size_t c = 0; c < generators.size(); ++c) {
    if (generators[c].size() != dim)
      throw DimensionError("generator " + std::to_string(c) + " has length " +
                           std::to_string(generators[c].size()) + ", expected " +
                           std::to_string(dim));
    for (std::size_t r = 0; r < dim; ++r) m(r, c) = generators[c][r];
  }
  return hnf(m);
}

SubgroupHNF scaled(const SubgroupHNF& h, const ExpansionMatrix& q, int k) {
  if (q.dim() != h.dim()) throw DimensionError("Q and subgroup dimension differ");
  return hnf(multiply(power(to_big(q.entries()), k), h.basis()));
}

BigInt quotient_index(const LatticeBasis& lattice, const SubgroupHNF& lprime,
                      const ExpansionMatrix& q, int k) {
  if (lattice.dim() != lprime.dim() || q.dim() != lprime.dim())
    throw DimensionError("quotient_index: dimension mismatch");
  if (!lprime.full_rank()) throw Error("quotient_index: L' is not of full rank");
  if (k < 0) throw Error("quotient_index: negative level");
  return boost::multiprecision::pow(BigInt(q.absdet()), static_cast<unsigned>(k)) *
         lprime.index();
}

Coset reduce_mod(const IntVec& x, const SubgroupHNF& lprime, const ExpansionMatrix& q,
                 int k) {
  if (!lprime.full_rank()) throw Error("reduce_mod: L' is not of full rank");
  return Coset{k, scaled(lprime, q, k).reduce(x)};
}

std::string to_string(CosetRelation r) {
  switch (r) {
    case CosetRelation::Equal: return "Equal";
    case CosetRelation::FirstInSecond: return "Contained(first in second)";
    case CosetRelation::SecondInFirst: return "Contained(second in first)";
    case CosetRelation::Disjoint: return "Disjoint";
  }
  return "?";
}

CosetSpace::CosetSpace(SubgroupHNF lprime, ExpansionMatrix q, int max_level)
    : q_(std::move(q)) {
  if (!lprime.full_rank()) throw Error("CosetSpace: L' is not of full rank");
  if (q_.dim() != lprime.dim()) throw DimensionError("CosetSpace: dimension mismatch");
  if (max_level < 0) throw Error("CosetSpace: negative depth");
  moduli_.push_back(lprime);
  const BigMatrix qbig = to_big(q_.entries());
  BigMatrix current = lprime.basis();
  for (int k = 1; k <= max_level; ++k) {
    current = multiply(qbig, current);
    moduli_.push_back(hnf(current));
    current = moduli_.back().basis();
  }
}

const SubgroupHNF& CosetSpace::modulus(int k) const {
  if (k < 0 || k > max_level()) throw Error("CosetSpace: level out of range");
  return moduli_[static_cast<std::size_t>(k)];
}

Coset CosetSpace::reduce(const IntVec& x, int k) const { return Coset{k, modulus(k).reduce(x)}; }

BigInt CosetSpace::index(int k) const { return modulus(k).index(); }

CosetRelation CosetSpace::relation(const Coset& a, const Coset& b) const {
  if (a.level == b.level) return a.rep == b.rep ? CosetRelation::Equal : CosetRelation::Disjoint;
  if (a.level > b.level)
    return reduce(a.rep, b.level).rep == b.rep ? CosetRelation::FirstInSecond
                                                : CosetRelation::Disjoint;
  return reduce(b.rep, a.level).rep == a.rep ? CosetRelation::SecondInFirst
                                              : CosetRelation::Disjoint;
}

}  // namespace latsub
