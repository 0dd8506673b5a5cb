#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace latsub {

using Int = std::int64_t;
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using IntVec = std::vector<Int>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Dense row-major matrix. Only what the lattice code needs.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::vector<T> column(std::size_t c) const {
    std::vector<T> v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using IntMatrix = Matrix<Int>;
using BigMatrix = Matrix<BigInt>;
using RatMatrix = Matrix<Rational>;

BigMatrix to_big(const IntMatrix& m);
BigMatrix multiply(const BigMatrix& a, const BigMatrix& b);
BigMatrix power(const BigMatrix& m, int k);
BigInt determinant(const BigMatrix& m);
Rational determinant(const RatMatrix& m);

// Overflow-checked int64 arithmetic; throws std::overflow_error.
Int checked_add(Int a, Int b);
Int checked_mul(Int a, Int b);
IntVec apply(const IntMatrix& m, const IntVec& x);
IntVec add(const IntVec& a, const IntVec& b);
IntVec sub(const IntVec& a, const IntVec& b);
std::optional<Int> to_int(const BigInt& v);

/// Basis of L in ambient coordinates; columns are the basis vectors.
class LatticeBasis {
 public:
  explicit LatticeBasis(RatMatrix basis);
  static LatticeBasis standard(std::size_t dim);

  std::size_t dim() const { return basis_.rows(); }
  const RatMatrix& basis() const { return basis_; }
  /// |det B|, the volume of a fundamental cell in ambient units.
  Rational covolume() const { return covolume_; }
  std::vector<double> to_ambient(const std::vector<double>& coords) const;

  friend bool operator==(const LatticeBasis&, const LatticeBasis&) = default;

 private:
  RatMatrix basis_;
  Rational covolume_;
};

/// Integer matrix of Q in lattice coordinates.
class ExpansionMatrix {
 public:
  explicit ExpansionMatrix(IntMatrix entries);
  static ExpansionMatrix scalar(std::size_t dim, Int factor);

  std::size_t dim() const { return entries_.rows(); }
  const IntMatrix& entries() const { return entries_; }
  /// q = |det Q|.
  Int absdet() const { return absdet_; }
  IntVec operator()(const IntVec& x) const { return apply(entries_, x); }

  friend bool operator==(const ExpansionMatrix&, const ExpansionMatrix&) = default;

 private:
  IntMatrix entries_;
  Int absdet_ = 0;
};

struct ExpansivityResult {
  bool expansive = false;
  bool indeterminate = false;
  double margin = 0.0;  // min |eigenvalue| - 1
};

/// Numeric check that every eigenvalue lies outside the closed unit disk.
/// Margins closer than 1e-6 to the circle are reported as indeterminate.
ExpansivityResult is_expansive(const ExpansionMatrix& q);

/// det Q != 0 and the intersection of Q^k L over k is {0}.
bool is_inflation(const ExpansionMatrix& q, const LatticeBasis& lattice);

/// Column-style Hermite normal form of a subgroup of Z^d.
///
/// The basis is in lower echelon form: column c has its first nonzero entry
/// (the pivot, positive) in row pivot_rows()[c], pivot rows strictly increase,
/// and every entry left of a pivot lies in [0, pivot).
class SubgroupHNF {
 public:
  SubgroupHNF() = default;
  SubgroupHNF(std::size_t dim, BigMatrix basis);

  std::size_t dim() const { return dim_; }
  std::size_t rank() const { return basis_.cols(); }
  bool full_rank() const { return rank() == dim_; }
  const BigMatrix& basis() const { return basis_; }
  const std::vector<std::size_t>& pivot_rows() const { return pivots_; }

  bool contains(const IntVec& x) const;
  bool contains(const std::vector<BigInt>& x) const;
  bool contains(const SubgroupHNF& other) const;
  /// [Z^d : H]; requires full rank.
  BigInt index() const;
  /// Canonical representative of x + H with 0 <= rep_i < H_ii; full rank only.
  IntVec reduce(const IntVec& x) const;
  /// Columns as int64 vectors; throws if an entry does not fit.
  std::vector<IntVec> int_columns() const;

  friend bool operator==(const SubgroupHNF& a, const SubgroupHNF& b) {
    return a.dim_ == b.dim_ && a.basis_ == b.basis_;
  }

 private:
  std::size_t dim_ = 0;
  BigMatrix basis_;
  std::vector<std::size_t> pivots_;
  // int64 copy used by reduce() when every entry fits.
  std::optional<IntMatrix> small_;
};

SubgroupHNF hnf(const std::vector<IntVec>& generators, std::size_t dim);
SubgroupHNF hnf(const BigMatrix& generator_columns);

/// HNF of Q^k H.
SubgroupHNF scaled(const SubgroupHNF& h, const ExpansionMatrix& q, int k);

/// |L / Q^k L'| = q^k [L : L'].
BigInt quotient_index(const LatticeBasis& lattice, const SubgroupHNF& lprime,
                      const ExpansionMatrix& q, int k);

struct Coset {
  int level = 0;
  IntVec rep;

  friend bool operator==(const Coset&, const Coset&) = default;
  friend auto operator<=>(const Coset&, const Coset&) = default;
};

Coset reduce_mod(const IntVec& x, const SubgroupHNF& lprime,
                 const ExpansionMatrix& q, int k);

enum class CosetRelation { Equal, FirstInSecond, SecondInFirst, Disjoint };

std::string to_string(CosetRelation r);

/// The tower L ⊃ L' ⊃ Q L' ⊃ Q^2 L' ⊃ ... up to a fixed depth.
/// Immutable after construction.
class CosetSpace {
 public:
  CosetSpace(SubgroupHNF lprime, ExpansionMatrix q, int max_level);

  int max_level() const { return static_cast<int>(moduli_.size()) - 1; }
  const SubgroupHNF& lprime() const { return moduli_.front(); }
  const SubgroupHNF& modulus(int k) const;
  const ExpansionMatrix& expansion() const { return q_; }

  Coset reduce(const IntVec& x, int k) const;
  BigInt index(int k) const;
  CosetRelation relation(const Coset& a, const Coset& b) const;

 private:
  ExpansionMatrix q_;
  std::vector<SubgroupHNF> moduli_;
};

}  // namespace latsub
