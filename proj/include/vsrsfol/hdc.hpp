#pragma once

// Holographic Reduced Representation algebra: seeded Gaussian hypervectors,
// circular-convolution binding, correlation unbinding, additive bundling and
// cosine similarity. All operations are pure; Codebook is immutable once built.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vsrsfol {

class HdcError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Hypervector {
 public:
  Hypervector() = default;
  explicit Hypervector(std::size_t dim);
  explicit Hypervector(std::vector<double> values);

  [[nodiscard]] std::size_t dim() const noexcept { return values_.size(); }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::span<double> values() noexcept { return values_; }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  [[nodiscard]] double norm() const noexcept;
  [[nodiscard]] bool is_zero() const noexcept;

  friend bool operator==(const Hypervector&, const Hypervector&) = default;

 private:
  std::vector<double> values_;
};

// (1, 0, ..., 0): the identity element of binding.
Hypervector unit_impulse(std::size_t dim);

// Entries i.i.d. N(0, 1/dim), drawn from a stream keyed on (seed, symbol), so
// adding symbols to a codebook never perturbs existing vectors.
Hypervector random_vector(std::uint64_t seed, std::string_view symbol, std::size_t dim);

// Circular convolution: c[k] = sum_j a[j] * b[(k - j) mod d].
Hypervector bind(const Hypervector& a, const Hypervector& b);

// Circular correlation: bind(c, involution(a)); approximately inverts bind.
Hypervector unbind(const Hypervector& c, const Hypervector& a);

// Index-reversal a*[i] = a[(-i) mod d].
Hypervector involution(const Hypervector& a);

// Element-wise sum in input order.
Hypervector bundle(std::span<const Hypervector> vs);

// sum w_i * v_i in input order. Weights must be nonnegative.
Hypervector weighted_bundle(std::span<const std::pair<Hypervector, double>> pairs);

// A bundling term carrying the caller's summation key.
struct KeyedTerm {
  std::string key;
  Hypervector vector;
  double weight = 1.0;
};

// Stable-sorts terms by key and then sums w_i * v_i, so the result is
// bit-identical for any permutation of the input.
Hypervector keyed_bundle(std::vector<KeyedTerm> terms);

// a . b / (|a| |b|). Throws for zero vectors.
double cosine(const Hypervector& a, const Hypervector& b);

double dot(const Hypervector& a, const Hypervector& b);
Hypervector scaled(const Hypervector& v, double factor);
Hypervector normalized(const Hypervector& v);

class Codebook {
 public:
  Codebook(std::size_t dim, std::uint64_t seed, std::vector<std::string> symbols);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] const std::vector<std::string>& symbols() const noexcept { return symbols_; }
  [[nodiscard]] bool contains(std::string_view symbol) const;

  // Throws HdcError when the symbol is unknown.
  [[nodiscard]] const Hypervector& at(std::string_view symbol) const;

  // {"dim": d, "seed": s, "symbols": [...]}; vectors are re-derived on import.
  [[nodiscard]] std::string to_json() const;
  static Codebook from_json(std::string_view text);

  // Symbols every scene encoder needs: the six relevant classes, the three
  // directions and grid_size^2 cell names.
  static Codebook for_scenes(std::size_t dim, std::uint64_t seed, std::size_t grid_size = 16);

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::vector<std::string> symbols_;
  std::map<std::string, Hypervector, std::less<>> entries_;
};

std::string grid_symbol(std::size_t row, std::size_t col);

}  // namespace vsrsfol
