#include "vsrsfol/hdc.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "vsrsfol/seeding.hpp"

namespace vsrsfol {

namespace {

// Operands with at most this many nonzeros are convolved directly; this keeps
// binding with the unit impulse exact.
constexpr std::size_t kSparseLimit = 8;

void require_same_dim(const Hypervector& a, const Hypervector& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw HdcError(std::string(op) + ": dimension mismatch (" + std::to_string(a.dim()) +
                   " vs " + std::to_string(b.dim()) + ")");
  }
  if (a.dim() == 0) throw HdcError(std::string(op) + ": empty hypervector");
}

class FftPlans {
 public:
  struct Pair {
    fftw_plan forward;
    fftw_plan inverse;
  };

  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  // Planning is not thread-safe in FFTW; execution with the new-array
  // interface is.
  Pair get(std::size_t n) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(n); it != plans_.end()) return it->second;
    std::vector<double> real(n);
    std::vector<fftw_complex> spec(n / 2 + 1);
    const int size = static_cast<int>(n);
    Pair p{
        fftw_plan_dft_r2c_1d(size, real.data(), spec.data(), FFTW_ESTIMATE | FFTW_UNALIGNED),
        fftw_plan_dft_c2r_1d(size, spec.data(), real.data(), FFTW_ESTIMATE | FFTW_UNALIGNED),
    };
    plans_.emplace(n, p);
    return p;
  }

  ~FftPlans() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.inverse);
    }
  }

 private:
  std::mutex mutex_;
  std::unordered_map<std::size_t, Pair> plans_;
};

std::vector<std::size_t> nonzeros(const Hypervector& v) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    if (v[i] != 0.0) {
      idx.push_back(i);
      if (idx.size() > kSparseLimit) break;
    }
  }
  return idx;
}

Hypervector sparse_convolve(const Hypervector& sparse, const std::vector<std::size_t>& nz,
                            const Hypervector& dense) {
  const std::size_t d = dense.dim();
  Hypervector out(d);
  for (std::size_t k = 0; k < d; ++k) {
    double acc = 0.0;
    for (std::size_t j : nz) acc += sparse[j] * dense[(k + d - j) % d];
    out[k] = acc;
  }
  return out;
}

Hypervector fft_convolve(const Hypervector& a, const Hypervector& b) {
  const std::size_t d = a.dim();
  const auto plans = FftPlans::instance().get(d);
  std::vector<double> in_a(a.values().begin(), a.values().end());
  std::vector<double> in_b(b.values().begin(), b.values().end());
  std::vector<fftw_complex> fa(d / 2 + 1);
  std::vector<fftw_complex> fb(d / 2 + 1);
  fftw_execute_dft_r2c(plans.forward, in_a.data(), fa.data());
  fftw_execute_dft_r2c(plans.forward, in_b.data(), fb.data());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    const double re = fa[i][0] * fb[i][0] - fa[i][1] * fb[i][1];
    const double im = fa[i][0] * fb[i][1] + fa[i][1] * fb[i][0];
    fa[i][0] = re;
    fa[i][1] = im;
  }
  std::vector<double> out(d);
  fftw_execute_dft_c2r(plans.inverse, fa.data(), out.data());
  const double scale = 1.0 / static_cast<double>(d);
  for (double& x : out) x *= scale;
  return Hypervector(std::move(out));
}

}  // namespace

Hypervector::Hypervector(std::size_t dim) : values_(dim, 0.0) {}

Hypervector::Hypervector(std::vector<double> values) : values_(std::move(values)) {
  for (double x : values_) {
    if (!std::isfinite(x)) throw HdcError("hypervector entries must be finite");
  }
}

double Hypervector::norm() const noexcept {
  double s = 0.0;
  for (double x : values_) s += x * x;
  return std::sqrt(s);
}

bool Hypervector::is_zero() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return x == 0.0; });
}

Hypervector unit_impulse(std::size_t dim) {
  if (dim == 0) throw HdcError("unit_impulse: dimension must be positive");
  Hypervector v(dim);
  v[0] = 1.0;
  return v;
}

Hypervector random_vector(std::uint64_t seed, std::string_view symbol, std::size_t dim) {
  if (dim < 2) throw HdcError("random_vector: invalid dimension " + std::to_string(dim));
  std::mt19937_64 rng(stream_seed(seed, symbol));
  const double sigma = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> values(dim);
  std::size_t i = 0;
  while (i < dim) {
    auto [z0, z1] = box_muller(rng);
    values[i++] = sigma * z0;
    if (i < dim) values[i++] = sigma * z1;
  }
  return Hypervector(std::move(values));
}

Hypervector bind(const Hypervector& a, const Hypervector& b) {
  require_same_dim(a, b, "bind");
  if (auto nz = nonzeros(b); nz.size() <= kSparseLimit) return sparse_convolve(b, nz, a);
  if (auto nz = nonzeros(a); nz.size() <= kSparseLimit) return sparse_convolve(a, nz, b);
  return fft_convolve(a, b);
}

Hypervector involution(const Hypervector& a) {
  const std::size_t d = a.dim();
  Hypervector out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = a[(d - i) % d];
  return out;
}

Hypervector unbind(const Hypervector& c, const Hypervector& a) {
  require_same_dim(c, a, "unbind");
  return bind(c, involution(a));
}

Hypervector bundle(std::span<const Hypervector> vs) {
  if (vs.empty()) throw HdcError("bundle: empty input");
  Hypervector out(vs.front().dim());
  for (const auto& v : vs) {
    require_same_dim(out, v, "bundle");
    for (std::size_t i = 0; i < v.dim(); ++i) out[i] += v[i];
  }
  return out;
}

Hypervector weighted_bundle(std::span<const std::pair<Hypervector, double>> pairs) {
  if (pairs.empty()) throw HdcError("weighted_bundle: empty input");
  Hypervector out(pairs.front().first.dim());
  for (const auto& [v, w] : pairs) {
    require_same_dim(out, v, "weighted_bundle");
    if (!(w >= 0.0) || !std::isfinite(w)) throw HdcError("weighted_bundle: negative weight");
    for (std::size_t i = 0; i < v.dim(); ++i) out[i] += w * v[i];
  }
  return out;
}

Hypervector keyed_bundle(std::vector<KeyedTerm> terms) {
  if (terms.empty()) throw HdcError("keyed_bundle: empty input");
  std::stable_sort(terms.begin(), terms.end(),
                   [](const KeyedTerm& x, const KeyedTerm& y) { return x.key < y.key; });
  std::vector<std::pair<Hypervector, double>> pairs;
  pairs.reserve(terms.size());
  for (auto& t : terms) pairs.emplace_back(std::move(t.vector), t.weight);
  return weighted_bundle(pairs);
}

double dot(const Hypervector& a, const Hypervector& b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(const Hypervector& a, const Hypervector& b) {
  require_same_dim(a, b, "cosine");
  const double na2 = dot(a, a);
  const double nb2 = dot(b, b);
  if (na2 == 0.0 || nb2 == 0.0) throw HdcError("cosine: undefined similarity for zero vector");
  return std::clamp(dot(a, b) / std::sqrt(na2 * nb2), -1.0, 1.0);
}

Hypervector scaled(const Hypervector& v, double factor) {
  Hypervector out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = v[i] * factor;
  return out;
}

Hypervector normalized(const Hypervector& v) {
  const double n = v.norm();
  if (n == 0.0) throw HdcError("normalized: zero vector");
  return scaled(v, 1.0 / n);
}

std::string grid_symbol(std::size_t row, std::size_t col) {
  return "grid_" + std::to_string(row) + "_" + std::to_string(col);
}

Codebook::Codebook(std::size_t dim, std::uint64_t seed, std::vector<std::string> symbols)
    : dim_(dim), seed_(seed), symbols_(std::move(symbols)) {
  if (dim_ < 2) throw HdcError("codebook: invalid dimension " + std::to_string(dim_));
  for (const auto& s : symbols_) {
    if (!entries_.contains(s)) entries_.emplace(s, random_vector(seed_, s, dim_));
  }
}

bool Codebook::contains(std::string_view symbol) const {
  return entries_.find(symbol) != entries_.end();
}

const Hypervector& Codebook::at(std::string_view symbol) const {
  auto it = entries_.find(symbol);
  if (it == entries_.end()) throw HdcError("codebook: missing symbol '" + std::string(symbol) + "'");
  return it->second;
}

std::string Codebook::to_json() const {
  nlohmann::json j;
  j["dim"] = dim_;
  j["seed"] = seed_;
  j["symbols"] = symbols_;
  return j.dump();
}

Codebook Codebook::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    return Codebook(j.at("dim").get<std::size_t>(), j.at("seed").get<std::uint64_t>(),
                    j.at("symbols").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw HdcError(std::string("codebook json: ") + e.what());
  }
}

Codebook Codebook::for_scenes(std::size_t dim, std::uint64_t seed, std::size_t grid_size) {
  std::vector<std::string> symbols = {"pedestrian", "vehicle",  "truck",    "road",
                                      "crosswalk",  "sidewalk", "left_of",  "right_of",
                                      "below_of"};
  for (std::size_t r = 0; r < grid_size; ++r) {
    for (std::size_t c = 0; c < grid_size; ++c) symbols.push_back(grid_symbol(r, c));
  }
  return Codebook(dim, seed, std::move(symbols));
}

}  // namespace vsrsfol
