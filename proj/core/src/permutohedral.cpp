#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "crfrefine/filtering.hpp"

namespace crfrefine {

namespace {


// Open-addressing table from d-coordinate lattice keys to dense vertex
// indices, assigned in insertion order. Capacity 2 * n * (d+1) covers every
// splat vertex; only grow() (used while closing the blur support) resizes it.
class LatticeHashTable {
 public:
  LatticeHashTable(int key_size, std::size_t capacity)
      : key_size_(key_size), slots_(capacity, -1) {
    keys_.reserve(capacity / 2 * static_cast<std::size_t>(key_size));
  }

  bool half_full() const { return size() * 2 >= slots_.size(); }

  void grow() {
    slots_.assign(slots_.size() * 2, -1);
    for (std::size_t index = 0; index < size(); ++index) {
      std::size_t h = hash(key(index)) % slots_.size();
      while (slots_[h] >= 0) {
        if (++h == slots_.size()) h = 0;
      }
      slots_[h] = static_cast<std::int32_t>(index);
    }
  }

  std::size_t size() const { return keys_.size() / key_size_; }
  const std::int32_t* key(std::size_t index) const { return keys_.data() + index * key_size_; }

  std::size_t home(const std::int32_t* key) const { return hash(key) % slots_.size(); }
  void prefetch(std::size_t h) const { __builtin_prefetch(slots_.data() + h); }

  /// Index of the key, inserting it when `create` is set; -1 when absent.
  std::int32_t find(const std::int32_t* key, bool create) { return find(key, home(key), create); }

  /// As above, starting from a precomputed home slot.
  std::int32_t find(const std::int32_t* key, std::size_t h, bool create) {
    while (true) {
      const std::int32_t slot = slots_[h];
      if (slot < 0) {
        if (!create) return -1;
        if (half_full()) {
          throw std::logic_error("LatticeHashTable: capacity exhausted");
        }
        const auto index = static_cast<std::int32_t>(size());
        keys_.insert(keys_.end(), key, key + key_size_);
        slots_[h] = index;
        return index;
      }
      if (std::equal(key, key + key_size_, this->key(static_cast<std::size_t>(slot)))) return slot;
      if (++h == slots_.size()) h = 0;
    }
  }

 private:
  std::size_t hash(const std::int32_t* key) const {
    std::size_t k = 0;
    for (int i = 0; i < key_size_; ++i) {
      k += static_cast<std::size_t>(static_cast<std::uint32_t>(key[i]));
      k *= 2531011u;
    }
    return k;
  }

  int key_size_;
  std::vector<std::int32_t> slots_;
  std::vector<std::int32_t> keys_;
};

}  // namespace

double PermutohedralLattice::gain(int dim) {
  return std::sqrt(static_cast<double>(dim + 1)) *
         std::pow(4.0 * std::numbers::pi / 3.0 * spacing_scale(dim) * spacing_scale(dim),
                  0.5 * dim);
}

namespace {

// New index of every vertex when sorted by the bit-interleaved (Morton) code
// of its key. Coordinates are shifted to be non-negative and coarsened until
// they fit the 64-bit code.
std::vector<std::int32_t> z_order(const LatticeHashTable& table, std::size_t count, int d) {
  std::vector<std::int32_t> lo(d, std::numeric_limits<std::int32_t>::max());
  std::vector<std::int32_t> hi(d, std::numeric_limits<std::int32_t>::min());
  for (std::size_t v = 0; v < count; ++v) {
    for (int j = 0; j < d; ++j) {
      lo[j] = std::min(lo[j], table.key(v)[j]);
      hi[j] = std::max(hi[j], table.key(v)[j]);
    }
  }
  const int bits = std::max(1, 64 / d);
  int shift = 0;
  for (int j = 0; j < d; ++j) {
    auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi[j]) - lo[j]);
    int s = 0;
    while (bits < 64 && (span >> s) >= (std::uint64_t{1} << bits)) ++s;
    shift = std::max(shift, s);
  }

  std::vector<std::pair<std::uint64_t, std::int32_t>> codes(count);
  for (std::size_t v = 0; v < count; ++v) {
    std::uint64_t code = 0;
    for (int b = bits - 1; b >= 0; --b) {
      for (int j = 0; j < d; ++j) {
        const auto c = static_cast<std::uint64_t>(static_cast<std::int64_t>(table.key(v)[j]) - lo[j]) >> shift;
        code = (code << 1) | ((c >> b) & 1u);
      }
    }
    codes[v] = {code, static_cast<std::int32_t>(v)};
  }
  std::sort(codes.begin(), codes.end());
  std::vector<std::int32_t> renumber(count);
  for (std::size_t i = 0; i < count; ++i) renumber[static_cast<std::size_t>(codes[i].second)] = static_cast<std::int32_t>(i);
  return renumber;
}

void neighbor_keys(const std::int32_t* key, int d, int axis, std::int32_t* lower,
                   std::int32_t* upper) {
  for (int j = 0; j < d; ++j) {
    lower[j] = key[j] - 1;
    upper[j] = key[j] + 1;
  }
  if (axis < d) {
    lower[axis] = key[axis] + d;
    upper[axis] = key[axis] - d;
  }
}

}  // namespace

PermutohedralLattice::PermutohedralLattice(const FeatureMatrix& features, LatticeOptions options)
    : n_points_(features.n_points()), dim_(features.dim()) {
  if (dim_ < 1) throw std::invalid_argument("PermutohedralLattice: feature dim must be >= 1");
  const int d = dim_;
  const int d1 = d + 1;
  const std::size_t n = static_cast<std::size_t>(n_points_);
  gain_ = static_cast<float>(gain(d));

  // Embedding onto the hyperplane sum(x) = 0 in R^(d+1), scaled so that the
  // blurred lattice approximates a unit-variance Gaussian in feature space.
  const double inv_std_dev = std::sqrt(2.0 / 3.0) * d1 * spacing_scale(d);
  std::vector<double> scale(d);
  for (int i = 0; i < d; ++i) scale[i] = inv_std_dev / std::sqrt((i + 1.0) * (i + 2.0));

  // canonical[r * (d+1) + k]: coordinate k of the remainder-r simplex vertex.
  std::vector<int> canonical(static_cast<std::size_t>(d1) * d1);
  for (int r = 0; r <= d; ++r) {
    for (int k = 0; k <= d - r; ++k) canonical[r * d1 + k] = r;
    for (int k = d - r + 1; k <= d; ++k) canonical[r * d1 + k] = r - d1;
  }

  LatticeHashTable table(d, std::max<std::size_t>(2 * n * d1, 2));
  offsets_.resize(n * d1);
  weights_.resize(n * d1);

  std::vector<double> elevated(d1);
  std::vector<int> rem0(d1);
  std::vector<int> rank(d1);
  std::vector<double> barycentric(d + 2);
  std::vector<std::int32_t> vertex_keys(static_cast<std::size_t>(d1) * d);
  std::vector<std::size_t> vertex_homes(d1);

  for (std::size_t p = 0; p < n; ++p) {
    auto f = features.row(static_cast<int>(p));
    double sm = 0.0;
    for (int j = d; j > 0; --j) {
      const double cf = f[j - 1] * scale[j - 1];
      elevated[j] = sm - j * cf;
      sm += cf;
    }
    elevated[0] = sm;

    // Nearest remainder-0 lattice point.
    int sum = 0;
    for (int j = 0; j <= d; ++j) {
      const double v = elevated[j] / d1;
      const double up = std::ceil(v) * d1;
      const double down = std::floor(v) * d1;
      rem0[j] = static_cast<int>(up - elevated[j] < elevated[j] - down ? up : down);
      sum += rem0[j];
    }
    sum /= d1;

    // Rank the residuals to identify the enclosing simplex.
    std::fill(rank.begin(), rank.end(), 0);
    for (int i = 0; i < d; ++i) {
      const double di = elevated[i] - rem0[i];
      for (int j = i + 1; j <= d; ++j) {
        if (di < elevated[j] - rem0[j]) {
          ++rank[i];
        } else {
          ++rank[j];
        }
      }
    }
    for (int j = 0; j <= d; ++j) {
      rank[j] += sum;
      if (rank[j] < 0) {
        rank[j] += d1;
        rem0[j] += d1;
      } else if (rank[j] > d) {
        rank[j] -= d1;
        rem0[j] -= d1;
      }
    }

    std::fill(barycentric.begin(), barycentric.end(), 0.0);
    for (int j = 0; j <= d; ++j) {
      const double v = (elevated[j] - rem0[j]) / d1;
      barycentric[d - rank[j]] += v;
      barycentric[d - rank[j] + 1] -= v;
    }
    barycentric[0] += 1.0 + barycentric[d + 1];

    for (int r = 0; r <= d; ++r) {
      std::int32_t* k = vertex_keys.data() + static_cast<std::size_t>(r) * d;
      for (int j = 0; j < d; ++j) k[j] = rem0[j] + canonical[r * d1 + rank[j]];
      vertex_homes[r] = table.home(k);
      table.prefetch(vertex_homes[r]);
    }
    for (int r = 0; r <= d; ++r) {
      offsets_[p * d1 + r] =
          table.find(vertex_keys.data() + static_cast<std::size_t>(r) * d, vertex_homes[r], true);
      weights_[p * d1 + r] = static_cast<float>(barycentric[r]);
    }
  }

  std::vector<std::int32_t> n1(d);
  std::vector<std::int32_t> n2(d);
  if (options.close_blur_support) {
    // Axis by axis, so a vertex added for axis a is itself expanded along the
    // later axes, mirroring the order of the blur passes.
    for (int axis = 0; axis <= d; ++axis) {
      const std::size_t occupied = table.size();
      for (std::size_t v = 0; v < occupied; ++v) {
        while (table.half_full()) table.grow();
        // Copy: inserting may reallocate the key storage.
        std::vector<std::int32_t> k(table.key(v), table.key(v) + d);
        neighbor_keys(k.data(), d, axis, n1.data(), n2.data());
        table.find(n1.data(), true);
        if (table.half_full()) table.grow();
        table.find(n2.data(), true);
      }
    }
  }
  n_vertices_ = table.size();

  // Renumber vertices along a Z-order curve over their keys so that lattice
  // neighbours tend to share cache lines during the blur.
  const std::vector<std::int32_t> renumber = z_order(table, n_vertices_, d);
  for (std::int32_t& o : offsets_) o = renumber[static_cast<std::size_t>(o)];

  // Neighbours along axis a differ by +-(1, ..., 1, -d, 1, ..., 1) with -d at a;
  // only the first d coordinates are stored. The relation is symmetric, so
  // finding w above v also records v below w.
  const auto absent = static_cast<std::int32_t>(n_vertices_);
  blur_neighbors_.assign(static_cast<std::size_t>(d1) * n_vertices_ * 2, absent);
  // Lookups go in batches whose home slots are prefetched first.
  constexpr std::size_t kBatch = 32;
  std::vector<std::int32_t> upper_keys(kBatch * d);
  std::array<std::size_t, kBatch> homes{};
  for (int axis = 0; axis <= d; ++axis) {
    std::int32_t* nb = blur_neighbors_.data() + static_cast<std::size_t>(axis) * n_vertices_ * 2;
    for (std::size_t v0 = 0; v0 < n_vertices_; v0 += kBatch) {
      const std::size_t count = std::min(kBatch, n_vertices_ - v0);
      for (std::size_t b = 0; b < count; ++b) {
        std::int32_t* upper = upper_keys.data() + b * d;
        neighbor_keys(table.key(v0 + b), d, axis, n1.data(), upper);
        homes[b] = table.home(upper);
        table.prefetch(homes[b]);
      }
      for (std::size_t b = 0; b < count; ++b) {
        const std::int32_t hi = table.find(upper_keys.data() + b * d, homes[b], false);
        if (hi < 0) continue;
        const std::int32_t from = renumber[v0 + b];
        const std::int32_t to = renumber[static_cast<std::size_t>(hi)];
        nb[2 * static_cast<std::size_t>(from) + 1] = to;
        nb[2 * static_cast<std::size_t>(to)] = from;
      }
    }
  }

  compute_row_sums();
}

void PermutohedralLattice::apply_raw(std::span<const float> values, int n_values,
                                     std::span<float> out) const {
  const int d1 = dim_ + 1;
  const std::size_t nv = static_cast<std::size_t>(n_values);
  if (values.size() != static_cast<std::size_t>(n_points_) * nv || out.size() != values.size()) {
    throw std::invalid_argument("PermutohedralLattice: value buffer size mismatch");
  }

  // Row n_vertices_ stays zero and stands in for absent blur neighbours.
  const std::size_t rows = n_vertices_ + 1;
  std::vector<float> lattice(rows * nv, 0.0f);
  std::vector<float> scratch(rows * nv, 0.0f);

  // Splat.
  for (int p = 0; p < n_points_; ++p) {
    const float* src = values.data() + static_cast<std::size_t>(p) * nv;
    for (int r = 0; r < d1; ++r) {
      const std::size_t idx = static_cast<std::size_t>(p) * d1 + r;
      const float w = weights_[idx];
      float* dst = lattice.data() + static_cast<std::size_t>(offsets_[idx]) * nv;
      for (std::size_t c = 0; c < nv; ++c) dst[c] += w * src[c];
    }
  }

  // Blur, one axis at a time.
  for (int axis = 0; axis < d1; ++axis) {
    const std::int32_t* nb = blur_neighbors_.data() + static_cast<std::size_t>(axis) * n_vertices_ * 2;
    const float* __restrict in = lattice.data();
    float* __restrict res = scratch.data();
    for (std::size_t v = 0; v < n_vertices_; ++v) {
      const float* center = in + v * nv;
      const float* a = in + static_cast<std::size_t>(nb[2 * v]) * nv;
      const float* b = in + static_cast<std::size_t>(nb[2 * v + 1]) * nv;
      float* dst = res + v * nv;
      for (std::size_t c = 0; c < nv; ++c) dst[c] = 0.5f * center[c] + 0.25f * (a[c] + b[c]);
    }
    lattice.swap(scratch);
  }

  // Slice.
  for (int p = 0; p < n_points_; ++p) {
    float* dst = out.data() + static_cast<std::size_t>(p) * nv;
    std::fill(dst, dst + nv, 0.0f);
    for (int r = 0; r < d1; ++r) {
      const std::size_t idx = static_cast<std::size_t>(p) * d1 + r;
      const float w = weights_[idx] * gain_;
      const float* src = lattice.data() + static_cast<std::size_t>(offsets_[idx]) * nv;
      for (std::size_t c = 0; c < nv; ++c) dst[c] += w * src[c];
    }
  }
}

}  // namespace crfrefine
