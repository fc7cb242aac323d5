#include "vsl/field_kernel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "vsl/errors.hpp"

namespace vsl {

namespace {

constexpr std::size_t kLeaf = 64;

// Fixed-shape pairwise reduction of term(lo..hi).
template <class T, class Term>
T pairwise_sum(std::size_t lo, std::size_t hi, const Term& term) {
  if (hi - lo <= kLeaf) {
    T acc{};
    for (std::size_t i = lo; i < hi; ++i) acc += term(i);
    return acc;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  T left = pairwise_sum<T>(lo, mid, term);
  left += pairwise_sum<T>(mid, hi, term);
  return left;
}

void check_block(const SourceBlock& b) {
  if (b.position.size() != b.charge.size())
    throw std::invalid_argument("source block: position and charge lengths differ");
}

std::ptrdiff_t as_signed(std::size_t n) { return static_cast<std::ptrdiff_t>(n); }

constexpr std::size_t kNoSkip = static_cast<std::size_t>(-1);

// Same tree shape as pairwise_sum, with whole leaves evaluated by `leaf(lo, hi)`.
template <class T, class Leaf>
T leaf_tree_sum(std::size_t lo, std::size_t hi, const Leaf& leaf) {
  if (hi - lo <= kLeaf) return leaf(lo, hi);
  const std::size_t mid = lo + (hi - lo) / 2;
  T left = leaf_tree_sum<T>(lo, mid, leaf);
  left += leaf_tree_sum<T>(mid, hi, leaf);
  return left;
}

// Separations x - y_s and squared softened distances of one leaf; the loops are
// branch-free so they vectorize.
struct LeafGeometry {
  double dx[kLeaf], dy[kLeaf], dz[kLeaf], s2[kLeaf];
  std::size_t n;

  LeafGeometry(const Vec3& x, const SourceBlock& b, std::size_t lo, std::size_t hi, double eps2) : n(hi - lo) {
    const Vec3* p = b.position.data() + lo;
    for (std::size_t k = 0; k < n; ++k) {
      dx[k] = x.x - p[k].x;
      dy[k] = x.y - p[k].y;
      dz[k] = x.z - p[k].z;
      s2[k] = dx[k] * dx[k] + dy[k] * dy[k] + dz[k] * dz[k] + eps2;
    }
  }

  // Zeroes `w` at the skipped source and at coincident pairs, flagging the latter.
  void mask(double* w, std::size_t lo, std::size_t skip, std::atomic<bool>& singular) const {
    for (std::size_t k = 0; k < n; ++k) {
      if (lo + k == skip) {
        w[k] = 0.0;
      } else if (s2[k] == 0.0) {
        w[k] = 0.0;
        singular = true;
      }
    }
  }
};

Vec3 field_from_block(const Vec3& x, const SourceBlock& b, double eps2, std::size_t skip,
                      std::atomic<bool>& singular) {
  return leaf_tree_sum<Vec3>(0, b.position.size(), [&](std::size_t lo, std::size_t hi) {
    const LeafGeometry g(x, b, lo, hi, eps2);
    double w[kLeaf];
    const double* c = b.charge.data() + lo;
    for (std::size_t k = 0; k < g.n; ++k) w[k] = c[k] / (g.s2[k] * std::sqrt(g.s2[k]));
    g.mask(w, lo, skip, singular);
    Vec3 acc;
    for (std::size_t k = 0; k < g.n; ++k) acc += Vec3{w[k] * g.dx[k], w[k] * g.dy[k], w[k] * g.dz[k]};
    return acc;
  });
}

Mat3 gradient_from_block(const Vec3& x, const SourceBlock& b, double eps2, std::size_t skip,
                         std::atomic<bool>& singular) {
  return leaf_tree_sum<Mat3>(0, b.position.size(), [&](std::size_t lo, std::size_t hi) {
    const LeafGeometry g(x, b, lo, hi, eps2);
    double w[kLeaf], r[kLeaf];
    const double* c = b.charge.data() + lo;
    for (std::size_t k = 0; k < g.n; ++k) {
      w[k] = c[k] / (g.s2[k] * std::sqrt(g.s2[k]));
      r[k] = 3.0 / g.s2[k];
    }
    g.mask(w, lo, skip, singular);
    double m[9] = {};
    for (std::size_t k = 0; k < g.n; ++k) {
      if (w[k] == 0.0) continue;
      const double d[3] = {g.dx[k], g.dy[k], g.dz[k]};
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) m[3 * i + j] += w[k] * ((i == j ? 1.0 : 0.0) - r[k] * d[i] * d[j]);
    }
    Mat3 acc;
    for (std::size_t i = 0; i < 9; ++i) acc.a[i] = m[i];
    return acc;
  });
}

double potential_from_block(const Vec3& x, const SourceBlock& b, double eps2, std::size_t skip,
                            std::atomic<bool>& singular) {
  return leaf_tree_sum<double>(0, b.position.size(), [&](std::size_t lo, std::size_t hi) {
    const LeafGeometry g(x, b, lo, hi, eps2);
    double w[kLeaf];
    const double* c = b.charge.data() + lo;
    for (std::size_t k = 0; k < g.n; ++k) w[k] = c[k] / std::sqrt(g.s2[k]);
    g.mask(w, lo, skip, singular);
    double acc = 0.0;
    for (std::size_t k = 0; k < g.n; ++k) acc += w[k];
    return acc;
  });
}

struct CellKey {
  std::int64_t i, j, k;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& c) const {
    std::uint64_t h = static_cast<std::uint64_t>(c.i) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(c.j) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(c.k) + 0x94D049BB133111EBULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Bucket grid with cell edge equal to the kernel support; indices stay ascending per cell.
class CellIndex {
 public:
  CellIndex(std::span<const Vec3> points, double h) : inv_h_(1.0 / h) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(points[i])].push_back(i);
  }

  CellKey key(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x * inv_h_)),
            static_cast<std::int64_t>(std::floor(p.y * inv_h_)),
            static_cast<std::int64_t>(std::floor(p.z * inv_h_))};
  }

  template <class F>
  void for_neighbours(const Vec3& p, const F& f) const {
    const CellKey c = key(p);
    for (std::int64_t dk = -1; dk <= 1; ++dk)
      for (std::int64_t dj = -1; dj <= 1; ++dj)
        for (std::int64_t di = -1; di <= 1; ++di) {
          const auto it = cells_.find({c.i + di, c.j + dj, c.k + dk});
          if (it == cells_.end()) continue;
          for (std::size_t s : it->second) f(s);
        }
  }

 private:
  double inv_h_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> cells_;
};

template <class T, class Accumulate>
std::vector<T> kernel_sum(std::span<const Vec3> targets, Sources sources, double h,
                          const Accumulate& accumulate) {
  if (!(h > 0.0)) throw DomainError("bandwidth must be > 0");
  std::vector<CellIndex> index;
  index.reserve(sources.size());
  for (const auto& b : sources) {
    check_block(b);
    index.emplace_back(b.position, h);
  }
  std::vector<T> out(targets.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < as_signed(targets.size()); ++t) {
    const Vec3 x = targets[static_cast<std::size_t>(t)];
    T total{};
    for (std::size_t b = 0; b < sources.size(); ++b) {
      T partial{};
      index[b].for_neighbours(x, [&](std::size_t s) {
        const double k = smoothing_kernel(norm(x - sources[b].position[s]), h);
        if (k != 0.0) accumulate(partial, sources[b], s, k);
      });
      total += partial;
    }
    out[static_cast<std::size_t>(t)] = total;
  }
  return out;
}

}  // namespace

RadialCharge::RadialCharge(std::span<const double> radii, std::span<const double> charges) {
  if (radii.size() != charges.size())
    throw std::invalid_argument("RadialCharge: radii and charges lengths differ");
  std::vector<std::size_t> order(radii.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return radii[a] < radii[b]; });
  radii_.reserve(order.size());
  cumulative_.reserve(order.size());
  double acc = 0.0;
  for (std::size_t i : order) {
    radii_.push_back(radii[i]);
    acc += charges[i];
    cumulative_.push_back(acc);
  }
}

double RadialCharge::enclosed(double r) const {
  if (!(r > 0.0)) throw DomainError("enclosed charge requires r > 0");
  const auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
  const auto n = static_cast<std::size_t>(it - radii_.begin());
  return n == 0 ? 0.0 : cumulative_[n - 1];
}

double RadialCharge::enclosed_below(double r) const {
  const auto it = std::lower_bound(radii_.begin(), radii_.end(), r);
  const auto n = static_cast<std::size_t>(it - radii_.begin());
  return n == 0 ? 0.0 : cumulative_[n - 1];
}

double enclosed_charge(std::span<const double> sorted_radii, std::span<const double> weights,
                       double charge, double r) {
  if (!(r > 0.0)) throw DomainError("enclosed charge requires r > 0");
  if (sorted_radii.size() != weights.size())
    throw std::invalid_argument("enclosed_charge: radii and weights lengths differ");
  const auto it = std::upper_bound(sorted_radii.begin(), sorted_radii.end(), r);
  double total = 0.0;
  for (auto w = weights.begin(); w != weights.begin() + (it - sorted_radii.begin()); ++w) total += *w;
  return charge * total;
}

double spherical_field(double enclosed, double r) {
  if (!(r > 0.0)) throw DomainError("spherical field requires r > 0");
  return enclosed * kInvFourPi / (r * r);
}

std::vector<Vec3> softened_field_sum(std::span<const Vec3> targets, Sources sources, double eps) {
  for (const auto& b : sources) check_block(b);
  const double eps2 = eps * eps;
  std::atomic<bool> singular{false};
  std::vector<Vec3> out(targets.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < as_signed(targets.size()); ++t) {
    Vec3 total;
    for (const auto& b : sources)
      total += field_from_block(targets[static_cast<std::size_t>(t)], b, eps2, kNoSkip, singular);
    out[static_cast<std::size_t>(t)] = kInvFourPi * total;
  }
  if (singular) throw SingularityError("coincident target and source with zero softening");
  return out;
}

std::vector<Mat3> softened_gradient_sum(std::span<const Vec3> targets, Sources sources, double eps) {
  for (const auto& b : sources) check_block(b);
  const double eps2 = eps * eps;
  std::atomic<bool> singular{false};
  std::vector<Mat3> out(targets.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < as_signed(targets.size()); ++t) {
    Mat3 total;
    for (const auto& b : sources)
      total += gradient_from_block(targets[static_cast<std::size_t>(t)], b, eps2, kNoSkip, singular);
    total *= kInvFourPi;
    out[static_cast<std::size_t>(t)] = total;
  }
  if (singular) throw SingularityError("coincident target and source with zero softening");
  return out;
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> flatten(Sources sources) {
  std::vector<std::pair<std::size_t, std::size_t>> flat;
  for (std::size_t b = 0; b < sources.size(); ++b) {
    check_block(sources[b]);
    for (std::size_t i = 0; i < sources[b].position.size(); ++i) flat.emplace_back(b, i);
  }
  return flat;
}

}  // namespace

std::vector<Vec3> field_at_sources(Sources sources, double eps) {
  const auto flat = flatten(sources);
  const double eps2 = eps * eps;
  std::atomic<bool> singular{false};
  std::vector<Vec3> out(flat.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < as_signed(flat.size()); ++t) {
    const auto [tb, ti] = flat[static_cast<std::size_t>(t)];
    const Vec3 x = sources[tb].position[ti];
    Vec3 total;
    for (std::size_t bi = 0; bi < sources.size(); ++bi)
      total += field_from_block(x, sources[bi], eps2, bi == tb ? ti : kNoSkip, singular);
    out[static_cast<std::size_t>(t)] = kInvFourPi * total;
  }
  if (singular) throw SingularityError("coincident particles with zero softening");
  return out;
}

std::vector<Mat3> gradient_at_sources(Sources sources, double eps) {
  const auto flat = flatten(sources);
  const double eps2 = eps * eps;
  std::atomic<bool> singular{false};
  std::vector<Mat3> out(flat.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < as_signed(flat.size()); ++t) {
    const auto [tb, ti] = flat[static_cast<std::size_t>(t)];
    const Vec3 x = sources[tb].position[ti];
    Mat3 total;
    for (std::size_t bi = 0; bi < sources.size(); ++bi)
      total += gradient_from_block(x, sources[bi], eps2, bi == tb ? ti : kNoSkip, singular);
    total *= kInvFourPi;
    out[static_cast<std::size_t>(t)] = total;
  }
  if (singular) throw SingularityError("coincident particles with zero softening");
  return out;
}

double softened_pair_energy(Sources sources, double eps) {
  const auto flat = flatten(sources);
  const double eps2 = eps * eps;
  std::atomic<bool> singular{false};
  std::vector<double> energy(flat.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < as_signed(flat.size()); ++t) {
    const auto [tb, ti] = flat[static_cast<std::size_t>(t)];
    const Vec3 x = sources[tb].position[ti];
    double potential = 0.0;
    for (std::size_t bi = 0; bi < sources.size(); ++bi)
      potential += potential_from_block(x, sources[bi], eps2, bi == tb ? ti : kNoSkip, singular);
    energy[static_cast<std::size_t>(t)] = 0.5 * kInvFourPi * sources[tb].charge[ti] * potential;
  }
  if (singular) throw SingularityError("coincident particles with zero softening");
  return pairwise_sum<double>(0, energy.size(), [&](std::size_t i) { return energy[i]; });
}

double smoothing_kernel(double r, double h) {
  const double q = r / h;
  if (q >= 1.0) return 0.0;
  const double sigma = 8.0 / (std::numbers::pi * h * h * h);
  if (q <= 0.5) return sigma * (1.0 - 6.0 * q * q + 6.0 * q * q * q);
  const double u = 1.0 - q;
  return sigma * 2.0 * u * u * u;
}

std::vector<double> density_estimate(std::span<const Vec3> targets, Sources sources, double h) {
  return kernel_sum<double>(targets, sources, h,
                            [](double& acc, const SourceBlock& b, std::size_t s, double k) {
                              acc += b.charge[s] * k;
                            });
}

std::vector<Vec3> current_estimate(std::span<const Vec3> targets, Sources sources, double h) {
  for (const auto& b : sources)
    if (b.velocity.size() != b.position.size())
      throw std::invalid_argument("current_estimate: every source block needs velocities");
  return kernel_sum<Vec3>(targets, sources, h,
                          [](Vec3& acc, const SourceBlock& b, std::size_t s, double k) {
                            acc += (b.charge[s] * k) * b.velocity[s];
                          });
}

}  // namespace vsl
