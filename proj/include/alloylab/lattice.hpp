#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace alloy {

inline constexpr int kMaxDimension = 8;

// A lattice point of Z^d with d <= kMaxDimension.
class Site {
 public:
  Site() = default;
  explicit Site(int dimension);
  Site(std::initializer_list<int> coords);

  int dimension() const noexcept { return dim_; }
  int& operator[](int axis) noexcept { return c_[static_cast<std::size_t>(axis)]; }
  int operator[](int axis) const noexcept { return c_[static_cast<std::size_t>(axis)]; }

  friend bool operator==(const Site& a, const Site& b) noexcept;
  friend Site operator+(Site a, const Site& b) noexcept;
  friend Site operator-(Site a, const Site& b) noexcept;

  // Max-norm of the coordinate vector.
  int max_norm() const noexcept;
  double euclidean_norm() const noexcept;
  std::string to_string() const;

 private:
  std::array<int, kMaxDimension> c_{};
  int dim_ = 0;
};

// Hypercube of `side` sites per axis whose lowest corner is `origin`, with
// periodic identification along every axis. The centred box Λ_L = [-L, L]^d
// is make_box(d, L); sub-cubes of a decomposition reuse the same type with
// their own corner and side.
class PeriodicBox {
 public:
  PeriodicBox() = default;
  PeriodicBox(int dimension, int side, Site origin);

  int dimension() const noexcept { return dim_; }
  int side() const noexcept { return side_; }
  std::size_t volume() const noexcept { return volume_; }
  const Site& origin() const noexcept { return origin_; }

  // L when the box is centred (side = 2L+1, origin = -L); -1 otherwise.
  int half_side() const noexcept;

  bool contains(const Site& x) const noexcept;
  bool contains(const PeriodicBox& inner) const noexcept;

  // Linear index with axis 0 running fastest.
  std::size_t index(const Site& x) const;
  Site site(std::size_t i) const;

  // Torus max-norm distance.
  int torus_distance(const Site& x, const Site& y) const;
  int torus_distance_index(std::size_t i, std::size_t j) const;

  // Distance in Z^d from x to the nearest site outside this cube.
  int distance_to_complement(const Site& x) const;

  // Indices of the distinct torus nearest neighbours of site i.
  std::vector<std::size_t> neighbours(std::size_t i) const;

  friend bool operator==(const PeriodicBox& a, const PeriodicBox& b) noexcept;

 private:
  int dim_ = 0;
  int side_ = 0;
  std::size_t volume_ = 0;
  Site origin_;
};

PeriodicBox make_box(int dimension, int half_side);

// Box enlarged by `margin` sites on every face (no periodic identification
// implied for the extra layer; used to hold the disorder field).
PeriodicBox enlarge(const PeriodicBox& box, int margin);

struct DecompositionParams {
  double rho = 0.0;         // ρ̃
  double alpha = 0.0;
  double beta = 0.0;
  double beta_prime = 0.0;
};

struct Admissibility {
  bool ok = false;
  double alpha_min = 0.0;  // α_{d,ρ̃}
  std::vector<std::string> violations;
};

double alpha_threshold(int dimension, double rho);
Admissibility admissible_params(int dimension, const DecompositionParams& p);

// ℓ = max(1, floor(L^β)), ℓ' = max(1, floor(L^β')).
int cube_side_for(int half_side, double beta);

struct BoxDecomposition {
  PeriodicBox parent;
  int cube_side = 0;  // ℓ
  int gap = 0;        // ℓ'
  int per_axis = 0;
  std::vector<Site> corners;  // γ_j

  std::size_t count() const noexcept { return corners.size(); }
  PeriodicBox cube(std::size_t j) const;
  std::size_t uncovered_volume() const;
  // |Λ \ ∪ cubes| / (|Λ| ℓ'/ℓ), the constant of the leftover-volume bound.
  double leftover_ratio() const;
  // Sites of the grid cell layout left over per axis: s - per_axis (ℓ+ℓ').
  int grid_remainder() const;
};

BoxDecomposition decompose(const PeriodicBox& box, int cube_side, int gap);
BoxDecomposition decompose(const PeriodicBox& box, const DecompositionParams& params);

}  // namespace alloy
