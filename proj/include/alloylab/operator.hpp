#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "alloylab/disorder.hpp"
#include "alloylab/lattice.hpp"

namespace alloy {

// Dense real symmetric H = -Δ + λ diag(ω̃) on a periodic box, with the
// hopping-only Laplacian: -1 between distinct torus nearest neighbours and
// nothing on the diagonal.
struct HamiltonianMatrix {
  PeriodicBox box;
  std::size_t n = 0;
  std::vector<double> a;  // row-major n x n
  double coupling = 0.0;
  std::string provenance;

  double operator()(std::size_t i, std::size_t j) const noexcept { return a[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return a[i * n + j]; }

  // max_i Σ_j |A_ij|, an upper bound on the spectral norm.
  double norm_bound() const;
  double trace() const;
  double frobenius_squared() const;
  std::vector<double> diagonal() const;
};

HamiltonianMatrix assemble(const CorrelatedPotential& v, double coupling, const PeriodicBox& box);
HamiltonianMatrix assemble(const CorrelatedPotential& v, double coupling);

// Hamiltonian on `cube` with periodic conditions on the cube itself and the
// potential copied from v.
HamiltonianMatrix restrict(const CorrelatedPotential& v, double coupling, const PeriodicBox& cube);

// H + t |site><site|.
HamiltonianMatrix rank_one_shift(const HamiltonianMatrix& h, const Site& site, double t);
HamiltonianMatrix rank_one_shift(const HamiltonianMatrix& h, std::size_t site_index, double t);

// Upper-triangle triplets "i j value", zero-based, preceded by "# n <size>".
void write_triplets(const HamiltonianMatrix& h, std::ostream& out);

}  // namespace alloy
