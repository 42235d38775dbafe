#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "alloylab/lattice.hpp"
#include "alloylab/operator.hpp"

namespace alloy {

// Eigenvalues E_j in ascending order, optionally with orthonormal
// eigenvectors. A spectrum may cover only a window (lo, hi]; `below_window`
// then counts the eigenvalues <= lo that were not computed.
struct Spectrum {
  PeriodicBox box;
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<double> vectors;  // column-major: vector j occupies [j*dim, (j+1)*dim)
  double window_lo = -std::numeric_limits<double>::infinity();
  double window_hi = std::numeric_limits<double>::infinity();
  std::size_t below_window = 0;
  double max_residual = 0.0;  // max_j ||H v_j - E_j v_j||_2, when vectors are present
  double norm_bound = 0.0;

  bool has_vectors() const noexcept { return !vectors.empty(); }
  bool complete() const noexcept { return values.size() == dim; }
  std::span<const double> vector(std::size_t j) const;
};

enum class SolverKind { automatic, dense, chain };

// Full dense decomposition (Householder tridiagonalisation + implicit QL).
Spectrum eigh(const HamiltonianMatrix& h);
Spectrum eigvalsh(const HamiltonianMatrix& h);

// Eigenpairs with E in (lo, hi]. `automatic` uses the periodic-chain solver
// for d = 1 and the dense solver otherwise. The chain solver bisects on
// inertia counts, so an exactly degenerate eigenvalue is only resolved to
// about 1e-8; simple eigenvalues reach rounding level.
Spectrum eigh_window(const HamiltonianMatrix& h, double lo, double hi, bool want_vectors,
                     SolverKind solver = SolverKind::automatic);

// #{j : E_j <= e} without computing eigenvectors.
std::size_t count_at_most(const HamiltonianMatrix& h, double e, SolverKind solver = SolverKind::automatic);

// #{j : a < E_j <= b}; the interval must lie inside the computed window.
std::size_t count_in(const Spectrum& spec, double a, double b);

// Σ_{a < E_j <= b} |φ_j(site)|^2.
double projector_diagonal(const Spectrum& spec, std::size_t site, double a, double b);
double projector_diagonal(const Spectrum& spec, const Site& site, double a, double b);

// Symmetric tridiagonal problem in place: d (diagonal), e (sub-diagonal with
// e[0] unused), optional z (row-major, rows become eigenvectors).
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, std::vector<double>* z, std::size_t n);

// Real symmetric matrix with the structure of a 1-d periodic chain: diagonal
// d_i and a constant hopping between i and i+1 mod n.
class PeriodicChain {
 public:
  PeriodicChain(std::vector<double> diagonal, double hopping);
  static PeriodicChain from(const HamiltonianMatrix& h);

  std::size_t size() const noexcept { return d_.size(); }

  // #{j : E_j < e} by Sylvester inertia of an LDL^T factorisation of H - e.
  std::size_t count_below(double e) const;
  std::vector<double> eigenvalues_in(double lo, double hi) const;
  // Inverse iteration for the eigenvectors of the given (sorted) eigenvalues.
  std::vector<double> eigenvectors(std::span<const double> values) const;
  void apply(std::span<const double> x, std::span<double> y) const;
  double norm_bound() const;

 private:
  std::vector<double> d_;
  double t_;
};

}  // namespace alloy
