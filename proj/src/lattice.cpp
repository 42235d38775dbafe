#include "alloylab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "alloylab/error.hpp"

namespace alloy {

Site::Site(int dimension) : dim_(dimension) {
  if (dimension < 1 || dimension > kMaxDimension)
    fail(ErrorCode::sizing, "dimension must lie in [1, " + std::to_string(kMaxDimension) + "]");
}

Site::Site(std::initializer_list<int> coords) : dim_(static_cast<int>(coords.size())) {
  if (dim_ < 1 || dim_ > kMaxDimension)
    fail(ErrorCode::sizing, "site dimension must lie in [1, " + std::to_string(kMaxDimension) + "]");
  std::copy(coords.begin(), coords.end(), c_.begin());
}

bool operator==(const Site& a, const Site& b) noexcept {
  if (a.dim_ != b.dim_) return false;
  for (int k = 0; k < a.dim_; ++k)
    if (a[k] != b[k]) return false;
  return true;
}

Site operator+(Site a, const Site& b) noexcept {
  for (int k = 0; k < a.dim_; ++k) a[k] += b[k];
  return a;
}

Site operator-(Site a, const Site& b) noexcept {
  for (int k = 0; k < a.dim_; ++k) a[k] -= b[k];
  return a;
}

int Site::max_norm() const noexcept {
  int m = 0;
  for (int k = 0; k < dim_; ++k) m = std::max(m, std::abs(c_[static_cast<std::size_t>(k)]));
  return m;
}

double Site::euclidean_norm() const noexcept {
  double s = 0.0;
  for (int k = 0; k < dim_; ++k) {
    const double v = c_[static_cast<std::size_t>(k)];
    s += v * v;
  }
  return std::sqrt(s);
}

std::string Site::to_string() const {
  std::ostringstream os;
  os << '(';
  for (int k = 0; k < dim_; ++k) os << (k ? "," : "") << c_[static_cast<std::size_t>(k)];
  os << ')';
  return os.str();
}

PeriodicBox::PeriodicBox(int dimension, int side, Site origin)
    : dim_(dimension), side_(side), origin_(origin) {
  if (dimension < 1 || dimension > kMaxDimension)
    fail(ErrorCode::sizing, "dimension must lie in [1, " + std::to_string(kMaxDimension) + "]");
  if (side < 1) fail(ErrorCode::sizing, "box side must be positive");
  if (origin.dimension() != dimension) fail(ErrorCode::geometry, "origin dimension mismatch");
  // Dense operators hold volume^2 doubles, so the volume itself must stay far
  // below the address space.
  const auto limit = static_cast<std::size_t>(std::numeric_limits<std::ptrdiff_t>::max()) / sizeof(double);
  std::size_t v = 1;
  for (int k = 0; k < dimension; ++k) {
    if (v > limit / static_cast<std::size_t>(side))
      fail(ErrorCode::sizing, "box volume exceeds addressable size");
    v *= static_cast<std::size_t>(side);
  }
  volume_ = v;
}

int PeriodicBox::half_side() const noexcept {
  if (side_ % 2 == 0) return -1;
  const int L = (side_ - 1) / 2;
  for (int k = 0; k < dim_; ++k)
    if (origin_[k] != -L) return -1;
  return L;
}

bool PeriodicBox::contains(const Site& x) const noexcept {
  if (x.dimension() != dim_) return false;
  for (int k = 0; k < dim_; ++k)
    if (x[k] < origin_[k] || x[k] >= origin_[k] + side_) return false;
  return true;
}

bool PeriodicBox::contains(const PeriodicBox& inner) const noexcept {
  if (inner.dim_ != dim_) return false;
  for (int k = 0; k < dim_; ++k) {
    if (inner.origin_[k] < origin_[k]) return false;
    if (inner.origin_[k] + inner.side_ > origin_[k] + side_) return false;
  }
  return true;
}

std::size_t PeriodicBox::index(const Site& x) const {
  if (!contains(x)) fail(ErrorCode::index, "site " + x.to_string() + " outside box");
  std::size_t i = 0;
  for (int k = dim_ - 1; k >= 0; --k)
    i = i * static_cast<std::size_t>(side_) + static_cast<std::size_t>(x[k] - origin_[k]);
  return i;
}

Site PeriodicBox::site(std::size_t i) const {
  if (i >= volume_) fail(ErrorCode::index, "linear index " + std::to_string(i) + " outside box");
  Site x(dim_);
  const auto s = static_cast<std::size_t>(side_);
  for (int k = 0; k < dim_; ++k) {
    x[k] = origin_[k] + static_cast<int>(i % s);
    i /= s;
  }
  return x;
}

int PeriodicBox::torus_distance(const Site& x, const Site& y) const {
  if (!contains(x)) fail(ErrorCode::index, "site " + x.to_string() + " outside box");
  if (!contains(y)) fail(ErrorCode::index, "site " + y.to_string() + " outside box");
  int d = 0;
  for (int k = 0; k < dim_; ++k) {
    const int delta = std::abs(x[k] - y[k]);
    d = std::max(d, std::min(delta, side_ - delta));
  }
  return d;
}

int PeriodicBox::torus_distance_index(std::size_t i, std::size_t j) const {
  if (i >= volume_ || j >= volume_) fail(ErrorCode::index, "linear index outside box");
  const auto s = static_cast<std::size_t>(side_);
  int d = 0;
  for (int k = 0; k < dim_; ++k) {
    const int delta = std::abs(static_cast<int>(i % s) - static_cast<int>(j % s));
    d = std::max(d, std::min(delta, side_ - delta));
    i /= s;
    j /= s;
  }
  return d;
}

int PeriodicBox::distance_to_complement(const Site& x) const {
  if (!contains(x)) return 0;
  int d = std::numeric_limits<int>::max();
  for (int k = 0; k < dim_; ++k) {
    const int lo = x[k] - origin_[k] + 1;
    const int hi = origin_[k] + side_ - x[k];
    d = std::min({d, lo, hi});
  }
  return d;
}

std::vector<std::size_t> PeriodicBox::neighbours(std::size_t i) const {
  std::vector<std::size_t> out;
  if (side_ == 1) return out;
  const auto s = static_cast<std::size_t>(side_);
  std::size_t stride = 1;
  for (int k = 0; k < dim_; ++k) {
    const std::size_t c = (i / stride) % s;
    const std::size_t up = (c + 1) % s;
    const std::size_t down = (c + s - 1) % s;
    out.push_back(i - c * stride + up * stride);
    if (down != up) out.push_back(i - c * stride + down * stride);
    stride *= s;
  }
  return out;
}

bool operator==(const PeriodicBox& a, const PeriodicBox& b) noexcept {
  return a.dim_ == b.dim_ && a.side_ == b.side_ && a.origin_ == b.origin_;
}

PeriodicBox make_box(int dimension, int half_side) {
  if (dimension < 1) fail(ErrorCode::domain, "dimension must be positive");
  if (half_side < 0) fail(ErrorCode::domain, "half-side must be non-negative");
  if (half_side > (std::numeric_limits<int>::max() - 1) / 2)
    fail(ErrorCode::sizing, "half-side too large");
  Site origin(dimension);
  for (int k = 0; k < dimension; ++k) origin[k] = -half_side;
  return PeriodicBox(dimension, 2 * half_side + 1, origin);
}

PeriodicBox enlarge(const PeriodicBox& box, int margin) {
  if (margin < 0) fail(ErrorCode::domain, "enlargement margin must be non-negative");
  Site origin = box.origin();
  for (int k = 0; k < box.dimension(); ++k) origin[k] -= margin;
  return PeriodicBox(box.dimension(), box.side() + 2 * margin, origin);
}

double alpha_threshold(int dimension, double rho) {
  return (1.0 + rho) * (dimension + 1.0) / (dimension + 2.0);
}

Admissibility admissible_params(int dimension, const DecompositionParams& p) {
  Admissibility a;
  a.alpha_min = alpha_threshold(dimension, p.rho);
  auto check = [&a](bool cond, const std::string& what) {
    if (!cond) a.violations.push_back(what);
  };
  const bool finite = std::isfinite(p.rho) && std::isfinite(p.alpha) && std::isfinite(p.beta) &&
                      std::isfinite(p.beta_prime);
  check(finite, "all parameters must be finite");
  check(dimension >= 1, "dimension must be positive");
  if (finite && dimension >= 1) {
    check(p.rho >= 0.0, "rho >= 0");
    check(p.rho < 1.0 / (1.0 + dimension), "rho < 1/(1+d)");
    check(p.beta_prime > 0.0, "beta' > 0");
    check(p.beta_prime < p.beta, "beta' < beta");
    check(p.beta < 1.0, "beta < 1");
    check(p.alpha > a.alpha_min, "alpha > alpha_{d,rho} = " + std::to_string(a.alpha_min));
    check(p.alpha < 1.0, "alpha < 1");
    check(1.0 + p.beta < 2.0 * p.alpha / (1.0 + p.rho), "1 + beta < 2 alpha / (1 + rho)");
  }
  a.ok = a.violations.empty();
  return a;
}

int cube_side_for(int half_side, double beta) {
  if (half_side < 1) return 1;
  return std::max(1, static_cast<int>(std::floor(std::pow(static_cast<double>(half_side), beta))));
}

PeriodicBox BoxDecomposition::cube(std::size_t j) const {
  if (j >= corners.size()) fail(ErrorCode::index, "cube index out of range");
  return PeriodicBox(parent.dimension(), cube_side, corners[j]);
}

std::size_t BoxDecomposition::uncovered_volume() const {
  std::size_t cube_volume = 1;
  for (int k = 0; k < parent.dimension(); ++k) cube_volume *= static_cast<std::size_t>(cube_side);
  return parent.volume() - corners.size() * cube_volume;
}

double BoxDecomposition::leftover_ratio() const {
  const double scale = static_cast<double>(parent.volume()) * gap / cube_side;
  return static_cast<double>(uncovered_volume()) / scale;
}

int BoxDecomposition::grid_remainder() const {
  return parent.side() - per_axis * (cube_side + gap);
}

BoxDecomposition decompose(const PeriodicBox& box, int cube_side, int gap) {
  if (cube_side < 1 || gap < 1) fail(ErrorCode::domain, "cube side and gap must be positive");
  const int pitch = cube_side + gap;
  const int per_axis = box.side() / pitch;
  if (per_axis == 0)
    fail(ErrorCode::degenerate_decomposition,
         "degenerate decomposition: cube side + gap = " + std::to_string(pitch) + " exceeds box side " +
             std::to_string(box.side()));
  BoxDecomposition dec;
  dec.parent = box;
  dec.cube_side = cube_side;
  dec.gap = gap;
  dec.per_axis = per_axis;
  const int d = box.dimension();
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(per_axis);
  dec.corners.reserve(total);
  for (std::size_t c = 0; c < total; ++c) {
    Site corner(d);
    std::size_t rest = c;
    for (int k = 0; k < d; ++k) {
      const int slot = static_cast<int>(rest % static_cast<std::size_t>(per_axis));
      rest /= static_cast<std::size_t>(per_axis);
      corner[k] = box.origin()[k] + gap + slot * pitch;
    }
    dec.corners.push_back(corner);
  }
  return dec;
}

BoxDecomposition decompose(const PeriodicBox& box, const DecompositionParams& params) {
  const auto adm = admissible_params(box.dimension(), params);
  if (!adm.ok) {
    std::string msg = "inadmissible decomposition parameters:";
    for (const auto& v : adm.violations) msg += " [" + v + "]";
    fail(ErrorCode::domain, msg);
  }
  const int L = box.half_side();
  if (L < 0) fail(ErrorCode::geometry, "parameter-driven decomposition needs a centred box");
  return decompose(box, cube_side_for(L, params.beta), cube_side_for(L, params.beta_prime));
}

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::index: return "index";
    case ErrorCode::sizing: return "sizing";
    case ErrorCode::geometry: return "geometry";
    case ErrorCode::degenerate_decomposition: return "degenerate_decomposition";
    case ErrorCode::invalid_potential: return "invalid_potential";
    case ErrorCode::non_invertible_multiplier: return "non_invertible_multiplier";
    case ErrorCode::torus_resonance: return "torus_resonance";
    case ErrorCode::assumption_failure: return "assumption_failure";
    case ErrorCode::non_convergence: return "non_convergence";
    case ErrorCode::provenance: return "provenance";
    case ErrorCode::reference_energy: return "reference_energy";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace alloy
