#include "elastodual/mesh1d.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "elastodual/errors.hpp"

namespace elastodual {

namespace detail {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw SizeMismatch(std::string(what) + ": size " + std::to_string(a) + " vs " +
                       std::to_string(b));
  }
}

}  // namespace detail

Grid1D::Grid1D(double length, std::size_t n_elem)
    : length_(length), n_elem_(n_elem), h_(length / static_cast<double>(n_elem)) {
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw InvalidModel("grid length must be positive");
  }
  if (n_elem < 2) throw InvalidModel("grid needs at least 2 elements");
}

double Grid1D::node(std::size_t i) const noexcept {
  if (i >= n_elem_) return length_;
  return static_cast<double>(i) * h_;
}

double Grid1D::midpoint(std::size_t e) const noexcept {
  return (static_cast<double>(e) + 0.5) * h_;
}

NodalField sample_nodes(const Grid1D& g, const std::function<double(double)>& f) {
  NodalField u(g.n_nodes());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = f(g.node(i));
  return u;
}

ElemField sample_midpoints(const Grid1D& g, const std::function<double(double)>& f) {
  ElemField v(g.n_elem());
  for (std::size_t e = 0; e < v.size(); ++e) v[e] = f(g.midpoint(e));
  return v;
}

ElemField derivative(const NodalField& u, const Grid1D& g) {
  detail::require_same_size(u.size(), g.n_nodes(), "derivative");
  ElemField d(g.n_elem());
  for (std::size_t e = 0; e < d.size(); ++e) d[e] = (u[e + 1] - u[e]) / g.h();
  return d;
}

ElemField midpoint_values(const NodalField& u, const Grid1D& g) {
  detail::require_same_size(u.size(), g.n_nodes(), "midpoint_values");
  ElemField m(g.n_elem());
  for (std::size_t e = 0; e < m.size(); ++e) m[e] = 0.5 * (u[e] + u[e + 1]);
  return m;
}

double integrate(const ElemField& f, const Grid1D& g) {
  detail::require_same_size(f.size(), g.n_elem(), "integrate");
  double sum = 0.0;
  for (double v : f) sum += v;
  return sum * g.h();
}

double norm_U(const NodalField& u, const Grid1D& g) {
  const ElemField ux = derivative(u, g);
  double best = 0.0;
  for (std::size_t e = 0; e < ux.size(); ++e) {
    const double value = std::max(std::abs(u[e]), std::abs(u[e + 1])) + std::abs(ux[e]);
    best = std::max(best, value);
  }
  return best;
}

double norm_V(const ElemField& f) noexcept {
  double best = 0.0;
  for (double v : f) best = std::max(best, std::abs(v));
  return best;
}

double norm_inf(const NodalField& u) noexcept {
  double best = 0.0;
  for (double v : u) best = std::max(best, std::abs(v));
  return best;
}

ElemField pointwise_product(const ElemField& a, const ElemField& b) {
  detail::require_same_size(a.size(), b.size(), "pointwise_product");
  ElemField p(a.size());
  for (std::size_t e = 0; e < a.size(); ++e) p[e] = a[e] * b[e];
  return p;
}

}  // namespace elastodual
