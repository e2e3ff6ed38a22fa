#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace elastodual {

/// Uniform grid on [0, L]. Node i sits at i*h; the last node is exactly L.
class Grid1D {
 public:
  Grid1D(double length, std::size_t n_elem);

  double length() const noexcept { return length_; }
  std::size_t n_elem() const noexcept { return n_elem_; }
  std::size_t n_nodes() const noexcept { return n_elem_ + 1; }
  double h() const noexcept { return h_; }

  double node(std::size_t i) const noexcept;
  double midpoint(std::size_t e) const noexcept;

 private:
  double length_;
  std::size_t n_elem_;
  double h_;
};

namespace detail {

// Value storage shared by the nodal and elementwise field types. The tag keeps
// the two from mixing silently.
template <class Tag>
class Field {
 public:
  Field() = default;
  explicit Field(std::size_t n, double value = 0.0) : values_(n, value) {}
  Field(std::initializer_list<double> init) : values_(init) {}
  explicit Field(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s) noexcept {
    for (auto& v : values_) v *= s;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend Field operator*(double s, Field a) { return a *= s; }

  bool operator==(const Field&) const = default;

 private:
  std::vector<double> values_;
};

void require_same_size(std::size_t a, std::size_t b, const char* what);

template <class Tag>
Field<Tag>& Field<Tag>::operator+=(const Field& o) {
  require_same_size(size(), o.size(), "field addition");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

template <class Tag>
Field<Tag>& Field<Tag>::operator-=(const Field& o) {
  require_same_size(size(), o.size(), "field subtraction");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

struct NodalTag {};
struct ElemTag {};

}  // namespace detail

/// Continuous piecewise-linear function, one value per node.
using NodalField = detail::Field<detail::NodalTag>;
/// Piecewise-constant function, one value per element (midpoint samples).
using ElemField = detail::Field<detail::ElemTag>;

NodalField sample_nodes(const Grid1D& g, const std::function<double(double)>& f);
ElemField sample_midpoints(const Grid1D& g, const std::function<double(double)>& f);

/// Elementwise slope (u[e+1] - u[e]) / h.
ElemField derivative(const NodalField& u, const Grid1D& g);

/// Average of the two end values of each element.
ElemField midpoint_values(const NodalField& u, const Grid1D& g);

/// One-point midpoint rule: sum_e f[e] * h.
double integrate(const ElemField& f, const Grid1D& g);

/// max_e (max(|u[e]|, |u[e+1]|) + |u_x[e]|).
double norm_U(const NodalField& u, const Grid1D& g);

double norm_V(const ElemField& f) noexcept;
double norm_inf(const NodalField& u) noexcept;

ElemField pointwise_product(const ElemField& a, const ElemField& b);

}  // namespace elastodual
