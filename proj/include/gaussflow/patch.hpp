#pragma once

// A graph u: Omega -> R^m sampled on a regular grid over a box in R^n,
// carrying the submanifold F(x) = (x, u(x)) of R^{n+m}.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gaussflow {

enum class Boundary { Periodic, FixedAffine };

inline constexpr int kMaxDim = 6;
inline constexpr int kMinGridNodes = 5;

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

class GraphPatch {
 public:
  /// Fills u from a closure evaluated at every node: f(x, u_out).
  using Sampler = std::function<void(std::span<const double>, std::span<double>)>;

  /// `values` is node-major: values[node * m + alpha]. Periodic grids store
  /// nodes lo + i*h for i < grid (hi identified with lo); fixed-affine grids
  /// include both end points.
  GraphPatch(int n, int m, std::vector<double> lo, std::vector<double> hi,
             std::vector<int> grid, Boundary boundary, std::vector<double> values);

  static GraphPatch sample(int n, int m, std::vector<double> lo, std::vector<double> hi,
                           std::vector<int> grid, Boundary boundary, const Sampler& f);

  int n() const noexcept { return n_; }
  int m() const noexcept { return m_; }
  Boundary boundary() const noexcept { return boundary_; }
  const std::vector<double>& lo() const noexcept { return lo_; }
  const std::vector<double>& hi() const noexcept { return hi_; }
  const std::vector<int>& grid() const noexcept { return grid_; }
  std::size_t node_count() const noexcept { return node_count_; }
  double spacing(int axis) const { return spacing_[static_cast<std::size_t>(axis)]; }
  double min_spacing() const;
  std::size_t stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> mutable_values() noexcept { return values_; }
  double value(std::size_t node, int alpha) const {
    return values_[node * static_cast<std::size_t>(m_) + static_cast<std::size_t>(alpha)];
  }

  /// Grid index along `axis` of a flat node index.
  int index(std::size_t node, int axis) const {
    return static_cast<int>((node / stride_[static_cast<std::size_t>(axis)]) %
                            static_cast<std::size_t>(grid_[static_cast<std::size_t>(axis)]));
  }
  double coord(std::size_t node, int axis) const {
    return lo_[static_cast<std::size_t>(axis)] + index(node, axis) * spacing(axis);
  }
  std::vector<double> coords(std::size_t node) const;

  /// Value of u^alpha at a (possibly out-of-range) grid index. Periodic grids
  /// wrap; fixed-affine grids extrapolate linearly from the two boundary
  /// layers, one axis at a time.
  double at(std::span<const int> idx, int alpha) const;

  /// Value at the node displaced by `off` along `axis`.
  double shifted(std::size_t node, int alpha, int axis, int off) const;
  /// Value at the node displaced by `off_a` along `a` and `off_b` along `b`.
  double shifted2(std::size_t node, int alpha, int a, int off_a, int b, int off_b) const;

  /// True when every stencil of half-width `margin` around the node stays
  /// on the grid. Periodic grids have no boundary.
  bool is_interior(std::size_t node, int margin = 1) const;

  /// Flat index of the node nearest to x (clamped to the grid).
  std::size_t nearest_node(std::span<const double> x) const;

  GraphPatch with_values(std::vector<double> values) const;

 private:
  std::size_t neighbor(std::size_t node, int axis, int off, bool& in_range) const;

  int n_;
  int m_;
  std::vector<double> lo_, hi_;
  std::vector<int> grid_;
  Boundary boundary_;
  std::vector<double> values_;
  std::vector<double> spacing_;
  std::vector<std::size_t> stride_;
  std::size_t node_count_ = 0;
};

/// Text grid format:
///   gaussflow-patch 1
///   n <n> m <m>
///   boundary periodic|fixed-affine
///   lo <n reals>
///   hi <n reals>
///   grid <n ints>
///   data
///   <one line per node in row-major order (last axis fastest), m reals>
/// Reals are written with 17 significant digits, so a round trip is exact.
void write_patch(std::ostream& os, const GraphPatch& patch);
GraphPatch read_patch(std::istream& is);
void save_patch(const std::string& path, const GraphPatch& patch);
GraphPatch load_patch(const std::string& path);

}  // namespace gaussflow
