#include "gaussflow/patch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "gaussflow/errors.hpp"

namespace gaussflow {

std::string to_string(Boundary b) {
  return b == Boundary::Periodic ? "periodic" : "fixed-affine";
}

Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  if (s == "fixed-affine") return Boundary::FixedAffine;
  throw DomainError("unknown boundary kind '" + s + "'");
}

GraphPatch::GraphPatch(int n, int m, std::vector<double> lo, std::vector<double> hi,
                       std::vector<int> grid, Boundary boundary, std::vector<double> values)
    : n_(n),
      m_(m),
      lo_(std::move(lo)),
      hi_(std::move(hi)),
      grid_(std::move(grid)),
      boundary_(boundary),
      values_(std::move(values)) {
  if (n_ < 1 || n_ > kMaxDim || m_ < 1 || m_ > kMaxDim) {
    throw DimensionError("patch dimensions must satisfy 1 <= n, m <= 6");
  }
  const auto dn = static_cast<std::size_t>(n_);
  if (lo_.size() != dn || hi_.size() != dn || grid_.size() != dn) {
    throw DimensionError("domain box and grid must have one entry per axis");
  }
  spacing_.resize(dn);
  stride_.resize(dn);
  node_count_ = 1;
  for (std::size_t a = 0; a < dn; ++a) {
    if (grid_[a] < kMinGridNodes) throw DomainError("grid needs at least 5 nodes per axis");
    if (!(hi_[a] > lo_[a])) throw DomainError("domain box must have hi > lo");
    const int cells = boundary_ == Boundary::Periodic ? grid_[a] : grid_[a] - 1;
    spacing_[a] = (hi_[a] - lo_[a]) / cells;
    node_count_ *= static_cast<std::size_t>(grid_[a]);
  }
  std::size_t s = 1;
  for (std::size_t a = dn; a-- > 0;) {
    stride_[a] = s;
    s *= static_cast<std::size_t>(grid_[a]);
  }
  if (values_.size() != node_count_ * static_cast<std::size_t>(m_)) {
    throw DimensionError("value array does not match grid size times codimension");
  }
}

GraphPatch GraphPatch::sample(int n, int m, std::vector<double> lo, std::vector<double> hi,
                              std::vector<int> grid, Boundary boundary, const Sampler& f) {
  std::size_t count = 1;
  for (int g : grid) count *= static_cast<std::size_t>(std::max(g, 0));
  GraphPatch patch(n, m, std::move(lo), std::move(hi), std::move(grid), boundary,
                   std::vector<double>(count * static_cast<std::size_t>(m), 0.0));
  std::vector<double> x(static_cast<std::size_t>(n));
  for (std::size_t node = 0; node < patch.node_count(); ++node) {
    for (int a = 0; a < n; ++a) x[static_cast<std::size_t>(a)] = patch.coord(node, a);
    f(x, std::span<double>(patch.values_).subspan(node * static_cast<std::size_t>(m),
                                                  static_cast<std::size_t>(m)));
  }
  return patch;
}

double GraphPatch::min_spacing() const {
  return *std::min_element(spacing_.begin(), spacing_.end());
}

std::vector<double> GraphPatch::coords(std::size_t node) const {
  std::vector<double> x(static_cast<std::size_t>(n_));
  for (int a = 0; a < n_; ++a) x[static_cast<std::size_t>(a)] = coord(node, a);
  return x;
}

double GraphPatch::at(std::span<const int> idx, int alpha) const {
  std::size_t flat = 0;
  for (int a = 0; a < n_; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    int i = idx[ua];
    const int g = grid_[ua];
    if (i < 0 || i >= g) {
      if (boundary_ == Boundary::Periodic) {
        i = ((i % g) + g) % g;
      } else {
        std::array<int, kMaxDim> tmp{};
        std::copy(idx.begin(), idx.end(), tmp.begin());
        const std::span<const int> view(tmp.data(), idx.size());
        const int edge = i < 0 ? 0 : g - 1;
        const int inner = i < 0 ? 1 : g - 2;
        tmp[ua] = edge;
        const double ue = at(view, alpha);
        tmp[ua] = inner;
        const double ui = at(view, alpha);
        const int dist = i < 0 ? -i : i - (g - 1);
        return ue + dist * (ue - ui);
      }
    }
    flat += static_cast<std::size_t>(i) * stride_[ua];
  }
  return values_[flat * static_cast<std::size_t>(m_) + static_cast<std::size_t>(alpha)];
}

std::size_t GraphPatch::neighbor(std::size_t node, int axis, int off, bool& in_range) const {
  const auto ua = static_cast<std::size_t>(axis);
  const int i = index(node, axis);
  int j = i + off;
  const int g = grid_[ua];
  if (j < 0 || j >= g) {
    if (boundary_ != Boundary::Periodic) {
      in_range = false;
      return node;
    }
    j = ((j % g) + g) % g;
  }
  return node + static_cast<std::size_t>(j) * stride_[ua] - static_cast<std::size_t>(i) * stride_[ua];
}

double GraphPatch::shifted(std::size_t node, int alpha, int axis, int off) const {
  bool ok = true;
  const std::size_t nb = neighbor(node, axis, off, ok);
  if (ok) return value(nb, alpha);
  std::array<int, kMaxDim> idx{};
  for (int a = 0; a < n_; ++a) idx[static_cast<std::size_t>(a)] = index(node, a);
  idx[static_cast<std::size_t>(axis)] += off;
  return at(std::span<const int>(idx.data(), static_cast<std::size_t>(n_)), alpha);
}

double GraphPatch::shifted2(std::size_t node, int alpha, int a, int off_a, int b,
                            int off_b) const {
  bool ok = true;
  std::size_t nb = neighbor(node, a, off_a, ok);
  if (ok) nb = neighbor(nb, b, off_b, ok);
  if (ok) return value(nb, alpha);
  std::array<int, kMaxDim> idx{};
  for (int k = 0; k < n_; ++k) idx[static_cast<std::size_t>(k)] = index(node, k);
  idx[static_cast<std::size_t>(a)] += off_a;
  idx[static_cast<std::size_t>(b)] += off_b;
  return at(std::span<const int>(idx.data(), static_cast<std::size_t>(n_)), alpha);
}

bool GraphPatch::is_interior(std::size_t node, int margin) const {
  if (boundary_ == Boundary::Periodic) return true;
  for (int a = 0; a < n_; ++a) {
    const int i = index(node, a);
    if (i < margin || i > grid_[static_cast<std::size_t>(a)] - 1 - margin) return false;
  }
  return true;
}

std::size_t GraphPatch::nearest_node(std::span<const double> x) const {
  std::size_t flat = 0;
  for (int a = 0; a < n_; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const long i = std::lround((x[ua] - lo_[ua]) / spacing_[ua]);
    const long c = std::clamp<long>(i, 0, grid_[ua] - 1);
    flat += static_cast<std::size_t>(c) * stride_[ua];
  }
  return flat;
}

GraphPatch GraphPatch::with_values(std::vector<double> values) const {
  return GraphPatch(n_, m_, lo_, hi_, grid_, boundary_, std::move(values));
}

void write_patch(std::ostream& os, const GraphPatch& patch) {
  os << std::setprecision(17);
  os << "gaussflow-patch 1\n";
  os << "n " << patch.n() << " m " << patch.m() << "\n";
  os << "boundary " << to_string(patch.boundary()) << "\n";
  os << "lo";
  for (double v : patch.lo()) os << ' ' << v;
  os << "\nhi";
  for (double v : patch.hi()) os << ' ' << v;
  os << "\ngrid";
  for (int g : patch.grid()) os << ' ' << g;
  os << "\ndata\n";
  const auto vals = patch.values();
  const auto m = static_cast<std::size_t>(patch.m());
  for (std::size_t node = 0; node < patch.node_count(); ++node) {
    for (std::size_t a = 0; a < m; ++a) {
      if (a) os << ' ';
      os << vals[node * m + a];
    }
    os << '\n';
  }
}

namespace {
void expect_token(std::istream& is, const std::string& want) {
  std::string tok;
  if (!(is >> tok) || tok != want) {
    throw DomainError("patch file: expected '" + want + "', got '" + tok + "'");
  }
}
}  // namespace

GraphPatch read_patch(std::istream& is) {
  expect_token(is, "gaussflow-patch");
  int version = 0;
  if (!(is >> version) || version != 1) throw DomainError("patch file: unsupported version");
  int n = 0, m = 0;
  expect_token(is, "n");
  is >> n;
  expect_token(is, "m");
  is >> m;
  if (!is || n < 1 || n > kMaxDim || m < 1 || m > kMaxDim) {
    throw DomainError("patch file: bad dimensions");
  }
  expect_token(is, "boundary");
  std::string b;
  is >> b;
  const Boundary boundary = boundary_from_string(b);
  const auto dn = static_cast<std::size_t>(n);
  std::vector<double> lo(dn), hi(dn);
  std::vector<int> grid(dn);
  expect_token(is, "lo");
  for (auto& v : lo) is >> v;
  expect_token(is, "hi");
  for (auto& v : hi) is >> v;
  expect_token(is, "grid");
  for (auto& g : grid) is >> g;
  expect_token(is, "data");
  if (!is) throw DomainError("patch file: truncated header");
  std::size_t count = 1;
  for (int g : grid) count *= static_cast<std::size_t>(std::max(g, 0));
  std::vector<double> values(count * static_cast<std::size_t>(m));
  for (auto& v : values) {
    if (!(is >> v)) throw DomainError("patch file: truncated data");
  }
  return GraphPatch(n, m, std::move(lo), std::move(hi), std::move(grid), boundary,
                    std::move(values));
}

void save_patch(const std::string& path, const GraphPatch& patch) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_patch(os, patch);
}

GraphPatch load_patch(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_patch(is);
}

}  // namespace gaussflow
