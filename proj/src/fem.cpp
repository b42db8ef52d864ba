// SPDX-License-Identifier: Apache-2.0
#include "semilin/fem.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <utility>

#include "semilin/error.hpp"

namespace semilin::fem {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

double distance(const Point& a, const Point& b) { return std::hypot(b[0] - a[0], b[1] - a[1]); }

std::pair<std::size_t, std::size_t> edge_key(std::size_t a, std::size_t b) { return std::minmax(a, b); }

}  // namespace

Mesh::Mesh(int dimension, std::vector<Point> nodes, std::vector<std::size_t> element_nodes,
           std::vector<std::size_t> facet_nodes)
    : dim_(dimension),
      nodes_(std::move(nodes)),
      element_nodes_(std::move(element_nodes)),
      facet_nodes_(std::move(facet_nodes)) {
  validate();
}

void Mesh::validate() {
  if (dim_ != 1 && dim_ != 2) throw invalid_argument(fmt::format("mesh dimension must be 1 or 2, got {}", dim_));
  if (element_nodes_.empty() || element_nodes_.size() % nodes_per_element() != 0) {
    throw invalid_argument("element connectivity is empty or not a multiple of the element size");
  }
  if (facet_nodes_.size() % nodes_per_facet() != 0) {
    throw invalid_argument("facet connectivity is not a multiple of the facet size");
  }
  for (std::size_t idx : element_nodes_) {
    if (idx >= nodes_.size()) throw invalid_argument(fmt::format("element node index {} out of range", idx));
  }
  for (std::size_t idx : facet_nodes_) {
    if (idx >= nodes_.size()) throw invalid_argument(fmt::format("facet node index {} out of range", idx));
  }

  h_ = 0.0;
  for (std::size_t e = 0; e < element_count(); ++e) {
    const double m = element_measure(e);
    if (!(m > 0.0)) throw invalid_argument(fmt::format("element {} is degenerate or negatively oriented", e));
    const auto el = element(e);
    for (std::size_t a = 0; a < el.size(); ++a) {
      for (std::size_t b = a + 1; b < el.size(); ++b) h_ = std::max(h_, distance(nodes_[el[a]], nodes_[el[b]]));
    }
  }

  // Facet -> owning element, via the (sub)simplex shared by both.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> owners;
  for (std::size_t e = 0; e < element_count(); ++e) {
    const auto el = element(e);
    if (dim_ == 1) {
      owners[{el[0], el[0]}].push_back(e);
      owners[{el[1], el[1]}].push_back(e);
    } else {
      for (std::size_t a = 0; a < 3; ++a) owners[edge_key(el[a], el[(a + 1) % 3])].push_back(e);
    }
  }

  facet_element_.assign(facet_count(), 0);
  on_boundary_.assign(nodes_.size(), false);
  std::size_t boundary_entities = 0;
  for (const auto& [key, list] : owners) {
    if (list.size() > 2) throw invalid_argument("non-manifold mesh: an edge or vertex has more than two elements");
    if (dim_ == 2 && list.size() == 1) ++boundary_entities;
    if (dim_ == 1 && list.size() == 1) ++boundary_entities;
  }
  for (std::size_t f = 0; f < facet_count(); ++f) {
    const auto fn = facet(f);
    const auto key = dim_ == 1 ? std::pair{fn[0], fn[0]} : edge_key(fn[0], fn[1]);
    const auto it = owners.find(key);
    if (it == owners.end() || it->second.size() != 1) {
      throw invalid_argument(fmt::format("boundary facet {} does not belong to exactly one element", f));
    }
    facet_element_[f] = it->second.front();
    for (std::size_t n : fn) on_boundary_[n] = true;
    if (dim_ == 2) {
      // Outward orientation: the opposite vertex lies to the left of the edge.
      const auto el = element(facet_element_[f]);
      const std::size_t opposite = *std::find_if(el.begin(), el.end(), [&](std::size_t n) {
        return n != fn[0] && n != fn[1];
      });
      if (!(signed_area(nodes_[fn[0]], nodes_[fn[1]], nodes_[opposite]) > 0.0)) {
        throw invalid_argument(fmt::format("boundary facet {} is not oriented counter-clockwise", f));
      }
    }
  }
  if (boundary_entities != facet_count()) {
    throw invalid_argument(fmt::format("mesh has {} free boundary entities but {} boundary facets", boundary_entities,
                                       facet_count()));
  }
}

double Mesh::element_measure(std::size_t e) const {
  const auto el = element(e);
  if (dim_ == 1) return nodes_[el[1]][0] - nodes_[el[0]][0];
  return signed_area(nodes_[el[0]], nodes_[el[1]], nodes_[el[2]]);
}

double Mesh::facet_measure(std::size_t f) const {
  if (dim_ == 1) return 1.0;  // counting measure on the two end points
  const auto fn = facet(f);
  return distance(nodes_[fn[0]], nodes_[fn[1]]);
}

double Mesh::measure() const {
  double total = 0.0;
  for (std::size_t e = 0; e < element_count(); ++e) total += element_measure(e);
  return total;
}

double Mesh::boundary_measure() const {
  double total = 0.0;
  for (std::size_t f = 0; f < facet_count(); ++f) total += facet_measure(f);
  return total;
}

bool Mesh::is_nonobtuse() const {
  if (dim_ == 1) return true;
  for (std::size_t e = 0; e < element_count(); ++e) {
    const auto el = element(e);
    for (std::size_t a = 0; a < 3; ++a) {
      const Point& p = nodes_[el[a]];
      const Point& q = nodes_[el[(a + 1) % 3]];
      const Point& r = nodes_[el[(a + 2) % 3]];
      const double d = (q[0] - p[0]) * (r[0] - p[0]) + (q[1] - p[1]) * (r[1] - p[1]);
      if (d < -1e-14 * distance(p, q) * distance(p, r)) return false;
    }
  }
  return true;
}

MeshPtr unit_interval_mesh(std::size_t n) {
  if (n == 0) throw invalid_argument("interval mesh needs at least one element");
  std::vector<Point> nodes(n + 1);
  for (std::size_t j = 0; j <= n; ++j) nodes[j] = {static_cast<double>(j) / static_cast<double>(n), 0.0};
  std::vector<std::size_t> elements;
  elements.reserve(2 * n);
  for (std::size_t e = 0; e < n; ++e) {
    elements.push_back(e);
    elements.push_back(e + 1);
  }
  return std::make_shared<const Mesh>(1, std::move(nodes), std::move(elements), std::vector<std::size_t>{0, n});
}

MeshPtr unit_square_mesh(std::size_t n) {
  if (n == 0) throw invalid_argument("square mesh needs at least one subdivision per side");
  const std::size_t side = n + 1;
  auto id = [side](std::size_t i, std::size_t j) { return j * side + i; };
  const double dn = static_cast<double>(n);

  std::vector<Point> nodes;
  nodes.reserve(side * side);
  for (std::size_t j = 0; j < side; ++j) {
    for (std::size_t i = 0; i < side; ++i) nodes.push_back({static_cast<double>(i) / dn, static_cast<double>(j) / dn});
  }

  std::vector<std::size_t> elements;
  elements.reserve(6 * n * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      elements.insert(elements.end(), {v00, v10, v11});
      elements.insert(elements.end(), {v00, v11, v01});
    }
  }

  std::vector<std::size_t> facets;
  facets.reserve(8 * n);
  for (std::size_t i = 0; i < n; ++i) facets.insert(facets.end(), {id(i, 0), id(i + 1, 0)});          // bottom
  for (std::size_t j = 0; j < n; ++j) facets.insert(facets.end(), {id(n, j), id(n, j + 1)});          // right
  for (std::size_t i = n; i > 0; --i) facets.insert(facets.end(), {id(i, n), id(i - 1, n)});          // top
  for (std::size_t j = n; j > 0; --j) facets.insert(facets.end(), {id(0, j), id(0, j - 1)});          // left
  return std::make_shared<const Mesh>(2, std::move(nodes), std::move(elements), std::move(facets));
}

FemFunction::FemFunction(MeshPtr mesh, Vector values) : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw invalid_argument("FemFunction without a mesh");
  if (values_.size() != mesh_->node_count()) {
    throw invalid_argument(
        fmt::format("FemFunction has {} values for a mesh of {} nodes", values_.size(), mesh_->node_count()));
  }
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j])) throw invariant_error(fmt::format("non-finite nodal value at node {}", j));
  }
}

FemFunction FemFunction::constant(MeshPtr mesh, double value) {
  const std::size_t n = mesh->node_count();
  return {std::move(mesh), Vector(n, value)};
}

FemFunction FemFunction::interpolate(MeshPtr mesh, const expr::Expr& e, const expr::Bindings& params) {
  Vector v(mesh->node_count());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = e.eval(node_bindings(*mesh, j, params));
  return {std::move(mesh), std::move(v)};
}

double FemFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }
double FemFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }

FemFunction FemFunction::scaled(double alpha) const {
  Vector v = values_;
  for (double& x : v) x *= alpha;
  return {mesh_, std::move(v)};
}

expr::Bindings node_bindings(const Mesh& mesh, std::size_t j, const expr::Bindings& params) {
  expr::Bindings b = params;
  b.set(expr::Var::X, mesh.nodes()[j][0]);
  b.set(expr::Var::Y, mesh.nodes()[j][1]);
  return b;
}

AssembledForms assemble(MeshPtr mesh, const expr::Expr& c1, const expr::Expr& c2, const expr::Bindings& params) {
  const Mesh& m = *mesh;
  const std::size_t n = m.node_count();
  const std::size_t k = m.nodes_per_element();
  std::vector<linalg::Triplet> a_trip, m_trip, mb_trip;
  std::array<std::vector<linalg::Triplet>, 2> mc_trip;
  const std::array<const expr::Expr*, 2> coeffs{&c1, &c2};

  for (std::size_t e = 0; e < m.element_count(); ++e) {
    const auto el = m.element(e);
    const double meas = m.element_measure(e);

    Point centroid{0.0, 0.0};
    for (std::size_t a = 0; a < k; ++a) {
      centroid[0] += m.nodes()[el[a]][0] / static_cast<double>(k);
      centroid[1] += m.nodes()[el[a]][1] / static_cast<double>(k);
    }
    std::array<double, 2> c_val{};
    for (std::size_t i = 0; i < 2; ++i) {
      expr::Bindings b = params;
      b.set(expr::Var::X, centroid[0]).set(expr::Var::Y, centroid[1]);
      c_val[i] = coeffs[i]->eval(b);
      if (c_val[i] < 0.0) {
        throw config_error(fmt::format(
            "coefficient c{} = {} is negative at ({}, {}); condition (C) requires c{} >= 0", i + 1, c_val[i],
            centroid[0], centroid[1], i + 1));
      }
    }

    // Local stiffness from the gradients of the barycentric coordinates.
    std::array<std::array<double, 3>, 3> local_a{};
    if (m.dimension() == 1) {
      const double inv = 1.0 / meas;
      local_a[0][0] = local_a[1][1] = inv;
      local_a[0][1] = local_a[1][0] = -inv;
    } else {
      std::array<std::array<double, 2>, 3> grad{};
      for (std::size_t a = 0; a < 3; ++a) {
        const Point& p = m.nodes()[el[(a + 1) % 3]];
        const Point& q = m.nodes()[el[(a + 2) % 3]];
        grad[a] = {(p[1] - q[1]) / (2.0 * meas), (q[0] - p[0]) / (2.0 * meas)};
      }
      for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) local_a[a][b] = meas * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
      }
    }

    // P1 mass: measure/(k(k+1)) * (1 + delta_ab).
    const double mass_unit = meas / static_cast<double>(k * (k + 1));
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        const double mab = mass_unit * (a == b ? 2.0 : 1.0);
        a_trip.push_back({el[a], el[b], local_a[a][b]});
        m_trip.push_back({el[a], el[b], mab});
        for (std::size_t i = 0; i < 2; ++i) mc_trip[i].push_back({el[a], el[b], c_val[i] * mab});
      }
    }
  }

  for (std::size_t f = 0; f < m.facet_count(); ++f) {
    const auto fn = m.facet(f);
    if (m.dimension() == 1) {
      mb_trip.push_back({fn[0], fn[0], 1.0});
    } else {
      const double len = m.facet_measure(f);
      for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t b = 0; b < 2; ++b) mb_trip.push_back({fn[a], fn[b], len / 6.0 * (a == b ? 2.0 : 1.0)});
      }
    }
  }

  AssembledForms forms{std::move(mesh),
                       SparseSym::from_triplets(n, a_trip),
                       SparseSym::from_triplets(n, m_trip),
                       {SparseSym::from_triplets(n, mc_trip[0]), SparseSym::from_triplets(n, mc_trip[1])},
                       SparseSym::from_triplets(n, mb_trip),
                       {},
                       {}};
  const Vector ones(n, 1.0);
  for (std::size_t i = 0; i < 2; ++i) {
    forms.integral_c[i] = forms.weighted_mass[i].bilinear(ones, ones);
    forms.operators[i] = forms.stiffness.combine(1.0, forms.weighted_mass[i], 1.0);
  }
  return forms;
}

Vector load_interior(const AssembledForms& forms, std::span<const double> nodal_f) { return forms.mass * nodal_f; }

Vector load_interior(const AssembledForms& forms, const expr::Expr& f, const expr::Bindings& params) {
  return load_interior(forms, FemFunction::interpolate(forms.mesh, f, params).values());
}

Vector load_boundary(const AssembledForms& forms, std::span<const double> nodal_g) {
  return forms.boundary_mass * nodal_g;
}

Vector load_boundary(const AssembledForms& forms, const expr::Expr& g, const expr::Bindings& params) {
  const Mesh& m = *forms.mesh;
  Vector nodal(m.node_count(), 0.0);
  for (std::size_t j = 0; j < nodal.size(); ++j) {
    if (m.boundary_node_mask()[j]) nodal[j] = g.eval(node_bindings(m, j, params));
  }
  return load_boundary(forms, nodal);
}

double energy_norm(const FemFunction& u, const AssembledForms& forms, std::size_t i) {
  if (u.size() != forms.mesh->node_count()) throw invalid_argument("energy_norm: dimension mismatch");
  const double q = forms.stiffness.bilinear(u.values(), u.values()) +
                   forms.weighted_mass.at(i).bilinear(u.values(), u.values());
  return std::sqrt(std::max(q, 0.0));
}

}  // namespace semilin::fem
