#include "gdmopt/gradient_discretisation.hpp"

#include <stdexcept>
#include <string>

namespace gdmopt {

SchemeKind parse_scheme(std::string_view name) {
  if (name == "p1") return SchemeKind::ConformingP1;
  if (name == "ncp1") return SchemeKind::NonConformingP1;
  if (name == "hmm") return SchemeKind::HMM;
  throw std::invalid_argument("unknown scheme: " + std::string(name));
}

std::string_view scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::ConformingP1:
      return "p1";
    case SchemeKind::NonConformingP1:
      return "ncp1";
    case SchemeKind::HMM:
      return "hmm";
  }
  return "?";
}

Eigen::VectorXd DofSpace::restrict_to_free(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(num_free());
  for (int i = 0; i < num_free(); ++i) out(i) = full(free_to_full[i]);
  return out;
}

Eigen::VectorXd DofSpace::expand(const Eigen::VectorXd& free) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
  for (int i = 0; i < num_free(); ++i) out(free_to_full[i]) = free(i);
  return out;
}

GradientDiscretisation::GradientDiscretisation(std::shared_ptr<const PolytopalMesh> mesh,
                                               SchemeKind scheme, BoundaryCondition bc,
                                               DofSpace dofs,
                                               std::vector<CellReconstruction> cells,
                                               std::vector<TraceReconstruction> traces,
                                               ProjectionPolicy policy)
    : mesh_(std::move(mesh)),
      scheme_(scheme),
      bc_(bc),
      dofs_(std::move(dofs)),
      cells_(std::move(cells)),
      traces_(std::move(traces)),
      policy_(policy) {}

Eigen::VectorXd GradientDiscretisation::interpolate(const ScalarFunction& phi) const {
  Eigen::VectorXd v(dofs_.size());
  for (int i = 0; i < dofs_.size(); ++i) {
    v(i) = dofs_.masked[i] ? 0.0 : phi(dofs_.position[i]);
  }
  return v;
}

namespace {
double local_dot(const std::vector<int>& dofs, const Eigen::RowVectorXd& coeffs,
                 const Eigen::VectorXd& v) {
  double s = 0.0;
  for (std::size_t j = 0; j < dofs.size(); ++j) s += coeffs(j) * v(dofs[j]);
  return s;
}
}  // namespace

double GradientDiscretisation::value(int cell, const Point& x, const Eigen::VectorXd& v) const {
  const CellReconstruction& c = cells_[cell];
  return local_dot(c.dofs, affine_row(x) * c.value, v);
}

Eigen::Vector2d GradientDiscretisation::gradient(int cell, int piece,
                                                 const Eigen::VectorXd& v) const {
  const CellReconstruction& c = cells_[cell];
  const auto& g = c.pieces[piece].gradient;
  Eigen::Vector2d out = Eigen::Vector2d::Zero();
  for (std::size_t j = 0; j < c.dofs.size(); ++j) out += g.col(j) * v(c.dofs[j]);
  return out;
}

double GradientDiscretisation::trace(int boundary_index, const Point& x,
                                     const Eigen::VectorXd& v) const {
  const TraceReconstruction& t = traces_[boundary_index];
  return local_dot(t.dofs, affine_row(x) * t.value, v);
}

double GradientDiscretisation::projected(int cell, const Point& x,
                                         const ScalarFunction& w) const {
  return policy_ == ProjectionPolicy::Identity ? w(x) : w(mesh_->cells()[cell].point);
}

}  // namespace gdmopt
