// Conforming P1, non-conforming P1 (Crouzeix-Raviart) and HMM gradient
// discretisations.

#ifndef GDMOPT_SCHEMES_HPP
#define GDMOPT_SCHEMES_HPP

#include <memory>

#include "gdmopt/gradient_discretisation.hpp"
#include "gdmopt/mesh.hpp"

namespace gdmopt {

/// Vertex unknowns, continuous piecewise-linear reconstruction.
GradientDiscretisation make_conforming_p1(std::shared_ptr<const PolytopalMesh> mesh,
                                          BoundaryCondition bc);

/// Edge-midpoint unknowns, broken piecewise-linear reconstruction.
GradientDiscretisation make_ncp1(std::shared_ptr<const PolytopalMesh> mesh,
                                 BoundaryCondition bc);

/// One unknown per cell and per face. Pi_D is the cell value; on each
/// D_{K,sigma} the gradient is
///   gbar_K v + sqrt(2)/d_{K,sigma} (v_sigma - v_K - gbar_K v . (xbar_sigma - x_K)) n_{K,sigma}
/// with gbar_K v = (1/|K|) sum_sigma |sigma| v_sigma n_{K,sigma}.
GradientDiscretisation make_hmm(std::shared_ptr<const PolytopalMesh> mesh,
                                BoundaryCondition bc);

GradientDiscretisation make_scheme(SchemeKind kind, std::shared_ptr<const PolytopalMesh> mesh,
                                   BoundaryCondition bc);

}  // namespace gdmopt

#endif  // GDMOPT_SCHEMES_HPP
