#include "gdmopt/control.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

namespace gdmopt {

namespace {

Point at(const Triangle& t, const Eigen::Vector3d& l) {
  return l(0) * t[0] + l(1) * t[1] + l(2) * t[2];
}

// Controls of both kinds stacked into one vector: cells first, then
// boundary faces. Entry j has mass weight w_j (|K| or |sigma|),
// regularisation reg_j (alpha or beta), target d_j and bounds.
struct Layout {
  SparseMatrix K, M, C;
  Eigen::VectorXd F, Fyd;
  Eigen::VectorXd weight, reg, desired, lower, upper;
  int n_cells = 0;
  int n_boundary = 0;

  int size() const { return n_cells + n_boundary; }

  Eigen::VectorXd stack(const ControlVector& u) const {
    Eigen::VectorXd out(size());
    if (n_cells > 0) out.head(n_cells) = u.cells;
    if (n_boundary > 0) out.tail(n_boundary) = u.boundary;
    return out;
  }

  ControlVector split(const Eigen::VectorXd& u) const {
    ControlVector out;
    out.cells = u.head(n_cells);
    out.boundary = u.tail(n_boundary);
    return out;
  }
};

Layout make_layout(const OptimalControlProblem& problem, const GradientDiscretisation& gd) {
  problem.validate();
  if (problem.bc != gd.bc()) {
    throw std::invalid_argument("problem and discretisation use different boundary conditions");
  }
  const PolytopalMesh& mesh = gd.mesh();
  Layout l;
  l.K = assemble_stiffness(gd, problem.diffusion,
                           problem.bc == BoundaryCondition::Neumann ? problem.c0 : 0.0);
  l.M = assemble_mass(gd);
  l.F = assemble_load(gd, problem.f,
                      problem.bc == BoundaryCondition::Neumann ? problem.f_b : nullptr);
  l.Fyd = assemble_load(gd, problem.y_d);
  l.n_cells = problem.distributed_control ? mesh.num_cells() : 0;
  l.n_boundary = problem.boundary_control ? static_cast<int>(gd.traces().size()) : 0;
  const int n = l.size();
  l.weight.resize(n);
  l.reg.resize(n);
  l.desired.resize(n);
  l.lower.resize(n);
  l.upper.resize(n);

  std::vector<Eigen::Triplet<double>> t;
  if (l.n_cells > 0) {
    const SparseMatrix B = assemble_cell_coupling(gd);
    const Eigen::VectorXd ud = problem.u_d ? project_pm(mesh, problem.u_d)
                                           : Eigen::VectorXd::Zero(mesh.num_cells());
    for (int k = 0; k < l.n_cells; ++k) {
      l.weight(k) = mesh.cells()[k].area;
      l.reg(k) = problem.alpha;
      l.desired(k) = ud(k);
      l.lower(k) = problem.lower;
      l.upper(k) = problem.upper;
    }
    for (int k = 0; k < B.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(B, k); it; ++it) t.emplace_back(it.row(), k, it.value());
    }
  }
  if (l.n_boundary > 0) {
    const SparseMatrix Bb = assemble_boundary_coupling(gd);
    for (int s = 0; s < l.n_boundary; ++s) {
      const int j = l.n_cells + s;
      l.weight(j) = mesh.faces()[gd.traces()[s].face].length;
      l.reg(j) = problem.beta;
      l.desired(j) = 0.0;
      l.lower(j) = problem.boundary_lower;
      l.upper(j) = problem.boundary_upper;
    }
    for (int s = 0; s < Bb.outerSize(); ++s) {
      for (SparseMatrix::InnerIterator it(Bb, s); it; ++it) {
        t.emplace_back(it.row(), l.n_cells + s, it.value());
      }
    }
  }
  l.C.resize(gd.dofs().num_free(), n);
  l.C.setFromTriplets(t.begin(), t.end());
  return l;
}

std::vector<ActiveState> classify(const Eigen::VectorXd& q, const Layout& l) {
  std::vector<ActiveState> s(q.size(), ActiveState::Inactive);
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    if (q(j) < l.lower(j)) {
      s[j] = ActiveState::Lower;
    } else if (q(j) > l.upper(j)) {
      s[j] = ActiveState::Upper;
    }
  }
  return s;
}

// Unconstrained minimiser of the pointwise control cost given the adjoint
// coupling g = C^T p.
Eigen::VectorXd unconstrained_control(const Eigen::VectorXd& g, const Layout& l) {
  return l.desired.array() - g.array() / (l.reg.array() * l.weight.array());
}

KKTSolution package(const GradientDiscretisation& gd, const Layout& l, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& p, const Eigen::VectorXd& u,
                    const std::vector<ActiveState>& states, int iterations) {
  KKTSolution sol;
  sol.y = gd.dofs().expand(y);
  sol.p = gd.dofs().expand(p);
  sol.u = l.split(u);
  sol.iterations = iterations;
  sol.active.assign(states.begin(), states.begin() + l.n_cells);
  sol.boundary_active.assign(states.begin() + l.n_cells, states.end());
  return sol;
}

// Solves [[M, -K], [-K, -S]] [y; p] = [Fyd; -r] by sparse LU with a few
// refinement steps.
void solve_block(const Layout& l, const SparseMatrix& S, const Eigen::VectorXd& r,
                 Eigen::VectorXd& y, Eigen::VectorXd& p) {
  const Eigen::Index n = l.K.rows();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * l.M.nonZeros() + 2 * l.K.nonZeros() + S.nonZeros());
  auto add = [&t](const SparseMatrix& A, Eigen::Index r0, Eigen::Index c0, double s) {
    for (int k = 0; k < A.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
        t.emplace_back(r0 + it.row(), c0 + it.col(), s * it.value());
      }
    }
  };
  add(l.M, 0, 0, 1.0);
  add(l.K, 0, n, -1.0);
  add(l.K, n, 0, -1.0);
  add(S, n, n, -1.0);
  SparseMatrix A(2 * n, 2 * n);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();

  Eigen::VectorXd b(2 * n);
  b << l.Fyd, -r;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw SolverError("KKT block factorisation failed: " + lu.lastErrorMessage());
  Eigen::VectorXd x = lu.solve(b);
  const double bnorm = std::max(b.norm(), 1e-300);
  Eigen::VectorXd res = b - A * x;
  for (int it = 0; it < 5 && res.norm() > 1e-13 * bnorm; ++it) {
    x += lu.solve(res);
    res = b - A * x;
  }
  if (!std::isfinite(x.squaredNorm())) throw SolverError("KKT block solve produced non-finite values");
  y = x.head(n);
  p = x.tail(n);
}

}  // namespace

Eigen::VectorXd project_pm(const PolytopalMesh& mesh, const ScalarFunction& g,
                           QuadratureKind rule_kind) {
  const auto rule = triangle_rule<double>(rule_kind);
  Eigen::VectorXd out(mesh.num_cells());
  for (int k = 0; k < mesh.num_cells(); ++k) {
    double sum = 0.0, area = 0.0;
    for (const Triangle& t : mesh.cell_triangles(k)) {
      const double a = 0.5 * std::abs((t[1] - t[0]).x() * (t[2] - t[0]).y() -
                                      (t[1] - t[0]).y() * (t[2] - t[0]).x());
      for (std::size_t q = 0; q < rule.size(); ++q) sum += a * rule.weights[q] * g(at(t, rule.barycentric[q]));
      area += a;
    }
    out(k) = sum / area;
  }
  return out;
}

void OptimalControlProblem::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(lower <= upper)) throw std::invalid_argument("control bounds must satisfy a <= b");
  if (!distributed_control && !boundary_control) {
    throw std::invalid_argument("problem has no control");
  }
  if (boundary_control) {
    if (bc != BoundaryCondition::Neumann) {
      throw std::invalid_argument("boundary control needs a Neumann problem");
    }
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (!(boundary_lower <= boundary_upper)) {
      throw std::invalid_argument("boundary control bounds must satisfy a <= b");
    }
  }
  if (bc == BoundaryCondition::Neumann && !(c0 > 0.0)) {
    throw std::invalid_argument("Neumann problems need c0 > 0");
  }
  if (!y_d) throw std::invalid_argument("desired state y_d is required");
}

KKTSolution solve_kkt_pdas(const OptimalControlProblem& problem, const GradientDiscretisation& gd,
                           const PdasConfig& config) {
  if (config.max_iter < 1) throw std::invalid_argument("pdas max_iter must be >= 1");
  const Layout l = make_layout(problem, gd);
  const int m = l.size();
  const Eigen::VectorXd inv_rw = (l.reg.array() * l.weight.array()).inverse();
  const bool unbounded = (l.lower.array() == -kInfinity).all() && (l.upper.array() == kInfinity).all();

  std::vector<ActiveState> states(m, ActiveState::Inactive);
  Eigen::VectorXd y, p, u(m);
  for (int it = 1; it <= config.max_iter; ++it) {
    Eigen::VectorXd fixed = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd inactive = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < m; ++j) {
      if (states[j] == ActiveState::Lower) {
        fixed(j) = l.lower(j);
      } else if (states[j] == ActiveState::Upper) {
        fixed(j) = l.upper(j);
      } else {
        inactive(j) = 1.0;
      }
    }
    const SparseMatrix CD = l.C * inactive.cwiseProduct(inv_rw).asDiagonal();
    const SparseMatrix S = CD * SparseMatrix(l.C.transpose());
    const Eigen::VectorXd r = l.F + l.C * (fixed + inactive.cwiseProduct(l.desired));
    solve_block(l, S, r, y, p);

    const Eigen::VectorXd q = unconstrained_control(l.C.transpose() * p, l);
    for (int j = 0; j < m; ++j) u(j) = inactive(j) > 0.0 ? q(j) : fixed(j);
    if (unbounded) return package(gd, l, y, p, u, states, 1);

    const std::vector<ActiveState> next = classify(q, l);
    bool settled = true;
    for (int j = 0; j < m && settled; ++j) {
      if (next[j] == states[j]) continue;
      // A switch caused only by rounding at the bound leaves the solution unchanged.
      const double bound = next[j] == ActiveState::Lower   ? l.lower(j)
                           : next[j] == ActiveState::Upper ? l.upper(j)
                           : states[j] == ActiveState::Lower ? l.lower(j)
                                                             : l.upper(j);
      settled = std::abs(q(j) - bound) <= config.tol * (1.0 + std::abs(bound));
    }
    if (settled) return package(gd, l, y, p, u, states, it);
    states = next;
  }
  std::ostringstream msg;
  msg << "active-set iteration did not converge in " << config.max_iter << " iterations";
  throw NonConvergenceError(msg.str(), package(gd, l, y, p, u, states, config.max_iter));
}

KKTSolution solve_kkt_reference(const OptimalControlProblem& problem,
                                const GradientDiscretisation& gd) {
  constexpr int kMaxUnknowns = 500;
  if (gd.dofs().num_free() > kMaxUnknowns) {
    throw std::invalid_argument("reference solver is limited to 500 free unknowns");
  }
  const Layout l = make_layout(problem, gd);
  const Eigen::MatrixXd K(l.K), M(l.M), C(l.C);
  const Eigen::LLT<Eigen::MatrixXd> chol(K);
  if (chol.info() != Eigen::Success) throw SolverError("reference: stiffness matrix not SPD");
  const Eigen::MatrixXd Y = chol.solve(C);
  const Eigen::VectorXd y0 = chol.solve(l.F);

  // Reduced cost j(u) = 1/2 u^T H u - b^T u + const.
  const Eigen::VectorXd D = l.reg.cwiseProduct(l.weight);
  Eigen::MatrixXd H = Y.transpose() * M * Y;
  H.diagonal() += D;
  const Eigen::VectorXd b = Y.transpose() * (l.Fyd - M * y0) + D.cwiseProduct(l.desired);

  // Projected gradient in the metric diag(D): the box projection stays
  // componentwise. Step 1/L with L the largest eigenvalue of D^{-1/2} H D^{-1/2}.
  const Eigen::VectorXd dinv_sqrt = D.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd Hs = dinv_sqrt.asDiagonal() * H * dinv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs, Eigen::EigenvaluesOnly);
  const double L = es.eigenvalues().maxCoeff();

  auto project = [&l](Eigen::VectorXd v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = project_box(v(j), l.lower(j), l.upper(j));
    return v;
  };
  auto step = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd grad = H * v - b;
    return project(v - (grad.array() / (L * D.array())).matrix());
  };

  Eigen::VectorXd u = project(l.desired);
  Eigen::VectorXd v = u;
  double t = 1.0;
  constexpr int kMaxIterations = 500000;
  int it = 0;
  for (; it < kMaxIterations; ++it) {
    const Eigen::VectorXd next = step(v);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    // Restart the momentum when it points uphill.
    if ((v - next).dot((next - u).cwiseProduct(D)) > 0.0) {
      t = 1.0;
      v = u;
      continue;
    }
    v = next + ((t - 1.0) / t_next) * (next - u);
    u = next;
    t = t_next;
    const double stationarity = (u - step(u)).lpNorm<Eigen::Infinity>();
    if (stationarity <= 1e-12 * std::max(1.0, u.lpNorm<Eigen::Infinity>())) break;
  }
  if (it == kMaxIterations) throw SolverError("reference solver did not reach stationarity");

  // The gradient-mapping residual bounds the error only up to the condition
  // number (~1/alpha), so finish with a Newton step on the entries strictly
  // inside the box. It is kept only if it stays feasible and does not
  // increase the residual.
  std::vector<int> free_set;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (u(j) > l.lower(j) && u(j) < l.upper(j)) free_set.push_back(static_cast<int>(j));
  }
  if (!free_set.empty()) {
    const int nf = static_cast<int>(free_set.size());
    Eigen::MatrixXd Hff(nf, nf);
    Eigen::VectorXd rhs(nf);
    const Eigen::VectorXd grad = H * u - b;
    for (int i = 0; i < nf; ++i) {
      rhs(i) = -grad(free_set[i]);
      for (int j = 0; j < nf; ++j) Hff(i, j) = H(free_set[i], free_set[j]);
    }
    const Eigen::VectorXd delta = Hff.llt().solve(rhs);
    Eigen::VectorXd polished = u;
    for (int i = 0; i < nf; ++i) polished(free_set[i]) += delta(i);
    const bool feasible = (polished - project(polished)).lpNorm<Eigen::Infinity>() == 0.0;
    if (feasible && (polished - step(polished)).lpNorm<Eigen::Infinity>() <=
                        (u - step(u)).lpNorm<Eigen::Infinity>()) {
      u = polished;
    }
  }

  const Eigen::VectorXd y = y0 + Y * u;
  const Eigen::VectorXd p = chol.solve(M * y - l.Fyd);
  const Eigen::VectorXd q = unconstrained_control(C.transpose() * p, l);
  return package(gd, l, y, p, u, classify(q, l), it + 1);
}

double variational_inequality(const OptimalControlProblem& problem,
                              const GradientDiscretisation& gd, const KKTSolution& solution,
                              const ControlVector& v) {
  const Layout l = make_layout(problem, gd);
  const Eigen::VectorXd u = l.stack(solution.u);
  const Eigen::VectorXd g = l.C.transpose() * gd.dofs().restrict_to_free(solution.p);
  const Eigen::VectorXd grad =
      g + l.reg.cwiseProduct(l.weight).cwiseProduct(u - l.desired);
  return grad.dot(l.stack(v) - u);
}

double projection_identity_defect(const OptimalControlProblem& problem,
                                  const GradientDiscretisation& gd, const KKTSolution& solution) {
  const Layout l = make_layout(problem, gd);
  const Eigen::VectorXd u = l.stack(solution.u);
  const Eigen::VectorXd q =
      unconstrained_control(l.C.transpose() * gd.dofs().restrict_to_free(solution.p), l);
  double defect = 0.0;
  for (int j = 0; j < l.size(); ++j) {
    defect = std::max(defect, std::abs(u(j) - project_box(q(j), l.lower(j), l.upper(j))));
  }
  return defect;
}

KktResiduals kkt_residuals(const OptimalControlProblem& problem, const GradientDiscretisation& gd,
                           const KKTSolution& solution) {
  const Layout l = make_layout(problem, gd);
  const Eigen::VectorXd y = gd.dofs().restrict_to_free(solution.y);
  const Eigen::VectorXd p = gd.dofs().restrict_to_free(solution.p);
  const Eigen::VectorXd rhs_state = l.F + l.C * l.stack(solution.u);
  const Eigen::VectorXd rhs_adjoint = l.M * y - l.Fyd;
  KktResiduals r;
  r.state = (l.K * y - rhs_state).norm() / std::max(rhs_state.norm(), 1e-300);
  r.adjoint = (l.K * p - rhs_adjoint).norm() / std::max(rhs_adjoint.norm(), 1e-300);
  return r;
}

PostprocessedControls::PostprocessedControls(const OptimalControlProblem& problem,
                                             const GradientDiscretisation& gd,
                                             const KKTSolution& solution,
                                             ScalarFunction exact_adjoint)
    : gd_(&gd),
      p_(solution.p),
      exact_adjoint_(std::move(exact_adjoint)),
      desired_(problem.u_d ? project_pm(gd.mesh(), problem.u_d)
                           : Eigen::VectorXd::Zero(gd.mesh().num_cells())),
      alpha_(problem.alpha),
      lower_(problem.lower),
      upper_(problem.upper),
      cellwise_(gd.policy() == ProjectionPolicy::CellPointSampling) {
  if (!problem.distributed_control) {
    throw std::invalid_argument("post-processing needs a distributed control");
  }
}

double PostprocessedControls::continuous(int cell, const Point& x) const {
  const Point& where = cellwise_ ? gd_->mesh().cells()[cell].centroid : x;
  return project_box(desired_(cell) - exact_adjoint_(where) / alpha_, lower_, upper_);
}

double PostprocessedControls::discrete(int cell, const Point& x) const {
  return project_box(desired_(cell) - gd_->value(cell, x, p_) / alpha_, lower_, upper_);
}

}  // namespace gdmopt
