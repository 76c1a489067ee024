#ifndef GRIDFN_PDE_HPP
#define GRIDFN_PDE_HPP

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/SparseCore>

#include "gridfn/grid.hpp"

namespace gridfn {

// Divergence-form operator L(u) = Σ (-1)^|α| Δ⁻^α (a_{αβ} Δ⁺^β u) over
// multi-indices with |α|, |β| ≤ order. The outer differences are backward,
// the inner forward; for the Laplacian term this composes to the familiar
// (-N², 2N², -N²) stencil and keeps the assembled interior block symmetric
// for symmetric coefficients.
struct OperatorSpec {
  struct Term {
    MultiIndex alpha;
    MultiIndex beta;
    std::function<double(const RealPoint&)> coefficient;
    // Set when the coefficient is a constant (enables convolution).
    std::optional<double> constant;
  };

  int order = 1;
  std::vector<Term> terms;

  OperatorSpec& add(const MultiIndex& alpha, const MultiIndex& beta,
                    double constant);
  OperatorSpec& add(const MultiIndex& alpha, const MultiIndex& beta,
                    std::function<double(const RealPoint&)> coefficient);

  // Σ_i Δ⁻_i(a·Δ⁺_i u)·(-1) [+ c·u], i.e. a·(-Δ⁺Δ⁻)u + c·u for constant a.
  static OperatorSpec laplacian(int dim, double a = 1.0, double c = 0.0);

  bool constant_coefficients() const;
};

enum class BoundaryKind { dirichlet, periodic };

// The sparse grid system for L(u) = rhs with rows Δ⁺^α u = 0 on ∂^α_Λ for
// |α| ≤ order-1 (Dirichlet), or wrapped stencils and no boundary rows
// (periodic).
class AssembledSystem {
 public:
  const GridDomain& domain() const { return *domain_; }
  GridDomain::Ptr domain_ptr() const { return domain_; }
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  BoundaryKind boundary_kind() const { return bc_; }
  const std::vector<std::uint8_t>& boundary_row_mask() const {
    return boundary_row_;
  }
  std::size_t boundary_row_count() const { return boundary_count_; }
  const OperatorSpec& spec() const { return spec_; }

  // Matrix-vector product through the sparse table.
  GridFunction apply(const GridFunction& u) const;
  // The same operator evaluated by composing the finite-difference formula
  // pointwise (zero-extended reads); cross-checks the assembly.
  GridFunction apply_stencil(const GridFunction& u) const;
  // rhs with boundary rows zeroed, as the solve sees it.
  GridFunction effective_rhs(const GridFunction& rhs) const;

  // Overwrite the boundary unknowns so every boundary row holds exactly
  // (ascending difference order, so each row only reads finished values).
  void enforce_boundary_rows(GridFunction& u) const;

  friend AssembledSystem assemble(const OperatorSpec&, GridDomain::Ptr,
                                  BoundaryKind);

 private:
  GridDomain::Ptr domain_;
  OperatorSpec spec_;
  BoundaryKind bc_ = BoundaryKind::dirichlet;
  Eigen::SparseMatrix<double> matrix_;           // with boundary rows
  Eigen::SparseMatrix<double> operator_matrix_;  // without boundary rows
  std::vector<std::uint8_t> boundary_row_;
  // (difference order, row) pairs, sorted by ascending order.
  std::vector<std::pair<int, long>> boundary_rows_;
  std::size_t boundary_count_ = 0;
};

AssembledSystem assemble(const OperatorSpec& spec, GridDomain::Ptr domain,
                         BoundaryKind bc = BoundaryKind::dirichlet);

struct SolveOptions {
  enum class Method { automatic, direct, cg };
  Method method = Method::automatic;
  double tol = 1e-10;
  int max_iterations = 20000;
};

struct SolveInfo {
  double relative_residual = 0.0;
  int iterations = 0;  // 0 for direct solves
  bool used_direct = true;
};

GridFunction solve(const AssembledSystem& system, const GridFunction& rhs,
                   const SolveOptions& opts = {}, SolveInfo* info = nullptr);

// Solution of L(u) = N^k χ_source.
GridFunction fundamental_solution(const AssembledSystem& system,
                                  const Index& source,
                                  const SolveOptions& opts = {});

// u_g(x) = Σ_y g(y) u0(x-y); displacement reads wrap on periodic domains
// and return 0 otherwise.
GridFunction convolve(const GridFunction& g, const GridFunction& u0);

enum class Scheme { implicit_euler, trapezoidal };

struct Trajectory {
  std::vector<double> times;
  std::vector<GridFunction> states;
  Scheme scheme = Scheme::trapezoidal;
  double dt = 0.0;
  double max_step_residual = 0.0;

  const GridFunction& final_state() const { return states.back(); }
};

// Integrate u_t = F u + G(u) + f with the assembled system as F, an optional
// pointwise (Nemytskii) term G, and the system's boundary rows enforced at
// every step. Implicit one-leg θ-scheme; each step's defect is checked
// against the solver tolerance.
Trajectory time_integrate(const AssembledSystem& system_F,
                          const GridFunction& f_rhs,
                          const GridFunction& u_init, double T, Scheme scheme,
                          double dt,
                          const std::function<double(double)>& pointwise_G = {},
                          double tol = 1e-10);

}  // namespace gridfn

#endif
