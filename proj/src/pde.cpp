#include "gridfn/pde.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

namespace gridfn {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

Eigen::VectorXd to_vector(const GridFunction& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.values().data(),
                                           static_cast<long>(f.size()));
}

GridFunction to_grid(GridDomain::Ptr d, const Eigen::VectorXd& v) {
  return GridFunction(std::move(d),
                      std::vector<double>(v.data(), v.data() + v.size()));
}

// One-axis forward/backward difference as a sparse operator with
// zero-extended (or wrapped) reads.
SpMat difference_matrix(const GridDomain& d, int axis, Direction dir) {
  const long n = static_cast<long>(d.size());
  const double scale = static_cast<double>(d.level().n_cells());
  Triplets t;
  t.reserve(2 * d.size());
  const auto& pts = d.points();
  const std::int64_t step = dir == Direction::forward ? 1 : -1;
  for (long i = 0; i < n; ++i) {
    Index y = pts[i];
    y[axis] += step;
    auto j = d.ordinal(y);
    if (dir == Direction::forward) {
      if (j >= 0) t.emplace_back(i, j, scale);
      t.emplace_back(i, i, -scale);
    } else {
      t.emplace_back(i, i, scale);
      if (j >= 0) t.emplace_back(i, j, -scale);
    }
  }
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMat alpha_difference_matrix(const GridDomain& d, const MultiIndex& alpha,
                              Direction dir) {
  const long n = static_cast<long>(d.size());
  SpMat m(n, n);
  m.setIdentity();
  for (int a = 0; a < d.dim(); ++a)
    for (int k = 0; k < alpha[a]; ++k) m = difference_matrix(d, a, dir) * m;
  return m;
}

SpMat coefficient_matrix(const GridDomain& d,
                         const OperatorSpec::Term& term) {
  const long n = static_cast<long>(d.size());
  Triplets t;
  t.reserve(d.size());
  const auto& pts = d.points();
  for (long i = 0; i < n; ++i) {
    double c = term.constant ? *term.constant
                             : term.coefficient(d.coord(pts[i]));
    if (!std::isfinite(c))
      throw SamplingError("assemble: non-finite coefficient at a grid point");
    if (c != 0.0) t.emplace_back(i, i, c);
  }
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// Zero-extended value-space application of one spec term, mirroring the
// matrix construction but composed pointwise.
GridFunction apply_term_stencil(const OperatorSpec::Term& term,
                                const GridFunction& u) {
  GridDomain::Ptr d = u.domain_ptr();
  auto diff_zero_extended = [&](const GridFunction& v, int axis,
                                Direction dir) {
    GridFunction out(d);
    const double scale = static_cast<double>(d->level().n_cells());
    const auto& pts = d->points();
    const std::int64_t step = dir == Direction::forward ? 1 : -1;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Index y = pts[i];
      y[axis] += step;
      double neighbor = v.value_at(y);
      out[i] = dir == Direction::forward ? (neighbor - v[i]) * scale
                                         : (v[i] - neighbor) * scale;
    }
    return out;
  };

  GridFunction w = u;
  for (int a = 0; a < d->dim(); ++a)
    for (int k = 0; k < term.beta[a]; ++k)
      w = diff_zero_extended(w, a, Direction::forward);
  const auto& pts = d->points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double c = term.constant ? *term.constant
                             : term.coefficient(d->coord(pts[i]));
    w[i] *= c;
  }
  for (int a = 0; a < d->dim(); ++a)
    for (int k = 0; k < term.alpha[a]; ++k)
      w = diff_zero_extended(w, a, Direction::backward);
  double sign = term.alpha.order() % 2 == 0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) w[i] *= sign;
  return w;
}

// Multi-indices with |alpha| <= max_order (dimension-aware).
std::vector<MultiIndex> indices_up_to(int dim, int max_order) {
  std::vector<MultiIndex> out;
  MultiIndex m;
  std::function<void(int, int)> rec = [&](int axis, int left) {
    if (axis == dim) {
      out.push_back(m);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      m.entries[axis] = v;
      rec(axis + 1, left - v);
      m.entries[axis] = 0;
    }
  };
  rec(0, max_order);
  return out;
}

}  // namespace

OperatorSpec& OperatorSpec::add(const MultiIndex& alpha,
                                const MultiIndex& beta, double constant) {
  terms.push_back(Term{alpha, beta, {}, constant});
  return *this;
}

OperatorSpec& OperatorSpec::add(
    const MultiIndex& alpha, const MultiIndex& beta,
    std::function<double(const RealPoint&)> coefficient) {
  terms.push_back(Term{alpha, beta, std::move(coefficient), std::nullopt});
  return *this;
}

OperatorSpec OperatorSpec::laplacian(int dim, double a, double c) {
  OperatorSpec spec;
  spec.order = 1;
  for (int axis = 0; axis < dim; ++axis)
    spec.add(MultiIndex::unit(axis), MultiIndex::unit(axis), a);
  if (c != 0.0) spec.add(MultiIndex::zero(), MultiIndex::zero(), c);
  return spec;
}

bool OperatorSpec::constant_coefficients() const {
  for (const auto& t : terms)
    if (!t.constant) return false;
  return true;
}

AssembledSystem assemble(const OperatorSpec& spec, GridDomain::Ptr domain,
                         BoundaryKind bc) {
  if (spec.order < 1) throw Error("assemble: operator order must be >= 1");
  if (bc == BoundaryKind::periodic && !domain->periodic())
    throw Error("assemble: periodic boundary needs a periodic domain");

  AssembledSystem sys;
  sys.domain_ = domain;
  sys.spec_ = spec;
  sys.bc_ = bc;

  const long n = static_cast<long>(domain->size());
  SpMat L(n, n);
  for (const auto& term : spec.terms) {
    if (term.alpha.order() > spec.order || term.beta.order() > spec.order)
      throw Error("assemble: term order exceeds the operator order");
    SpMat part = alpha_difference_matrix(*domain, term.alpha,
                                         Direction::backward) *
                 coefficient_matrix(*domain, term) *
                 alpha_difference_matrix(*domain, term.beta,
                                         Direction::forward);
    double sign = term.alpha.order() % 2 == 0 ? 1.0 : -1.0;
    L += sign * part;
  }
  sys.operator_matrix_ = L;
  sys.boundary_row_.assign(domain->size(), 0);

  if (bc == BoundaryKind::periodic) {
    sys.matrix_ = L;
    return sys;
  }

  // Boundary rows: Δ⁺^α u = 0 on ∂^α_Λ for every |α| ≤ order-1. A point may
  // carry at most one boundary row.
  Triplets full;
  full.reserve(static_cast<std::size_t>(L.nonZeros()));
  for (const MultiIndex& alpha : indices_up_to(domain->dim(), spec.order - 1)) {
    Eigen::SparseMatrix<double, Eigen::RowMajor> dalpha(
        alpha_difference_matrix(*domain, alpha, Direction::forward));
    for (const Index& x : alpha_boundary(*domain, alpha)) {
      long row = static_cast<long>(domain->ordinal(x));
      if (sys.boundary_row_[row])
        throw Error("assemble: overlapping boundary rows (unsupported "
                    "domain/order combination)");
      sys.boundary_row_[row] = 1;
      sys.boundary_rows_.emplace_back(alpha.order(), row);
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator
               it(dalpha, row);
           it; ++it)
        full.emplace_back(row, it.col(), it.value());
    }
  }
  std::sort(sys.boundary_rows_.begin(), sys.boundary_rows_.end());
  Eigen::SparseMatrix<double, Eigen::RowMajor> Lrow(L);
  for (long r = 0; r < n; ++r) {
    if (sys.boundary_row_[r]) continue;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator
             it(Lrow, r);
         it; ++it)
      full.emplace_back(r, it.col(), it.value());
  }
  sys.matrix_.resize(n, n);
  sys.matrix_.setFromTriplets(full.begin(), full.end());
  sys.boundary_count_ = static_cast<std::size_t>(
      std::count(sys.boundary_row_.begin(), sys.boundary_row_.end(), 1));
  return sys;
}

GridFunction AssembledSystem::apply(const GridFunction& u) const {
  Eigen::VectorXd v = operator_matrix_ * to_vector(u);
  return to_grid(domain_, v);
}

GridFunction AssembledSystem::apply_stencil(const GridFunction& u) const {
  GridFunction out(domain_);
  for (const auto& term : spec_.terms) {
    GridFunction part = apply_term_stencil(term, u);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += part[i];
  }
  return out;
}

void AssembledSystem::enforce_boundary_rows(GridFunction& u) const {
  if (boundary_rows_.empty()) return;
  Eigen::SparseMatrix<double, Eigen::RowMajor> rm(matrix_);
  for (const auto& [order, row] : boundary_rows_) {
    double diag = 0.0;
    double rest = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rm,
                                                                        row);
         it; ++it) {
      if (it.col() == row)
        diag = it.value();
      else
        rest += it.value() * u[static_cast<std::size_t>(it.col())];
    }
    u[static_cast<std::size_t>(row)] = order == 0 ? 0.0 : -rest / diag;
  }
}

GridFunction AssembledSystem::effective_rhs(const GridFunction& rhs) const {
  GridFunction out(domain_);
  if (rhs.domain_ptr() == domain_) {
    out = rhs;
  } else {
    const auto& pts = domain_->points();
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = rhs.value_at(pts[i]);
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (boundary_row_[i]) out[i] = 0.0;
  return out;
}

namespace {

// Interior block of the system after eliminating identity boundary rows
// (order 0: the pinned unknowns are exactly 0, so no rhs correction).
struct ReducedSystem {
  std::vector<long> interior;
  SpMat matrix;
  bool valid = false;
};

ReducedSystem reduce_identity_boundary(const AssembledSystem& sys) {
  ReducedSystem red;
  const auto& mask = sys.boundary_row_mask();
  const long n = static_cast<long>(mask.size());
  std::vector<long> slot(n, -1);
  for (long i = 0; i < n; ++i)
    if (!mask[i]) {
      slot[i] = static_cast<long>(red.interior.size());
      red.interior.push_back(i);
    }

  Eigen::SparseMatrix<double, Eigen::RowMajor> rm(sys.matrix());
  Triplets t;
  for (long r = 0; r < n; ++r) {
    if (mask[r]) {
      int nnz = 0;
      bool diag_unit = false;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator
               it(rm, r);
           it; ++it) {
        ++nnz;
        if (it.col() == r && it.value() == 1.0) diag_unit = true;
      }
      if (nnz != 1 || !diag_unit) return red;  // not an identity row
      continue;
    }
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rm, r);
         it; ++it)
      if (!mask[it.col()]) t.emplace_back(slot[r], slot[it.col()], it.value());
  }
  red.matrix.resize(static_cast<long>(red.interior.size()),
                    static_cast<long>(red.interior.size()));
  red.matrix.setFromTriplets(t.begin(), t.end());
  red.valid = true;
  return red;
}

double relative_residual(const AssembledSystem& sys, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& rhs) {
  double denom = rhs.norm();
  return denom == 0.0 ? (sys.matrix() * x).norm()
                      : (sys.matrix() * x - rhs).norm() / denom;
}

GridFunction solve_direct(const AssembledSystem& sys,
                          const Eigen::VectorXd& rhs, SolveInfo* info,
                          double tol) {
  const long n = rhs.size();
  Eigen::VectorXd x;
  ReducedSystem red = reduce_identity_boundary(sys);
  if (red.valid && !red.interior.empty() &&
      static_cast<long>(red.interior.size()) < n) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(red.matrix);
    if (lu.info() != Eigen::Success)
      throw SolveError("solve: sparse factorization failed (singular system?)",
                       std::numeric_limits<double>::infinity());
    Eigen::VectorXd b(static_cast<long>(red.interior.size()));
    for (std::size_t i = 0; i < red.interior.size(); ++i)
      b[static_cast<long>(i)] = rhs[red.interior[i]];
    Eigen::VectorXd xi = lu.solve(b);
    x = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < red.interior.size(); ++i)
      x[red.interior[i]] = xi[static_cast<long>(i)];
  } else {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(sys.matrix());
    if (lu.info() != Eigen::Success)
      throw SolveError("solve: sparse factorization failed (singular system?)",
                       std::numeric_limits<double>::infinity());
    x = lu.solve(rhs);
  }
  double res = relative_residual(sys, x, rhs);
  if (info) {
    info->relative_residual = res;
    info->iterations = 0;
    info->used_direct = true;
  }
  if (res > tol && rhs.norm() != 0.0)
    throw SolveError("solve: direct residual above tolerance", res);
  GridFunction out = to_grid(sys.domain_ptr(), x);
  // Higher-order boundary rows are made exact by forward substitution;
  // identity rows are exact already.
  sys.enforce_boundary_rows(out);
  return out;
}

GridFunction solve_cg(const AssembledSystem& sys, const Eigen::VectorXd& rhs,
                      SolveInfo* info, const SolveOptions& opts) {
  ReducedSystem red = reduce_identity_boundary(sys);
  if (!red.valid)
    throw Error("solve: cg requires identity boundary rows "
                "(order-1 operators)");
  const long n = rhs.size();
  const long m = static_cast<long>(red.interior.size());
  Eigen::VectorXd b(m);
  for (long i = 0; i < m; ++i) b[i] = rhs[red.interior[i]];

  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(opts.tol);
  cg.setMaxIterations(opts.max_iterations);
  cg.compute(red.matrix);
  Eigen::VectorXd xi = cg.solve(b);
  if (cg.info() != Eigen::Success)
    throw SolveError("solve: cg did not converge", cg.error());

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (long i = 0; i < m; ++i) x[red.interior[i]] = xi[i];
  if (info) {
    info->relative_residual = relative_residual(sys, x, rhs);
    info->iterations = static_cast<int>(cg.iterations());
    info->used_direct = false;
  }
  return to_grid(sys.domain_ptr(), x);
}

}  // namespace

GridFunction solve(const AssembledSystem& system, const GridFunction& rhs,
                   const SolveOptions& opts, SolveInfo* info) {
  if (!(rhs.level() == system.domain().level()) ||
      rhs.domain().dim() != system.domain().dim())
    throw LevelMismatchError("solve: rhs lives on a different grid");
  GridFunction moved = rhs;
  if (rhs.domain_ptr() != system.domain_ptr()) {
    // Re-index onto the system's domain (reads outside stay 0).
    moved = GridFunction(system.domain_ptr());
    const auto& pts = system.domain().points();
    for (std::size_t i = 0; i < pts.size(); ++i)
      moved[i] = rhs.value_at(pts[i]);
  }
  Eigen::VectorXd b = to_vector(system.effective_rhs(moved));
  SolveOptions::Method method = opts.method;
  if (method == SolveOptions::Method::automatic)
    method = system.domain().size() <= 20000 ? SolveOptions::Method::direct
                                             : SolveOptions::Method::cg;
  return method == SolveOptions::Method::direct
             ? solve_direct(system, b, info, opts.tol)
             : solve_cg(system, b, info, opts);
}

GridFunction fundamental_solution(const AssembledSystem& system,
                                  const Index& source,
                                  const SolveOptions& opts) {
  if (!system.domain().contains(source))
    throw Error("fundamental_solution: source point outside the domain");
  double nk = 1.0;
  for (int a = 0; a < system.domain().dim(); ++a)
    nk *= static_cast<double>(system.domain().level().n_cells());
  GridFunction rhs(system.domain_ptr());
  rhs[static_cast<std::size_t>(system.domain().ordinal(source))] = nk;
  return solve(system, rhs, opts);
}

GridFunction convolve(const GridFunction& g, const GridFunction& u0) {
  if (!(g.level() == u0.level()) || g.domain().dim() != u0.domain().dim())
    throw LevelMismatchError("convolve: mismatched grids");
  const GridDomain& dg = g.domain();
  const GridDomain& du = u0.domain();
  double nk = 1.0;
  for (int a = 0; a < dg.dim(); ++a)
    nk *= static_cast<double>(dg.level().n_cells());
  GridFunction out(g.domain_ptr());
  const auto& pts = dg.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CompensatedSum s;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (g[j] == 0.0) continue;
      Index d{};
      for (int a = 0; a < dg.dim(); ++a) d[a] = pts[i][a] - pts[j][a];
      s.add(g[j] * u0.value_at(du.wrap(d)));
    }
    // Volume element: a point source N^k χ_z convolves to u0 shifted to z,
    // and L(u_g) = g follows by superposition.
    out[i] = s.value() / nk;
  }
  return out;
}

Trajectory time_integrate(const AssembledSystem& system_F,
                          const GridFunction& f_rhs,
                          const GridFunction& u_init, double T, Scheme scheme,
                          double dt,
                          const std::function<double(double)>& pointwise_G,
                          double tol) {
  if (!(dt > 0)) throw Error("time_integrate: dt must be positive");
  if (!(T >= 0)) throw Error("time_integrate: T must be non-negative");
  const double theta = scheme == Scheme::implicit_euler ? 1.0 : 0.5;
  const long n = static_cast<long>(system_F.domain().size());
  const auto& mask = system_F.boundary_row_mask();

  long steps = static_cast<long>(std::llround(T / dt));
  if (steps < 1) steps = 1;
  double step_dt = T / static_cast<double>(steps);

  // LHS: (I - θ·dt·F) on operator rows, boundary rows kept verbatim.
  Eigen::SparseMatrix<double, Eigen::RowMajor> Frow(system_F.matrix());
  Triplets t;
  for (long r = 0; r < n; ++r) {
    if (mask[r]) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator
               it(Frow, r);
           it; ++it)
        t.emplace_back(r, it.col(), it.value());
      continue;
    }
    t.emplace_back(r, r, 1.0);
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Frow,
                                                                        r);
         it; ++it)
      t.emplace_back(r, it.col(), -theta * step_dt * it.value());
  }
  SpMat lhs(n, n);
  lhs.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<SpMat> lu;
  lu.compute(lhs);
  if (lu.info() != Eigen::Success)
    throw SolveError("time_integrate: step matrix factorization failed",
                     std::numeric_limits<double>::infinity());

  // F without boundary rows for explicit evaluations.
  const SpMat& F = system_F.matrix();
  auto apply_F = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd w = F * v;
    for (long i = 0; i < n; ++i)
      if (mask[i]) w[i] = 0.0;
    return w;
  };
  Eigen::VectorXd f = to_vector(system_F.effective_rhs(f_rhs));
  auto apply_G = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    if (pointwise_G)
      for (long i = 0; i < n; ++i)
        if (!mask[i]) w[i] = pointwise_G(v[i]);
    return w;
  };

  GridFunction u0 = u_init;
  if (u_init.domain_ptr() != system_F.domain_ptr()) {
    u0 = GridFunction(system_F.domain_ptr());
    const auto& pts = system_F.domain().points();
    for (std::size_t i = 0; i < pts.size(); ++i)
      u0[i] = u_init.value_at(pts[i]);
  }

  Trajectory traj;
  traj.scheme = scheme;
  traj.dt = step_dt;
  traj.times.push_back(0.0);
  traj.states.push_back(u0);

  Eigen::VectorXd u = to_vector(u0);
  const double scale =
      std::max({1.0, u.cwiseAbs().maxCoeff(), f.cwiseAbs().maxCoeff()});

  for (long s = 0; s < steps; ++s) {
    Eigen::VectorXd Fu = apply_F(u);
    Eigen::VectorXd Gu = apply_G(u);
    Eigen::VectorXd base =
        u + (1.0 - theta) * step_dt * (Fu + Gu + f) + theta * step_dt * f;
    for (long i = 0; i < n; ++i)
      if (mask[i]) base[i] = 0.0;

    Eigen::VectorXd unext = lu.solve(base);
    if (pointwise_G) {
      for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd rhs = base + theta * step_dt * apply_G(unext);
        for (long i = 0; i < n; ++i)
          if (mask[i]) rhs[i] = 0.0;
        Eigen::VectorXd next = lu.solve(rhs);
        double delta = (next - unext).cwiseAbs().maxCoeff();
        unext = next;
        if (delta <= tol * scale) break;
        if (it == 49)
          throw SolveError("time_integrate: nonlinear iteration stalled at t=" +
                               std::to_string(traj.times.back()),
                           delta);
      }
    }

    // One-step defect of the θ-scheme.
    Eigen::VectorXd Fn = apply_F(unext);
    Eigen::VectorXd Gn = apply_G(unext);
    Eigen::VectorXd defect = (unext - u) / step_dt - theta * (Fn + Gn + f) -
                             (1.0 - theta) * (Fu + Gu + f);
    for (long i = 0; i < n; ++i)
      if (mask[i]) defect[i] = 0.0;
    double dmax = defect.cwiseAbs().maxCoeff();
    double dscale = std::max(
        {1.0, Fn.cwiseAbs().maxCoeff(), f.cwiseAbs().maxCoeff()});
    traj.max_step_residual = std::max(traj.max_step_residual, dmax / dscale);
    if (dmax / dscale > std::max(tol, 1e-9) * 100)
      throw SolveError("time_integrate: step residual above tolerance at t=" +
                           std::to_string(traj.times.back() + step_dt),
                       dmax / dscale);

    u = unext;
    traj.times.push_back(static_cast<double>(s + 1) * step_dt);
    traj.states.push_back(to_grid(system_F.domain_ptr(), u));
  }
  traj.times.back() = T;
  return traj;
}

}  // namespace gridfn
