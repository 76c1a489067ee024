#include <doctest.h>

#include <cmath>

#include <Eigen/SparseCore>

#include "gridfn/asymptotics.hpp"
#include "gridfn/pairing.hpp"
#include "gridfn/pde.hpp"
#include "testutil.hpp"

using namespace gridfn;
using testutil::ulps;
using testutil::within_ulps;

namespace {

GridDomain::Ptr closed_unit_interval(const GridLevel& lv) {
  return GridDomain::discretize(
      [](const RealPoint& p) { return p[0] >= 0.0 && p[0] <= 1.0; }, lv, 1);
}

GridDomain::Ptr closed_unit_square(const GridLevel& lv) {
  return GridDomain::discretize(
      [](const RealPoint& p) {
        return p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 1.0;
      },
      lv, 2);
}

}  // namespace

TEST_CASE("assembled 1D Laplacian rows") {
  GridLevel lv(16, 1.0);
  auto d = closed_unit_interval(lv);
  auto sys = assemble(OperatorSpec::laplacian(1), d);

  const double n2 = 16.0 * 16.0;
  // Interior row: (-N^2, 2N^2, -N^2).
  long row = sys.domain().ordinal(Index{8, 0, 0});
  Eigen::SparseMatrix<double, Eigen::RowMajor> rm(sys.matrix());
  int nnz = 0;
  for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rm, row);
       it; ++it) {
    ++nnz;
    if (it.col() == row)
      CHECK(it.value() == 2 * n2);
    else
      CHECK(it.value() == -n2);
  }
  CHECK(nnz == 3);

  // Boundary rows are identity rows at 0 and 1.
  CHECK(sys.boundary_row_count() == 2);
  long b0 = sys.domain().ordinal(Index{0, 0, 0});
  int bn = 0;
  for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rm, b0);
       it; ++it) {
    ++bn;
    CHECK(it.col() == b0);
    CHECK(it.value() == 1.0);
  }
  CHECK(bn == 1);

  // Applying to x^2 gives -2 in the interior.
  auto f = sample([](double x) { return x * x; }, d);
  auto lf = sys.apply(f);
  CHECK(within_ulps(lf.value_at(Index{8, 0, 0}), -2.0, n2));

  // Zero coefficients: only boundary rows survive.
  OperatorSpec zero;
  zero.order = 1;
  auto zsys = assemble(zero, d);
  auto zf = zsys.apply(f);
  CHECK(zf.max_abs() == 0.0);
  CHECK(zsys.boundary_row_count() == 2);
}

TEST_CASE("assembled 2D Laplacian is the 5-point stencil") {
  GridLevel lv(8, 1.0);
  auto d = closed_unit_square(lv);
  auto sys = assemble(OperatorSpec::laplacian(2), d);
  const double n2 = 64.0;

  long row = sys.domain().ordinal(Index{4, 4, 0});
  Eigen::SparseMatrix<double, Eigen::RowMajor> rm(sys.matrix());
  int nnz = 0;
  double diag = 0, off = 0;
  for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rm, row);
       it; ++it) {
    ++nnz;
    if (it.col() == row)
      diag = it.value();
    else
      off += it.value();
  }
  CHECK(nnz == 5);
  CHECK(diag == 4 * n2);
  CHECK(off == -4 * n2);
}

TEST_CASE("matrix and stencil application agree") {
  GridLevel lv(64, 1.0);
  auto d = closed_unit_interval(lv);
  OperatorSpec spec;
  spec.order = 1;
  spec.add(MultiIndex::unit(0), MultiIndex::unit(0),
           [](const RealPoint& p) { return 1.0 + 0.5 * p[0]; });
  spec.add(MultiIndex::zero(), MultiIndex::zero(), 2.0);
  auto sys = assemble(spec, d);

  for (int trial = 0; trial < 100; ++trial) {
    auto u = testutil::random_grid_function(d, 1000 + trial);
    auto a = sys.apply(u);
    auto b = sys.apply_stencil(u);
    double scale = 6.0 * 64.0 * 64.0;  // stencil magnitude bound
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (sys.boundary_row_mask()[i]) continue;
      CHECK(within_ulps(a[i], b[i], scale));
    }
  }
}

TEST_CASE("symmetric coefficients give a symmetric interior block") {
  GridLevel lv(24, 1.0);
  auto d = closed_unit_square(lv);
  auto sys = assemble(OperatorSpec::laplacian(2, 3.0, 1.0), d);
  Eigen::SparseMatrix<double, Eigen::RowMajor> rm(sys.matrix());
  const auto& mask = sys.boundary_row_mask();
  for (long r = 0; r < rm.rows(); ++r) {
    if (mask[r]) continue;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rm, r);
         it; ++it) {
      if (mask[it.col()]) continue;
      CHECK(it.value() == sys.matrix().coeff(it.col(), r));
    }
  }
}

TEST_CASE("interior block is positive definite (inverse iteration)") {
  GridLevel lv(16, 1.0);
  auto d = closed_unit_interval(lv);
  auto sys = assemble(OperatorSpec::laplacian(1), d);

  // Inverse iteration through repeated solves of L x = y.
  GridFunction y(sys.domain_ptr(), std::vector<double>(d->size(), 1.0));
  y = sys.effective_rhs(y);
  double lambda = 0.0;
  for (int it = 0; it < 60; ++it) {
    auto x = solve(sys, y);
    double nx = lp_norm(x, 2.0);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] /= nx;
    auto lx = sys.apply(x);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (sys.boundary_row_mask()[i]) continue;
      num += x[i] * lx[i];
      den += x[i] * x[i];
    }
    lambda = num / den;
    y = x;
  }
  CHECK(lambda > 0.0);
  // Smallest eigenvalue of the discrete -d^2/dx^2 on (0,1) is close to pi^2.
  CHECK(lambda == doctest::Approx(M_PI * M_PI).epsilon(0.05));
}

TEST_CASE("Poisson solve against the analytic solution") {
  GridLevel lv(720, 1.0);
  auto d = closed_unit_interval(lv);
  auto sys = assemble(OperatorSpec::laplacian(1), d);
  auto rhs = l2_project(
      [](double x) { return M_PI * M_PI * std::sin(M_PI * x); }, d,
      CellAnchor::centered);
  SolveInfo info;
  auto u = solve(sys, rhs, SolveOptions{}, &info);
  CHECK(info.relative_residual <= 1e-10);

  double worst = 0.0;
  for (const Index& p : d->points())
    worst = std::max(worst, std::fabs(u.value_at(p) -
                                      std::sin(M_PI * d->coord(p)[0])));
  CHECK(worst <= 5e-6);  // ~ pi^2 eps^2 / 24

  // Boundary rows hold exactly in the direct solve.
  CHECK(u.value_at(Index{0, 0, 0}) == 0.0);
  CHECK(u.value_at(Index{720, 0, 0}) == 0.0);

  // Zero rhs gives the zero solution.
  GridFunction z(d);
  auto uz = solve(sys, z);
  CHECK(uz.max_abs() == 0.0);
}

TEST_CASE("cg matches the direct solve") {
  GridLevel lv(720, 1.0);
  auto d = closed_unit_interval(lv);
  auto sys = assemble(OperatorSpec::laplacian(1), d);
  auto rhs = l2_project(
      [](double x) { return M_PI * M_PI * std::sin(M_PI * x); }, d,
      CellAnchor::centered);
  SolveOptions direct;
  direct.method = SolveOptions::Method::direct;
  SolveOptions cg;
  cg.method = SolveOptions::Method::cg;
  cg.tol = 1e-12;
  SolveInfo cgi;
  auto ud = solve(sys, rhs, direct);
  auto uc = solve(sys, rhs, cg, &cgi);
  CHECK_FALSE(cgi.used_direct);
  CHECK(cgi.iterations > 0);
  double dev = 0.0;
  for (std::size_t i = 0; i < ud.size(); ++i)
    dev = std::max(dev, std::fabs(ud[i] - uc[i]));
  CHECK(dev <= 1e-7);
}

TEST_CASE("discrete Green's function is the tent") {
  GridLevel lv(64, 1.0);
  auto d = closed_unit_interval(lv);
  auto sys = assemble(OperatorSpec::laplacian(1), d);
  auto u0 = fundamental_solution(sys, Index{32, 0, 0});

  // Half the unit tent: u(x) = min(x, 1-x)/2, exactly at the midpoint.
  CHECK(u0.value_at(Index{32, 0, 0}) == doctest::Approx(0.25).epsilon(1e-10));
  for (const Index& p : d->points()) {
    double x = d->coord(p)[0];
    double tent = 0.5 * std::min(x, 1.0 - x);
    CHECK(u0.value_at(p) == doctest::Approx(tent).epsilon(1e-9));
  }

  // Applying the operator recovers N chi_source.
  auto back = sys.apply(u0);
  for (const Index& p : d->points()) {
    if (sys.boundary_row_mask()[sys.domain().ordinal(p)]) continue;
    double expect = p[0] == 32 ? 64.0 : 0.0;
    CHECK(std::fabs(back.value_at(p) - expect) <= 1e-8);
  }

  CHECK_THROWS_AS(fundamental_solution(sys, Index{200, 0, 0}), Error);
}

TEST_CASE("periodic fundamental solutions translate") {
  GridLevel lv(180, 1.0);
  auto d = GridDomain::periodic_box(lv, 1);
  auto sys = assemble(OperatorSpec::laplacian(1, 1.0, 1.0), d,
                      BoundaryKind::periodic);
  auto u0 = fundamental_solution(sys, Index{0, 0, 0});
  auto us = fundamental_solution(sys, Index{45, 0, 0});
  for (const Index& p : d->points()) {
    Index q = d->wrap(Index{p[0] - 45, 0, 0});
    CHECK(us.value_at(p) == doctest::Approx(u0.value_at(q)).epsilon(1e-9));
  }
}

TEST_CASE("convolution is superposition") {
  GridLevel lv(180, 1.0);
  auto d = GridDomain::periodic_box(lv, 1);
  auto sys = assemble(OperatorSpec::laplacian(1, 1.0, 1.0), d,
                      BoundaryKind::periodic);
  auto u0 = fundamental_solution(sys, Index{0, 0, 0});

  // A single point source N chi_z convolves to u0 shifted to z.
  GridFunction g(d);
  g[static_cast<std::size_t>(d->ordinal(Index{30, 0, 0}))] = 180.0;
  auto ug = convolve(g, u0);
  for (const Index& p : d->points()) {
    Index q = d->wrap(Index{p[0] - 30, 0, 0});
    CHECK(within_ulps(ug.value_at(p), u0.value_at(q),
                      std::fabs(u0.value_at(q)) + 1.0));
  }

  // Two spikes superpose linearly.
  GridFunction g2(d);
  g2[static_cast<std::size_t>(d->ordinal(Index{30, 0, 0}))] = 180.0;
  g2[static_cast<std::size_t>(d->ordinal(Index{-60, 0, 0}))] = -2.0 * 180.0;
  auto ug2 = convolve(g2, u0);
  for (const Index& p : d->points()) {
    Index qa = d->wrap(Index{p[0] - 30, 0, 0});
    Index qb = d->wrap(Index{p[0] + 60, 0, 0});
    double expect = u0.value_at(qa) - 2.0 * u0.value_at(qb);
    CHECK(ug2.value_at(p) ==
          doctest::Approx(expect).epsilon(1e-12).scale(1.0));
  }

  // Smooth data: convolution against u0 matches the direct solve.
  auto smooth = l2_project(
      [](double x) { return std::exp(std::cos(M_PI * x)); }, d);
  auto direct = solve(sys, smooth);
  auto conv = convolve(smooth, u0);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    num += (conv[i] - direct[i]) * (conv[i] - direct[i]);
    den += direct[i] * direct[i];
  }
  CHECK(std::sqrt(num / den) <= 1e-9);
}

TEST_CASE("time integration exact cases") {
  GridLevel lv(64, 1.0);
  auto d = closed_unit_interval(lv);
  OperatorSpec zero;
  zero.order = 1;
  auto sys = assemble(zero, d);

  auto u0 = sample([](double x) { return std::cos(x); }, d);
  GridFunction f0(d);
  auto steady =
      time_integrate(sys, f0, u0, 0.5, Scheme::implicit_euler, 0.05);
  for (std::size_t i = 0; i < u0.size(); ++i) {
    if (sys.boundary_row_mask()[i]) continue;
    CHECK(steady.final_state()[i] == u0[i]);
  }

  // Constant forcing integrates exactly under both schemes.
  auto c = sample([](double) { return 0.7; }, d);
  for (Scheme s : {Scheme::implicit_euler, Scheme::trapezoidal}) {
    auto traj = time_integrate(sys, c, u0, 0.5, s, 0.05);
    for (std::size_t i = 0; i < u0.size(); ++i) {
      if (sys.boundary_row_mask()[i]) continue;
      CHECK(traj.final_state()[i] ==
            doctest::Approx(u0[i] + 0.35).epsilon(1e-13));
    }
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == 0.5);
    CHECK(traj.max_step_residual <= 1e-10);
  }
}

TEST_CASE("heat equation decay") {
  GridLevel lv(180, 1.0);
  auto d = closed_unit_interval(lv);
  auto sys = assemble(OperatorSpec::laplacian(1, -1.0), d);  // F = Laplacian
  auto u0 = sample([](double x) { return std::sin(M_PI * x); }, d);
  GridFunction f0(d);
  auto traj = time_integrate(sys, f0, u0, 0.05, Scheme::trapezoidal, 5e-4);
  double decay = std::exp(-M_PI * M_PI * 0.05);
  double worst = 0.0;
  for (const Index& p : d->points()) {
    double expect = decay * std::sin(M_PI * d->coord(p)[0]);
    worst = std::max(worst,
                     std::fabs(traj.final_state().value_at(p) - expect));
  }
  CHECK(worst <= 5e-4);
}

TEST_CASE("pointwise nonlinearity (logistic growth)") {
  GridLevel lv(90, 1.0);
  auto d = GridDomain::periodic_box(lv, 1);
  OperatorSpec zero;
  zero.order = 1;
  auto sys = assemble(zero, d, BoundaryKind::periodic);
  auto u0 = sample([](double) { return 0.1; }, d);
  GridFunction f0(d);
  auto traj = time_integrate(sys, f0, u0, 1.0, Scheme::trapezoidal, 1e-3,
                             [](double u) { return u * (1.0 - u); });
  double expect = 0.1 * std::exp(1.0) / (1.0 + 0.1 * (std::exp(1.0) - 1.0));
  for (std::size_t i = 0; i < traj.final_state().size(); ++i)
    CHECK(traj.final_state()[i] == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("spatial convergence order of the Poisson solve") {
  Ladder ladder = Ladder::make(90, 1.0, 4);
  auto err = evaluate_over_ladder(
      [](const GridLevel& lv) {
        auto d = closed_unit_interval(lv);
        auto sys = assemble(OperatorSpec::laplacian(1), d);
        auto rhs = l2_project(
            [](double x) { return M_PI * M_PI * std::sin(M_PI * x); }, d,
            CellAnchor::centered);
        auto u = solve(sys, rhs);
        double worst = 0.0;
        for (const Index& p : d->points())
          worst = std::max(worst, std::fabs(u.value_at(p) -
                                            std::sin(M_PI * d->coord(p)[0])));
        return worst;
      },
      ladder);
  auto est = fit_power_law(err);
  CHECK(est.classification == Classification::infinitesimal);
  CHECK(-est.exponent == doctest::Approx(2.0).epsilon(0.08));
}
