#include <doctest.h>

#include <cmath>

#include "gridfn/measures.hpp"
#include "testutil.hpp"

using namespace gridfn;
using testutil::within_ulps;

namespace {

GridFunction alternating(GridDomain::Ptr d) {
  GridFunction f(d);
  const auto& pts = d->points();
  for (std::size_t i = 0; i < pts.size(); ++i)
    f[i] = pts[i][0] % 2 == 0 ? 1.0 : -1.0;
  return f;
}

}  // namespace

TEST_CASE("value measure bookkeeping") {
  ValueMeasure vm(4.0, 16);
  vm.insert(1.0);
  vm.insert(1.0);
  vm.insert(-3.9);
  vm.insert(10.0);  // escapes
  CHECK(vm.total_count() == 4);
  CHECK(vm.escaped_count() == 1);
  CHECK(vm.escaped_mass() == 0.25);

  // Retained + escaped counts account for every sample exactly.
  std::int64_t retained = 0;
  for (int b = 0; b < vm.bin_count(); ++b)
    retained += static_cast<std::int64_t>(vm.mass(b) * vm.total_count() + 0.5);
  CHECK(retained + vm.escaped_count() == vm.total_count());

  auto atoms = vm.atoms(0.4);
  REQUIRE(atoms.size() == 1);
  CHECK(atoms[0].position == 1.0);  // bin mean is exact for equal samples
  CHECK(atoms[0].mass == 0.5);
}

TEST_CASE("extract_measure on the alternating function") {
  GridLevel lv(2880, 1.0);
  auto box = GridDomain::full_box(lv, 1);
  auto f = alternating(box);
  auto probes = make_probes(-1.0, 1.0, 17);
  MeasureField field = extract_measure(f, probes, 2.0 / 17,
                                       MeasureOptions{});
  for (const auto& vm : field.measures) {
    auto atoms = vm.atoms();
    REQUIRE(atoms.size() == 2);
    double tol = 2.0 / static_cast<double>(vm.total_count());
    CHECK(atoms[0].position == -1.0);
    CHECK(atoms[1].position == 1.0);
    CHECK(std::fabs(atoms[0].mass - 0.5) <= tol);
    CHECK(std::fabs(atoms[1].mass - 0.5) <= tol);
    CHECK(vm.escaped_count() == 0);
  }
}

TEST_CASE("extract_measure of a constant and of a tall spike") {
  GridLevel lv(720, 2.0);
  auto box = GridDomain::full_box(lv, 1);

  auto c = sample([](double) { return 2.5; }, box);
  auto probes = make_probes(0.0, 2.0, 17);
  auto field = extract_measure(c, probes, 2.0 / 17, MeasureOptions{});
  for (const auto& vm : field.measures) {
    auto atoms = vm.atoms();
    REQUIRE(atoms.size() == 1);
    CHECK(atoms[0].position == 2.5);
    CHECK(atoms[0].mass == 1.0);
  }

  // N chi_1: one escaping point inside the window that straddles x=1.
  GridFunction spike(box);
  spike[static_cast<std::size_t>(box->ordinal(Index{720, 0, 0}))] = 720.0;
  auto field2 = extract_measure(spike, probes, 2.0 / 17, MeasureOptions{});
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const auto& vm = field2.measures[j];
    auto atoms = vm.atoms();
    REQUIRE(atoms.size() == 1);
    CHECK(atoms[0].position == 0.0);
    CHECK(atoms[0].mass >= 1.0 - 2.0 / std::sqrt(720.0));
    bool straddles = std::fabs(probes[j][0] - 1.0) <= field2.window_width / 2;
    if (straddles)
      CHECK(vm.escaped_count() == 1);
    else
      CHECK(vm.escaped_count() == 0);
  }

  CHECK_THROWS_AS(
      extract_measure(c, probes, /*window_width=*/1e-4, 64, 10.0, 1.0),
      WindowError);
}

TEST_CASE("periodic measure") {
  GridLevel lv(720, 1.0);
  auto box = GridDomain::full_box(lv, 1);

  auto f = alternating(box);
  ValueMeasure vm = periodic_measure(f, 2);
  auto atoms = vm.atoms();
  REQUIRE(atoms.size() == 2);
  CHECK(atoms[0].position == -1.0);
  CHECK(atoms[0].mass == 0.5);
  CHECK(atoms[1].position == 1.0);
  CHECK(atoms[1].mass == 0.5);

  auto c = sample([](double) { return -0.75; }, box);
  auto vmc = periodic_measure(c, 1);
  REQUIRE(vmc.atoms().size() == 1);
  CHECK(vmc.atoms()[0].position == -0.75);

  // Oscillation with period 64 steps (built by index, so the period scan
  // sees exactly repeating doubles): histogram moments against the direct
  // period sum.
  const std::int64_t m = 64;
  GridFunction osc(box);
  const auto& pts = box->points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::int64_t r = ((pts[i][0] % m) + m) % m;
    osc[i] = std::sin(2.0 * M_PI * static_cast<double>(r) / m);
  }
  ValueMeasure vosc = periodic_measure(osc, m);
  for (int q = 1; q <= 4; ++q) {
    double direct = 0.0;
    for (std::int64_t i = 0; i < m; ++i)
      direct += std::pow(std::sin(2.0 * M_PI * i / m), q);
    direct /= static_cast<double>(m);
    // Bin means keep samples within half a bin width; psi = t^q has
    // |psi'| <= q on [-1,1].
    double tol = q * (2.0 * vosc.cutoff() / vosc.bin_count()) / 2.0 + 1e-12;
    CHECK(std::fabs(vosc.moment(q) - direct) <= tol);
  }

  auto linear = sample([](double x) { return x; }, box);
  CHECK_THROWS_AS(periodic_measure(linear, 2), PeriodicityError);
}

TEST_CASE("pair_measure") {
  GridLevel lv(2880, 1.0);
  auto box = GridDomain::full_box(lv, 1);
  auto probes = make_probes(-1.0, 1.0, 17);
  double h = 2.0 / 17;
  TestFunction phi(0.1, 0.5);

  // Constant field: pair_measure equals psi(c) times the midpoint sum of
  // phi, exactly.
  auto c = sample([](double) { return 1.5; }, box);
  auto field = extract_measure(c, probes, h, MeasureOptions{});
  auto psi = [](double t) { return t * t + 1.0; };
  CompensatedSum mid;
  for (const auto& p : probes) mid.add(phi(p));
  double expect = psi(1.5) * mid.value() * h;
  CHECK(within_ulps(pair_measure(field, psi, phi), expect,
                    std::fabs(expect)));

  // Oscillation: barycentre psi(t)=t (clipped) integrates to zero, and the
  // double-well density (t^2-1)^2 vanishes on the +-1 atoms.
  auto f = alternating(box);
  auto field2 = extract_measure(f, probes, h, MeasureOptions{});
  double cut = field2.cutoff;
  CHECK(std::fabs(pair_measure(
            field2, [cut](double t) { return std::fabs(t) <= cut ? t : 0.0; },
            phi)) <= 3e-3);
  CHECK(std::fabs(pair_measure(
            field2,
            [](double t) { return (t * t - 1.0) * (t * t - 1.0); }, phi)) <=
        1e-12);
}

TEST_CASE("barycentre coherence over the ladder") {
  Ladder ladder = Ladder::make(720, 1.0, 3);
  auto probes = make_probes(-1.0, 1.0, 17);
  double h = 2.0 / 17;
  TestBattery battery = TestBattery::centered(RealPoint{0.0, 0.0, 0.0}, 1, 3,
                                              0.25, 0.6);

  auto run = [&](const GridFamily& fam) {
    return barycentre_check(fam, probes, h, battery, ladder);
  };

  auto osc = run([](const GridLevel& lv) {
    return alternating(GridDomain::full_box(lv, 1));
  });
  CHECK(osc.sup_norm_finite);
  for (const auto& r : osc.residuals) {
    // Windows grow like sqrt(N), so the atom-mass imbalance shrinks.
    CHECK(r.back().value <= r.front().value + 1e-12);
    CHECK(r.back().value <= 2e-2);
  }

  auto cst = run([](const GridLevel& lv) {
    return sample([](double) { return 0.8; }, GridDomain::full_box(lv, 1));
  });
  for (const auto& r : cst.residuals)
    for (const auto& s : r) CHECK(std::fabs(s.value) <= 5e-2);

  auto sgn = run([](const GridLevel& lv) {
    return sample([](double x) { return x < 0.0 ? -1.0 : 1.0; },
                  GridDomain::full_box(lv, 1));
  });
  for (const auto& r : sgn.residuals) {
    // Residual at the finest rung is dominated by the probe quadrature.
    CHECK(std::fabs(r.back().value) <= 5e-2);
  }
}

TEST_CASE("truncation ladder") {
  GridLevel lv(720, 1.0);
  auto box = GridDomain::full_box(lv, 1);
  GridFunction spike(box);
  spike[static_cast<std::size_t>(box->ordinal(Index{0, 0, 0}))] = 720.0;

  auto cuts = truncation_ladder(spike, {1.0, 10.0, 1000.0});
  REQUIRE(cuts.size() == 3);
  CHECK(cuts[0].value_at(Index{0, 0, 0}) == 1.0);   // chi_0
  CHECK(cuts[0].max_abs() == 1.0);
  CHECK(cuts[2].value_at(Index{0, 0, 0}) == 720.0);  // height above the peak

  auto f = sample([](double x) { return std::sin(5 * x); }, box);
  auto same = truncation_ladder(f, {2.0});
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(same[0][i] == f[i]);

  // Histograms of truncations stabilize once the height clears the data.
  auto probes = make_probes(-1.0, 1.0, 17);
  auto field_f = extract_measure(f, probes, 2.0 / 17, 64, 3.0, 1.0);
  auto field_t = extract_measure(same[0], probes, 2.0 / 17, 64, 3.0, 1.0);
  for (std::size_t j = 0; j < probes.size(); ++j)
    for (int b = 0; b < 64; ++b)
      CHECK(field_f.measures[j].mass(b) == field_t.measures[j].mass(b));
}

TEST_CASE("null-set insensitivity") {
  GridLevel lv(2880, 1.0);
  auto box = GridDomain::full_box(lv, 1);
  auto f = alternating(box);
  std::vector<RealPoint> probe = {RealPoint{0.0, 0.0, 0.0}};
  MeasureOptions opts;
  auto base = extract_measure(f, probe, 1.0, opts);
  std::int64_t count = base.measures[0].total_count();

  // Mangle floor(sqrt(count)) points inside the window.
  auto g = f;
  auto k = static_cast<std::int64_t>(std::floor(std::sqrt(count)));
  for (std::int64_t i = 0; i < k; ++i)
    g[static_cast<std::size_t>(box->ordinal(Index{2 * i, 0, 0}))] = 0.33;
  auto mod = extract_measure(g, probe, 1.0, opts);

  double bound = 2.0 / std::sqrt(static_cast<double>(count));
  for (int b = 0; b < base.measures[0].bin_count(); ++b)
    CHECK(std::fabs(base.measures[0].mass(b) - mod.measures[0].mass(b)) <=
          bound);
}
