#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kvm/flow.hpp"
#include "kvm/jacobi.hpp"
#include "support.hpp"

using namespace kvm;

namespace {

IntegratorConfig rk45(double t_max) {
  IntegratorConfig cfg;
  cfg.method = Method::AdaptiveRk45;
  cfg.t_max = t_max;
  return cfg;
}

double max_dev(const OffDiagonald& a, std::initializer_list<double> want) {
  double m = 0;
  Index i = 0;
  for (double w : want) m = std::max(m, std::abs(a[i++] - w));
  return m;
}

}  // namespace

TEST_CASE("config validation and defaults") {
  IntegratorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.resolved_eq_eps(2.0) == doctest::Approx(5e-10));
  CHECK(cfg.t_max / cfg.resolved_record_stride() <= 1e4);
  cfg.dt = -1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.dt = 1e-3;
  cfg.t_max = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK(method_from_string("rk4") == Method::FixedRk4);
  CHECK(method_from_string("adaptive_rk45") == Method::AdaptiveRk45);
  CHECK_THROWS_AS(method_from_string("euler"), ValidationError);
}

TEST_CASE("equilibrium inputs are stationary") {
  const FlowTrajectory t = integrate(OffDiagonald{1.26, 0, -7.96}, rk45(1.0));
  CHECK(t.status == FlowStatus::StationaryInput);
  CHECK(t.rows() == 1);
  CHECK(t.times[0] == 0);

  const FlowTrajectory t2 = integrate(OffDiagonald{3.0}, rk45(1.0));
  CHECK(t2.status == FlowStatus::StationaryInput);
  CHECK(to_string(t2.status) == "stationary_input");
}

TEST_CASE("strict validation rejects zero entries") {
  CHECK_THROWS_AS(integrate(OffDiagonald{1, 0, 2, 3}, rk45(1.0)), ValidationFailure);
  CHECK_NOTHROW(integrate(OffDiagonald{1, 0, 2, 3}, rk45(1.0), InitialCheck::Lenient));
}

TEST_CASE("ex1 input at t = 1") {
  const FlowTrajectory t = integrate(OffDiagonald{5, -6, -2}, rk45(1.0));
  CHECK(max_dev(t.final_state(), {1.26, 0, -7.96}) < 0.01);
  CHECK(t.status == FlowStatus::Converged);
  CHECK(t.times.front() == 0);
  CHECK(t.states.front() == OffDiagonald{5, -6, -2});
  CHECK(t.k_norms.back() <= t.eq_eps);
}

TEST_CASE("invariants along a trajectory") {
  std::mt19937_64 rng(17);
  for (Index n = 3; n <= 9; ++n) {
    const OffDiagonald a0 = test::random_offdiag(rng, n, 10.0, 0.5);
    IntegratorConfig cfg = rk45(2.0);
    cfg.eq_eps = 0.0;
    const FlowTrajectory t = integrate(a0, cfg);
    const double s = 1 + a0.norm();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      CHECK(t.spec_drift[r] <= 1e-7 * s);
      CHECK(std::abs(t.states[r].norm() - a0.norm()) <= 1e-8 * s);
      if (r > 0) CHECK(t.f_values[r] - t.f_values[r - 1] >= -1e-9 * (1 + a0.norm() * a0.norm()));
      for (Index i = 0; i < a0.size(); ++i) CHECK(t.states[r][i] * a0[i] > 0);
    }
    CHECK(t.steps.min_f_increment >= -1e-9 * (1 + a0.norm() * a0.norm()));
    CHECK(t.steps.sign_changes == 0);
    CHECK(t.steps.min_tail_increment >= -1e-8 * s);
  }
}

TEST_CASE("fixed RK4 agrees with adaptive RK45") {
  const OffDiagonald a0{5, -6, -2};
  IntegratorConfig c45 = rk45(1.0);
  c45.eq_eps = 0.0;
  IntegratorConfig c4 = c45;
  c4.method = Method::FixedRk4;
  c4.dt = 1e-4;
  const auto x = integrate(a0, c45).final_state();
  const auto y = integrate(a0, c4).final_state();
  CHECK((x.entries() - y.entries()).norm() <= 1e-6);

  const OffDiagonald b0{-3, 10, 1, -2, -6, -11, 5, 6, 12};
  c45.t_max = c4.t_max = 0.3;
  CHECK((integrate(b0, c45).final_state().entries() - integrate(b0, c4).final_state().entries())
            .norm() <= 1e-6);
}

TEST_CASE("record stride bounds the number of rows") {
  IntegratorConfig cfg = rk45(1.0);
  cfg.eq_eps = 0.0;
  cfg.record_stride = 0.1;
  const FlowTrajectory t = integrate(OffDiagonald{5, -6, -2}, cfg);
  CHECK(t.rows() <= 12);
  CHECK(t.times.back() == doctest::Approx(1.0));
  for (std::size_t r = 1; r < t.rows(); ++r) CHECK(t.times[r] > t.times[r - 1]);
}

TEST_CASE("detect_convergence rule") {
  FlowTrajectory t;
  t.k_norms = {0, 0, 0};
  CHECK(detect_convergence(t, 1e-10, 2));
  t.k_norms = {1e-3, 1e-12, 1e-12};
  CHECK(detect_convergence(t, 1e-10, 2));
  CHECK_FALSE(detect_convergence(t, 1e-10, 3));
  t.k_norms = {};
  CHECK_FALSE(detect_convergence(t, 1e-10, 1));
}

TEST_CASE("dense mode matches the componentwise flow on tridiagonal input") {
  const OffDiagonald a0{5, -6, -2};
  IntegratorConfig cfg = rk45(1.0);
  cfg.eq_eps = 0.0;
  cfg.abs_tol = cfg.rel_tol = 1e-12;
  const auto x = integrate(a0, cfg).final_state();
  const DenseTrajectory d = integrate_dense(embed(a0), cfg);
  const auto y = d.states.back();
  for (Index i = 0; i < a0.size(); ++i) CHECK(std::abs(y(i, i + 1) - x[i]) <= 1e-8);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j)
      if (std::abs(i - j) != 1) CHECK(std::abs(y(i, j)) <= 1e-8);
}

TEST_CASE("dense mode: diagonal input is stationary") {
  MatrixX<double> m = MatrixX<double>::Zero(4, 4);
  m.diagonal() << 1, -2, 3, 0.5;
  const DenseTrajectory d = integrate_dense(SymmetricMatrixd::fromUpper(m), rk45(1.0));
  CHECK(d.status == FlowStatus::StationaryInput);
  CHECK(d.rows() == 1);
}

TEST_CASE("dense mode invariants on random symmetric matrices") {
  std::mt19937_64 rng(8);
  for (Index n : {5, 8}) {
    for (int trial = 0; trial < 3; ++trial) {
      const SymmetricMatrixd h0 = test::random_symmetric(rng, n, 3.0);
      const DenseTrajectory d = integrate_dense(h0, rk45(5.0));
      const double s = 1 + h0.norm();
      for (std::size_t r = 0; r < d.rows(); ++r) CHECK(d.spec_drift[r] <= 1e-7 * s);
      for (std::size_t r = 1; r < d.rows(); ++r)
        CHECK(d.f_values[r] - d.f_values[r - 1] >= -1e-9 * s * s);
      const auto& hf = d.states.back().dense();
      CHECK((hf - hf.transpose()).norm() == 0);
    }
  }
}

TEST_CASE("block structure") {
  MatrixX<double> m = MatrixX<double>::Zero(5, 5);
  m(0, 1) = 1;
  m(2, 3) = 2;
  m(3, 4) = 1e-9;
  const auto blocks = block_structure(SymmetricMatrixd::fromUpper(m), 1e-6);
  CHECK(blocks == std::vector<std::vector<Index>>{{0, 1}, {2, 3}, {4}});
  m(0, 4) = 1;
  const auto merged = block_structure(SymmetricMatrixd::fromUpper(m), 1e-6);
  CHECK(merged.size() == 2);
}

TEST_CASE("decayed entries keep their sign after leaving the double range") {
  const OffDiagonald a0{0.6, 9.0, -0.7, 8.0};
  IntegratorConfig cfg = rk45(500.0);
  cfg.eq_eps = 0.0;
  const FlowTrajectory t = integrate(a0, cfg);
  CHECK(t.steps.underflowed > 0);
  CHECK(t.steps.sign_changes == 0);
  for (Index i = 0; i < a0.size(); ++i) CHECK(std::signbit(t.final_state()[i]) == std::signbit(a0[i]));
  CHECK(t.spec_drift.back() <= 1e-7 * (1 + a0.norm()));
}
