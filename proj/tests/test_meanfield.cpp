#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "cascopt/meanfield.hpp"
#include "oracles.hpp"

using namespace cascopt;

namespace {

ModelParams working_point() { return nondimensionalize(PhysicalParams{}); }

}  // namespace

using oracle::discriminant_root_count;

TEST(MeanFieldRhs, LinearCavitySteadyState) {
  ModelParams mp = working_point();
  mp.g = {0.0, 0.0};
  const cplx z{0.5 * mp.kappa, mp.delta};
  MeanFieldState s;
  s.A[0] = mp.E[0] / z;
  s.A[1] = -mp.kappa * s.A[0] / z;
  const MeanFieldState d = meanfield_rhs(s, mp);
  EXPECT_LT(std::abs(d.A[0]) / mp.E[0], 1e-14);
  EXPECT_LT(std::abs(d.A[1]) / mp.E[0], 1e-14);
}

TEST(MeanFieldRhs, UndrivenSecondCavityDecays) {
  ModelParams mp = working_point();
  mp.E = {0.0, 0.0};
  MeanFieldState s;
  s.A[1] = {0.3, -0.2};
  s.Q[1] = 0.1;
  const MeanFieldState d = meanfield_rhs(s, mp);
  const cplx expect = -cplx(0.5 * mp.kappa, s.detuning(mp, 1)) * s.A[1];
  EXPECT_NEAR(std::abs(d.A[1] - expect), 0.0, 1e-15);
}

TEST(MeanFieldRhs, JacobianMatchesFiniteDifferences) {
  for (Topology topo : {Topology::unidirectional, Topology::bidirectional}) {
    ModelParams mp = working_point();
    mp.topology = topo;
    mp.g = {0.01, 0.02};
    mp.E = {1.0, topo == Topology::bidirectional ? 0.5 : 0.0};
    MeanFieldState s;
    s.Q = {0.3, -0.1};
    s.P = {0.05, 0.2};
    s.A = {cplx(1.0, -0.5), cplx(-0.2, 0.7)};
    const auto J = meanfield_jacobian(s, mp);
    const MeanFieldVector x = to_vector(s);
    for (int k = 0; k < 8; ++k) {
      MeanFieldVector xp = x, xm = x;
      const double h = 1e-6;
      xp[k] += h;
      xm[k] -= h;
      const Eigen::VectorXd col =
          (to_vector(meanfield_rhs(from_vector(xp), mp)) - to_vector(meanfield_rhs(from_vector(xm), mp))) /
          (2 * h);
      EXPECT_LT((col - J.col(k)).norm(), 1e-7) << "column " << k;
    }
  }
}

TEST(IntegrateMeanField, ZeroStaysZero) {
  ModelParams mp = working_point();
  mp.E = {0.0, 0.0};
  const auto tr = integrate_meanfield(MeanFieldState{}, mp, 50.0, 11);
  for (const auto& s : tr.samples) EXPECT_EQ(to_vector(s).norm(), 0.0);
}

TEST(IntegrateMeanField, SelfConvergence) {
  const ModelParams mp = working_point();
  const auto coarse = integrate_meanfield(MeanFieldState{}, mp, 60.0, 2, {1e-8, 1e-11});
  const auto fine = integrate_meanfield(MeanFieldState{}, mp, 60.0, 2, {5e-9, 5e-12});
  const MeanFieldVector a = to_vector(coarse.samples.back()), b = to_vector(fine.samples.back());
  EXPECT_LT((a - b).norm() / b.norm(), 1e-8);
}

TEST(IntegrateMeanField, UnidirectionalIndependence) {
  const ModelParams mp = working_point();
  MeanFieldState s0, s1;
  s1.Q[1] = 5.0;
  s1.P[1] = -3.0;
  s1.A[1] = {100.0, 50.0};
  const auto a = integrate_meanfield(s0, mp, 30.0, 31);
  const auto b = integrate_meanfield(s1, mp, 30.0, 31);
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    const double scale = std::abs(a.samples[k].A[0]) + 1.0;
    EXPECT_LT(std::abs(a.samples[k].A[0] - b.samples[k].A[0]) / scale, 1e-8);
    EXPECT_NEAR(a.samples[k].Q[0], b.samples[k].Q[0], 1e-8 * (std::abs(a.samples[k].Q[0]) + 1));
  }
}

TEST(IntegrateMeanField, BidirectionalSwapSymmetry) {
  ModelParams mp = working_point();
  mp.topology = Topology::bidirectional;
  mp.E[1] = mp.E[0];
  const auto tr = integrate_meanfield(MeanFieldState{}, mp, 40.0, 21);
  for (const auto& s : tr.samples) {
    EXPECT_LT(std::abs(s.A[0] - s.A[1]) / (std::abs(s.A[0]) + 1), 1e-8);
    EXPECT_NEAR(s.Q[0], s.Q[1], 1e-8 * (std::abs(s.Q[0]) + 1));
  }
}

TEST(SteadyMeanField, UndrivenIsZero) {
  ModelParams mp = working_point();
  mp.E = {0.0, 0.0};
  EXPECT_EQ(to_vector(steady_meanfield(mp)).norm(), 0.0);
}

TEST(SteadyMeanField, LinearClosedForm) {
  ModelParams mp = working_point();
  mp.g = {0.0, 0.0};
  const MeanFieldState s = steady_meanfield(mp);
  const cplx z{0.5 * mp.kappa, mp.delta};
  const cplx A1 = mp.E[0] / z;
  EXPECT_LT(std::abs(s.A[0] - A1) / std::abs(A1), 1e-13);
  EXPECT_LT(std::abs(s.A[1] + mp.kappa * A1 / z) / std::abs(A1), 1e-13);
  EXPECT_EQ(s.Q[0], 0.0);
  EXPECT_EQ(s.P[1], 0.0);
}

TEST(SteadyMeanField, WorkingPointResidualAndIntegration) {
  const ModelParams mp = working_point();
  const MeanFieldState s = steady_meanfield(mp);
  EXPECT_LT(scaled_residual(s, mp), 1e-12);
  const auto tr = integrate_meanfield(MeanFieldState{}, mp, 16000.0, 2);
  const MeanFieldVector a = to_vector(tr.samples.back()), b = to_vector(s);
  EXPECT_LT((a - b).norm() / b.norm(), 1e-8);
  EXPECT_NEAR(std::abs(s.coupling(mp, 0)) / mp.kappa, 0.479, 2e-3);
}

TEST(Multistability, LinearCubic) {
  ModelParams mp = working_point();
  mp.g = {0.0, 0.0};
  const BranchSet set = multistability_branches(mp);
  ASSERT_EQ(set.branches.size(), 1u);
  const double N1 = mp.E[0] * mp.E[0] / (mp.delta * mp.delta + 0.5 * mp.kappa * mp.kappa);
  EXPECT_NEAR(set.branches[0].N1, N1, 1e-12 * N1);
}

TEST(Multistability, Undriven) {
  ModelParams mp = working_point();
  mp.E = {0.0, 0.0};
  const BranchSet set = multistability_branches(mp);
  ASSERT_EQ(set.branches.size(), 1u);
  EXPECT_EQ(set.branches[0].N1, 0.0);
  EXPECT_EQ(set.branches[0].N2, 0.0);
}

TEST(Multistability, RealRootsOfKnownCubic) {
  const auto r = real_roots(Cubic{1.0, -6.0, 11.0, -6.0});
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r[0], 1.0, 1e-14);
  EXPECT_NEAR(r[1], 2.0, 1e-14);
  EXPECT_NEAR(r[2], 3.0, 1e-14);
  EXPECT_EQ(real_roots(Cubic{1.0, 0.0, 1.0, 1.0}).size(), 1u);
}

TEST(Multistability, DiscriminantOracleAndResiduals) {
  for (auto conv : {CubicKappaConvention::printed, CubicKappaConvention::quarter}) {
    ModelParams mp = working_point();
    int count3 = 0, transitions = 0, prev = 1;
    for (int k = 0; k <= 1200; ++k) {
      mp.delta = -3.0 + 6.0 * k / 1200;
      const BranchSet set = multistability_branches(mp, conv);
      long double rel = 0;
      const int oracle = discriminant_root_count(photon_cubic(mp, 0, mp.E[0] * mp.E[0], conv), mp.delta, &rel);
      if (rel > 1e-9) EXPECT_EQ(set.cavity1_roots, oracle) << "delta " << mp.delta;
      if (set.cavity1_roots != prev) ++transitions;
      prev = set.cavity1_roots;
      count3 += set.cavity1_roots == 3;
      const double E2 = mp.E[0] * mp.E[0];
      for (const auto& b : set.branches) {
        EXPECT_LT(std::abs(b.residual1), 1e-10 * std::max(1.0, E2));
        const double drive2 = mp.kappa * mp.kappa * b.N1;
        EXPECT_LT(std::abs(b.residual2), 1e-10 * std::max(1.0, drive2));
      }
    }
    EXPECT_GT(count3, 0);
    EXPECT_EQ(transitions, 2);  // 1 -> 3 -> 1
  }
}

TEST(Multistability, MiddleBranchUnstable) {
  ModelParams mp = working_point();
  int points = 0, unstable = 0;
  for (int k = 0; k <= 400; ++k) {
    mp.delta = 0.3 + 0.2 * k / 400;
    const BranchSet set = multistability_branches(mp);
    if (set.cavity1_roots != 3) continue;
    ++points;
    for (const auto& b : set.branches)
      if (b.cubic_label1 == Stability::unstable) {
        unstable += b.jacobian_label == Stability::unstable;
        break;
      }
  }
  ASSERT_GT(points, 10);
  EXPECT_GE(unstable, 0.95 * points);
}
