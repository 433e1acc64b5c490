#include <cmath>
#include <numbers>
#include <string>

#include <gtest/gtest.h>

#include "cascopt/config.hpp"
#include "cascopt/io.hpp"

using namespace cascopt;

namespace {
constexpr double two_pi = 2 * std::numbers::pi;
}

TEST(Config, UnitsAndPrefixes) {
  const RunConfig c = parse_config(
      "[physical]\nmass = 150 ng\nomega1 = 1 MHz\nomega2 = 6.283185307179586e6 rad/s\n"
      "gamma1 = 1 Hz\ntemperature = 4 K\nlength = 25 mm\nwavelength = 1064 nm\npower1 = 2 mW\n");
  EXPECT_NEAR(c.physical.m, 150e-12, 1e-25);
  EXPECT_NEAR(c.physical.Omega1, two_pi * 1e6, 1e-6);
  EXPECT_NEAR(c.physical.Omega2, c.physical.Omega1, 1e-6);
  EXPECT_NEAR(c.physical.gamma1, two_pi, 1e-12);
  EXPECT_DOUBLE_EQ(c.physical.T_bath, 4.0);
  EXPECT_NEAR(c.physical.L, 25e-3, 1e-18);
  EXPECT_NEAR(c.physical.lambda_L, 1064e-9, 1e-20);
  EXPECT_NEAR(c.physical.P1, 2e-3, 1e-18);
}

TEST(Config, BareRateFollowsConvention) {
  const RunConfig a = parse_config("[physical]\nkappa = 1.34e6\n");
  EXPECT_DOUBLE_EQ(a.physical.kappa, 1.34e6);
  const RunConfig o = parse_config("[physical]\nfrequency_convention = ordinary\nkappa = 1.34e6\n");
  EXPECT_NEAR(o.physical.kappa, two_pi * 1.34e6, 1e-6);
  // Explicit units ignore the convention.
  const RunConfig e = parse_config("[physical]\nfrequency_convention = ordinary\nkappa = 1.34e6 rad/s\n");
  EXPECT_DOUBLE_EQ(e.physical.kappa, 1.34e6);
}

TEST(Config, Defaults) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.frequency_convention, FrequencyConvention::angular);
  EXPECT_EQ(c.cubic_kappa, CubicKappaConvention::printed);
  EXPECT_EQ(c.physical.topology, Topology::unidirectional);
}

TEST(Config, RunSection) {
  const RunConfig c = parse_config(
      "[run]\nhorizon = 10\nsamples = 11\nseed = 7\nomega2_ratios = 0.5, 1 ,1.5\n"
      "cubic_kappa_convention = quarter\nreadout_form = printed\nenergy_offset = minus_half\n");
  EXPECT_DOUBLE_EQ(c.horizon, 10.0);
  EXPECT_EQ(c.samples, 11);
  EXPECT_EQ(c.seed, 7u);
  ASSERT_EQ(c.omega2_ratios.size(), 3u);
  EXPECT_DOUBLE_EQ(c.omega2_ratios[2], 1.5);
  EXPECT_EQ(c.cubic_kappa, CubicKappaConvention::quarter);
  EXPECT_EQ(c.readout_form, ReadoutForm::printed);
  EXPECT_EQ(c.energy_offset, EnergyOffset::minus_half);
}

TEST(Config, StrictRejections) {
  EXPECT_THROW(parse_config("[physical]\nmas = 1 g\n"), ConfigError);
  EXPECT_THROW(parse_config("[extra]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[physical]\npower1 = 2 mV\n"), ConfigError);
  EXPECT_THROW(parse_config("[physical]\npower1 = 2 xW\n"), ConfigError);
  EXPECT_THROW(parse_config("[physical]\npower1 = lots\n"), ConfigError);
  EXPECT_THROW(parse_config("[physical]\ntopology = sideways\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nsamples = 2.5\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nhorizon = 5 s\n"), ConfigError);
  EXPECT_THROW(parse_config("[physical\n"), ConfigError);
}

TEST(Config, ModelValidatesPhysics) {
  const RunConfig c = parse_config("[physical]\npower1 = 0 W\n");
  EXPECT_THROW(c.model(), ParameterError);
}

TEST(Io, RoundTripFormatting) {
  for (double v : {0.1, 1.0 / 3.0, 6250985.2408283846, -1e-300, 2.5e-4})
    EXPECT_EQ(std::stod(format_double(v)), v);
}
