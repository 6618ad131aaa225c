#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "sfwave/config.hpp"
#include "sfwave/harness.hpp"

using namespace sfwave;

namespace {

std::vector<ConfigIssue> issues_of(const std::string& text) {
  auto parsed = parse_config(text);
  auto more = validate_config(parsed.config);
  parsed.issues.insert(parsed.issues.end(), more.begin(), more.end());
  return parsed.issues;
}

bool has_field(const std::vector<ConfigIssue>& issues, const std::string& field) {
  for (const auto& i : issues) {
    if (i.field == field) return true;
  }
  return false;
}

std::string pi_squared() {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", M_PI * M_PI);
  return buf;
}

}  // namespace

TEST(Config, EveryPresetIsValid) {
  for (const auto& name : preset_names()) {
    const auto issues = issues_of(preset_json(name));
    EXPECT_TRUE(issues.empty()) << name << ": " << (issues.empty() ? "" : issues[0].field + " " + issues[0].message);
  }
  EXPECT_THROW(preset_json("nope"), UsageError);
}

TEST(Config, AcceptancePresetContents) {
  const auto cfg = config_from_text(preset_json("acceptance"));
  EXPECT_EQ(cfg.system.modes(), 16u);
  EXPECT_EQ(cfg.sweep.epsilons.size(), 6u);
  EXPECT_EQ(cfg.sweep.epsilons.back(), 1.0 / 64);
  EXPECT_EQ(cfg.numerics.drift_sampling, DriftSampling::left_endpoint);
  EXPECT_EQ(cfg.initial.x.u[0], 1.0);
  EXPECT_EQ(cfg.functional.direction, SpectralField::unit(16, 0));
  EXPECT_GE(cfg.sweep.replicas, 4096u);
}

TEST(Config, ReactionAtTheSpectralGapIsRejected) {
  for (const std::string r : {"affine:" + pi_squared(), std::string("scaled_tanh:12")}) {
    const auto issues = issues_of(R"({"preset": "smoke", "reaction": ")" + r +
                                  R"(", "fbar": {"mode": "ergodic"}})");
    ASSERT_TRUE(has_field(issues, "reaction")) << r;
    for (const auto& i : issues) {
      if (i.field == "reaction") EXPECT_NE(i.message.find("spectral gap condition violated"), std::string::npos);
    }
  }
  const auto ok = issues_of(R"({"preset": "smoke", "reaction": "scaled_tanh:9", "fbar": {"mode": "ergodic"}})");
  EXPECT_FALSE(has_field(ok, "reaction"));
}

TEST(Config, EpsilonListMustBeNonemptyDistinctDescending) {
  EXPECT_TRUE(has_field(issues_of(R"({"preset": "smoke", "sweep": {"epsilons": []}})"), "sweep.epsilons"));
  EXPECT_TRUE(has_field(issues_of(R"({"preset": "smoke", "sweep": {"epsilons": [0.25, 0.5]}})"),
                        "sweep.epsilons[1]"));
  EXPECT_TRUE(has_field(issues_of(R"({"preset": "smoke", "sweep": {"epsilons": [0.5, 0.5]}})"),
                        "sweep.epsilons[1]"));
  EXPECT_TRUE(has_field(issues_of(R"({"preset": "smoke", "sweep": {"epsilons": [2.0, 0.5]}})"),
                        "sweep.epsilons[0]"));
}

TEST(Config, ReportsEveryIssueWithItsPath) {
  const auto issues = issues_of(R"({"preset": "smoke", "noise": {"sigma1": -1},
      "numerics": {"T": "long", "h_slwo": 0.1}, "sweep": {"replicas": 1}, "colour": "blue"})");
  EXPECT_TRUE(has_field(issues, "numerics.h_slwo"));
  EXPECT_TRUE(has_field(issues, "noise.sigma1"));
  EXPECT_TRUE(has_field(issues, "numerics.T"));
  EXPECT_TRUE(has_field(issues, "sweep.replicas"));
  EXPECT_TRUE(has_field(issues, "colour"));
  EXPECT_GE(issues.size(), 5u);
  try {
    config_from_text(R"({"preset": "smoke", "sweep": {"replicas": 1}})");
    FAIL() << "expected ConfigInvalid";
  } catch (const ConfigInvalid& e) {
    ASSERT_EQ(e.issues().size(), 1u);
    EXPECT_NE(std::string(e.what()).find("sweep.replicas"), std::string::npos);
  }
  EXPECT_THROW(config_from_text("{not json"), ConfigInvalid);
}

TEST(Config, OracleNeedsOuAndSeparableCoupling) {
  const auto a = issues_of(R"({"preset": "smoke", "reaction": "scaled_tanh:1"})");
  EXPECT_TRUE(has_field(a, "fbar.mode"));
  const auto b = issues_of(R"({"preset": "smoke", "coupling": {"kind": "entangled_sin"}})");
  EXPECT_TRUE(has_field(b, "fbar.mode"));
}

TEST(Config, PresetPatchKeepsUntouchedFields) {
  const auto cfg = config_from_text(R"({"preset": "acceptance", "sweep": {"replicas": 16}})");
  EXPECT_EQ(cfg.sweep.replicas, 16u);
  EXPECT_EQ(cfg.sweep.seed, 20240601u);
  EXPECT_EQ(cfg.sweep.epsilons.size(), 6u);
  EXPECT_EQ(cfg.system.modes(), 16u);
}

TEST(Config, HashDependsOnSeedButNotThreads) {
  auto a = config_from_text(preset_json("smoke"));
  auto b = a;
  override_threads(b, 7);
  EXPECT_EQ(a.canonical, b.canonical);
  EXPECT_EQ(b.monte_carlo().threads, 7u);
  override_seed(b, 8);
  EXPECT_NE(sha256_hex(a.canonical), sha256_hex(b.canonical));
  EXPECT_EQ(b.monte_carlo().seed, 8u);
}

TEST(Config, ExplicitInitialDataAndSpectra) {
  const auto cfg = config_from_text(R"({"preset": "smoke", "basis": {"L": 1.0, "N": 2},
      "noise": {"q1": [1.0, 0.25], "q2": [1.0, 0.25]},
      "initial": {"preset": "", "x1": [0.1, 0.2], "x2": [0.0, 0.0], "y": [1.0, 0.0]},
      "functional": {"kind": "gaussian_bump"}})");
  EXPECT_EQ(cfg.initial.x.u[1], 0.2);
  EXPECT_EQ(cfg.system.q1.lambdas[1], 0.25);
  EXPECT_EQ(cfg.functional.kind, TestFunctional::Kind::gaussian_bump);
  EXPECT_TRUE(has_field(issues_of(R"({"preset": "smoke", "noise": {"q1": [1.0]}})"), "noise.q1"));
}
