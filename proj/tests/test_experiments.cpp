#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sgcweak/experiments.hpp"

using namespace sgcweak;
using nlohmann::json;

namespace {

// Every column except wall-clock time.
void expect_same_numbers(const ExperimentReport& a, const ExperimentReport& b) {
  ASSERT_EQ(a.tables.size(), b.tables.size());
  for (std::size_t t = 0; t < a.tables.size(); ++t) {
    const auto& ta = a.tables[t];
    const auto& tb = b.tables[t];
    ASSERT_EQ(ta.columns, tb.columns);
    ASSERT_EQ(ta.rows.size(), tb.rows.size());
    for (std::size_t r = 0; r < ta.rows.size(); ++r) {
      for (std::size_t c = 0; c < ta.columns.size(); ++c) {
        if (ta.columns[c] == "cpu_seconds") continue;
        const double x = ta.rows[r][c], y = tb.rows[r][c];
        if (std::isnan(x)) {
          EXPECT_TRUE(std::isnan(y));
        } else {
          EXPECT_EQ(x, y) << ta.name << " row " << r << " column " << ta.columns[c];
        }
      }
    }
  }
}

ExperimentConfig table41() {
  return ExperimentConfig::from_json(json{{"kind", "sde-weak"},
                                          {"model", "mcir(0.1,1,0.3)"},
                                          {"scheme", "euler"},
                                          {"T", 1.0},
                                          {"h_list", {0.5, 0.25, 0.125, 0.0625, 0.03125}},
                                          {"L_list", {2}}});
}

}  // namespace

TEST(ConvergenceOrder, Examples) {
  EXPECT_DOUBLE_EQ(*convergence_order({4, 1}, {2, 1})[1], 2.0);
  EXPECT_NEAR(*convergence_order({1e-3, 5e-4}, {2e-2, 1e-2})[1], 1.0, 1e-12);
  EXPECT_NEAR(*convergence_order({1.01e-3, 4.07e-4}, {5e-2, 2e-2})[1], 0.99, 0.01);
  const auto o = convergence_order({1e-3, 0.0, 1e-4}, {1, 0.5, 0.25});
  EXPECT_FALSE(o[0].has_value());
  EXPECT_FALSE(o[1].has_value());
  EXPECT_FALSE(o[2].has_value());
  EXPECT_THROW(convergence_order({1.0}, {1.0}), InvalidArgument);
  EXPECT_THROW(convergence_order({1.0, 2.0}, {1.0}), InvalidArgument);
}

TEST(Models, ParseAndExactMoments) {
  const ModelSpec m = parse_model("mcir(0.1, 1, 0.3)");
  EXPECT_EQ(m.name, "mcir");
  EXPECT_DOUBLE_EQ(m.x0, 0.1);
  EXPECT_EQ(m.params, (std::vector<double>{1.0, 0.3}));
  const ModelSpec l = parse_model("linear(-0.5,1)");
  EXPECT_DOUBLE_EQ(l.x0, 1.0);
  const auto [m1, m2] = exact_moments(l, 2.0);
  EXPECT_NEAR(m1, std::exp(-1.0), 1e-15);
  EXPECT_NEAR(m2, std::exp(-2.0) + (1 - std::exp(-2.0)), 1e-15);
  const auto [z1, z2] = exact_moments(parse_model("linear(0,2)"), 1.5);
  EXPECT_DOUBLE_EQ(z1, 1.0);
  EXPECT_DOUBLE_EQ(z2, 1.0 + 6.0);
  EXPECT_THROW(parse_model("mcir(0.1,1)"), ConfigError);
  EXPECT_THROW(parse_model("gbm(1,2)"), ConfigError);
  EXPECT_THROW(parse_model("linear(1,x)"), ConfigError);
  EXPECT_THROW(parse_payoff("cube"), ConfigError);
  EXPECT_DOUBLE_EQ(make_payoff(PayoffKind::x4)(Eigen::VectorXd::Constant(1, 2.0)), 16.0);
}

TEST(Config, ValidationListsEveryProblem) {
  ExperimentConfig c = table41();
  EXPECT_NO_THROW(c.validate());
  c.h_list.clear();
  EXPECT_THROW(c.validate(), ConfigError);

  c = table41();
  c.h_list = {0.25, 0.5};
  c.scheme = "milstein";
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("strictly decreasing"), std::string::npos);
    EXPECT_NE(msg.find("scheme"), std::string::npos);
  }
  c = table41();
  c.h_list = {0.3};
  EXPECT_THROW(c.validate(), ConfigError);
  c = table41();
  c.h_list = {0.5, -0.25};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, JsonErrors) {
  EXPECT_THROW(ExperimentConfig::from_json(json{{"kind", "sde-weak"}, {"bogus", 1}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(json{{"kind", "sde-weak"}, {"h_list", "0.5"}}), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(json::array()), ConfigError);
  ExperimentConfig c = ExperimentConfig::from_json(json{{"kind", "advdiff"}, {"h_list", {0.1}}, {"beta", 0.1},
                                                        {"reference", "closed-form"}, {"M", 64}});
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig::from_json(json{{"kind", "burgers"}, {"h_list", {0.25}}, {"T", 0.5}, {"mode", "qmc:3"}});
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  const ExperimentConfig c = table41();
  const ExperimentConfig d = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(d.model, c.model);
  EXPECT_EQ(d.h_list, c.h_list);
  EXPECT_EQ(d.L_list, c.L_list);
  EXPECT_EQ(d.seed, c.seed);
}

TEST(Csv, RoundTripIsBitExact) {
  ReportTable t{"demo", {"a", "b", "c"}, {}};
  t.rows.push_back({0.1, 1.0 / 3.0, std::nan("")});
  t.rows.push_back({-1e-300, 6.02214076e23, 4.9406564584124654e-324});
  t.rows.push_back({std::nextafter(1.0, 2.0), -0.0, 12345678901234567.0});
  std::stringstream ss;
  write_csv(ss, t, {{"seed", "7"}, {"config", "{\"kind\":\"x\"}"}});
  std::map<std::string, std::string> meta;
  const ReportTable back = parse_csv(ss, &meta);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(meta.at("seed"), "7");
  EXPECT_EQ(meta.at("config"), "{\"kind\":\"x\"}");
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      if (std::isnan(t.rows[r][c])) {
        EXPECT_TRUE(std::isnan(back.rows[r][c]));
      } else {
        EXPECT_EQ(std::signbit(back.rows[r][c]), std::signbit(t.rows[r][c]));
        EXPECT_EQ(back.rows[r][c], t.rows[r][c]);
      }
    }
  }
}

TEST(Csv, RejectsMalformedInput) {
  std::stringstream ragged("a,b\n1,2\n3\n");
  EXPECT_THROW(parse_csv(ragged), InvalidArgument);
  std::stringstream text("a\nhello\n");
  EXPECT_THROW(parse_csv(text), InvalidArgument);
  std::stringstream empty("# only=comments\n");
  EXPECT_THROW(parse_csv(empty), InvalidArgument);
}

TEST(SdeWeak, McirEulerLevelTwoColumn) {
  const ExperimentReport r = run_experiment(table41());
  const ReportTable& t = r.table("weak");
  const std::vector<double> expected = {3.20e-1, 1.40e-1, 6.60e-2, 3.21e-2, 1.58e-2};
  ASSERT_EQ(t.rows.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(t.rows[i][t.column("rho1")] / expected[i], 1.0, 0.02) << i;
  }
  EXPECT_TRUE(std::isnan(t.rows[0][t.column("order")]));
  EXPECT_NEAR(t.rows[1][t.column("order")], 1.2, 0.05);
  EXPECT_NEAR(t.rows[4][t.column("order")], 1.0, 0.05);
}

TEST(SdeWeak, LargeNoiseSpotCheck) {
  ExperimentConfig c = table41();
  c.model = "mcir(0.08,-1,2)";
  c.h_list = {0.5};
  c.L_list = {4};
  const ReportTable t = run_experiment(c).table("weak");
  EXPECT_NEAR(t.rows[0][t.column("rho1")] / 1.72e-1, 1.0, 0.03);
  EXPECT_NEAR(t.rows[0][t.column("rho2")] / 9.61e-1, 1.0, 0.03);
}

TEST(SdeWeak, RulesAndDeterminism) {
  ExperimentConfig c = table41();
  c.h_list = {0.25, 0.125};
  c.L_list = {2, 3};
  c.payoff = "cos";
  const ExperimentReport a = run_experiment(c);
  c.workers = 3;
  expect_same_numbers(a, run_experiment(c));
  EXPECT_EQ(a.table("weak").rows.size(), 4u);

  c.rule = "tensor";
  c.tensor_n = 2;
  const ReportTable t = run_experiment(c).table("weak");
  EXPECT_EQ(t.rows[0][t.column("L")], 2.0);

  c.rule = "mc";
  c.mc_samples = 5000;
  c.workers = 1;
  const ExperimentReport m1 = run_experiment(c);
  c.workers = 2;
  expect_same_numbers(m1, run_experiment(c));
  EXPECT_GT(m1.table("weak").rows[0][m1.table("weak").column("ci")], 0.0);
}

TEST(SdeWeak, ErrorsCarryRowContext) {
  ExperimentConfig c = table41();
  c.model = "linear(0,1)";
  c.h_list = {0.015625};
  c.L_list = {5};
  try {
    run_experiment(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("h = 0.015625"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("L = 5"), std::string::npos);
  }
}

TEST(SgInfo, CountsAndCensus) {
  const ExperimentConfig c =
      ExperimentConfig::from_json(json{{"kind", "sg-info"}, {"level", 3}, {"dim", 40}});
  const ExperimentReport r = run_experiment(c);
  const ReportTable& info = r.table("sg_info");
  EXPECT_EQ(info.rows[0][info.column("nodes")], 3281.0);
  EXPECT_EQ(info.rows[0][info.column("closed_form")], 3281.0);
  const ReportTable& census = r.table("coefficients");
  ASSERT_EQ(census.rows.size(), 3u);
  EXPECT_EQ(census.rows[2][census.column("coefficient")], 1.0);
  EXPECT_EQ(census.rows[1][census.column("coefficient")], -39.0);
  EXPECT_EQ(census.rows[0][census.column("coefficient")], 741.0);
}

TEST(Advdiff, ClosedFormReferenceAndDeterminism) {
  ExperimentConfig c = ExperimentConfig::from_json(json{{"kind", "advdiff"},
                                                        {"eps", 0.2},
                                                        {"sigma", 0.5},
                                                        {"beta", 0.0},
                                                        {"T", 1.0},
                                                        {"h_list", {0.1, 0.05}},
                                                        {"lstar", 9},
                                                        {"M", 32},
                                                        {"quad_n", {2, 3}}});
  const ExperimentReport a = run_experiment(c);
  EXPECT_EQ(a.metadata.at("reference"), "closed-form");
  const ReportTable& s = a.table("summary");
  ASSERT_EQ(s.rows.size(), 4u);
  EXPECT_NEAR(s.rows[1][s.column("order_field")], 1.0, 0.1);
  EXPECT_EQ(a.table("trace").rows.size(), 2u * (11 + 21));
  EXPECT_EQ(a.table("fields").rows.size(), 4u * 32);
  c.workers = 2;
  expect_same_numbers(a, run_experiment(c));
}

TEST(Burgers, ReferenceFileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "sgcweak_test_burgers";
  std::filesystem::remove_all(dir);
  ExperimentConfig ref = ExperimentConfig::from_json(
      json{{"kind", "burgers"}, {"h_list", {0.125}}, {"T", 0.5}, {"M", 16}, {"mode", "sgc:3"}});
  write_report(run_experiment(ref), dir.string());
  ASSERT_TRUE(std::filesystem::exists(dir / "fields.csv"));

  ExperimentConfig c = ref;
  c.h_list = {0.25};
  c.mode = "sgc:2";
  c.reference = (dir / "fields.csv").string();
  const ReportTable s = run_experiment(c).table("summary");
  const double rho1 = s.rows[0][s.column("rho1_l2")];
  EXPECT_GT(rho1, 0.0);
  EXPECT_LT(rho1, 0.05);

  c.reference = (dir / "summary.csv").string();
  EXPECT_THROW(run_experiment(c), InvalidArgument);
  std::filesystem::remove_all(dir);
}
