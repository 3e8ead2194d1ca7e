#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgcweak/experiments.hpp"
#include "sgcweak/hermite_quadrature.hpp"
#include "sgcweak/sparse_grid.hpp"

using nlohmann::json;

namespace {

// Options shared by the experiment subcommands: flags land in `overrides`
// only when given, so they take precedence over the config file.
struct Common {
  std::string config;
  std::string out;
  json overrides = json::object();
};

template <typename T>
void flag(CLI::App* app, Common& common, const std::string& name, const std::string& key, const std::string& help) {
  app->add_option_function<T>(name, [&common, key](const T& v) { common.overrides[key] = v; }, help);
}

void add_common(CLI::App* app, Common& common) {
  app->add_option("--config", common.config, "JSON config; flags override its keys");
  app->add_option("--out", common.out, "output directory for CSV files (default: CSV on stdout)");
  app->add_option_function<int>("--workers", [&common](int w) { common.overrides["workers"] = w; },
                                "worker threads");
}

sgcweak::ExperimentConfig load(const Common& common, const std::string& kind) {
  json j = json::object();
  if (!common.config.empty()) {
    std::ifstream is(common.config);
    if (!is) throw sgcweak::ConfigError("cannot open config '" + common.config + "'");
    try {
      j = json::parse(is);
    } catch (const json::exception& e) {
      throw sgcweak::ConfigError("config '" + common.config + "': " + e.what());
    }
    j.erase("out");
  }
  if (j.contains("kind") && j["kind"] != kind) {
    throw sgcweak::ConfigError("config kind '" + j["kind"].get<std::string>() + "' does not match subcommand " + kind);
  }
  j.update(common.overrides);
  j["kind"] = kind;
  return sgcweak::ExperimentConfig::from_json(j);
}

void emit(const sgcweak::ExperimentReport& report, const std::string& out) {
  if (!out.empty()) {
    sgcweak::write_report(report, out);
    for (const auto& t : report.tables) {
      if (t.rows.size() <= 64) sgcweak::write_table(std::cout, t);
      std::cout << "wrote " << out << '/' << t.name << ".csv (" << t.rows.size() << " rows)\n";
    }
    return;
  }
  for (const auto& t : report.tables) {
    std::cout << "# table=" << t.name << '\n';
    sgcweak::write_csv(std::cout, t);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-grid collocation for weak approximation of SDEs and SPDEs"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  int quad_n = 2;
  std::string quad_out;
  auto* quad = app.add_subcommand("quad", "Gauss-Hermite rule; CSV columns: node,weight");
  quad->add_option("--n", quad_n, "number of nodes (1..50)")->required();
  quad->add_option("--out", quad_out, "output file (default stdout)");

  int sg_level = 2, sg_dim = 1;
  Common info_common;
  auto* sg_info = app.add_subcommand(
      "sg-info", "Smolyak grid census; tables sg_info (level,dim,nodes,closed_form,...) and coefficients");
  add_common(sg_info, info_common);
  flag<int>(sg_info, info_common, "--level", "level", "level L");
  flag<int>(sg_info, info_common, "--dim", "dim", "dimension d");

  std::string dump_out;
  auto* sg_dump = app.add_subcommand("sg-dump", "Smolyak nodes; CSV columns: y1..yd,weight");
  sg_dump->add_option("--level", sg_level, "level L")->required();
  sg_dump->add_option("--dim", sg_dim, "dimension d")->required();
  sg_dump->add_option("--out", dump_out, "output file (default stdout)");

  Common sde;
  auto* sde_weak = app.add_subcommand(
      "sde-weak", "Weak expectations of an SDE scheme; table weak: h,L,value,rho1,rho2,order,order2,ci,cpu_seconds");
  add_common(sde_weak, sde);
  flag<std::string>(sde_weak, sde, "--model", "model", "linear(lambda,eps) or mcir(x0,theta1,theta2)");
  flag<std::string>(sde_weak, sde, "--scheme", "scheme", "euler|order2");
  flag<std::string>(sde_weak, sde, "--f", "payoff", "mean|second|x4|cos");
  flag<double>(sde_weak, sde, "--T", "T", "final time");
  sde_weak->add_option_function<std::vector<double>>(
      "--h-list", [&sde](const std::vector<double>& v) { sde.overrides["h_list"] = v; }, "step sizes, decreasing")
      ->delimiter(',');
  sde_weak->add_option_function<std::vector<int>>(
      "--L-list", [&sde](const std::vector<int>& v) { sde.overrides["L_list"] = v; }, "sparse-grid levels")
      ->delimiter(',');
  sde_weak->add_option_function<int>(
      "--tensor-n", [&sde](int n) { sde.overrides["tensor_n"] = n; sde.overrides["rule"] = "tensor"; },
      "use the n-point tensor rule instead of sparse grids");
  sde_weak->add_option_function<long long>(
      "--mc", [&sde](long long m) { sde.overrides["mc_samples"] = m; sde.overrides["rule"] = "mc"; },
      "use Monte Carlo with this many samples");
  flag<std::uint64_t>(sde_weak, sde, "--seed", "seed", "Monte Carlo seed");

  Common burg;
  auto* burgers = app.add_subcommand(
      "burgers", "Stochastic Burgers moments; tables fields (h,x,Eu,Eu2[,ci]) and summary (error norms)");
  add_common(burgers, burg);
  flag<double>(burgers, burg, "--nu", "nu", "viscosity");
  flag<double>(burgers, burg, "--sigma", "sigma", "noise amplitude");
  flag<double>(burgers, burg, "--T", "T", "final time");
  burgers->add_option_function<std::vector<double>>(
      "--h", [&burg](const std::vector<double>& v) { burg.overrides["h_list"] = v; }, "step size(s)")
      ->delimiter(',');
  flag<int>(burgers, burg, "--M", "M", "collocation points (even)");
  flag<std::string>(burgers, burg, "--mode", "mode", "sgc:L or mc:N[:seed]");
  flag<std::string>(burgers, burg, "--reference", "reference", "reference CSV with columns x,Eu,Eu2");

  Common adv;
  auto* advdiff = app.add_subcommand(
      "advdiff", "Recursive moments of the advection-diffusion SPDE; tables summary, trace (per-step norm), fields");
  add_common(advdiff, adv);
  flag<double>(advdiff, adv, "--eps", "eps", "diffusion parameter");
  flag<double>(advdiff, adv, "--sigma", "sigma", "noise amplitude");
  flag<double>(advdiff, adv, "--beta", "beta", "advection strength");
  flag<double>(advdiff, adv, "--T", "T", "final time");
  advdiff->add_option_function<std::vector<double>>(
      "--h", [&adv](const std::vector<double>& v) { adv.overrides["h_list"] = v; }, "step size(s)")
      ->delimiter(',');
  flag<int>(advdiff, adv, "--lstar", "lstar", "basis truncation");
  advdiff->add_option_function<std::vector<int>>(
      "--quad-n", [&adv](const std::vector<int>& v) { adv.overrides["quad_n"] = v; }, "Gauss-Hermite order(s)")
      ->delimiter(',');
  flag<int>(advdiff, adv, "--M", "M", "collocation points (even)");
  flag<std::string>(advdiff, adv, "--reference", "reference", "closed-form | self:<h> | CSV with x,Eu,Eu2");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*quad) {
      const auto rule = sgcweak::gauss_hermite_rule<double>(quad_n);
      sgcweak::ReportTable t{"quad", {"node", "weight"}, {}};
      for (Eigen::Index k = 0; k < rule.size(); ++k) t.rows.push_back({rule.nodes(k), rule.weights(k)});
      if (quad_out.empty()) {
        sgcweak::write_csv(std::cout, t);
      } else {
        std::ofstream os(quad_out);
        if (!os) throw sgcweak::Error("cannot open " + quad_out);
        sgcweak::write_csv(os, t);
      }
    } else if (*sg_dump) {
      const auto rule = sgcweak::build_sparse_grid<double>(sg_level, sg_dim);
      sgcweak::ReportTable t{"sg_dump", {}, {}};
      for (int k = 1; k <= sg_dim; ++k) t.columns.push_back("y" + std::to_string(k));
      t.columns.push_back("weight");
      Eigen::VectorXd y(sg_dim);
      for (Eigen::Index p = 0; p < rule.size(); ++p) {
        rule.node(p, y);
        std::vector<double> row(y.data(), y.data() + sg_dim);
        row.push_back(rule.weights()(p));
        t.rows.push_back(std::move(row));
      }
      if (dump_out.empty()) {
        sgcweak::write_csv(std::cout, t);
      } else {
        std::ofstream os(dump_out);
        if (!os) throw sgcweak::Error("cannot open " + dump_out);
        sgcweak::write_csv(os, t);
      }
    } else {
      const Common* common = nullptr;
      std::string kind;
      if (*sg_info) common = &info_common, kind = "sg-info";
      if (*sde_weak) common = &sde, kind = "sde-weak";
      if (*burgers) common = &burg, kind = "burgers";
      if (*advdiff) common = &adv, kind = "advdiff";
      emit(sgcweak::run_experiment(load(*common, kind)), common->out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
