#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgcweak/sde_schemes.hpp"
#include "sgcweak/weak_expectation.hpp"

namespace sgcweak {

/// ln(e_{k-1}/e_k) / ln(h_{k-1}/h_k) for k >= 1; nullopt where an error is zero.
std::vector<std::optional<double>> convergence_order(const std::vector<double>& errors,
                                                     const std::vector<double>& steps);

// ---------------------------------------------------------------------------
// Configuration

struct ModelSpec {
  std::string name;        // "linear" or "mcir"
  double x0 = 1.0;
  std::vector<double> params;  // (lambda, eps) or (theta1, theta2)
};

/// Parses "linear(lambda,eps)" or "mcir(x0,theta1,theta2)".
ModelSpec parse_model(const std::string& text);
SdeModel<double> make_model(const ModelSpec& spec);
/// Exact E X(T), E X(T)^2.
std::pair<double, double> exact_moments(const ModelSpec& spec, double T);

enum class PayoffKind { mean, second, x4, cos };
PayoffKind parse_payoff(const std::string& text);
Payoff<double> make_payoff(PayoffKind kind);

/// Keys mirror the CLI flags; see README for the full list.
struct ExperimentConfig {
  std::string kind;  // sde-weak | burgers | advdiff | sg-info
  int workers = 1;
  std::uint64_t seed = 20240601;
  std::vector<double> h_list;
  double T = 1.0;

  // sde-weak
  std::string model;
  std::string scheme = "euler";  // euler | order2
  std::string payoff = "mean";
  std::string rule = "sgc";      // sgc | tensor | mc
  std::vector<int> L_list;
  int tensor_n = 2;
  long long mc_samples = 0;

  // burgers
  double nu = 1.0;
  double sigma = 0.5;
  int M = 100;
  std::string mode = "sgc:2";    // sgc:L | mc:N:seed
  double a = 2.0;
  double cutoff_p = 1.0;
  std::string reference;         // CSV of x, Eu, Eu2 (burgers); advdiff: "closed-form", "self:<h>" or CSV

  // advdiff
  double eps = 0.2;
  double beta = 0.1;
  int lstar = 20;
  std::vector<int> quad_n = {2};

  // sg-info
  int level = 2;
  int dim = 1;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Throws ConfigError listing every offending field.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Reports

struct ReportTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
};

struct ExperimentReport {
  std::map<std::string, std::string> metadata;
  std::vector<ReportTable> tables;

  const ReportTable& table(const std::string& name) const;
};

/// Metadata as "# key=value" lines, then a header and %.17g rows.
void write_csv(std::ostream& os, const ReportTable& table, const std::map<std::string, std::string>& metadata = {});
ReportTable parse_csv(std::istream& is, std::map<std::string, std::string>* metadata = nullptr);

/// Column-aligned text rendering for terminals.
void write_table(std::ostream& os, const ReportTable& table);

/// Writes <dir>/<table>.csv for every table; creates dir if needed.
void write_report(const ExperimentReport& report, const std::string& dir);

ExperimentReport run_experiment(const ExperimentConfig& config);

ExperimentReport run_sde_weak(const ExperimentConfig& config);
ExperimentReport run_burgers(const ExperimentConfig& config);
ExperimentReport run_advdiff(const ExperimentConfig& config);
ExperimentReport run_sg_info(const ExperimentConfig& config);

}  // namespace sgcweak
