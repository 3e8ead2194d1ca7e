#include "sgcweak/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <regex>
#include <sstream>

#include "sgcweak/random.hpp"
#include "sgcweak/recursive_moments.hpp"
#include "sgcweak/spectral_spde.hpp"

namespace sgcweak {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string row_context(const std::string& what, double h) { return what + " (h = " + format_double(h) + ")"; }

// Fills `order` for rows sharing `group` values, in row order.
void fill_orders(ReportTable& t, std::size_t group, std::size_t h_col, std::size_t err_col, std::size_t out_col) {
  std::map<double, std::vector<std::size_t>> by_group;
  for (std::size_t r = 0; r < t.rows.size(); ++r) by_group[t.rows[r][group]].push_back(r);
  for (const auto& [g, idx] : by_group) {
    std::vector<double> errs, hs;
    for (std::size_t r : idx) {
      errs.push_back(t.rows[r][err_col]);
      hs.push_back(t.rows[r][h_col]);
    }
    if (idx.size() < 2) continue;
    const auto orders = convergence_order(errs, hs);
    for (std::size_t k = 1; k < idx.size(); ++k) t.rows[idx[k]][out_col] = orders[k].value_or(kNaN);
  }
}

std::uint64_t row_seed(std::uint64_t seed, std::size_t row) { return SampleStream(seed, row)(); }

}  // namespace

std::vector<std::optional<double>> convergence_order(const std::vector<double>& errors,
                                                     const std::vector<double>& steps) {
  if (errors.size() != steps.size() || errors.size() < 2) {
    throw InvalidArgument("convergence_order: need matching sequences of length >= 2");
  }
  std::vector<std::optional<double>> out(errors.size());
  for (std::size_t k = 1; k < errors.size(); ++k) {
    if (!(steps[k] > 0.0) || !(steps[k - 1] > 0.0)) throw InvalidArgument("convergence_order: steps must be positive");
    if (errors[k] == 0.0 || errors[k - 1] == 0.0 || !std::isfinite(errors[k]) || !std::isfinite(errors[k - 1]) ||
        steps[k] == steps[k - 1]) {
      continue;
    }
    out[k] = std::log(errors[k - 1] / errors[k]) / std::log(steps[k - 1] / steps[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Models and payoffs

ModelSpec parse_model(const std::string& text) {
  static const std::regex pattern(R"(\s*(linear|mcir)\s*\(([^)]*)\)\s*)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) {
    throw ConfigError("model: expected linear(lambda,eps) or mcir(x0,theta1,theta2), got '" + text + "'");
  }
  ModelSpec spec;
  spec.name = m[1];
  std::vector<double> values;
  std::stringstream ss(m[2].str());
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("model: cannot parse number '" + item + "' in '" + text + "'");
    }
  }
  if (spec.name == "linear") {
    if (values.size() != 2) throw ConfigError("model: linear takes (lambda,eps)");
    spec.params = values;
  } else {
    if (values.size() != 3) throw ConfigError("model: mcir takes (x0,theta1,theta2)");
    spec.x0 = values[0];
    spec.params = {values[1], values[2]};
  }
  return spec;
}

SdeModel<double> make_model(const ModelSpec& spec) {
  if (spec.name == "linear") return linear_model(spec.params[0], spec.params[1]);
  if (spec.name == "mcir") return mcir_model(spec.params[0], spec.params[1]);
  throw ConfigError("model: unknown model '" + spec.name + "'");
}

std::pair<double, double> exact_moments(const ModelSpec& spec, double T) {
  if (spec.name == "mcir") return mcir_exact_moments(spec.x0, spec.params[0], spec.params[1], T);
  const double lambda = spec.params[0], eps = spec.params[1];
  const double m1 = spec.x0 * std::exp(lambda * T);
  const double var = lambda == 0.0 ? eps * eps * T : eps * eps * std::expm1(2 * lambda * T) / (2 * lambda);
  return {m1, m1 * m1 + var};
}

PayoffKind parse_payoff(const std::string& text) {
  if (text == "mean") return PayoffKind::mean;
  if (text == "second") return PayoffKind::second;
  if (text == "x4") return PayoffKind::x4;
  if (text == "cos") return PayoffKind::cos;
  throw ConfigError("payoff: expected mean|second|x4|cos, got '" + text + "'");
}

Payoff<double> make_payoff(PayoffKind kind) {
  switch (kind) {
    case PayoffKind::mean: return [](const Eigen::VectorXd& x) { return x(0); };
    case PayoffKind::second: return [](const Eigen::VectorXd& x) { return x(0) * x(0); };
    case PayoffKind::x4: return [](const Eigen::VectorXd& x) { return std::pow(x(0), 4); };
    case PayoffKind::cos: return [](const Eigen::VectorXd& x) { return std::cos(x(0)); };
  }
  throw ConfigError("payoff: unknown kind");
}

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentConfig c;
  std::vector<std::string> bad;
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception&) {
      bad.push_back(std::string(key) + " (wrong type)");
    }
  };
  static const std::vector<std::string> known = {
      "kind", "workers", "seed", "h_list", "T", "model", "scheme", "payoff", "rule", "L_list", "tensor_n",
      "mc_samples", "nu", "sigma", "M", "mode", "a", "cutoff_p", "reference", "eps", "beta", "lstar",
      "quad_n", "level", "dim", "out"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) bad.push_back(key + " (unknown key)");
  }
  get("kind", c.kind);
  if (c.kind == "burgers") c.T = 0.5;
  get("workers", c.workers);
  get("seed", c.seed);
  get("h_list", c.h_list);
  get("T", c.T);
  get("model", c.model);
  get("scheme", c.scheme);
  get("payoff", c.payoff);
  get("rule", c.rule);
  get("L_list", c.L_list);
  get("tensor_n", c.tensor_n);
  get("mc_samples", c.mc_samples);
  get("nu", c.nu);
  get("sigma", c.sigma);
  get("M", c.M);
  get("mode", c.mode);
  get("a", c.a);
  get("cutoff_p", c.cutoff_p);
  get("reference", c.reference);
  get("eps", c.eps);
  get("beta", c.beta);
  get("lstar", c.lstar);
  get("quad_n", c.quad_n);
  get("level", c.level);
  get("dim", c.dim);
  if (!bad.empty()) {
    std::string msg = "config: invalid fields:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw ConfigError(msg);
  }
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = {{"kind", kind}, {"workers", workers}, {"seed", seed}};
  if (kind == "sg-info") {
    j["level"] = level;
    j["dim"] = dim;
    return j;
  }
  j["h_list"] = h_list;
  j["T"] = T;
  if (kind == "sde-weak") {
    j.update({{"model", model}, {"scheme", scheme}, {"payoff", payoff}, {"rule", rule}, {"L_list", L_list},
              {"tensor_n", tensor_n}, {"mc_samples", mc_samples}});
  } else if (kind == "burgers") {
    j.update({{"nu", nu}, {"sigma", sigma}, {"M", M}, {"mode", mode}, {"a", a}, {"cutoff_p", cutoff_p},
              {"reference", reference}});
  } else if (kind == "advdiff") {
    j.update({{"eps", eps}, {"sigma", sigma}, {"beta", beta}, {"M", M}, {"lstar", lstar}, {"quad_n", quad_n},
              {"reference", reference}});
  }
  return j;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> bad;
  const bool known_kind = kind == "sde-weak" || kind == "burgers" || kind == "advdiff" || kind == "sg-info";
  if (!known_kind) bad.push_back("kind: expected sde-weak|burgers|advdiff|sg-info, got '" + kind + "'");
  if (workers < 1) bad.push_back("workers: must be >= 1");
  if (kind == "sg-info") {
    if (level < 1) bad.push_back("level: must be >= 1");
    if (dim < 1) bad.push_back("dim: must be >= 1");
  } else if (known_kind) {
    if (h_list.empty()) bad.push_back("h_list: must not be empty");
    if (!(T >= 0.0)) bad.push_back("T: must be non-negative");
    for (std::size_t i = 0; i < h_list.size(); ++i) {
      const double h = h_list[i];
      if (!(h > 0.0)) {
        bad.push_back("h_list[" + std::to_string(i) + "]: must be positive");
        continue;
      }
      if (i > 0 && !(h < h_list[i - 1])) bad.push_back("h_list[" + std::to_string(i) + "]: must be strictly decreasing");
      const double n = T / h;
      if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n)) {
        bad.push_back("h_list[" + std::to_string(i) + "]: T/h = " + format_double(n) + " is not an integer");
      }
    }
  }
  if (kind == "sde-weak") {
    try {
      parse_model(model);
    } catch (const Error& e) {
      bad.push_back(e.what());
    }
    if (scheme != "euler" && scheme != "order2") bad.push_back("scheme: expected euler|order2");
    try {
      parse_payoff(payoff);
    } catch (const Error& e) {
      bad.push_back(e.what());
    }
    if (rule == "sgc") {
      if (L_list.empty()) bad.push_back("L_list: must not be empty for rule sgc");
      for (int L : L_list) {
        if (L < 1) bad.push_back("L_list: levels must be >= 1");
      }
    } else if (rule == "tensor") {
      if (tensor_n < 1) bad.push_back("tensor_n: must be >= 1");
    } else if (rule == "mc") {
      if (mc_samples < 2) bad.push_back("mc_samples: must be >= 2");
    } else {
      bad.push_back("rule: expected sgc|tensor|mc");
    }
  }
  if (kind == "burgers") {
    if (!(nu > 0.0)) bad.push_back("nu: must be positive");
    if (M < 4 || M > 512 || M % 2 != 0) bad.push_back("M: must be even in [4, 512]");
    if (!(a > 1.0)) bad.push_back("a: must exceed 1");
    if (!std::regex_match(mode, std::regex(R"(sgc:\d+|mc:\d+(:\d+)?)"))) bad.push_back("mode: expected sgc:L or mc:N[:seed]");
  }
  if (kind == "advdiff") {
    if (M < 4 || M > 512 || M % 2 != 0) bad.push_back("M: must be even in [4, 512]");
    if (lstar < 1 || lstar > M / 2) bad.push_back("lstar: must be in [1, M/2]");
    if (lstar > kMaxDenseTruncation) bad.push_back("lstar: dense tensors limited to " + std::to_string(kMaxDenseTruncation));
    if (quad_n.empty()) bad.push_back("quad_n: must not be empty");
    for (int n : quad_n) {
      if (n < 1 || n > 20) bad.push_back("quad_n: orders must be in [1, 20]");
    }
    if (reference == "closed-form" && beta != 0.0) bad.push_back("reference: closed form requires beta = 0");
  }
  if (!bad.empty()) {
    std::string msg = "config: invalid fields:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigError(msg);
  }
}

// ---------------------------------------------------------------------------
// Reports

std::size_t ReportTable::column(const std::string& key) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == key) return i;
  }
  throw InvalidArgument("report table '" + name + "' has no column '" + key + "'");
}

const ReportTable& ExperimentReport::table(const std::string& key) const {
  for (const auto& t : tables) {
    if (t.name == key) return t;
  }
  throw InvalidArgument("report has no table '" + key + "'");
}

void write_csv(std::ostream& os, const ReportTable& table, const std::map<std::string, std::string>& metadata) {
  for (const auto& [k, v] : metadata) os << "# " << k << '=' << v << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

ReportTable parse_csv(std::istream& is, std::map<std::string, std::string>* metadata) {
  ReportTable t;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (metadata && eq != std::string::npos) {
        const std::size_t start = line.find_first_not_of("# ");
        (*metadata)[line.substr(start, eq - start)] = line.substr(eq + 1);
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header) {
      t.columns = cells;
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw InvalidArgument("parse_csv: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(t.columns.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str() || *end != '\0') {
        throw InvalidArgument("parse_csv: line " + std::to_string(lineno) + ": not a number '" + c + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (!header) throw InvalidArgument("parse_csv: missing header");
  return t;
}

void write_table(std::ostream& os, const ReportTable& table) {
  os << "== " << table.name << " ==\n";
  for (const auto& c : table.columns) os << ' ' << std::setw(15) << c;
  os << '\n';
  for (const auto& row : table.rows) {
    for (double v : row) os << ' ' << std::setw(15) << std::setprecision(6) << v;
    os << '\n';
  }
}

void write_report(const ExperimentReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& t : report.tables) {
    const auto path = std::filesystem::path(dir) / (t.name + ".csv");
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    write_csv(os, t, report.metadata);
  }
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport r;
  if (config.kind == "sde-weak") r = run_sde_weak(config);
  if (config.kind == "burgers") r = run_burgers(config);
  if (config.kind == "advdiff") r = run_advdiff(config);
  if (config.kind == "sg-info") r = run_sg_info(config);
  r.metadata["config"] = config.to_json().dump();
  r.metadata["version"] = "1.0.0";
  return r;
}

ExperimentReport run_sde_weak(const ExperimentConfig& c) {
  const ModelSpec spec = parse_model(c.model);
  const SdeModel<double> model = make_model(spec);
  const auto [exact1, exact2] = exact_moments(spec, c.T);
  const SchemeKind kind = c.scheme == "order2" ? SchemeKind::second_order : SchemeKind::euler;
  const std::vector<Payoff<double>> payoffs = {make_payoff(PayoffKind::mean), make_payoff(PayoffKind::second),
                                               make_payoff(parse_payoff(c.payoff))};
  const WeakOptions opts{kDefaultNodeCap, c.workers};

  std::vector<int> params;
  if (c.rule == "sgc") params = c.L_list;
  if (c.rule == "tensor") params = {c.tensor_n};
  if (c.rule == "mc") params = {0};

  ReportTable t;
  t.name = "weak";
  t.columns = {"h", "L", "value", "rho1", "rho2", "order", "order2", "ci", "cpu_seconds"};
  for (int L : params) {
    for (double h : c.h_list) {
      Stopwatch sw;
      const int steps = step_count(c.T, h);
      double ci = 0.0;
      Eigen::VectorXd est;
      try {
        const SchemeEndpointMap<double> map(model, Eigen::VectorXd::Constant(1, spec.x0), h, steps, kind);
        if (c.rule == "sgc") est = weak_expectations_sgc(map, payoffs, L, opts);
        if (c.rule == "tensor") est = weak_expectations_tensor(map, payoffs, L, opts);
        if (c.rule == "mc") {
          const McEstimate mc = weak_expectations_mc(map, payoffs, c.mc_samples, row_seed(c.seed, t.rows.size()), opts);
          est = mc.mean;
          ci = mc.half_width(2);
        }
      } catch (const Error& e) {
        throw Error(row_context(std::string("sde-weak L = ") + std::to_string(L) + ": " + e.what(), h));
      }
      const auto [rho1, rho2] = moment_relative_errors(exact1, exact2, est(0), est(1));
      t.rows.push_back({h, static_cast<double>(L), est(2), rho1, rho2, kNaN, kNaN, ci, sw.seconds()});
    }
  }
  fill_orders(t, 1, 0, 3, 5);
  fill_orders(t, 1, 0, 4, 6);

  ExperimentReport r;
  r.metadata["exact_mean"] = format_double(exact1);
  r.metadata["exact_second"] = format_double(exact2);
  r.metadata["rule"] = c.rule;
  if (c.rule == "mc") r.metadata["seed"] = std::to_string(c.seed);
  r.tables.push_back(std::move(t));
  return r;
}

namespace {

struct ReferenceFields {
  Eigen::VectorXd mean;
  Eigen::VectorXd second;
};

ReferenceFields load_reference_fields(const std::string& path, int M) {
  std::ifstream is(path);
  if (!is) throw ConfigError("reference: cannot open '" + path + "'");
  const ReportTable t = parse_csv(is);
  const std::size_t cm = t.column("Eu");
  const std::size_t c2 = t.column("Eu2");
  // With several step sizes in one file, the smallest h is the reference.
  std::vector<std::size_t> rows;
  bool has_h = std::find(t.columns.begin(), t.columns.end(), "h") != t.columns.end();
  double hmin = std::numeric_limits<double>::infinity();
  if (has_h) {
    for (const auto& row : t.rows) hmin = std::min(hmin, row[t.column("h")]);
  }
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (!has_h || t.rows[i][t.column("h")] == hmin) rows.push_back(i);
  }
  if (static_cast<int>(rows.size()) != M) {
    throw ConfigError("reference: '" + path + "' has " + std::to_string(rows.size()) + " grid points, expected " +
                      std::to_string(M));
  }
  ReferenceFields f{Eigen::VectorXd(M), Eigen::VectorXd(M)};
  for (int m = 0; m < M; ++m) {
    f.mean(m) = t.rows[rows[m]][cm];
    f.second(m) = t.rows[rows[m]][c2];
  }
  return f;
}

}  // namespace

ExperimentReport run_burgers(const ExperimentConfig& c) {
  const bool sgc = c.mode.rfind("sgc:", 0) == 0;
  int level = 0;
  long long samples = 0;
  std::uint64_t seed = c.seed;
  if (sgc) {
    level = std::stoi(c.mode.substr(4));
  } else {
    const std::string rest = c.mode.substr(3);
    const auto colon = rest.find(':');
    samples = std::stoll(rest.substr(0, colon));
    if (colon != std::string::npos) seed = std::stoull(rest.substr(colon + 1));
  }
  std::optional<ReferenceFields> ref;
  if (!c.reference.empty()) ref = load_reference_fields(c.reference, c.M);

  ReportTable fields;
  fields.name = "fields";
  fields.columns = {"h", "x", "Eu", "Eu2"};
  if (!sgc) {
    fields.columns.push_back("Eu_ci");
    fields.columns.push_back("Eu2_ci");
  }
  ReportTable summary;
  summary.name = "summary";
  summary.columns = {"h", "L", "norm_Eu", "norm_Eu2", "rho1_l2", "rho2_l2", "rho1_inf", "rho2_inf",
                     "order1", "order2", "evaluations", "max_iterations", "cpu_seconds"};
  for (double h : c.h_list) {
    Stopwatch sw;
    BurgersConfig cfg;
    cfg.nu = c.nu;
    cfg.sigma = c.sigma;
    cfg.T = c.T;
    cfg.h = h;
    cfg.M = c.M;
    cfg.a = c.a;
    cfg.cutoff_p = c.cutoff_p;
    MomentFields f;
    try {
      f = sgc ? burgers_moments_sgc(cfg, level, c.workers) : burgers_moments_mc(cfg, samples, seed, c.workers);
    } catch (const Error& e) {
      throw Error(row_context(std::string("burgers: ") + e.what(), h));
    }
    for (int m = 0; m < c.M; ++m) {
      std::vector<double> row = {h, f.x(m), f.mean(m), f.second(m)};
      if (!sgc) {
        row.push_back((*f.mean_ci)(m));
        row.push_back((*f.second_ci)(m));
      }
      fields.rows.push_back(std::move(row));
    }
    FieldErrors e{kNaN, kNaN, kNaN, kNaN};
    if (ref) e = field_error_norms(ref->mean, ref->second, f.mean, f.second, cfg.period);
    summary.rows.push_back({h, sgc ? static_cast<double>(level) : 0.0, discrete_l2_norm(f.mean, cfg.period),
                            discrete_l2_norm(f.second, cfg.period), e.rho1_l2, e.rho2_l2, e.rho1_inf, e.rho2_inf,
                            kNaN, kNaN, static_cast<double>(f.evaluations), static_cast<double>(f.max_iterations),
                            sw.seconds()});
  }
  if (ref) {
    fill_orders(summary, 1, 0, 4, 8);
    fill_orders(summary, 1, 0, 5, 9);
  }
  ExperimentReport r;
  r.metadata["mode"] = c.mode;
  if (!sgc) r.metadata["seed"] = std::to_string(seed);
  r.tables.push_back(std::move(fields));
  r.tables.push_back(std::move(summary));
  return r;
}

ExperimentReport run_advdiff(const ExperimentConfig& c) {
  const auto grid = make_collocation_grid(c.M);
  const ConsBasis basis = build_cons_basis(c.lstar, c.M);
  const LinearSpde spde = advection_diffusion_spde(grid, c.eps, c.sigma, c.beta);
  const Eigen::VectorXd u0 = grid.x.array().cos();

  std::string reference = c.reference;
  if (reference.empty() && c.beta == 0.0) reference = "closed-form";
  std::optional<Eigen::VectorXd> file_ref;
  std::optional<double> self_h;
  if (reference.rfind("self:", 0) == 0) {
    self_h = std::stod(reference.substr(5));
    step_count(c.T, *self_h);
  } else if (!reference.empty() && reference != "closed-form") {
    file_ref = load_reference_fields(reference, c.M).second;
  }

  auto solve = [&](int n, double h, const MomentObserver& obs) {
    try {
      return run_recursive_moments(spde, basis, u0, h, c.T, noise_quadrature(gauss_hermite_rule<double>(n)), obs,
                                   c.workers);
    } catch (const Error& e) {
      throw Error(row_context("advdiff n = " + std::to_string(n) + ": " + e.what(), h));
    }
  };

  ReportTable summary;
  summary.name = "summary";
  // rho2_abs = | ||ref|| - ||Eu2|| |; rho2_field is the relative norm of the pointwise difference.
  summary.columns = {"n", "h", "norm_Eu2", "rho2_abs", "rho2_rel", "order", "rho2_field", "order_field",
                     "ref_norm", "cpu_seconds"};
  ReportTable trace;
  trace.name = "trace";
  trace.columns = {"n", "h", "k", "t", "norm_Eu2"};
  ReportTable fields;
  fields.name = "fields";
  fields.columns = {"n", "h", "x", "Eu", "Eu2"};

  for (int n : c.quad_n) {
    std::optional<Eigen::VectorXd> ref;
    if (reference == "closed-form") ref = advdiff_exact_second_moment(grid.x, c.eps, c.sigma, c.T);
    if (file_ref) ref = file_ref;
    if (self_h) ref = second_moment_field(solve(n, *self_h, {}), basis);
    for (double h : c.h_list) {
      Stopwatch sw;
      const MomentState s = solve(n, h, [&](const MomentState& st) {
        trace.rows.push_back({static_cast<double>(n), h, static_cast<double>(st.k), st.k * h,
                              discrete_l2_norm(second_moment_field(st, basis))});
      });
      const Eigen::VectorXd eu = mean_field(s, basis);
      const Eigen::VectorXd eu2 = second_moment_field(s, basis);
      for (int m = 0; m < c.M; ++m) fields.rows.push_back({static_cast<double>(n), h, grid.x(m), eu(m), eu2(m)});
      const double norm = discrete_l2_norm(eu2);
      double abs_err = kNaN, rel_err = kNaN, field_err = kNaN, ref_norm = kNaN;
      if (ref) {
        ref_norm = discrete_l2_norm(*ref);
        abs_err = std::abs(ref_norm - norm);
        rel_err = abs_err / ref_norm;
        field_err = discrete_l2_norm(*ref - eu2) / ref_norm;
      }
      summary.rows.push_back({static_cast<double>(n), h, norm, abs_err, rel_err, kNaN, field_err, kNaN, ref_norm,
                              sw.seconds()});
    }
  }
  if (!reference.empty()) {
    fill_orders(summary, 0, 1, 4, 5);
    fill_orders(summary, 0, 1, 6, 7);
  }
  ExperimentReport r;
  r.metadata["reference"] = reference.empty() ? "none" : reference;
  r.tables.push_back(std::move(summary));
  r.tables.push_back(std::move(trace));
  r.tables.push_back(std::move(fields));
  return r;
}

ExperimentReport run_sg_info(const ExperimentConfig& c) {
  const auto rule = build_sparse_grid<double>(c.level, c.dim);
  ReportTable info;
  info.name = "sg_info";
  info.columns = {"level", "dim", "nodes", "closed_form", "positive_weights", "negative_weights", "weight_sum"};
  double closed = kNaN;
  if (c.level <= 5 && c.dim >= c.level) closed = static_cast<double>(sparse_node_count(c.level, c.dim));
  const auto& w = rule.weights();
  info.rows.push_back({static_cast<double>(c.level), static_cast<double>(c.dim), static_cast<double>(rule.size()),
                       closed, static_cast<double>((w.array() > 0).count()),
                       static_cast<double>((w.array() < 0).count()), pairwise_sum(w.data(), w.size())});

  ReportTable census;
  census.name = "coefficients";
  census.columns = {"order_sum", "coefficient", "terms"};
  std::map<int, std::pair<long long, long long>> by_sum;
  for (const auto& term : smolyak_terms(c.level, c.dim)) {
    auto& entry = by_sum[term.order_sum()];
    entry.first = term.coefficient;
    ++entry.second;
  }
  for (const auto& [s, e] : by_sum) {
    census.rows.push_back({static_cast<double>(s), static_cast<double>(e.first), static_cast<double>(e.second)});
  }
  ExperimentReport r;
  r.tables.push_back(std::move(info));
  r.tables.push_back(std::move(census));
  return r;
}

}  // namespace sgcweak
