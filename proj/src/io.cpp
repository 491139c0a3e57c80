#include "tdc/io.hpp"

#include <charconv>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <system_error>

namespace tdc {

using nlohmann::json;

std::string format_double(double value) {
  char buffer[32];
  const auto result =
      std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

namespace {

double parse_double(const std::string& token, const std::string& context) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end)
    throw std::invalid_argument(context + ": cannot parse number '" + token +
                                "'");
  return value;
}

bool looks_numeric(const std::string& token) {
  double value = 0.0;
  const auto result =
      std::from_chars(token.data(), token.data() + token.size(), value);
  return result.ec == std::errc() && result.ptr == token.data() + token.size();
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void check_known_keys(const json& j, std::initializer_list<const char*> known,
                      const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (const char* k : known)
      if (key == k) {
        found = true;
        break;
      }
    if (!found)
      throw std::invalid_argument(context + ": unknown field '" + key + "'");
  }
}

std::string tail_method_name(TailMethod m) {
  return m == TailMethod::davies ? "davies" : "imhof";
}

TailMethod tail_method_from_name(const std::string& s) {
  if (s == "davies") return TailMethod::davies;
  if (s == "imhof") return TailMethod::imhof;
  throw std::invalid_argument("unknown tail method: " + s);
}

}  // namespace

GenotypeMatrix read_genotype_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.size() < 2)
    throw std::invalid_argument(path + ": need a header row and data rows");
  const std::vector<std::string> header = split_line(lines[0]);
  const std::size_t j = header.size();
  GenotypeMatrix g;
  g.variant_ids = header;
  g.values.resize(Eigen::Index(lines.size() - 1), Eigen::Index(j));
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::vector<std::string> fields = split_line(lines[row]);
    if (fields.size() != j)
      throw std::invalid_argument(path + ": row " + std::to_string(row + 1) +
                                  " has " + std::to_string(fields.size()) +
                                  " fields, expected " + std::to_string(j));
    for (std::size_t col = 0; col < j; ++col)
      g.values(Eigen::Index(row - 1), Eigen::Index(col)) = parse_double(
          fields[col], path + ":" + std::to_string(row + 1));
  }
  g.standardized = false;
  g.constant_columns.assign(j, false);
  return g;
}

void write_genotype_csv(const std::string& path, const GenotypeMatrix& g) {
  std::ostringstream out;
  for (std::size_t c = 0; c < g.variant_ids.size(); ++c) {
    if (g.variant_ids[c].find(',') != std::string::npos)
      throw std::invalid_argument("variant id contains a comma: " +
                                  g.variant_ids[c]);
    out << (c ? "," : "") << g.variant_ids[c];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
    for (Eigen::Index c = 0; c < g.values.cols(); ++c)
      out << (c ? "," : "") << format_double(g.values(i, c));
    out << '\n';
  }
  write_text_file(path, out.str());
}

Eigen::VectorXd read_phenotype_csv(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw std::invalid_argument(path + ": empty file");
  std::size_t start = 0;
  if (!looks_numeric(lines[0])) start = 1;  // header token
  if (lines.size() == start)
    throw std::invalid_argument(path + ": no data rows");
  Eigen::VectorXd y(Eigen::Index(lines.size() - start));
  for (std::size_t row = start; row < lines.size(); ++row) {
    if (split_line(lines[row]).size() != 1)
      throw std::invalid_argument(path + ": expected a single column");
    y(Eigen::Index(row - start)) =
        parse_double(lines[row], path + ":" + std::to_string(row + 1));
  }
  return y;
}

void write_phenotype_csv(const std::string& path, const Eigen::VectorXd& y,
                         const std::string& name) {
  std::ostringstream out;
  out << name << '\n';
  for (Eigen::Index i = 0; i < y.size(); ++i)
    out << format_double(y(i)) << '\n';
  write_text_file(path, out.str());
}

CovariateTable read_covariates_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.size() < 2)
    throw std::invalid_argument(path + ": need a header row and data rows");
  CovariateTable table;
  table.names = split_line(lines[0]);
  const std::size_t q = table.names.size();
  table.values.resize(Eigen::Index(lines.size() - 1), Eigen::Index(q));
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::vector<std::string> fields = split_line(lines[row]);
    if (fields.size() != q)
      throw std::invalid_argument(path + ": row " + std::to_string(row + 1) +
                                  " has the wrong field count");
    for (std::size_t col = 0; col < q; ++col)
      table.values(Eigen::Index(row - 1), Eigen::Index(col)) = parse_double(
          fields[col], path + ":" + std::to_string(row + 1));
  }
  return table;
}

std::string size_table_csv(const SizeTable& table) {
  std::ostringstream out;
  out << "rho,j2,alpha,replicates,rejections,rate,se\n";
  for (const SizeCell& c : table.cells)
    out << format_double(c.rho) << ',' << c.j2 << ',' << format_double(c.alpha)
        << ',' << c.replicates << ',' << c.rejections << ','
        << format_double(c.rate) << ',' << format_double(c.se) << '\n';
  return out.str();
}

std::string power_curve_csv(const PowerCurve& curve) {
  std::ostringstream out;
  out << "scenario,effect_size,signal_proportion,signal_count,alpha,"
         "replicates,rejections,rate,se\n";
  for (const PowerCell& c : curve.cells)
    out << scenario_name(c.scenario) << ',' << format_double(c.effect_size)
        << ',' << format_double(c.signal_proportion) << ',' << c.signal_count
        << ',' << format_double(c.alpha) << ',' << c.replicates << ','
        << c.rejections << ',' << format_double(c.rate) << ','
        << format_double(c.se) << '\n';
  return out.str();
}

std::string stability_csv(const StabilityResult& result) {
  std::ostringstream out;
  out << "arm,repetition,p_value\n";
  for (std::size_t i = 0; i < result.p1_samples.size(); ++i)
    out << "p1," << i + 1 << ',' << format_double(result.p1_samples[i]) << '\n';
  for (std::size_t i = 0; i < result.pdc_samples.size(); ++i)
    out << "pdc," << i + 1 << ',' << format_double(result.pdc_samples[i])
        << '\n';
  return out.str();
}

namespace {

json summary_to_json(const SummaryStats& s) {
  return json{{"min", s.min},   {"q1", s.q1},     {"median", s.median},
              {"mean", s.mean}, {"q3", s.q3},     {"max", s.max}};
}

}  // namespace

json to_json(const TdcConfig& config) {
  json j;
  j["family"] = std::string(config.family.name());
  j["gamma_set"] = config.gamma_set;
  j["m"] = config.m;
  j["train_fraction"] = config.train_fraction;
  j["j2"] = config.j2;  // 0 means min(usable variants, testing-half size)
  j["screener"] = config.screener == ScreenMethod::marginal_z
                      ? "marginal_z"
                      : "external_ranking";
  if (!config.external_order.empty()) j["external_order"] = config.external_order;
  j["nuisance"] = config.nuisance == NuisanceMode::refit_on_test
                      ? "refit_on_test"
                      : "estimate_on_train";
  if (config.sigma_shrinkage)
    j["sigma_shrinkage"] = *config.sigma_shrinkage;
  else
    j["sigma_shrinkage"] = nullptr;
  j["stratify_binary"] = config.stratify_binary;
  j["master_seed"] = config.master_seed;
  j["davies_accuracy"] = config.davies_accuracy;
  // worker count intentionally not echoed: outputs must not depend on it
  return j;
}

json to_json(const SimDesign& design) {
  json j;
  j["n_total"] = design.n_total;
  j["j_variants"] = design.j_variants;
  j["rho"] = design.rho;
  j["signal_count"] = resolved_signal_count(design);
  j["signal_proportion"] = design.signal_proportion;
  j["effect_size"] = design.effect_size;
  j["family"] = design.family == FamilyKind::gaussian_identity ? "gaussian"
                                                               : "binomial";
  j["intercept"] = design.intercept;
  j["scenario"] = scenario_name(design.scenario);
  j["seed"] = design.seed;
  return j;
}

json to_json(const TestReport& report) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "test_report";
  j["n_total"] = report.n_total;
  j["n_train"] = report.n_train;
  j["n_test"] = report.n_test;
  j["j_variants"] = report.j_variants;
  j["t_dc"] = report.t_dc;
  j["p_dc"] = report.p_dc;
  j["failed_splits"] = report.failed_splits;
  j["config"] = to_json(report.config);
  json splits = json::array();
  for (const SplitTestResult& s : report.per_split) {
    json sj;
    sj["split_seed"] = s.split_seed;
    sj["j2_effective"] = s.j2_effective;
    sj["t1"] = s.t1_stat;
    sj["p1"] = s.p1;
    sj["p_c"] = s.p_c;
    sj["failed"] = s.failed;
    if (s.failed) sj["failure_reason"] = s.failure_reason;
    json gammas = json::array();
    for (const GammaTestResult& g : s.gamma_stats) {
      json gj;
      gj["gamma"] = g.gamma;
      gj["statistic"] = g.statistic;
      gj["p_value"] = g.p_value;
      gj["method"] = tail_method_name(g.method);
      gj["davies_fault"] = g.davies_fault;
      gammas.push_back(gj);
    }
    sj["gamma_stats"] = gammas;
    splits.push_back(sj);
  }
  j["per_split"] = splits;
  return j;
}

TestReport test_report_from_json(const json& j) {
  TestReport report;
  report.n_total = j.at("n_total").get<Eigen::Index>();
  report.n_train = j.at("n_train").get<Eigen::Index>();
  report.n_test = j.at("n_test").get<Eigen::Index>();
  report.j_variants = j.at("j_variants").get<Eigen::Index>();
  report.t_dc = j.at("t_dc").get<double>();
  report.p_dc = j.at("p_dc").get<double>();
  report.failed_splits = j.at("failed_splits").get<int>();
  report.config = parse_tdc_config(j.at("config"));
  for (const json& sj : j.at("per_split")) {
    SplitTestResult s;
    s.split_seed = sj.at("split_seed").get<std::uint64_t>();
    s.j2_effective = sj.at("j2_effective").get<Eigen::Index>();
    s.t1_stat = sj.at("t1").get<double>();
    s.p1 = sj.at("p1").get<double>();
    s.p_c = sj.at("p_c").get<double>();
    s.failed = sj.at("failed").get<bool>();
    if (sj.contains("failure_reason"))
      s.failure_reason = sj.at("failure_reason").get<std::string>();
    for (const json& gj : sj.at("gamma_stats")) {
      GammaTestResult g;
      g.gamma = gj.at("gamma").get<int>();
      g.statistic = gj.at("statistic").get<double>();
      g.p_value = gj.at("p_value").get<double>();
      g.method = tail_method_from_name(gj.at("method").get<std::string>());
      g.davies_fault = gj.at("davies_fault").get<bool>();
      s.gamma_stats.push_back(g);
    }
    report.per_split.push_back(std::move(s));
  }
  return report;
}

json to_json(const SizeTable& table) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "size_table";
  json cells = json::array();
  for (const SizeCell& c : table.cells) {
    json cj;
    cj["rho"] = c.rho;
    cj["j2"] = c.j2;
    cj["alpha"] = c.alpha;
    cj["replicates"] = c.replicates;
    cj["rejections"] = c.rejections;
    cj["rate"] = c.rate;
    cj["se"] = c.se;
    cells.push_back(cj);
  }
  j["cells"] = cells;
  return j;
}

json to_json(const PowerCurve& curve) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "power_curve";
  json cells = json::array();
  for (const PowerCell& c : curve.cells) {
    json cj;
    cj["scenario"] = scenario_name(c.scenario);
    cj["effect_size"] = c.effect_size;
    cj["signal_proportion"] = c.signal_proportion;
    cj["signal_count"] = c.signal_count;
    cj["alpha"] = c.alpha;
    cj["replicates"] = c.replicates;
    cj["rejections"] = c.rejections;
    cj["rate"] = c.rate;
    cj["se"] = c.se;
    cells.push_back(cj);
  }
  j["cells"] = cells;
  return j;
}

json to_json(const StabilityResult& result) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "stability";
  j["p1"] = {{"samples", result.p1_samples},
             {"summary", summary_to_json(result.p1_summary)}};
  j["pdc"] = {{"samples", result.pdc_samples},
              {"summary", summary_to_json(result.pdc_summary)}};
  return j;
}

json to_json(const SnrEstimate& estimate) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "snr";
  j["mu_n_beta"] = estimate.mu_n_beta;
  j["sigma_n1"] = estimate.sigma_n1;
  j["snr_n"] = estimate.snr_n;
  j["mu_2n_beta"] = estimate.mu_2n_beta;
  j["sigma_2n1"] = estimate.sigma_2n1;
  j["snr_2n"] = estimate.snr_2n;
  j["mc_reps"] = estimate.mc_reps;
  j["mu_n_se"] = estimate.mu_n_se;
  j["sigma_n1_se"] = estimate.sigma_n1_se;
  j["snr_n_se"] = estimate.snr_n_se;
  j["mu_2n_se"] = estimate.mu_2n_se;
  j["sigma_2n1_se"] = estimate.sigma_2n1_se;
  j["snr_2n_se"] = estimate.snr_2n_se;
  j["xi_trace_n"] = estimate.xi_trace_n;
  j["delta_quad_n"] = estimate.delta_quad_n;
  j["admissibility_ratio"] = estimate.admissibility_ratio;
  return j;
}

Scenario scenario_from_name(const std::string& name) {
  if (name == "oracle") return Scenario::oracle;
  if (name == "all_variants") return Scenario::all_variants;
  if (name == "screened") return Scenario::screened;
  throw std::invalid_argument("unknown scenario: " + name);
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::oracle: return "oracle";
    case Scenario::all_variants: return "all_variants";
    case Scenario::screened: return "screened";
  }
  throw std::invalid_argument("bad scenario value");
}

SimDesign parse_sim_design(const json& j) {
  check_known_keys(j,
                   {"n_total", "j_variants", "rho", "signal_proportion",
                    "signal_count", "effect_size", "family", "intercept",
                    "scenario", "seed"},
                   "design");
  SimDesign d;
  if (j.contains("n_total")) d.n_total = j["n_total"].get<Eigen::Index>();
  if (j.contains("j_variants")) d.j_variants = j["j_variants"].get<Eigen::Index>();
  if (j.contains("rho")) d.rho = j["rho"].get<double>();
  if (j.contains("signal_proportion"))
    d.signal_proportion = j["signal_proportion"].get<double>();
  if (j.contains("signal_count"))
    d.signal_count = j["signal_count"].get<Eigen::Index>();
  if (j.contains("effect_size")) d.effect_size = j["effect_size"].get<double>();
  if (j.contains("family"))
    d.family = GlmFamily::from_name(j["family"].get<std::string>()).kind;
  if (j.contains("intercept")) d.intercept = j["intercept"].get<double>();
  if (j.contains("scenario"))
    d.scenario = scenario_from_name(j["scenario"].get<std::string>());
  if (j.contains("seed")) d.seed = j["seed"].get<std::uint64_t>();
  return d;
}

TdcConfig parse_tdc_config(const json& j) {
  check_known_keys(j,
                   {"family", "gamma_set", "m", "train_fraction", "j2",
                    "screener", "external_order", "nuisance",
                    "sigma_shrinkage", "stratify_binary", "master_seed",
                    "davies_accuracy"},
                   "test");
  TdcConfig c;
  if (j.contains("family"))
    c.family = GlmFamily::from_name(j["family"].get<std::string>());
  if (j.contains("gamma_set"))
    c.gamma_set = j["gamma_set"].get<std::vector<int>>();
  if (j.contains("m")) c.m = j["m"].get<int>();
  if (j.contains("train_fraction"))
    c.train_fraction = j["train_fraction"].get<double>();
  if (j.contains("j2")) c.j2 = j["j2"].get<Eigen::Index>();
  if (j.contains("screener")) {
    const std::string s = j["screener"].get<std::string>();
    if (s == "marginal_z")
      c.screener = ScreenMethod::marginal_z;
    else if (s == "external_ranking")
      c.screener = ScreenMethod::external_ranking;
    else
      throw std::invalid_argument("unknown screener: " + s);
  }
  if (j.contains("external_order"))
    c.external_order = j["external_order"].get<std::vector<Eigen::Index>>();
  if (j.contains("nuisance")) {
    const std::string s = j["nuisance"].get<std::string>();
    if (s == "refit_on_test")
      c.nuisance = NuisanceMode::refit_on_test;
    else if (s == "estimate_on_train")
      c.nuisance = NuisanceMode::estimate_on_train;
    else
      throw std::invalid_argument("unknown nuisance mode: " + s);
  }
  if (j.contains("sigma_shrinkage") && !j["sigma_shrinkage"].is_null())
    c.sigma_shrinkage = j["sigma_shrinkage"].get<double>();
  if (j.contains("stratify_binary"))
    c.stratify_binary = j["stratify_binary"].get<bool>();
  if (j.contains("master_seed"))
    c.master_seed = j["master_seed"].get<std::uint64_t>();
  if (j.contains("davies_accuracy"))
    c.davies_accuracy = j["davies_accuracy"].get<double>();
  return c;
}

namespace {

void apply_common(const json& root, std::uint64_t* master_seed, int* workers) {
  if (root.contains("master_seed"))
    *master_seed = root["master_seed"].get<std::uint64_t>();
  if (root.contains("workers")) *workers = root["workers"].get<int>();
}

}  // namespace

SizeExperimentConfig parse_size_config(const json& root) {
  SizeExperimentConfig c;
  if (root.contains("design")) c.design = parse_sim_design(root["design"]);
  if (root.contains("test")) c.test = parse_tdc_config(root["test"]);
  if (root.contains("calibrate")) {
    const json& j = root["calibrate"];
    check_known_keys(
        j, {"rho_values", "j_values", "alpha_levels", "replicates"},
        "calibrate");
    if (j.contains("rho_values"))
      c.rho_values = j["rho_values"].get<std::vector<double>>();
    if (j.contains("j_values"))
      c.j_values = j["j_values"].get<std::vector<Eigen::Index>>();
    if (j.contains("alpha_levels"))
      c.alpha_levels = j["alpha_levels"].get<std::vector<double>>();
    if (j.contains("replicates"))
      c.replicates = j["replicates"].get<std::int64_t>();
  }
  apply_common(root, &c.master_seed, &c.workers);
  return c;
}

PowerExperimentConfig parse_power_config(const json& root) {
  PowerExperimentConfig c;
  if (root.contains("design")) c.design = parse_sim_design(root["design"]);
  if (root.contains("test")) c.test = parse_tdc_config(root["test"]);
  if (root.contains("power")) {
    const json& j = root["power"];
    check_known_keys(j,
                     {"effect_sizes", "signal_proportions", "alpha",
                      "replicates", "j2_screened", "scenario"},
                     "power");
    if (j.contains("effect_sizes"))
      c.effect_sizes = j["effect_sizes"].get<std::vector<double>>();
    if (j.contains("signal_proportions"))
      c.signal_proportions = j["signal_proportions"].get<std::vector<double>>();
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("replicates"))
      c.replicates = j["replicates"].get<std::int64_t>();
    if (j.contains("j2_screened"))
      c.j2_screened = j["j2_screened"].get<Eigen::Index>();
  }
  apply_common(root, &c.master_seed, &c.workers);
  return c;
}

StabilityExperimentConfig parse_stability_config(const json& root) {
  StabilityExperimentConfig c;
  if (root.contains("design")) c.design = parse_sim_design(root["design"]);
  if (root.contains("test")) c.test = parse_tdc_config(root["test"]);
  if (root.contains("stability")) {
    const json& j = root["stability"];
    check_known_keys(j, {"repetitions", "m"}, "stability");
    if (j.contains("repetitions"))
      c.repetitions = j["repetitions"].get<int>();
    if (j.contains("m")) c.m = j["m"].get<int>();
  }
  apply_common(root, &c.master_seed, &c.workers);
  return c;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open file for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace tdc
