#include "commands.hpp"

#include "pot/benchmark.hpp"
#include "pot/core.hpp"
#include "pot/error.hpp"
#include "pot/gpd.hpp"
#include "pot/imt.hpp"
#include "pot/kgaps.hpp"
#include "pot/random.hpp"
#include "pot/series_io.hpp"
#include "pot/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace potkit {

using nlohmann::json;
using pot::DataError;
using pot::DomainError;
using pot::NumericalError;
using pot::io::format_double;

std::string shell_quote(const std::string& arg) {
  const bool plain = !arg.empty() && std::all_of(arg.begin(), arg.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || std::string_view("-_./:=,+@%").find(ch) != std::string_view::npos;
  });
  if (plain) return arg;
  std::string out = "'";
  for (char ch : arg) {
    if (ch == '\'') out += "'\\''";
    else out += ch;
  }
  return out + "'";
}

namespace {

double parse_number(std::string_view text, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    throw DomainError(std::string("cannot parse ") + what + " '" + std::string(text) + "'");
  return v;
}

int parse_int(std::string_view text, const char* what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw DomainError(std::string("cannot parse ") + what + " '" + std::string(text) + "'");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

}  // namespace

std::vector<double> parse_p_grid(const std::string& text) {
  const auto parts = split(text, ':');
  std::vector<double> grid;
  if (parts.size() == 1) {
    grid.push_back(parse_number(parts[0], "threshold probability"));
  } else if (parts.size() == 3) {
    const double a = parse_number(parts[0], "grid start");
    const double b = parse_number(parts[1], "grid end");
    const double step = parse_number(parts[2], "grid step");
    if (!(step > 0.0)) throw DomainError("--p-grid: step must be positive");
    for (int i = 0;; ++i) {
      const double v = std::round((a + i * step) * 1e12) / 1e12;
      if (v > b + 1e-9 * step) break;
      grid.push_back(v);
    }
  } else {
    throw DomainError("--p-grid: expected a:b:step or a single probability, got '" + text + "'");
  }
  if (grid.empty()) throw DomainError("--p-grid: empty grid '" + text + "'");
  for (double p : grid)
    if (!(p > 0.0 && p < 1.0)) throw DomainError("--p-grid: probabilities must lie in (0, 1)");
  return grid;
}

std::vector<int> parse_K_grid(const std::string& text) {
  const auto parts = split(text, ':');
  int a = 0, b = 0;
  if (parts.size() == 1) {
    a = b = parse_int(parts[0], "run parameter");
  } else if (parts.size() == 2) {
    a = parse_int(parts[0], "run parameter");
    b = parse_int(parts[1], "run parameter");
  } else {
    throw DomainError("--K-grid: expected a:b or a single integer, got '" + text + "'");
  }
  if (a < 0) throw DomainError("--K-grid: run parameters must be nonnegative");
  if (a > b) throw DomainError("--K-grid: empty grid '" + text + "'");
  std::vector<int> grid;
  for (int k = a; k <= b; ++k) grid.push_back(k);
  return grid;
}

namespace {

std::string grid_text(const std::vector<double>& g, const std::string& original) {
  const auto parts = split(original, ':');
  if (parts.size() == 1) return format_double(g.front());
  return format_double(parse_number(parts[0], "grid start")) + ":" + format_double(parse_number(parts[1], "grid end")) +
         ":" + format_double(parse_number(parts[2], "grid step"));
}

std::string grid_text(const std::vector<int>& g) {
  if (g.size() == 1) return std::to_string(g.front());
  return std::to_string(g.front()) + ":" + std::to_string(g.back());
}

// Resolved command line, rendered for embedding in outputs.
class Canonical {
 public:
  explicit Canonical(const std::string& subcommand) : args_{"potkit", subcommand} {}
  void positional(const std::string& v) { args_.push_back(v); }
  void opt(const std::string& flag, const std::string& v) {
    args_.push_back(flag);
    args_.push_back(v);
  }
  void num(const std::string& flag, double v) { opt(flag, format_double(v)); }
  void integer(const std::string& flag, long long v) { opt(flag, std::to_string(v)); }
  void flag(const std::string& f) { args_.push_back(f); }
  std::string str() const {
    std::string out;
    for (const auto& a : args_) {
      if (!out.empty()) out += ' ';
      out += shell_quote(a);
    }
    return out;
  }

 private:
  std::vector<std::string> args_;
};

json metadata(const Canonical& cmd, std::uint64_t seed) {
  return json{{"command", cmd.str()}, {"seed", seed}, {"tool", "potkit"}};
}

std::vector<std::string> header_comments(const Canonical& cmd, std::uint64_t seed) {
  return {"command: " + cmd.str(), "seed: " + std::to_string(seed)};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Finite number, or the explicit string "infinite".
json number_or_infinite(double v) { return std::isinf(v) ? json("infinite") : json(v); }

std::string na(double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); }

struct Output {
  std::string path;
  std::string format;
};

void emit(const Output& o, const std::string& contents, std::ostream& out) {
  if (o.path.empty()) {
    out << contents;
  } else {
    pot::io::write_file_atomic(o.path, contents);
  }
}

struct InputSpec {
  std::string path;
  std::string months;
  bool deseasonalize = false;
  double detrend_years = 0.0;
};

void add_input_options(CLI::App* sub, InputSpec& in) {
  sub->add_option("--input", in.path, "Series CSV (columns 'value' or 'date,value')")->required();
  sub->add_option("--months", in.months, "Keep only calendar months a-b, e.g. 6-8");
  sub->add_flag("--deseasonalize", in.deseasonalize, "Standardise by the day-of-year median/MAD cycle");
  sub->add_option("--detrend-years", in.detrend_years, "Standardise by a moving median/MAD of this width");
}

void canonical_input(Canonical& c, const InputSpec& in) {
  c.opt("--input", in.path);
  if (in.deseasonalize) c.flag("--deseasonalize");
  if (in.detrend_years > 0.0) c.num("--detrend-years", in.detrend_years);
  if (!in.months.empty()) c.opt("--months", in.months);
}

pot::TimeSeries load(const InputSpec& in) {
  pot::TimeSeries s = pot::io::read_series_csv(in.path);
  if (in.deseasonalize) s = pot::deseasonalize(s);
  if (in.detrend_years < 0.0) throw DomainError("--detrend-years must be positive");
  if (in.detrend_years > 0.0) s = pot::detrend_moving(s, in.detrend_years);
  if (!in.months.empty()) {
    const auto parts = split(in.months, '-');
    if (parts.size() < 1 || parts.size() > 2) throw DomainError("--months: expected a-b");
    const int a = parse_int(parts[0], "month");
    const int b = parts.size() == 2 ? parse_int(parts[1], "month") : a;
    if (a < 1 || b > 12 || a > b) throw DomainError("--months: months must satisfy 1 <= a <= b <= 12");
    s = pot::select_months(s, static_cast<unsigned>(a), static_cast<unsigned>(b));
  }
  return s;
}

struct ImtFlags {
  std::string season_join = "concatenate";
  bool literal_J = false;
  bool include_unreliable = false;
};

void add_imt_flags(CLI::App* sub, ImtFlags& f, bool with_unreliable) {
  sub->add_option("--season-join", f.season_join, "Gaps across calendar breaks: concatenate or break")
      ->check(CLI::IsMember({"concatenate", "break"}));
  sub->add_flag("--literal-appendix-J", f.literal_J, "Use the linear-c form of the score variance");
  if (with_unreliable)
    sub->add_flag("--include-unreliable", f.include_unreliable, "Let cells with N < 80 be recommended");
}

void canonical_imt(Canonical& c, const ImtFlags& f, bool with_unreliable) {
  c.opt("--season-join", f.season_join);
  if (f.literal_J) c.flag("--literal-appendix-J");
  if (with_unreliable && f.include_unreliable) c.flag("--include-unreliable");
}

pot::ImtOptions imt_options(const ImtFlags& f) {
  pot::ImtOptions o;
  o.variant = f.literal_J ? pot::JVariant::literal_appendix : pot::JVariant::squared_c;
  o.season_join = f.season_join == "break" ? pot::SeasonJoin::break_at_gaps : pot::SeasonJoin::concatenate;
  return o;
}

json choice_json(const std::optional<pot::ParamChoice>& c) {
  if (!c) return nullptr;
  return json{{"p", c->p}, {"K", c->K}, {"T", c->T}, {"N", c->n_exceedances}};
}

std::string choice_comment(const std::optional<pot::ParamChoice>& c) {
  if (!c) return "recommended: none (no well-specified region)";
  return "recommended: p=" + format_double(c->p) + " K=" + std::to_string(c->K) + " T=" + format_double(c->T) +
         " N=" + std::to_string(c->n_exceedances);
}

// Process parameters shared by simulate and bench.
struct ProcessOptions {
  std::optional<double> phi, phi1, phi2, alpha, r, d, theta, tail_prob, xi, sigma;
  std::optional<int> truncation;
};

void add_process_options(CLI::App* sub, ProcessOptions& p) {
  sub->add_option("--phi", p.phi, "AR coefficient (ar1: 0.7, farima: 0.5)");
  sub->add_option("--phi1", p.phi1, "AR(2) first coefficient (0.95)");
  sub->add_option("--phi2", p.phi2, "AR(2) second coefficient (-0.89)");
  sub->add_option("--alpha", p.alpha, "Pareto tail index of AR(2) innovations (2)");
  sub->add_option("--r", p.r, "Logistic dependence parameter (2)");
  sub->add_option("--d", p.d, "Fractional difference parameter (0)");
  sub->add_option("--truncation", p.truncation, "MA truncation lag for farima (5000)");
  sub->add_option("--theta", p.theta, "Extremal index of the mixture process (0.5)");
  sub->add_option("--tail-prob", p.tail_prob, "Exceedance probability of the mixture process (0.01)");
  sub->add_option("--xi", p.xi, "GPD shape (0)");
  sub->add_option("--sigma", p.sigma, "GPD scale (1)");
}

// Options meaningful for each process kind.
std::vector<std::string> relevant_options(pot::ProcessKind kind) {
  using K = pot::ProcessKind;
  switch (kind) {
    case K::ar1_cauchy: return {"--phi"};
    case K::ar2_pareto: return {"--phi1", "--phi2", "--alpha"};
    case K::logistic_markov: return {"--r"};
    case K::farima: return {"--phi", "--d", "--truncation"};
    case K::exact_mixture: return {"--theta", "--tail-prob"};
    case K::exact_gpd: return {"--xi", "--sigma"};
  }
  return {};
}

pot::ProcessParams resolve_params(pot::ProcessKind kind, const ProcessOptions& o) {
  pot::ProcessParams p;
  if (o.phi) {
    if (kind == pot::ProcessKind::farima) p.phi_farima = *o.phi;
    else p.phi = *o.phi;
  }
  if (o.phi1) p.phi1 = *o.phi1;
  if (o.phi2) p.phi2 = *o.phi2;
  if (o.alpha) p.alpha = *o.alpha;
  if (o.r) p.r = *o.r;
  if (o.d) p.d = *o.d;
  if (o.truncation) p.truncation = *o.truncation;
  if (o.theta) p.theta = *o.theta;
  if (o.tail_prob) p.tail_prob = *o.tail_prob;
  if (o.xi) p.xi = *o.xi;
  if (o.sigma) p.sigma = *o.sigma;
  return p;
}

void canonical_param(Canonical& c, const std::string& flag, pot::ProcessKind kind, const pot::ProcessParams& p) {
  if (flag == "--phi") c.num(flag, kind == pot::ProcessKind::farima ? p.phi_farima : p.phi);
  else if (flag == "--phi1") c.num(flag, p.phi1);
  else if (flag == "--phi2") c.num(flag, p.phi2);
  else if (flag == "--alpha") c.num(flag, p.alpha);
  else if (flag == "--r") c.num(flag, p.r);
  else if (flag == "--d") c.num(flag, p.d);
  else if (flag == "--truncation") c.integer(flag, p.truncation);
  else if (flag == "--theta") c.num(flag, p.theta);
  else if (flag == "--tail-prob") c.num(flag, p.tail_prob);
  else if (flag == "--xi") c.num(flag, p.xi);
  else if (flag == "--sigma") c.num(flag, p.sigma);
}

json params_json(pot::ProcessKind kind, const pot::ProcessParams& p) {
  json j = json::object();
  for (const auto& flag : relevant_options(kind)) {
    const std::string key = flag.substr(2);
    if (flag == "--phi") j[key] = kind == pot::ProcessKind::farima ? p.phi_farima : p.phi;
    else if (flag == "--phi1") j[key] = p.phi1;
    else if (flag == "--phi2") j[key] = p.phi2;
    else if (flag == "--alpha") j[key] = p.alpha;
    else if (flag == "--r") j[key] = p.r;
    else if (flag == "--d") j[key] = p.d;
    else if (flag == "--truncation") j[key] = p.truncation;
    else if (flag == "--theta") j[key] = p.theta;
    else if (flag == "--tail-prob") j[key] = p.tail_prob;
    else if (flag == "--xi") j[key] = p.xi;
    else if (flag == "--sigma") j[key] = p.sigma;
  }
  return j;
}

const std::vector<std::string> kProcessNames{"ar1", "ar2", "markov", "farima", "mixture", "gpd"};
const std::vector<std::string> kAllProcessOptions{"--phi",   "--phi1",  "--phi2",      "--alpha", "--r",    "--d",
                                                  "--truncation", "--theta", "--tail-prob", "--xi", "--sigma"};

// ---------------------------------------------------------------- simulate

struct SimulateConfig {
  std::string process;
  pot::Index n = 1000;
  std::uint64_t seed = 1;
  std::optional<int> burn_in;
  std::string start_date;
  ProcessOptions params;
  Output output;
};

void cmd_simulate(CLI::App* sub, const SimulateConfig& cfg, std::ostream& out) {
  pot::ProcessSpec spec;
  spec.kind = pot::parse_process_kind(cfg.process);
  const auto relevant = relevant_options(spec.kind);
  for (const auto& flag : kAllProcessOptions)
    if (sub->count(flag) > 0 && std::find(relevant.begin(), relevant.end(), flag) == relevant.end())
      throw DomainError("option " + flag + " does not apply to process " + cfg.process);
  spec.params = resolve_params(spec.kind, cfg.params);
  spec.n = cfg.n;
  spec.seed = cfg.seed;
  spec.burn_in = cfg.burn_in;
  spec.validate();
  const bool uses_burn_in = spec.kind != pot::ProcessKind::exact_mixture && spec.kind != pot::ProcessKind::exact_gpd;

  Canonical c("simulate");
  c.positional(cfg.process);
  c.integer("--n", spec.n);
  c.integer("--seed", static_cast<long long>(spec.seed));
  if (uses_burn_in) c.integer("--burn-in", spec.resolved_burn_in());
  for (const auto& flag : relevant) canonical_param(c, flag, spec.kind, spec.params);
  if (!cfg.start_date.empty()) c.opt("--start-date", cfg.start_date);
  if (!cfg.output.path.empty()) c.opt("--out", cfg.output.path);

  pot::TimeSeries series = pot::simulate(spec);
  if (!cfg.start_date.empty()) {
    const pot::DayNumber start = pot::io::parse_date(cfg.start_date);
    std::vector<pot::DayNumber> days(static_cast<std::size_t>(series.size()));
    for (std::size_t i = 0; i < days.size(); ++i) days[i] = start + static_cast<pot::DayNumber>(i);
    series = pot::TimeSeries(series.values(), std::move(days), series.meta());
  }

  auto comments = header_comments(c, spec.seed);
  comments.push_back(std::string("generator: ") + pot::Rng::kAlgorithm);
  comments.push_back(std::string("process: ") + pot::to_string(spec.kind));
  emit(cfg.output, pot::io::format_series_csv(series, comments), out);

  if (!cfg.output.path.empty()) {
    json meta = metadata(c, spec.seed);
    meta["generator"] = pot::Rng::kAlgorithm;
    meta["process"] = pot::to_string(spec.kind);
    meta["n"] = spec.n;
    meta["burn_in"] = uses_burn_in ? json(spec.resolved_burn_in()) : json(nullptr);
    meta["parameters"] = params_json(spec.kind, spec.params);
    meta["known_theta"] = opt_json(pot::known_theta(spec));
    meta["start_date"] = cfg.start_date.empty() ? json(nullptr) : json(cfg.start_date);
    pot::io::write_file_atomic(cfg.output.path + ".meta.json", meta.dump(2) + "\n");
  }
}

// ------------------------------------------------------------------- theta

struct ThetaConfig {
  InputSpec input;
  double p = 0.0;
  int K = 1;
  ImtFlags flags;
  int B = 0;
  double level = 0.95;
  std::uint64_t seed = 1;
  Output output{"", "json"};
};

void cmd_theta(const ThetaConfig& cfg, std::ostream& out) {
  if (cfg.K < 0) throw DomainError("--K must be nonnegative");
  Canonical c("theta");
  canonical_input(c, cfg.input);
  c.num("--quantile", cfg.p);
  c.integer("--K", cfg.K);
  canonical_imt(c, cfg.flags, false);
  if (cfg.B > 0) {
    c.integer("--B", cfg.B);
    c.num("--level", cfg.level);
  }
  c.integer("--seed", static_cast<long long>(cfg.seed));
  c.opt("--format", cfg.output.format);
  if (!cfg.output.path.empty()) c.opt("--out", cfg.output.path);

  const auto series = load(cfg.input);
  const auto options = imt_options(cfg.flags);
  const double u = pot::empirical_quantile(series, cfg.p);
  const auto rec = pot::exceedances(series, u);
  const auto segments = pot::segment_ids(series);
  const auto times = pot::inter_exceedance_times(rec, segments, options.season_join);
  const auto sample = pot::k_gaps(times, cfg.K, rec.tail_prob());
  const auto est = pot::mle(sample, options.variant);

  std::optional<pot::ImtResult> imt;
  pot::CellFlag flag = pot::CellFlag::ok;
  if (est.boundary) {
    flag = pot::CellFlag::boundary;
  } else {
    try {
      imt = pot::imt_statistic(sample, est.theta_hat, options.variant);
      imt->reliable = rec.count() >= pot::kImtReliableExceedances;
    } catch (const NumericalError&) {
      flag = pot::CellFlag::undefined_test;
    }
  }
  std::optional<double> intervals;
  if (times.size() >= 2) intervals = pot::intervals_estimator(times);
  std::optional<pot::BootstrapInterval> boot;
  if (cfg.B > 0) boot = pot::bootstrap_ci(rec, cfg.K, cfg.B, cfg.level, cfg.seed);

  json doc;
  doc["metadata"] = metadata(c, cfg.seed);
  doc["input"] = cfg.input.path;
  doc["n"] = series.size();
  doc["quantile"] = cfg.p;
  doc["threshold"] = u;
  doc["K"] = cfg.K;
  doc["N"] = rec.count();
  doc["N_C"] = est.n_positive;
  doc["n_gaps"] = est.n_gaps;
  doc["tail_prob"] = rec.tail_prob();
  doc["theta"] = est.theta_hat;
  doc["se_sandwich"] = opt_json(est.se_sandwich);
  doc["se_naive"] = opt_json(est.se_naive);
  doc["loglik"] = est.loglik;
  doc["boundary"] = est.boundary;
  doc["J_variant"] = cfg.flags.literal_J ? "literal_appendix" : "squared_c";
  doc["season_join"] = cfg.flags.season_join;
  doc["intervals_estimate"] = opt_json(intervals);
  doc["imt_flag"] = pot::to_string(flag);
  if (imt) {
    doc["imt"] = json{{"T", imt->T},   {"pvalue", imt->p_value}, {"D", imt->D},
                      {"D_prime", imt->D_prime}, {"V", imt->V}, {"reliable", imt->reliable}};
  } else {
    doc["imt"] = nullptr;
  }
  if (boot) {
    doc["bootstrap"] = json{{"lower", boot->lower},
                            {"upper", boot->upper},
                            {"level", boot->level},
                            {"replicates", boot->replicates},
                            {"degenerate", boot->degenerate}};
  } else {
    doc["bootstrap"] = nullptr;
  }

  if (cfg.output.format == "json") {
    emit(cfg.output, doc.dump(2) + "\n", out);
    return;
  }
  std::ostringstream csv;
  for (const auto& line : header_comments(c, cfg.seed)) csv << "# " << line << '\n';
  csv << "field,value\n";
  for (const auto& [key, value] : doc.items()) {
    if (key == "metadata") continue;
    if (value.is_object()) {
      for (const auto& [k2, v2] : value.items()) csv << key << '.' << k2 << ',' << (v2.is_null() ? "NA" : v2.dump()) << '\n';
    } else {
      csv << key << ',' << (value.is_null() ? "NA" : value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
    }
  }
  emit(cfg.output, csv.str(), out);
}

// ------------------------------------------------------------ imt surfaces

struct GridConfig {
  InputSpec input;
  std::string p_grid = "0.95:0.995:0.005";
  std::string K_grid = "1:12";
  ImtFlags flags;
  std::uint64_t seed = 1;
  Output output{"", "csv"};
  // sliding only
  double window_years = 0.0;
  double step_years = 1.0;
  std::string first_center;
  std::optional<double> obs_per_year;
  double fdr_q = 0.05;
};

void cmd_imt_grid(const GridConfig& cfg, std::ostream& out) {
  const auto ps = parse_p_grid(cfg.p_grid);
  const auto Ks = parse_K_grid(cfg.K_grid);
  Canonical c("imt-grid");
  canonical_input(c, cfg.input);
  c.opt("--p-grid", grid_text(ps, cfg.p_grid));
  c.opt("--K-grid", grid_text(Ks));
  canonical_imt(c, cfg.flags, true);
  c.integer("--seed", static_cast<long long>(cfg.seed));
  c.opt("--format", cfg.output.format);
  if (!cfg.output.path.empty()) c.opt("--out", cfg.output.path);

  const auto series = load(cfg.input);
  const auto surface = pot::imt_grid(series, ps, Ks, imt_options(cfg.flags));
  pot::ChooseOptions choose;
  choose.include_unreliable = cfg.flags.include_unreliable;
  const auto choice = pot::choose_params(surface, choose);

  if (cfg.output.format == "json") {
    json doc;
    doc["metadata"] = metadata(c, cfg.seed);
    doc["surfaces"] = pot::surface_json({surface});
    doc["recommendation"] = choice_json(choice);
    emit(cfg.output, doc.dump(2) + "\n", out);
  } else {
    auto comments = header_comments(c, cfg.seed);
    comments.push_back(choice_comment(choice));
    emit(cfg.output, pot::surface_csv({surface}, nullptr, comments), out);
  }
}

void cmd_sliding(const GridConfig& cfg, std::ostream& out) {
  const auto ps = parse_p_grid(cfg.p_grid);
  const auto Ks = parse_K_grid(cfg.K_grid);
  if (!(cfg.window_years > 0.0)) throw DomainError("--window-years must be positive");
  if (!(cfg.step_years > 0.0)) throw DomainError("--step-years must be positive");
  if (!(cfg.fdr_q > 0.0 && cfg.fdr_q < 1.0)) throw DomainError("--fdr-q must lie in (0, 1)");
  Canonical c("sliding");
  canonical_input(c, cfg.input);
  c.opt("--p-grid", grid_text(ps, cfg.p_grid));
  c.opt("--K-grid", grid_text(Ks));
  c.num("--window-years", cfg.window_years);
  c.num("--step-years", cfg.step_years);
  if (!cfg.first_center.empty()) c.opt("--first-center", cfg.first_center);
  if (cfg.obs_per_year) c.num("--obs-per-year", *cfg.obs_per_year);
  c.num("--fdr-q", cfg.fdr_q);
  canonical_imt(c, cfg.flags, true);
  c.integer("--seed", static_cast<long long>(cfg.seed));
  c.opt("--format", cfg.output.format);
  if (!cfg.output.path.empty()) c.opt("--out", cfg.output.path);

  const auto series = load(cfg.input);
  pot::WindowSpec window;
  double unit = pot::kDaysPerYear;
  if (!series.has_timestamps()) {
    if (!cfg.obs_per_year) throw DomainError("--obs-per-year is required for series without dates");
    if (!(*cfg.obs_per_year > 0.0)) throw DomainError("--obs-per-year must be positive");
    unit = *cfg.obs_per_year;
  }
  window.length = cfg.window_years * unit;
  window.step = cfg.step_years * unit;
  if (!cfg.first_center.empty()) {
    window.first_center = series.has_timestamps()
                              ? static_cast<double>(pot::io::parse_date(cfg.first_center))
                              : parse_number(cfg.first_center, "--first-center");
  }
  const auto surfaces = pot::sliding_window_imt(series, window, ps, Ks, imt_options(cfg.flags));
  const auto fdr = pot::sliding_fdr(surfaces, cfg.fdr_q);
  pot::ChooseOptions choose;
  choose.include_unreliable = cfg.flags.include_unreliable;
  const auto choice = pot::choose_params(pot::max_over_windows(surfaces), choose);

  if (cfg.output.format == "json") {
    json doc;
    doc["metadata"] = metadata(c, cfg.seed);
    doc["fdr_q"] = cfg.fdr_q;
    doc["windows"] = surfaces.size();
    doc["surfaces"] = pot::surface_json(surfaces, &fdr);
    doc["recommendation_max_T"] = choice_json(choice);
    emit(cfg.output, doc.dump(2) + "\n", out);
  } else {
    auto comments = header_comments(c, cfg.seed);
    comments.push_back("windows: " + std::to_string(surfaces.size()));
    comments.push_back(choice_comment(choice) + " (maximum T over windows)");
    emit(cfg.output, pot::surface_csv(surfaces, &fdr, comments), out);
  }
}

// --------------------------------------------------------------------- gpd

struct GpdConfig {
  InputSpec input;
  double p = 0.0;
  std::optional<int> K;
  double obs_per_year = 365.25;
  std::vector<double> return_periods;
  std::vector<double> return_levels;
  std::string p_grid = "0.9:0.995:0.005";
  int B = 200;
  std::uint64_t seed = 1;
  std::string out;
};

std::string list_text(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + format_double(x);
  return s;
}

struct LevelWithCi {
  double level = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Return level with a delta-method interval from the fit covariance; the
// exceedance rate is treated as known.
LevelWithCi level_with_ci(const pot::GpdFit& fit, double obs_per_year, double years) {
  LevelWithCi r;
  r.level = pot::return_level(fit, obs_per_year, years);
  const double hx = 1e-6 * std::max(1.0, std::abs(fit.xi));
  const double hs = 1e-6 * fit.sigma;
  auto at = [&](double dx, double ds) {
    pot::GpdFit f = fit;
    f.xi += dx;
    f.sigma += ds;
    return pot::return_level(f, obs_per_year, years);
  };
  Eigen::Vector2d g((at(hx, 0) - at(-hx, 0)) / (2 * hx), (at(0, hs) - at(0, -hs)) / (2 * hs));
  const double sd = std::sqrt(std::max(0.0, g.dot(fit.covariance * g)));
  r.lower = r.level - 1.96 * sd;
  r.upper = r.level + 1.96 * sd;
  return r;
}

void cmd_gpd(const GpdConfig& cfg) {
  if (cfg.out.empty()) throw DomainError("--out is required for gpd (report path)");
  if (cfg.K && *cfg.K < 0) throw DomainError("--K must be nonnegative");
  if (!(cfg.obs_per_year > 0.0)) throw DomainError("--obs-per-year must be positive");
  if (cfg.B < 1) throw DomainError("--B must be positive");
  const auto diag_ps = parse_p_grid(cfg.p_grid);
  Canonical c("gpd");
  canonical_input(c, cfg.input);
  c.num("--quantile", cfg.p);
  if (cfg.K) c.integer("--K", *cfg.K);
  c.num("--obs-per-year", cfg.obs_per_year);
  if (!cfg.return_periods.empty()) c.opt("--return-period", list_text(cfg.return_periods));
  if (!cfg.return_levels.empty()) c.opt("--return-level", list_text(cfg.return_levels));
  c.opt("--p-grid", grid_text(diag_ps, cfg.p_grid));
  c.integer("--B", cfg.B);
  c.integer("--seed", static_cast<long long>(cfg.seed));
  c.opt("--out", cfg.out);

  const auto series = load(cfg.input);
  const double u = pot::empirical_quantile(series, cfg.p);
  const Eigen::VectorXd y = pot::peak_excesses(series, u, cfg.K);
  const std::span<const double> ys(y.data(), static_cast<std::size_t>(y.size()));
  const auto fit = pot::gpd_fit(ys, u, static_cast<double>(y.size()) / static_cast<double>(series.size()));
  if (!fit.converged) throw NumericalError("GPD fit did not converge (estimate on a bound or singular information)");

  json levels = json::array();
  for (double T : cfg.return_periods) {
    const auto r = level_with_ci(fit, cfg.obs_per_year, T);
    levels.push_back(json{{"period_years", T}, {"level", r.level}, {"lower", r.lower}, {"upper", r.upper}});
  }
  json periods = json::array();
  for (double x : cfg.return_levels)
    periods.push_back(json{{"level", x}, {"period_years", number_or_infinite(pot::return_period(fit, cfg.obs_per_year, x))}});

  std::string stem = cfg.out;
  if (stem.size() > 5 && stem.compare(stem.size() - 5, 5, ".json") == 0) stem.resize(stem.size() - 5);
  const std::string mrl_path = stem + "_mrl.csv";
  const std::string stability_path = stem + "_stability.csv";
  const std::string qq_path = stem + "_qq.csv";
  const std::string rl_path = stem + "_return_levels.csv";
  const auto comments = header_comments(c, cfg.seed);
  auto begin_csv = [&](std::ostringstream& os, const char* header) {
    for (const auto& line : comments) os << "# " << line << '\n';
    os << header << '\n';
  };

  std::ostringstream mrl;
  begin_csv(mrl, "x,y,lower,upper,p,n");
  for (const auto& pt : pot::mean_residual_life(series, diag_ps)) {
    mrl << format_double(pt.u) << ',' << (pt.missing ? "NA" : format_double(pt.mean_excess)) << ','
        << (pt.missing ? "NA" : format_double(pt.lower)) << ',' << (pt.missing ? "NA" : format_double(pt.upper)) << ','
        << format_double(pt.p) << ',' << pt.n << '\n';
  }

  std::ostringstream stab;
  begin_csv(stab, "x,y,lower,upper,parameter,p,n");
  const auto stability = pot::parameter_stability(series, diag_ps, cfg.K.value_or(0));
  for (const char* which : {"shape", "modified_scale"}) {
    const bool shape = std::string(which) == "shape";
    for (const auto& pt : stability) {
      stab << format_double(pt.u) << ',';
      if (pt.missing) {
        stab << "NA,NA,NA,";
      } else if (shape) {
        stab << format_double(pt.xi) << ',' << format_double(pt.xi_lower) << ',' << format_double(pt.xi_upper) << ',';
      } else {
        stab << format_double(pt.modified_scale) << ',' << format_double(pt.modified_scale_lower) << ','
             << format_double(pt.modified_scale_upper) << ',';
      }
      stab << which << ',' << format_double(pt.p) << ',' << pt.n << '\n';
    }
  }

  std::ostringstream qq;
  begin_csv(qq, "x,y,lower,upper");
  for (const auto& pt : pot::qq_envelope(fit, ys, cfg.B, cfg.seed))
    qq << format_double(u + pt.model) << ',' << format_double(u + pt.empirical) << ',' << format_double(u + pt.lower)
       << ',' << format_double(u + pt.upper) << '\n';

  std::set<double> curve(cfg.return_periods.begin(), cfg.return_periods.end());
  const double shortest = 1.5 / (cfg.obs_per_year * fit.rate);
  for (int k = -30; k <= 40; ++k) {
    const double T = std::pow(10.0, k / 10.0);
    if (T >= shortest) curve.insert(T);
  }
  std::ostringstream rl;
  begin_csv(rl, "x,y,lower,upper");
  for (double T : curve) {
    const auto r = level_with_ci(fit, cfg.obs_per_year, T);
    rl << format_double(T) << ',' << format_double(r.level) << ',' << na(r.lower) << ',' << na(r.upper) << '\n';
  }

  json doc;
  doc["metadata"] = metadata(c, cfg.seed);
  doc["input"] = cfg.input.path;
  doc["n"] = series.size();
  doc["quantile"] = cfg.p;
  doc["threshold"] = u;
  doc["K"] = cfg.K ? json(*cfg.K) : json(nullptr);
  doc["excesses"] = cfg.K ? "cluster_peaks" : "all_exceedances";
  doc["n_fit"] = fit.n_fit;
  doc["rate"] = fit.rate;
  doc["xi"] = fit.xi;
  doc["sigma"] = fit.sigma;
  doc["se_xi"] = fit.se_xi;
  doc["se_sigma"] = fit.se_sigma;
  doc["cov_xi_sigma"] = fit.cov_xi_sigma;
  doc["covariance"] = json::array({json::array({fit.covariance(0, 0), fit.covariance(0, 1)}),
                                   json::array({fit.covariance(1, 0), fit.covariance(1, 1)})});
  doc["loglik"] = fit.loglik;
  doc["converged"] = fit.converged;
  doc["obs_per_year"] = cfg.obs_per_year;
  doc["upper_endpoint"] = fit.xi < 0.0 ? number_or_infinite(u - fit.sigma / fit.xi) : json("infinite");
  doc["return_levels"] = std::move(levels);
  doc["return_periods"] = std::move(periods);
  doc["diagnostics"] = json{{"mean_residual_life", mrl_path},
                            {"parameter_stability", stability_path},
                            {"qq_envelope", qq_path},
                            {"return_level_curve", rl_path}};

  pot::io::write_file_atomic(mrl_path, mrl.str());
  pot::io::write_file_atomic(stability_path, stab.str());
  pot::io::write_file_atomic(qq_path, qq.str());
  pot::io::write_file_atomic(rl_path, rl.str());
  pot::io::write_file_atomic(cfg.out, doc.dump(2) + "\n");
}

// ------------------------------------------------------------------- bench

struct BenchConfig {
  std::string processes = "ar1,ar2,markov";
  std::string estimators = "kgaps_mle,intervals";
  int reps = 100;
  pot::Index n = 30000;
  std::string p_grid = "0.95:0.99:0.01";
  std::string K_map;
  ProcessOptions params;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  Output output{"", "csv"};
};

void cmd_bench(CLI::App* sub, const BenchConfig& cfg, std::ostream& out, std::ostream& err) {
  pot::BenchmarkConfig bc;
  std::vector<std::string> names;
  for (const auto& name : split(cfg.processes, ',')) {
    const auto kind = pot::parse_process_kind(name);
    names.push_back(name);
    pot::ProcessSpec spec;
    spec.kind = kind;
    spec.n = cfg.n;
    spec.params = resolve_params(kind, cfg.params);
    bc.processes.push_back(spec);
  }
  if (bc.processes.empty()) throw DomainError("--processes: no process given");
  bc.estimators.clear();
  std::vector<std::string> est_names;
  for (const auto& name : split(cfg.estimators, ',')) {
    bc.estimators.push_back(pot::parse_estimator(name));
    est_names.push_back(name);
  }
  if (bc.estimators.empty()) throw DomainError("--estimators: no estimator given");
  if (!cfg.K_map.empty()) {
    for (const auto& item : split(cfg.K_map, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw DomainError("--K-map: expected process=K, got '" + item + "'");
      const int K = parse_int(std::string_view(item).substr(eq + 1), "run parameter");
      if (K < 0) throw DomainError("--K-map: run parameters must be nonnegative");
      bc.K_map[pot::parse_process_kind(item.substr(0, eq))] = K;
    }
  }
  bc.reps = cfg.reps;
  bc.p_grid = parse_p_grid(cfg.p_grid);
  bc.master_seed = cfg.seed;
  bc.threads = cfg.threads;

  std::set<std::string> relevant;
  for (const auto& spec : bc.processes)
    for (const auto& flag : relevant_options(spec.kind)) relevant.insert(flag);
  for (const auto& flag : kAllProcessOptions)
    if (sub->count(flag) > 0 && !relevant.count(flag))
      throw DomainError("option " + flag + " does not apply to the selected processes");

  Canonical c("bench");
  c.opt("--processes", cfg.processes);
  c.opt("--estimators", cfg.estimators);
  c.integer("--reps", cfg.reps);
  c.integer("--n", cfg.n);
  c.opt("--p-grid", grid_text(bc.p_grid, cfg.p_grid));
  std::string kmap;
  for (std::size_t i = 0; i < bc.processes.size(); ++i) {
    const auto it = bc.K_map.find(bc.processes[i].kind);
    kmap += (kmap.empty() ? "" : ",") + names[i] + "=" + std::to_string(it != bc.K_map.end() ? it->second : 1);
  }
  c.opt("--K-map", kmap);
  for (const auto& flag : kAllProcessOptions) {
    if (!relevant.count(flag)) continue;
    // --phi differs by kind when unset; only an explicit value is shared.
    if (flag == "--phi" && !cfg.params.phi) {
      bool ar1 = false, far = false;
      for (const auto& spec : bc.processes) {
        ar1 = ar1 || spec.kind == pot::ProcessKind::ar1_cauchy;
        far = far || spec.kind == pot::ProcessKind::farima;
      }
      if (ar1 && far) continue;
    }
    for (const auto& spec : bc.processes) {
      const auto r = relevant_options(spec.kind);
      if (std::find(r.begin(), r.end(), flag) != r.end()) {
        canonical_param(c, flag, spec.kind, spec.params);
        break;
      }
    }
  }
  c.integer("--seed", static_cast<long long>(cfg.seed));
  if (!cfg.output.path.empty()) c.opt("--out", cfg.output.path);

  const auto rows = pot::benchmark(bc, [&](const std::string& msg) { err << "potkit bench: " << msg << '\n'; });
  err << "potkit bench: done (" << rows.size() << " rows)\n";
  emit(cfg.output, pot::benchmark_csv(rows, header_comments(c, cfg.seed)), out);
}

template <typename F>
int guarded(F&& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const DomainError& e) {
    err << "potkit: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "potkit: error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "potkit: error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "potkit: internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Peaks-over-threshold extremal index analysis", "potkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "potkit 1.0.0");

  SimulateConfig sim;
  auto* s_sim = app.add_subcommand("simulate", "Simulate a study process to a series CSV");
  s_sim->add_option("process", sim.process, "ar1, ar2, markov, farima, mixture or gpd")
      ->required()
      ->check(CLI::IsMember(kProcessNames));
  s_sim->add_option("--n", sim.n, "Series length")->default_val(1000);
  s_sim->add_option("--seed", sim.seed, "Seed")->default_val(1);
  s_sim->add_option("--burn-in", sim.burn_in, "Discarded initial steps (1000; farima: truncation + 1000)");
  s_sim->add_option("--start-date", sim.start_date, "Attach daily dates from this ISO date");
  s_sim->add_option("--out", sim.output.path, "Output CSV (metadata goes to <out>.meta.json)");
  add_process_options(s_sim, sim.params);

  ThetaConfig theta;
  auto* s_theta = app.add_subcommand("theta", "K-gaps estimate of the extremal index at one threshold");
  add_input_options(s_theta, theta.input);
  s_theta->add_option("-p,--quantile", theta.p, "Threshold as a quantile probability")->required();
  s_theta->add_option("--K", theta.K, "Run parameter")->default_val(1);
  add_imt_flags(s_theta, theta.flags, false);
  s_theta->add_option("--B", theta.B, "Bootstrap replicates (0 for none, else at least 100)")->default_val(0);
  s_theta->add_option("--level", theta.level, "Bootstrap interval level")->default_val(0.95);
  s_theta->add_option("--seed", theta.seed, "Seed")->default_val(1);
  s_theta->add_option("--format", theta.output.format, "json or csv")
      ->check(CLI::IsMember({"csv", "json"}))
      ->default_val("json");
  s_theta->add_option("--out", theta.output.path, "Output file");

  GridConfig grid;
  auto* s_grid = app.add_subcommand("imt-grid", "Information matrix test over a (threshold, K) grid");
  add_input_options(s_grid, grid.input);
  s_grid->add_option("--p-grid", grid.p_grid, "Threshold probabilities a:b:step")->default_val(grid.p_grid);
  s_grid->add_option("--K-grid", grid.K_grid, "Run parameters a:b")->default_val(grid.K_grid);
  add_imt_flags(s_grid, grid.flags, true);
  s_grid->add_option("--seed", grid.seed, "Seed")->default_val(1);
  s_grid->add_option("--format", grid.output.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->default_val("csv");
  s_grid->add_option("--out", grid.output.path, "Output file");

  GridConfig slide;
  auto* s_slide = app.add_subcommand("sliding", "Information matrix test in sliding time windows with BY-FDR");
  add_input_options(s_slide, slide.input);
  s_slide->add_option("--p-grid", slide.p_grid, "Threshold probabilities a:b:step")->default_val(slide.p_grid);
  s_slide->add_option("--K-grid", slide.K_grid, "Run parameters a:b")->default_val(slide.K_grid);
  s_slide->add_option("--window-years", slide.window_years, "Window length in years")->required();
  s_slide->add_option("--step-years", slide.step_years, "Step between window centres in years")->default_val(1.0);
  s_slide->add_option("--first-center", slide.first_center, "Align centres to this date (or position)");
  s_slide->add_option("--obs-per-year", slide.obs_per_year, "Observations per year for undated series");
  s_slide->add_option("--fdr-q", slide.fdr_q, "Benjamini-Yekutieli false discovery rate")->default_val(0.05);
  add_imt_flags(s_slide, slide.flags, true);
  s_slide->add_option("--seed", slide.seed, "Seed")->default_val(1);
  s_slide->add_option("--format", slide.output.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->default_val("csv");
  s_slide->add_option("--out", slide.output.path, "Output file");

  GpdConfig gpd;
  auto* s_gpd = app.add_subcommand("gpd", "GPD fit, return levels and diagnostic tables");
  add_input_options(s_gpd, gpd.input);
  s_gpd->add_option("-p,--quantile", gpd.p, "Threshold as a quantile probability")->required();
  s_gpd->add_option("--K", gpd.K, "Run parameter; fit cluster peaks when given");
  s_gpd->add_option("--obs-per-year", gpd.obs_per_year, "Observations per year")->default_val(365.25);
  s_gpd->add_option("--return-period", gpd.return_periods, "Return periods in years")->delimiter(',');
  s_gpd->add_option("--return-level", gpd.return_levels, "Levels whose return period is wanted")->delimiter(',');
  s_gpd->add_option("--p-grid", gpd.p_grid, "Diagnostic threshold probabilities a:b:step")->default_val(gpd.p_grid);
  s_gpd->add_option("--B", gpd.B, "QQ envelope replicates")->default_val(200);
  s_gpd->add_option("--seed", gpd.seed, "Seed")->default_val(1);
  s_gpd->add_option("--out", gpd.out, "Report JSON; diagnostics go next to it")->required();

  BenchConfig bench;
  auto* s_bench = app.add_subcommand("bench", "Monte Carlo bias/RMSE benchmark of the estimators");
  s_bench->add_option("--processes", bench.processes, "Comma-separated processes")->default_val(bench.processes);
  s_bench->add_option("--estimators", bench.estimators, "kgaps_mle and/or intervals")->default_val(bench.estimators);
  s_bench->add_option("--reps", bench.reps, "Replications")->default_val(100);
  s_bench->add_option("--n", bench.n, "Series length")->default_val(30000);
  s_bench->add_option("--p-grid", bench.p_grid, "Threshold probabilities a:b:step")->default_val(bench.p_grid);
  s_bench->add_option("--K-map", bench.K_map, "Run parameter per process, e.g. ar1=1,ar2=6");
  add_process_options(s_bench, bench.params);
  s_bench->add_option("--seed", bench.seed, "Master seed")->default_val(1);
  s_bench->add_option("--threads", bench.threads, "Worker threads (0 for all cores)")->default_val(0);
  s_bench->add_option("--out", bench.output.path, "Output CSV");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (s_sim->parsed()) return guarded([&] { cmd_simulate(s_sim, sim, out); }, err);
  if (s_theta->parsed()) return guarded([&] { cmd_theta(theta, out); }, err);
  if (s_grid->parsed()) return guarded([&] { cmd_imt_grid(grid, out); }, err);
  if (s_slide->parsed()) return guarded([&] { cmd_sliding(slide, out); }, err);
  if (s_gpd->parsed()) return guarded([&] { cmd_gpd(gpd); }, err);
  if (s_bench->parsed()) return guarded([&] { cmd_bench(s_bench, bench, out, err); }, err);
  return kExitUsage;
}

}  // namespace potkit
