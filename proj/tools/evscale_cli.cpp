// Command-line driver: simulate, fit3, profile, fit4, returns, qq, asymptotics.
// Exit status: 0 success, 2 usage error, 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "evscale/evscale.hpp"

namespace fs = std::filesystem;
using namespace evscale;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

// splitmix64 step: stage seeds derived from the single configured seed
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stage + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct DataOptions {
  std::string input;
  std::string column = "0";
  std::string kind = "gev";
  std::optional<double> threshold;
  std::optional<double> n_blocks;
};

void add_data_options(CLI::App* sub, DataOptions& o, bool kind_option = true) {
  sub->add_option("--input", o.input, "CSV file with a header row")->required()->check(
      CLI::ExistingFile);
  sub->add_option("--column", o.column, "Column name or 0-based index")->capture_default_str();
  if (kind_option) {
    sub->add_option("--kind", o.kind, "gev (block maxima) or pp (threshold exceedances)")
        ->check(CLI::IsMember({"gev", "pp"}))
        ->capture_default_str();
  }
  sub->add_option("--threshold", o.threshold, "pp threshold (default: from the .meta sidecar)");
  sub->add_option("--n-blocks", o.n_blocks,
                  "Blocks spanned by pp data (default: sidecar, else one per exceedance)");
}

struct LoadedData {
  Series series;
  ModelKind kind;
};

LoadedData load_data(const DataOptions& o) {
  ColumnSpec col = o.column;
  if (!o.column.empty() && std::all_of(o.column.begin(), o.column.end(), ::isdigit)) {
    col = static_cast<std::size_t>(std::stoul(o.column));
  }
  LoadedData d{read_series(o.input, col), BlockMaxima{}};
  if (o.kind == "pp") {
    const auto u = o.threshold ? o.threshold : d.series.threshold;
    if (!u) throw UsageError("--kind pp needs --threshold or a threshold in " + meta_path(o.input));
    const auto nb = o.n_blocks ? o.n_blocks : d.series.n_blocks;
    d.kind = ThresholdExceedances{*u, nb};
  }
  return d;
}

std::string out_file(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Effective options of the subcommand that ran, in a form --config reads back.
void write_manifest(const CLI::App* sub, const std::string& out_dir) {
  const std::string path = out_file(out_dir, "manifest.ini");
  std::ofstream m = csv::open_for_write(path);
  m << "# rerun with: evscale_cli --config " << path << '\n';
  m << '[' << sub->get_name() << "]\n";
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
    std::vector<std::string> values = opt->results();
    if (values.empty()) {
      if (opt->get_default_str().empty()) continue;
      values = {opt->get_default_str()};
    }
    m << opt->get_lnames().front() << '=';
    if (opt->get_expected_max() > 1 && !(values.size() == 1 && values[0].front() == '[')) {
      m << '[';
      for (std::size_t i = 0; i < values.size(); ++i) m << (i ? "," : "") << values[i];
      m << ']';
    } else if (opt->get_type_size() == 0) {
      m << (values.front() == "true" || values.front() == "1" ? "true" : "false");
    } else {
      m << '"' << values.front() << '"';
    }
    m << '\n';
  }
  if (!m) throw std::runtime_error("failed writing " + path);
}

void prepare_out(const std::string& out_dir, const std::vector<std::string>& inputs) {
  fs::create_directories(out_dir);
  for (const auto& in : inputs) {
    if (fs::equivalent(fs::path(in).parent_path().empty() ? "." : fs::path(in).parent_path(),
                       out_dir)) {
      throw UsageError("--out must differ from the directory holding " + in);
    }
  }
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string design = "pp";
  std::string out;
  std::uint64_t seed = 1;
  double location = 15.0, scale = 1.5, shape = -0.25;
  double blocks = 1000.0;
  double intensity = 1e5;
  bool fixed_count = false;
  bool square = false;
  std::size_t n = 100000;
  std::size_t block_length = 100;
  std::size_t k = 1000;
};

void run_simulate(const SimulateOptions& o) {
  prepare_out(o.out, {});
  const std::uint64_t seed = derive_seed(o.seed, 0);
  auto transform = [&](std::vector<double> v) {
    if (o.square) {
      for (double& x : v) {
        if (!(x > 0.0)) throw DomainError("--square needs positive values");
        x *= x;
      }
    }
    return v;
  };
  auto sq = [&](double u) { return o.square ? u * u : u; };

  if (o.design == "gev") {
    Series s = simulate_gev({o.location, o.scale, o.shape}, o.n, seed);
    s.values = transform(s.values);
    write_series(out_file(o.out, "series.csv"), s);
    return;
  }

  Series base;
  std::vector<double> maxima;
  double n_blocks;
  if (o.design == "pp") {
    const ExceedanceSet sim =
        simulate_pp({{o.location, o.scale, o.shape}, o.blocks}, o.intensity, seed, o.fixed_count);
    Series all{transform(sim.exceedances), {}, "", sq(sim.threshold), o.blocks};
    write_series(out_file(o.out, "exceedances.csv"), all);
    base.values = sim.exceedances;
    maxima = pp_block_maxima(sim);
    n_blocks = o.blocks;
  } else {
    base = simulate_truncated_normal(o.n, seed);
    base.block_length = o.block_length;
    Series raw{transform(base.values), o.block_length, "", {}, {}};
    write_series(out_file(o.out, "series.csv"), raw);
    const BlockMaximaResult bm = block_maxima(base, o.block_length);
    if (bm.dropped > 0) {
      std::cerr << "warning: dropped " << bm.dropped << " values in a partial trailing block\n";
    }
    maxima = bm.maxima.values;
    n_blocks = static_cast<double>(maxima.size());
  }
  write_series(out_file(o.out, "block_maxima.csv"), Series{transform(maxima), 1, "", {}, {}});

  const ExceedanceSet top = largest_k(base, std::min(o.k, base.values.size()));
  write_series(out_file(o.out, "largest_k.csv"),
               Series{transform(top.exceedances), {}, "", sq(top.threshold), n_blocks});

  const double u_low = *std::min_element(maxima.begin(), maxima.end());
  std::vector<double> low;
  for (double v : base.values) {
    if (v > u_low) low.push_back(v);
  }
  write_series(out_file(o.out, "low_threshold.csv"),
               Series{transform(low), {}, "", sq(u_low), n_blocks});
  std::cout << "simulated " << base.values.size() << " points; " << maxima.size()
            << " block maxima; " << top.exceedances.size() << " largest; " << low.size()
            << " above the lowest block maximum\n";
}

// ---------------------------------------------------------------- fit3

struct Fit3Options {
  DataOptions data;
  std::string out;
};

void write_fit3(const std::string& path, const Fit3Result& f) {
  csv::Writer w(path, {"parameter", "estimate", "std_error"});
  w.row_strings({"location", csv::format(f.params.location), csv::format(f.std_errors[0])});
  w.row_strings({"scale", csv::format(f.params.scale), csv::format(f.std_errors[1])});
  w.row_strings({"shape", csv::format(f.params.shape), csv::format(f.std_errors[2])});
  w.row_strings({"loglik", csv::format(f.loglik), ""});
  w.close();
}

void run_fit3(const Fit3Options& o) {
  prepare_out(o.out, {o.data.input});
  const LoadedData d = load_data(o.data);
  const Fit3Result f = fit3_mle(d.series.values, d.kind);
  write_fit3(out_file(o.out, "fit3.csv"), f);
  std::cout << "location " << f.params.location << " (" << f.std_errors[0] << "), scale "
            << f.params.scale << " (" << f.std_errors[1] << "), shape " << f.params.shape << " ("
            << f.std_errors[2] << "), loglik " << f.loglik << '\n';
}

// ---------------------------------------------------------------- profile

struct ProfileOptions {
  DataOptions data;
  std::string out;
  GridSpec grid;
  std::optional<double> gamma_min, gamma_max;
};

void run_profile(const ProfileOptions& o) {
  prepare_out(o.out, {o.data.input});
  const LoadedData d = load_data(o.data);
  // the grid is evaluated at the block reference the sampler uses
  const ModelKind kind = sampling_kind(d.kind);
  const Fit3Result f = fit3_mle(d.series.values, kind);
  GridSpec spec = o.grid;
  if (o.gamma_min || o.gamma_max) {
    if (!o.gamma_min || !o.gamma_max) throw UsageError("give both --gamma-min and --gamma-max");
    spec.gamma_range = std::array<double, 2>{*o.gamma_min, *o.gamma_max};
  }
  const ProfileGrid grid = build_grid(d.series.values, kind, f, spec);
  csv::Writer w(out_file(o.out, "grid.csv"), {"gamma", "lambda", "loglik", "converged"});
  for (std::size_t i = 0; i < grid.gamma_values.size(); ++i) {
    for (std::size_t j = 0; j < grid.lambda_values.size(); ++j) {
      w.row({grid.gamma_values[i], grid.lambda_values[j], grid.at(i, j),
             grid.converged_at(i, j) ? 1.0 : 0.0});
    }
  }
  w.close();
  write_fit3(out_file(o.out, "fit3.csv"), f);
  const RidgeFit ridge = fit_ridge_slope(grid);
  csv::Writer s(out_file(o.out, "profile_summary.csv"), {"key", "value"});
  s.row_strings({"c", csv::format(ridge.slope)});
  s.row_strings({"intercept", csv::format(ridge.intercept)});
  s.row_strings({"effective_cells", csv::format(ridge.effective_cells)});
  s.row_strings({"lambda_min", csv::format(grid.lambda_values.front())});
  s.row_strings({"lambda_max", csv::format(grid.lambda_values.back())});
  s.row_strings({"converged_cells", std::to_string(grid.converged_count())});
  s.row_strings({"cells", std::to_string(grid.loglik.size())});
  s.close();
  if (ridge.effective_cells < 3.0) {
    std::cerr << "warning: ridge weights concentrate on " << ridge.effective_cells
              << " effective cells; consider a finer grid\n";
  }
  std::cout << "c = " << ridge.slope << " (" << grid.converged_count() << "/"
            << grid.loglik.size() << " cells converged)\n";
}

std::map<std::string, double> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::map<std::string, double> out;
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = csv::split(line);
    if (f.size() < 2) continue;
    const auto v = csv::parse_double(f[1]);
    if (!v) throw UsageError(detail::concat(path, ":", line_no, ": bad value"));
    out[f[0]] = *v;
  }
  return out;
}

// ---------------------------------------------------------------- fit4

struct Fit4Options {
  DataOptions data;
  std::string out;
  std::optional<double> c;
  std::string profile_dir;
  std::optional<double> lambda_lo, lambda_hi;
  double prior_variance = 1e4;
  std::size_t iterations = 10000;
  std::size_t burn_in = 1000;
  std::uint64_t seed = 1;
  bool no_adapt = false;
};

void run_fit4(const Fit4Options& o) {
  if (!o.c && o.profile_dir.empty()) {
    throw UsageError("fit4 needs the ridge slope: pass --c or --profile-dir from a profile run");
  }
  prepare_out(o.out, {o.data.input});
  const LoadedData d = load_data(o.data);
  double c = o.c.value_or(0.0);
  double lo = -1.0, hi = 4.0;
  if (!o.profile_dir.empty()) {
    const auto kv = read_key_values(out_file(o.profile_dir, "profile_summary.csv"));
    if (!o.c) c = kv.at("c");
    lo = kv.at("lambda_min");
    hi = kv.at("lambda_max");
  }
  lo = o.lambda_lo.value_or(lo);
  hi = o.lambda_hi.value_or(hi);

  const ModelKind kind = sampling_kind(d.kind);
  const Fit3Result f = fit3_mle(d.series.values, kind);
  SamplerConfig cfg;
  cfg.iterations = o.iterations;
  cfg.burn_in = o.burn_in;
  cfg.seed = derive_seed(o.seed, 3);
  cfg.adapt = !o.no_adapt;
  cfg.step_scales = steps_from_fit(f);
  const PosteriorDraws draws =
      run_mcmc(d.series.values, d.kind, c, prior_from_fit(f, lo, hi, o.prior_variance), cfg);

  const std::string draws_path = out_file(o.out, "draws.csv");
  csv::Writer w(draws_path, {"iteration", "beta_x", "log_alpha_x", "gamma_x", "lambda", "beta_y",
                             "alpha_y", "gamma_y", "log_posterior"});
  for (std::size_t i = 0; i < draws.rows.size(); ++i) {
    const auto& r = draws.rows[i];
    w.row({static_cast<double>(i + 1), r.beta_x, r.log_alpha_x, r.gamma_x, r.lambda, r.beta_y,
           r.alpha_y, r.gamma_y, r.log_posterior});
  }
  w.close();
  {
    std::ofstream meta(meta_path(draws_path));
    meta << "c = " << csv::format(c) << '\n';
    meta << "kind = " << (is_threshold_kind(d.kind) ? "pp" : "gev") << '\n';
    if (const auto* pp = std::get_if<ThresholdExceedances>(&d.kind)) {
      meta << "threshold = " << csv::format(pp->threshold) << '\n';
    }
    meta << "likelihood_blocks = " << csv::format(draws.n_blocks) << '\n';
    meta << "report_blocks = " << csv::format(draws.report_blocks) << '\n';
  }

  const ChainSummary summary = chain_diagnostics(draws);
  csv::Writer s(out_file(o.out, "diagnostics.csv"),
                {"component", "mean", "sd", "q025", "q25", "median", "q75", "q975", "ess",
                 "acceptance"});
  for (const auto& comp : summary.components) {
    s.row_strings({comp.name, csv::format(comp.mean), csv::format(comp.sd), csv::format(comp.q025),
                   csv::format(comp.q25), csv::format(comp.median), csv::format(comp.q75),
                   csv::format(comp.q975), csv::format(comp.ess), csv::format(comp.acceptance)});
  }
  s.close();
  for (const auto& warn : summary.warnings) std::cerr << "warning: " << warn << '\n';
  std::cout << draws.rows.size() << " draws; acceptance " << draws.acceptance[0] << ", "
            << draws.acceptance[1] << ", " << draws.acceptance[2] << ", " << draws.acceptance[3]
            << '\n';
}

PosteriorDraws load_draws(const std::string& dir) {
  const std::string path = out_file(dir, "draws.csv");
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  PosteriorDraws d;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() < 9) throw UsageError(detail::concat(path, ":", line_no, ": expected 9 columns"));
    std::array<double, 8> v{};
    for (std::size_t k = 0; k < 8; ++k) {
      const auto x = csv::parse_double(f[k + 1]);
      if (!x) throw UsageError(detail::concat(path, ":", line_no, ": bad number"));
      v[k] = *x;
    }
    d.rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
  }
  std::ifstream meta(meta_path(path));
  if (!meta) throw UsageError("missing " + meta_path(path));
  std::map<std::string, std::string> kv;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[std::string(csv::trim(std::string_view(line).substr(0, eq)))] =
        std::string(csv::trim(std::string_view(line).substr(eq + 1)));
  }
  auto num = [&](const std::string& key) {
    const auto it = kv.find(key);
    const auto v = it == kv.end() ? std::nullopt : csv::parse_double(it->second);
    if (!v) throw UsageError("missing or bad '" + key + "' in " + meta_path(path));
    return *v;
  };
  d.c = num("c");
  d.n_blocks = num("likelihood_blocks");
  d.report_blocks = num("report_blocks");
  if (kv["kind"] == "pp") {
    d.kind = ThresholdExceedances{num("threshold"), std::nullopt};
  }
  if (d.rows.empty()) throw UsageError(path + " holds no draws");
  return d;
}

// ---------------------------------------------------------------- returns / qq

struct ReturnsOptions {
  std::string draws_dir;
  std::string out;
  std::vector<double> periods{2, 5, 10, 20, 50, 100, 200, 500, 1000};
  double level = 0.95;
  double blocks_per_unit = 1.0;
  bool svg = false;
};

void run_returns(const ReturnsOptions& o) {
  prepare_out(o.out, {out_file(o.draws_dir, "draws.csv")});
  const PosteriorDraws d = load_draws(o.draws_dir);
  std::vector<double> periods = o.periods;
  std::sort(periods.begin(), periods.end());
  // user units to blocks
  std::vector<double> blocks;
  for (double t : periods) blocks.push_back(t * o.blocks_per_unit);
  const auto table = return_level_table(d, blocks, o.level);
  csv::Writer w(out_file(o.out, "return_levels.csv"),
                {"period", "period_blocks", "median", "lo", "hi", "predictive"});
  for (std::size_t i = 0; i < table.size(); ++i) {
    w.row({periods[i], blocks[i], table[i].median, table[i].lo, table[i].hi,
           table[i].predictive});
  }
  w.close();
  if (o.svg) {
    SvgPlot plot("Return levels", "return period", "level");
    plot.set_log_x(true);
    std::vector<double> med, lo, hi, pred;
    for (const auto& s : table) {
      med.push_back(s.median);
      lo.push_back(s.lo);
      hi.push_back(s.hi);
      pred.push_back(s.predictive);
    }
    plot.add_intervals(periods, lo, hi);
    plot.add_points(periods, med);
    plot.add_line(periods, pred, "red");
    plot.write(out_file(o.out, "return_levels.svg"));
  }
}

struct QqOptions {
  std::string draws_dir;
  DataOptions data;
  std::string out;
  double level = 0.95;
  bool svg = false;
};

void run_qq(const QqOptions& o) {
  prepare_out(o.out, {o.data.input, out_file(o.draws_dir, "draws.csv")});
  const PosteriorDraws d = load_draws(o.draws_dir);
  DataOptions data = o.data;
  data.kind = "gev";
  std::vector<double> sorted = load_data(data).series.values;
  std::sort(sorted.begin(), sorted.end());
  const auto points = qq_data(d, sorted, o.level);
  csv::Writer w(out_file(o.out, "qq.csv"), {"empirical", "fitted_median", "lo", "hi"});
  std::vector<double> e, m, lo, hi;
  for (const auto& p : points) {
    w.row({p.empirical, p.fitted_median, p.lo, p.hi});
    e.push_back(p.empirical);
    m.push_back(p.fitted_median);
    lo.push_back(p.lo);
    hi.push_back(p.hi);
  }
  w.close();
  if (o.svg) {
    SvgPlot plot("QQ plot", "fitted quantile", "empirical quantile");
    std::vector<double> lo_x, hi_x;
    plot.add_line({m.front(), m.back()}, {m.front(), m.back()}, "grey", true);
    plot.add_points(m, e);
    plot.add_line(lo, e, "blue", true);
    plot.add_line(hi, e, "blue", true);
    plot.write(out_file(o.out, "qq.svg"));
  }
}

// ---------------------------------------------------------------- asymptotics

struct AsymptoticsOptions {
  std::string family = "truncated-normal";
  std::vector<double> params;
  std::vector<double> n_values{1e2, 1e3, 1e4, 1e5};
  std::optional<double> lambda;
  std::string out;
};

AnyParent make_family(const std::string& name, const std::vector<double>& p) {
  auto arg = [&](std::size_t i, double fallback) { return i < p.size() ? p[i] : fallback; };
  if (name == "truncated-normal") return TruncatedNormal{};
  if (name == "exponential") return Exponential(arg(0, 1.0));
  if (name == "weibull") return Weibull(arg(0, 2.0), arg(1, 1.0));
  if (name == "gamma") return Gamma(arg(0, 2.0), arg(1, 1.0));
  if (name == "pareto") return ParetoTail(arg(0, 2.0), arg(1, 1.0), arg(2, 1.0), arg(3, 0.0));
  if (name == "bounded") {
    return BoundedTail(arg(0, 2.0), arg(1, 2.0), arg(2, 1.0), arg(3, 0.5), arg(4, 1.0));
  }
  if (name == "hazard-power") return HazardPower(arg(0, 0.5), arg(1, 1.0));
  if (name == "log-pareto") return LogPareto(arg(0, 0.5), arg(1, 0.0), arg(2, 0.0));
  if (name == "gpd") return GeneralizedPareto(arg(0, 1.0), arg(1, 0.1));
  if (name == "gev") return GevParent(GevParams{arg(0, 0.0), arg(1, 1.0), arg(2, 0.1)});
  throw UsageError("unknown family " + name);
}

void run_asymptotics(const AsymptoticsOptions& o) {
  prepare_out(o.out, {});
  const AnyParent family = make_family(o.family, o.params);
  csv::Writer w(out_file(o.out, "asymptotics.csv"),
                {"family", "n", "b", "a", "xi_pen", "lambda", "xi_y_pen", "lambda_star",
                 "lambda_star_status", "lambda_star_series", "gap"});
  std::visit(
      [&](const auto& d) {
        const double lambda = o.lambda.value_or(d.table_lambda_star().value_or(1.0));
        const std::vector<double> grid = default_gap_grid();
        for (double n : o.n_values) {
          const NormingTriple t = norming_constants(d, n);
          const NormingTriple y = transform_norming(t, lambda);
          std::string ls, series, status = "none";
          const TailLimits lim = d.tail_limits();
          if (lim.shape && lim.ratio) {
            const LambdaStar s = lambda_star_at_level(d, t.b);
            ls = csv::format(s.value);
            if constexpr (std::is_same_v<std::decay_t<decltype(d)>, TruncatedNormal>) {
              series = csv::format(truncated_normal_series_lambda_star(t.b).value);
            }
            status = s.status == LambdaStarStatus::ok        ? "ok"
                     : s.status == LambdaStarStatus::no_limit ? "no_limit"
                                                              : "no_improvement";
          }
          w.row_strings({d.name(), csv::format(n), csv::format(t.b), csv::format(t.a),
                         csv::format(t.xi_pen), csv::format(lambda), csv::format(y.xi_pen), ls,
                         status, series, csv::format(convergence_gap(d, n, lambda, grid))});
        }
      },
      family);
  w.close();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extreme value inference with a Box-Cox scale parameter"};
  app.set_config("--config", "", "Read options from an INI/TOML file (flags override it)");
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Simulate point-process or truncated-normal data")->configurable();
  s->add_option("--design", sim.design, "pp, truncated-normal or gev")
      ->check(CLI::IsMember({"pp", "truncated-normal", "gev"}))
      ->capture_default_str();
  s->add_option("--out", sim.out, "Output directory")->required();
  s->add_option("--seed", sim.seed)->capture_default_str();
  s->add_option("--location", sim.location)->capture_default_str();
  s->add_option("--scale", sim.scale)->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--shape", sim.shape)->capture_default_str();
  s->add_option("--blocks", sim.blocks, "Blocks N_B for the pp design")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  s->add_option("--intensity", sim.intensity, "Expected number of pp points")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  s->add_flag("--fixed-count", sim.fixed_count, "Use the expected count instead of Poisson");
  s->add_flag("--square", sim.square, "Square all output values (and thresholds)");
  s->add_option("--n", sim.n, "Sample size for truncated-normal/gev")->capture_default_str();
  s->add_option("--block-length", sim.block_length)->capture_default_str()->check(
      CLI::PositiveNumber);
  s->add_option("--k", sim.k, "Points kept in largest_k.csv")->capture_default_str()->check(
      CLI::PositiveNumber);
  s->footer(
      "Writes (pp) exceedances.csv with a .meta sidecar, block_maxima.csv, largest_k.csv,\n"
      "low_threshold.csv; (truncated-normal) series.csv plus the same three subsets;\n"
      "(gev) series.csv. Every file has one header row; see docs/FORMATS.md.");

  Fit3Options f3;
  auto* f3c = app.add_subcommand("fit3", "Three-parameter maximum-likelihood fit")->configurable();
  add_data_options(f3c, f3.data);
  f3c->add_option("--out", f3.out)->required();
  f3c->footer("Writes fit3.csv: parameter,estimate,std_error (rows location, scale, shape, loglik).");

  ProfileOptions pr;
  auto* prc = app.add_subcommand("profile", "Profile likelihood grid over (gamma_Y, lambda)")->configurable();
  add_data_options(prc, pr.data);
  prc->add_option("--out", pr.out)->required();
  prc->add_option("--gamma-points", pr.grid.gamma_points)->capture_default_str();
  prc->add_option("--lambda-points", pr.grid.lambda_points)->capture_default_str();
  prc->add_option("--lambda-min", pr.grid.lambda_min)->capture_default_str();
  prc->add_option("--lambda-max", pr.grid.lambda_max)->capture_default_str();
  prc->add_option("--gamma-se", pr.grid.gamma_halfwidth_se, "Gamma half-width in standard errors")
      ->capture_default_str();
  prc->add_option("--gamma-min", pr.gamma_min, "Explicit gamma axis start");
  prc->add_option("--gamma-max", pr.gamma_max, "Explicit gamma axis end");
  prc->footer(
      "Writes grid.csv: gamma,lambda,loglik,converged; profile_summary.csv: key,value\n"
      "(c, intercept, effective_cells, lambda_min, lambda_max, converged_cells, cells); fit3.csv.");

  Fit4Options f4;
  auto* f4c = app.add_subcommand("fit4", "Four-parameter MCMC at a fixed ridge slope c")->configurable();
  add_data_options(f4c, f4.data);
  f4c->add_option("--out", f4.out)->required();
  f4c->add_option("--c", f4.c, "Ridge slope c");
  f4c->add_option("--profile-dir", f4.profile_dir,
                  "Output directory of a profile run (supplies c and the lambda range)");
  f4c->add_option("--lambda-lo", f4.lambda_lo, "Lower end of the uniform lambda prior");
  f4c->add_option("--lambda-hi", f4.lambda_hi,
                  "Upper end of the uniform lambda prior (equal ends pin lambda)");
  f4c->add_option("--prior-variance", f4.prior_variance)->capture_default_str()->check(
      CLI::PositiveNumber);
  f4c->add_option("--iterations", f4.iterations)->capture_default_str()->check(
      CLI::PositiveNumber);
  f4c->add_option("--burn-in", f4.burn_in)->capture_default_str();
  f4c->add_option("--seed", f4.seed)->capture_default_str();
  f4c->add_flag("--no-adapt", f4.no_adapt, "Keep the initial proposal scales during burn-in");
  f4c->footer(
      "Writes draws.csv: iteration,beta_x,log_alpha_x,gamma_x,lambda,beta_y,alpha_y,gamma_y,\n"
      "log_posterior with a .meta sidecar; diagnostics.csv: component,mean,sd,q025,q25,median,\n"
      "q75,q975,ess,acceptance.");

  ReturnsOptions rt;
  auto* rtc = app.add_subcommand("returns", "Return-level table from fit4 draws")->configurable();
  rtc->add_option("--draws-dir", rt.draws_dir, "Output directory of a fit4 run")
      ->required()
      ->check(CLI::ExistingDirectory);
  rtc->add_option("--out", rt.out)->required();
  rtc->add_option("--periods", rt.periods, "Return periods in user units")->capture_default_str();
  rtc->add_option("--level", rt.level, "Credible interval level")->capture_default_str()->check(
      CLI::Range(0.0, 1.0));
  rtc->add_option("--blocks-per-unit", rt.blocks_per_unit,
                  "Blocks per user time unit (e.g. blocks per winter)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  rtc->add_flag("--svg", rt.svg, "Also write return_levels.svg");
  rtc->footer("Writes return_levels.csv: period,period_blocks,median,lo,hi,predictive.");

  QqOptions qq;
  auto* qqc = app.add_subcommand("qq", "QQ table of data against fit4 draws")->configurable();
  qqc->add_option("--draws-dir", qq.draws_dir, "Output directory of a fit4 run")
      ->required()
      ->check(CLI::ExistingDirectory);
  add_data_options(qqc, qq.data, false);
  qqc->add_option("--out", qq.out)->required();
  qqc->add_option("--level", qq.level)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  qqc->add_flag("--svg", qq.svg, "Also write qq.svg");
  qqc->footer("Writes qq.csv: empirical,fitted_median,lo,hi at plotting positions i/(m+1).");

  AsymptoticsOptions as;
  auto* asc = app.add_subcommand("asymptotics", "Norming constants, penultimate shapes, gaps")->configurable();
  asc->add_option("--family", as.family)
      ->check(CLI::IsMember({"truncated-normal", "exponential", "weibull", "gamma", "pareto",
                             "bounded", "hazard-power", "log-pareto", "gpd", "gev"}))
      ->capture_default_str();
  asc->add_option("--params", as.params, "Family parameters in constructor order");
  asc->add_option("--n", as.n_values, "Block sizes")->capture_default_str();
  asc->add_option("--lambda", as.lambda, "Box-Cox parameter (default: the family's limiting optimum, else 1)");
  asc->add_option("--out", as.out)->required();
  asc->footer(
      "Writes asymptotics.csv: family,n,b,a,xi_pen,lambda,xi_y_pen,lambda_star,\n"
      "lambda_star_status,lambda_star_series (truncated normal only),gap.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    std::string out;
    const CLI::App* ran = app.get_subcommands().front();
    if (*s) {
      run_simulate(sim);
      out = sim.out;
    } else if (*f3c) {
      run_fit3(f3);
      out = f3.out;
    } else if (*prc) {
      run_profile(pr);
      out = pr.out;
    } else if (*f4c) {
      run_fit4(f4);
      out = f4.out;
    } else if (*rtc) {
      run_returns(rt);
      out = rt.out;
    } else if (*qqc) {
      run_qq(qq);
      out = qq.out;
    } else if (*asc) {
      run_asymptotics(as);
      out = as.out;
    }
    write_manifest(ran, out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
