// ratefield command line: simulate / fit / sample / analyze / indirect / sigma-scan
//
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure,
// 4 non-convergence.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ratefield/indirect.hpp"
#include "ratefield/io.hpp"
#include "ratefield/local_linear.hpp"
#include "ratefield/manifest.hpp"
#include "ratefield/ml_solver.hpp"
#include "ratefield/perturbative.hpp"
#include "ratefield/sigma.hpp"
#include "ratefield/spde_sampler.hpp"
#include "ratefield/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ratefield;

namespace {

struct Common {
  std::string out_dir = "out";
  std::uint64_t seed = 20240101;
  double sigma = 0.1;
  Index grid_steps = 30000;
  double t_end = 300.0;
  double tolerance = -1.0;
};

void ensure_out_dir(const std::string& dir) {
  if (!fs::exists(dir)) {
    fs::create_directories(dir);
    std::cerr << "[ratefield] created output directory " << dir << "\n";
  }
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

json moments_json(const MomentSet& m) {
  return json{{"mean", m.mean},
              {"variance", m.variance},
              {"third_about_zero", m.third_raw},
              {"fourth_about_zero", m.fourth_raw},
              {"central_third", m.central_third()},
              {"central_fourth", m.central_fourth()},
              {"excess_kurtosis", m.excess_kurtosis()},
              {"se_mean", m.se_mean},
              {"se_variance", m.se_variance},
              {"se_third", m.se_third},
              {"se_fourth", m.se_fourth}};
}

DriftMode parse_drift_mode(const std::string& name) {
  if (name == "full-nonlinear") return DriftMode::FullNonlinear;
  if (name == "linearized") return DriftMode::Linearized;
  if (name == "flat-coefficient") return DriftMode::FlatCoefficient;
  throw CLI::ValidationError("--drift-mode", "unknown mode " + name);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Common& c, double s0, bool with_mentions, double lambda0,
                 Index n_people, const std::vector<std::string>& argv) {
  ensure_out_dir(c.out_dir);
  RunManifest manifest("simulate", argv);
  manifest.set_seed(c.seed);
  manifest.set_param("sigma", c.sigma);
  manifest.set_param("t_end", c.t_end);
  manifest.set_param("grid_steps", c.grid_steps);
  manifest.set_param("s0", s0);

  const TimeGrid grid = make_grid(c.t_end, c.grid_steps);
  const LogRatePath truth =
      simulate_gbm_log(s0, c.sigma, grid, RngSeed{c.seed});
  const SpikeTrain spikes = simulate_spikes(truth, substream(RngSeed{c.seed}, 1));

  const std::string truth_file = join(c.out_dir, "truth.csv");
  const std::string spikes_file = join(c.out_dir, "spikes.csv");
  write_path_csv(truth_file, truth);
  write_spikes_csv(spikes_file, spikes);
  manifest.add_output(truth_file);
  manifest.add_output(spikes_file);
  std::cout << "simulate: " << spikes.count() << " events on [0, " << c.t_end << "]\n";

  if (with_mentions) {
    manifest.set_param("lambda", lambda0);
    manifest.set_param("n_people", n_people);
    LogRatePath lam(grid, Eigen::VectorXd::Constant(grid.nodes(), std::log(lambda0)));
    const auto records =
        simulate_mentions(truth, lam, n_people, substream(RngSeed{c.seed}, 2));
    const std::string mention_file = join(c.out_dir, "mentions.csv");
    write_mentions_csv(mention_file, records);
    manifest.add_output(mention_file);
    std::cout << "simulate: " << records.size() << " mention records\n";
  }
  manifest.write(join(c.out_dir, "manifest_simulate.json"));
  return 0;
}

int cmd_fit(const Common& c, const std::string& spikes_file,
            const std::vector<std::string>& argv) {
  ensure_out_dir(c.out_dir);
  RunManifest manifest("fit", argv);
  manifest.set_param("sigma", c.sigma);
  manifest.set_param("t_end", c.t_end);
  manifest.set_param("grid_steps", c.grid_steps);
  manifest.add_input(spikes_file);

  const SpikeTrain spikes = read_spikes_csv(spikes_file);
  const TimeGrid grid = make_grid(c.t_end, c.grid_steps);
  SolverOptions opts;
  if (c.tolerance > 0.0) opts.tol_grad = c.tolerance;
  const MLResult res = solve_ml(spikes, ModelParams{c.sigma}, grid, opts);

  const std::string path_file = join(c.out_dir, "ml_path.csv");
  write_path_csv(path_file, res.path);
  manifest.add_output(path_file);

  json report{{"iterations", res.iterations},
              {"final_grad_norm", res.final_grad_norm},
              {"compatibility_residual", res.compatibility_residual},
              {"converged", res.converged},
              {"events", spikes.count()}};
  const std::string report_file = join(c.out_dir, "fit_report.json");
  std::ofstream(report_file) << report.dump(2) << "\n";
  manifest.add_output(report_file);
  manifest.write(join(c.out_dir, "manifest_fit.json"));
  std::cout << "fit: converged in " << res.iterations << " iterations, |grad| = "
            << res.final_grad_norm << ", compatibility residual = "
            << res.compatibility_residual << "\n";
  return 0;
}

int cmd_sample(const Common& c, const std::string& ml_file, SamplerOptions sopts,
               int bins, const std::vector<std::string>& argv) {
  ensure_out_dir(c.out_dir);
  RunManifest manifest("sample", argv);
  manifest.set_seed(sopts.seed.value);
  manifest.set_param("sigma", c.sigma);
  manifest.add_input(ml_file);

  const LogRatePath s_star = read_path_csv(ml_file);
  const SampleSet set = sample(s_star, ModelParams{c.sigma}, sopts);

  Eigen::MatrixXd table(set.marginals.rows(), set.marginals.cols());
  table = set.marginals;
  std::vector<std::string> cols;
  for (Index node : set.tracked_nodes) cols.push_back("x" + std::to_string(node));
  const std::string marg_file = join(c.out_dir, "marginals.csv");
  write_table_csv(marg_file, cols, table);
  manifest.add_output(marg_file);

  json moments = json::object();
  for (Index node : set.tracked_nodes) {
    const MomentSet m = moment_estimates(set, node);
    moments[std::to_string(node)] = moments_json(m);
    moments[std::to_string(node)]["ess"] = set.ess[set.column_of(node)];
    moments[std::to_string(node)]["exp_x_mean"] = set.exp_x_mean[set.column_of(node)];
    moments[std::to_string(node)]["exp_x_se"] = set.exp_x_se[set.column_of(node)];
  }
  const std::string mom_file = join(c.out_dir, "moments.json");
  std::ofstream(mom_file) << moments.dump(2) << "\n";
  manifest.add_output(mom_file);

  const Index node0 = set.tracked_nodes.front();
  const double alpha = std::exp(s_star[node0]);
  const double y2 = c.sigma / (2.0 * std::sqrt(alpha));
  const HistogramTable hist = marginal_histogram(set, node0, bins, y2);
  const std::string hist_file = join(c.out_dir, "histogram.csv");
  write_histogram_csv(hist_file, hist);
  manifest.add_output(hist_file);

  json run{{"du", set.du},
           {"burn_in", set.burn_in},
           {"thinning", set.thinning},
           {"chains", set.n_chains},
           {"samples", set.marginals.rows()}};
  const std::string run_file = join(c.out_dir, "sampler_report.json");
  std::ofstream(run_file) << run.dump(2) << "\n";
  manifest.add_output(run_file);
  manifest.write(join(c.out_dir, "manifest_sample.json"));
  std::cout << "sample: " << set.marginals.rows() << " retained samples, du = "
            << set.du << "\n";
  return 0;
}

int cmd_analyze(const Common& c, const std::string& ml_file, Index node,
                double half_width_corr, const std::vector<std::string>& argv) {
  ensure_out_dir(c.out_dir);
  RunManifest manifest("analyze", argv);
  manifest.set_param("sigma", c.sigma);
  manifest.set_param("node", node);
  manifest.add_input(ml_file);

  const LogRatePath s_star = read_path_csv(ml_file);
  if (node < 0) node = s_star.size() / 2;
  const LocalCoeff coeff{std::exp(s_star[node]), c.sigma};
  const GaussianMarginal lin = marginal(coeff);
  const double y2 = lin.variance;
  const double half_width = half_width_corr * lin.correlation_time;

  const ShapeDeviation f = shape_from_path(s_star, node, half_width);
  MomentSet m = nonlinearity_moments(y2);
  const double var_corrected = y2 + variance_correction(f, coeff);
  const double mean_corrected = mean_correction(f, coeff);
  m.mean = mean_corrected;
  m.variance = var_corrected;

  json report{{"node", node},
              {"alpha", coeff.alpha},
              {"y2", y2},
              {"correlation_time", lin.correlation_time},
              {"validity_ratio", lin.validity_ratio},
              {"regime_warning", lin.regime_warning},
              {"moments", moments_json(m)},
              {"variance_correction", var_corrected - y2},
              {"mean_correction", mean_corrected}};
  const std::string report_file = join(c.out_dir, "analyze_report.json");
  std::ofstream(report_file) << report.dump(2) << "\n";
  manifest.add_output(report_file);

  // kernel tables over the window
  const Index n_tab = 201;
  Eigen::MatrixXd jtab(n_tab, 2);
  for (Index k = 0; k < n_tab; ++k) {
    const double t = -half_width + 2.0 * half_width * k / (n_tab - 1);
    jtab(k, 0) = t;
    jtab(k, 1) = detail::kernel_J_tabulated(t, coeff);
  }
  const std::string j_file = join(c.out_dir, "kernel_j.csv");
  write_table_csv(j_file, {"t", "value"}, jtab);
  manifest.add_output(j_file);

  const Index n_k = 61;
  Eigen::MatrixXd ktab(n_k * n_k, 3);
  for (Index a = 0; a < n_k; ++a)
    for (Index b = 0; b < n_k; ++b) {
      const double t = -half_width + 2.0 * half_width * a / (n_k - 1);
      const double t2 = -half_width + 2.0 * half_width * b / (n_k - 1);
      ktab(a * n_k + b, 0) = t;
      ktab(a * n_k + b, 1) = t2;
      ktab(a * n_k + b, 2) = detail::kernel_K_tabulated(t, t2, coeff);
    }
  const std::string k_file = join(c.out_dir, "kernel_k.csv");
  write_table_csv(k_file, {"t", "t2", "value"}, ktab);
  manifest.add_output(k_file);

  const EdgeworthDensity density(m);
  const Index n_x = 401;
  Eigen::MatrixXd dens(n_x, 2);
  for (Index k = 0; k < n_x; ++k) {
    const double x =
        density.window_lo() +
        (density.window_hi() - density.window_lo()) * k / (n_x - 1);
    dens(k, 0) = x;
    dens(k, 1) = density(x);
  }
  const std::string dens_file = join(c.out_dir, "edgeworth.csv");
  write_table_csv(dens_file, {"x", "density"}, dens);
  manifest.add_output(dens_file);

  manifest.write(join(c.out_dir, "manifest_analyze.json"));
  std::cout << "analyze: node " << node << ", alpha = " << coeff.alpha
            << ", variance correction = " << var_corrected - y2 << "\n";
  return 0;
}

int cmd_indirect(const Common& c, const std::string& records_file, double lambda0,
                 const std::string& lambda_csv, bool sigma_scan, Index n_samples,
                 int chains, const std::vector<std::string>& argv) {
  ensure_out_dir(c.out_dir);
  RunManifest manifest("indirect", argv);
  manifest.set_seed(c.seed);
  manifest.set_param("sigma", c.sigma);
  manifest.set_param("t_end", c.t_end);
  manifest.set_param("grid_steps", c.grid_steps);
  manifest.add_input(records_file);

  const TimeGrid grid = make_grid(c.t_end, c.grid_steps);
  Eigen::VectorXd lambda;
  if (!lambda_csv.empty()) {
    manifest.add_input(lambda_csv);
    const LogRatePath lam_path = read_path_csv(lambda_csv);
    require_same_grid(lam_path.grid(), grid, "indirect --lambda-csv");
    lambda = lam_path.values();  // stored directly in rate units
  } else {
    lambda = Eigen::VectorXd::Constant(grid.nodes(), lambda0);
    manifest.set_param("lambda", lambda0);
  }
  const IndirectData data(read_mentions_csv(records_file), lambda, grid);

  double sigma_use = c.sigma;
  if (sigma_scan) {
    const Eigen::VectorXd sg = default_sigma_grid();
    const SigmaScan scan = sigma_posterior_indirect(sg, data);
    Eigen::MatrixXd rows(sg.size(), 3);
    rows.col(0) = scan.sigma_grid;
    rows.col(1) = scan.log_evidence;
    rows.col(2) = scan.weights;
    const std::string scan_file = join(c.out_dir, "sigma_scan.csv");
    write_table_csv(scan_file, {"sigma", "log_evidence", "weight"}, rows);
    manifest.add_output(scan_file);
    sigma_use = scan.map_sigma();
    std::cout << "indirect: sigma scan MAP = " << sigma_use << "\n";
  }

  const ModelParams params{sigma_use};
  const IndirectMLResult ml = solve_ml_indirect(data, params);
  const std::string ml_file = join(c.out_dir, "indirect_ml_path.csv");
  write_path_csv(ml_file, ml.path);
  manifest.add_output(ml_file);

  SamplerOptions sopts;
  sopts.seed = RngSeed{c.seed};
  sopts.n_samples = n_samples;
  sopts.n_chains = chains;
  const SampleSet set = sample_indirect(data, params, sopts);

  // pointwise mean and central 95% band of the rate exp(s)
  const Index nn = grid.nodes();
  Eigen::MatrixXd band(nn, 4);
  std::vector<double> column(set.paths.rows());
  for (Index j = 0; j < nn; ++j) {
    for (Index r = 0; r < set.paths.rows(); ++r)
      column[static_cast<size_t>(r)] = set.paths(r, j);
    std::sort(column.begin(), column.end());
    const auto quant = [&](double q) {
      const double pos = q * static_cast<double>(column.size() - 1);
      const size_t k = static_cast<size_t>(pos);
      const double fr = pos - static_cast<double>(k);
      return column[k] +
             fr * (column[std::min(k + 1, column.size() - 1)] - column[k]);
    };
    band(j, 0) = grid.time_at(j);
    band(j, 1) = std::exp(quant(0.025));
    band(j, 2) = std::exp(Eigen::Map<Eigen::VectorXd>(column.data(),
                                                      static_cast<Index>(column.size()))
                              .mean());
    band(j, 3) = std::exp(quant(0.975));
  }
  const std::string band_file = join(c.out_dir, "posterior_band.csv");
  write_table_csv(band_file, {"time", "lower", "mean", "upper"}, band);
  manifest.add_output(band_file);

  json report{{"records", data.records.size()},
              {"sigma", sigma_use},
              {"ml_iterations", ml.iterations},
              {"ml_grad_norm", ml.final_grad_norm},
              {"multistart_disagreement", ml.multistart_disagreement},
              {"du", set.du},
              {"samples", set.paths.rows()}};
  const std::string report_file = join(c.out_dir, "indirect_report.json");
  std::ofstream(report_file) << report.dump(2) << "\n";
  manifest.add_output(report_file);
  manifest.write(join(c.out_dir, "manifest_indirect.json"));
  std::cout << "indirect: " << data.records.size() << " records, band written\n";
  return 0;
}

int cmd_sigma_scan(const Common& c, const std::string& spikes_file, double sig_lo,
                   double sig_hi, Index sig_count,
                   const std::vector<std::string>& argv) {
  ensure_out_dir(c.out_dir);
  RunManifest manifest("sigma-scan", argv);
  manifest.set_param("t_end", c.t_end);
  manifest.set_param("grid_steps", c.grid_steps);
  manifest.add_input(spikes_file);

  const SpikeTrain spikes = read_spikes_csv(spikes_file);
  const TimeGrid grid = make_grid(c.t_end, c.grid_steps);

  Eigen::VectorXd sg(sig_count);
  for (Index k = 0; k < sig_count; ++k)
    sg[k] = std::exp(std::log(sig_lo) + (std::log(sig_hi) - std::log(sig_lo)) *
                                            static_cast<double>(k) /
                                            static_cast<double>(sig_count - 1));
  const SigmaScan scan = sigma_posterior(sg, spikes, grid);

  Eigen::MatrixXd rows(sg.size(), 3);
  rows.col(0) = scan.sigma_grid;
  rows.col(1) = scan.log_evidence;
  rows.col(2) = scan.weights;
  const std::string scan_file = join(c.out_dir, "sigma_scan.csv");
  write_table_csv(scan_file, {"sigma", "log_evidence", "weight"}, rows);
  manifest.add_output(scan_file);

  const auto [lo, hi] = scan.credible_interval(0.95);
  json summary{{"map_sigma", scan.map_sigma()},
               {"mean_sigma", scan.mean_sigma()},
               {"ci_lower", lo},
               {"ci_upper", hi}};
  const std::string summary_file = join(c.out_dir, "sigma_summary.json");
  std::ofstream(summary_file) << summary.dump(2) << "\n";
  manifest.add_output(summary_file);
  manifest.write(join(c.out_dir, "manifest_sigma_scan.json"));
  std::cout << "sigma-scan: MAP = " << scan.map_sigma() << ", mean = "
            << scan.mean_sigma() << ", 95% CI = [" << lo << ", " << hi << "]\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"ratefield: time-dependent event-rate inference"};
  app.require_subcommand(1);

  Common c;
  app.add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", c.seed, "master RNG seed")->capture_default_str();
  app.add_option("--sigma", c.sigma, "log-rate volatility")->capture_default_str();
  app.add_option("--grid-steps", c.grid_steps, "number of grid intervals")
      ->capture_default_str();
  app.add_option("--t-end", c.t_end, "observation window length")
      ->capture_default_str();
  app.add_option("--tolerance", c.tolerance, "solver gradient tolerance");

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate truth, spikes, mentions");
  double s0 = 0.0, lambda0 = 2.0;
  Index n_people = 300;
  bool with_mentions = false;
  sim->add_option("--s0", s0, "initial log rate")->capture_default_str();
  sim->add_flag("--mentions", with_mentions, "also simulate mention records");
  sim->add_option("--lambda", lambda0, "constant mention rate")->capture_default_str();
  sim->add_option("--n-people", n_people, "simulated individuals")
      ->capture_default_str();

  // fit
  auto* fit = app.add_subcommand("fit", "maximum-likelihood path from spikes");
  std::string spikes_file;
  fit->add_option("--spikes", spikes_file, "spike CSV (column: time)")->required();

  // sample
  auto* smp = app.add_subcommand("sample", "Langevin posterior fluctuations");
  std::string ml_file, drift_mode = "full-nonlinear", track_spec;
  SamplerOptions sopts;
  int bins = 41, chains = 1;
  double du = 0.0, burn_in = -1.0, thinning = -1.0, flat_alpha = 0.0;
  Index n_samples = 20000;
  smp->add_option("--ml-path", ml_file, "s* CSV from fit")->required();
  smp->add_option("--du", du, "fictitious-time step");
  smp->add_option("--burn-in", burn_in, "burn-in fictitious time");
  smp->add_option("--samples", n_samples, "retained samples")->capture_default_str();
  smp->add_option("--thinning", thinning, "fictitious time between samples");
  smp->add_option("--chains", chains, "independent chains")->capture_default_str();
  smp->add_option("--drift-mode", drift_mode,
                  "full-nonlinear | linearized | flat-coefficient")
      ->capture_default_str();
  smp->add_option("--flat-alpha", flat_alpha, "coefficient for flat-coefficient mode");
  smp->add_option("--track", track_spec, "comma-separated node indices to track");
  smp->add_option("--bins", bins, "histogram bins")->capture_default_str();

  // analyze
  auto* ana = app.add_subcommand("analyze", "perturbative corrections at a node");
  std::string ana_ml;
  Index node = -1;
  double half_width_corr = 10.0;
  ana->add_option("--ml-path", ana_ml, "s* CSV from fit")->required();
  ana->add_option("--node", node, "grid node (default: center)");
  ana->add_option("--half-width", half_width_corr,
                  "window half width in correlation times")
      ->capture_default_str();

  // indirect
  auto* ind = app.add_subcommand("indirect", "survival-likelihood inference");
  std::string records_file, lambda_csv;
  double ind_lambda = 2.0;
  bool do_scan = false;
  Index ind_samples = 4000;
  int ind_chains = 2;
  ind->add_option("--records", records_file, "mention pairs CSV (columns: i,f)")
      ->required();
  ind->add_option("--lambda", ind_lambda, "constant mention rate")
      ->capture_default_str();
  ind->add_option("--lambda-csv", lambda_csv, "mention rate path CSV (time,value)");
  ind->add_flag("--sigma-scan", do_scan, "choose sigma by evidence scan");
  ind->add_option("--samples", ind_samples, "retained posterior paths")
      ->capture_default_str();
  ind->add_option("--chains", ind_chains, "independent chains")->capture_default_str();

  // sigma-scan
  auto* scan = app.add_subcommand("sigma-scan", "evidence over a sigma grid");
  std::string scan_spikes;
  double sig_lo = 0.01, sig_hi = 1.0;
  Index sig_count = 16;
  scan->add_option("--spikes", scan_spikes, "spike CSV")->required();
  scan->add_option("--sigma-min", sig_lo, "grid lower end")->capture_default_str();
  scan->add_option("--sigma-max", sig_hi, "grid upper end")->capture_default_str();
  scan->add_option("--sigma-count", sig_count, "grid points")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(c, s0, with_mentions, lambda0, n_people, args);
    if (*fit) return cmd_fit(c, spikes_file, args);
    if (*smp) {
      sopts.du = du;
      sopts.burn_in = burn_in;
      sopts.thinning = thinning;
      sopts.n_samples = n_samples;
      sopts.n_chains = chains;
      sopts.seed = RngSeed{c.seed};
      sopts.drift_mode = parse_drift_mode(drift_mode);
      sopts.flat_alpha = flat_alpha;
      if (!track_spec.empty()) {
        std::stringstream ss(track_spec);
        std::string tok;
        while (std::getline(ss, tok, ','))
          sopts.track_nodes.push_back(std::stol(tok));
      }
      return cmd_sample(c, ml_file, sopts, bins, args);
    }
    if (*ana) return cmd_analyze(c, ana_ml, node, half_width_corr, args);
    if (*ind)
      return cmd_indirect(c, records_file, ind_lambda, lambda_csv, do_scan,
                          ind_samples, ind_chains, args);
    if (*scan) return cmd_sigma_scan(c, scan_spikes, sig_lo, sig_hi, sig_count, args);
  } catch (const NonConvergence& e) {
    std::cerr << "error (non-convergence): " << e.what() << "\n";
    return 4;
  } catch (const InvalidArgument& e) {
    std::cerr << "error (usage): " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error (numerical): " << e.what() << "\n";
    return 3;
  }
  return 2;
}
