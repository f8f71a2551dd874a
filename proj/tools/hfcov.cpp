#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hfcov/arvm.hpp"
#include "hfcov/config.hpp"
#include "hfcov/csv.hpp"
#include "hfcov/harness.hpp"
#include "hfcov/panel.hpp"
#include "hfcov/regularize.hpp"
#include "hfcov/simulate.hpp"
#include "json.hpp"

using namespace hfcov;

namespace {

// "-" or empty writes to stdout.
void with_output(const std::string& path, const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write(out);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

VolMatrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string first;
  std::getline(in, first);
  in.seekg(0);
  if (first.starts_with("#")) return read_sparse_triplets(in, MatrixKind::arvm);
  return read_dense_csv(in, MatrixKind::arvm);
}

void write_matrix(const VolMatrix& m, const std::string& path, bool sparse) {
  with_output(path, [&](std::ostream& out) {
    if (sparse) write_sparse_triplets(m, out);
    else write_dense_csv(m, out);
  });
}

int fail(const std::string& type, const std::string& message, int code) {
  nlohmann::json j;
  j["error"] = message;
  j["type"] = type;
  std::cerr << j.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hfcov: large integrated volatility matrices from noisy high-frequency data"};
  app.require_subcommand(1);
  std::function<void()> action;

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a panel and its integrated volatility matrix");
  std::string sim_config;
  std::string sim_panel = "panel.csv";
  std::string sim_truth = "truth.csv";
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::uint64_t> sim_rep;
  std::optional<std::size_t> sim_p;
  std::optional<long> sim_n;
  std::optional<double> sim_kappa0;
  std::optional<std::string> sim_noise;
  std::optional<std::string> sim_sync;
  bool sim_print_config = false;
  sim->add_option("--config", sim_config, "JSON config file")->check(CLI::ExistingFile);
  sim->add_option("--panel", sim_panel, "output panel CSV")->capture_default_str();
  sim->add_option("--truth", sim_truth, "output truth matrix CSV")->capture_default_str();
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--repetition", sim_rep, "repetition index");
  sim->add_option("--p", sim_p, "number of assets");
  sim->add_option("--n", sim_n, "observations per asset");
  sim->add_option("--kappa0", sim_kappa0, "initial correlation decay");
  sim->add_option("--noise", sim_noise, "low|medium|high");
  sim->add_option("--sync", sim_sync, "synchronized|nonsynchronized");
  sim->add_flag("--print-config", sim_print_config, "echo the effective config as JSON on stderr");
  sim->callback([&] {
    action = [&] {
      SimConfig cfg = sim_config.empty() ? SimConfig{} : parse_sim_config(read_text_file(sim_config));
      if (sim_seed) cfg.seed = *sim_seed;
      if (sim_rep) cfg.repetition = *sim_rep;
      if (sim_p) cfg.p = *sim_p;
      if (sim_n) cfg.n = *sim_n;
      if (sim_kappa0) cfg.kappa0 = *sim_kappa0;
      if (sim_noise) cfg.noise_level = parse_noise_level(*sim_noise);
      if (sim_sync) cfg.sync_mode = parse_sync_mode(*sim_sync);
      if (sim_print_config) std::cerr << dump_sim_config(cfg) << '\n';
      const Scenario sc = simulate_scenario(cfg);
      with_output(sim_panel, [&](std::ostream& out) { write_panel(sc.panel, out); });
      write_matrix(sc.truth, sim_truth, false);
    };
  });

  // estimate
  auto* est = app.add_subcommand("estimate", "ARVM estimate from a tick panel");
  std::string est_panel;
  std::string est_out;
  std::string est_noise;
  std::string est_diag;
  std::optional<long> est_m;
  std::optional<long> est_K;
  std::vector<double> est_session;
  bool est_sparse = false;
  est->add_option("panel", est_panel, "panel CSV (asset_id,time,log_price)")->required()->check(CLI::ExistingFile);
  auto* opt_m = est->add_option("--m", est_m, "grid size per class");
  auto* opt_K = est->add_option("--K", est_K, "number of grid classes (m = floor(n/K))");
  opt_m->excludes(opt_K);
  est->add_option("--out,-o", est_out, "output matrix CSV (default stdout)");
  est->add_option("--noise-out", est_noise, "write per-asset noise variance estimates");
  est->add_option("--diagnostics", est_diag, "write panel diagnostics CSV");
  est->add_option("--session", est_session, "raw session open and close; times are mapped to [0,1]")->expected(2);
  est->add_flag("--sparse", est_sparse, "write sparse triplets instead of dense CSV");
  est->callback([&] {
    action = [&] {
      if (!est_m && !est_K) throw std::invalid_argument("one of --m or --K is required");
      LoadOptions opts;
      if (!est_session.empty()) opts.session = SessionMapping{est_session[0], est_session[1]};
      const Panel panel = load_panel(est_panel, opts);
      const long n = panel.avg_sample_size();
      const long m = est_m ? *est_m : grid_size_for_classes(n, *est_K);
      if (!est_diag.empty()) {
        const auto diag = validate_panel(panel, make_grids(n, m));
        with_output(est_diag, [&](std::ostream& out) { write_diagnostics_csv(diag, out); });
      }
      const ArvmEstimate e = arvm_estimate(panel, m);
      write_matrix(e.matrix, est_out, est_sparse);
      if (!est_noise.empty()) with_output(est_noise, [&](std::ostream& out) { write_noise_csv(e.noise, out); });
    };
  });

  // regularize
  auto* reg = app.add_subcommand("regularize", "band or threshold a matrix");
  std::string reg_in;
  std::string reg_out;
  std::optional<long> reg_band;
  std::optional<double> reg_threshold;
  std::optional<double> reg_quantile;
  bool reg_keep_diag = false;
  bool reg_sparse = false;
  reg->add_option("matrix", reg_in, "matrix CSV")->required()->check(CLI::ExistingFile);
  auto* ob = reg->add_option("--band", reg_band, "keep |i-j| <= b");
  auto* ot = reg->add_option("--threshold", reg_threshold, "keep |x| >= w");
  auto* oq = reg->add_option("--quantile", reg_quantile, "threshold at the a-quantile of |entries|");
  ob->excludes(ot)->excludes(oq);
  ot->excludes(oq);
  reg->add_flag("--keep-diagonal", reg_keep_diag, "never threshold the diagonal");
  reg->add_flag("--sparse", reg_sparse, "write sparse triplets");
  reg->add_option("--out,-o", reg_out, "output (default stdout)");
  reg->callback([&] {
    action = [&] {
      RegSpec spec;
      if (reg_band) spec = BandSpec{*reg_band};
      else if (reg_threshold) spec = ThresholdSpec{*reg_threshold};
      else if (reg_quantile) spec = QuantileSpec{*reg_quantile};
      else throw std::invalid_argument("one of --band, --threshold or --quantile is required");
      const VolMatrix out = regularize(read_matrix(reg_in), spec, ThresholdOptions{reg_keep_diag});
      write_matrix(out, reg_out, reg_sparse);
    };
  });

  // eigen
  auto* eig = app.add_subcommand("eigen", "spectrum of a matrix");
  std::string eig_in;
  std::string eig_out;
  eig->add_option("matrix", eig_in, "matrix CSV")->required()->check(CLI::ExistingFile);
  eig->add_option("--out,-o", eig_out, "output (default stdout)");
  eig->callback([&] {
    action = [&] {
      const auto d = eigen_diagnostics(read_matrix(eig_in));
      with_output(eig_out, [&](std::ostream& out) {
        out << "# largest_truncated=" << csv::format(d.largest) << '\n';
        out << "rank,eigenvalue,truncated\n";
        for (std::size_t q = 0; q < d.eigenvalues.size(); ++q) {
          out << q + 1 << ',' << csv::format(d.eigenvalues[q]) << ',' << csv::format(d.truncated[q]) << '\n';
        }
      });
    };
  });

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Lambda(a) curve over consecutive daily matrices");
  std::vector<std::string> cal_in;
  std::vector<double> cal_grid;
  std::string cal_out;
  bool cal_keep_diag = false;
  cal->add_option("matrices", cal_in, "daily matrix CSVs in time order")->required()->check(CLI::ExistingFile);
  cal->add_option("--a-grid", cal_grid, "quantile levels (default 0.50,0.55,...,0.95,0.99)")->delimiter(',');
  cal->add_flag("--keep-diagonal", cal_keep_diag, "never threshold the diagonal");
  cal->add_option("--out,-o", cal_out, "output (default stdout)");
  cal->callback([&] {
    action = [&] {
      std::vector<VolMatrix> seq;
      for (const auto& f : cal_in) seq.push_back(read_matrix(f));
      const auto grid = cal_grid.empty() ? default_a_grid() : cal_grid;
      const auto res = calibrate_threshold_lambda(seq, grid, ThresholdOptions{cal_keep_diag});
      with_output(cal_out, [&](std::ostream& out) {
        out << "# a_star=" << csv::format(res.a_star) << '\n';
        write_calibration_csv(res, out);
      });
    };
  });

  // bench
  auto* bench = app.add_subcommand("bench", "Monte Carlo studies");
  bench->require_subcommand(1);
  std::string b_config;
  std::string b_out;
  std::optional<std::uint64_t> b_seed;
  std::optional<unsigned> b_workers;
  bool b_summary = false;
  const auto common = [&](CLI::App* sc) {
    sc->add_option("--config", b_config, "JSON config file")->check(CLI::ExistingFile);
    sc->add_option("--out,-o", b_out, "report CSV (default stdout)");
    sc->add_option("--seed", b_seed, "master seed");
    sc->add_option("--workers", b_workers, "worker threads (0: all cores)");
    sc->add_flag("--summary", b_summary, "print an aligned text table instead of CSV");
  };

  auto* b_mse = bench->add_subcommand("mse", "MSE table of ARVM, BARVM and TARVM");
  common(b_mse);
  bool b_full = false;
  std::optional<long> b_reps;
  b_mse->add_flag("--full-scale", b_full, "p = 512 and 500 repetitions");
  b_mse->add_option("--repetitions", b_reps, "repetitions per cell");
  const auto experiment = [&] {
    ExperimentConfig cfg = b_config.empty() ? ExperimentConfig{} : parse_experiment_config(read_text_file(b_config));
    if (b_full) {
      cfg.p = 512;
      cfg.repetitions = 500;
    }
    if (b_reps) cfg.repetitions = *b_reps;
    if (b_seed) cfg.seed = *b_seed;
    if (b_workers) cfg.workers = *b_workers;
    cfg.validate();
    return cfg;
  };
  b_mse->callback([&] {
    action = [&] {
      const MseTable t = run_mse_study(experiment());
      with_output(b_out, [&](std::ostream& out) {
        if (b_summary) write_mse_summary(t, out);
        else write_mse_csv(t, out);
      });
      for (const auto& f : t.failures) std::cerr << "# failed " << f << '\n';
    };
  });

  auto* b_perm = bench->add_subcommand("permutation", "BARVM/TARVM under a random asset permutation");
  common(b_perm);
  b_perm->add_option("--repetitions", b_reps, "repetitions per cell");
  b_perm->callback([&] {
    action = [&] {
      const auto r = run_permutation_study(experiment());
      with_output(b_out, [&](std::ostream& out) { write_permutation_csv(r, out); });
    };
  });

  auto* b_conv = bench->add_subcommand("convergence", "single-asset error rate against n");
  common(b_conv);
  b_conv->callback([&] {
    action = [&] {
      ConvergenceSpec spec = b_config.empty() ? ConvergenceSpec{} : parse_convergence_spec(read_text_file(b_config));
      if (b_seed) spec.seed = *b_seed;
      if (b_workers) spec.workers = *b_workers;
      const auto r = run_convergence_study(spec);
      with_output(b_out, [&](std::ostream& out) { write_convergence_csv(r, out); });
    };
  });

  auto* b_mp = bench->add_subcommand("mp", "largest eigenvalue of an i.i.d. Gaussian sample covariance");
  common(b_mp);
  long mp_n = 200;
  long mp_p = 200;
  long mp_reps = 20;
  b_mp->add_option("--n", mp_n, "sample size")->capture_default_str();
  b_mp->add_option("--p", mp_p, "dimension")->capture_default_str();
  b_mp->add_option("--reps", mp_reps, "repetitions")->capture_default_str();
  b_mp->callback([&] {
    action = [&] {
      const auto r = run_mp_sanity(mp_n, mp_p, mp_reps, b_seed.value_or(1));
      with_output(b_out, [&](std::ostream& out) { write_mp_csv(r, out); });
    };
  });

  auto* b_cal = bench->add_subcommand("calibration", "threshold calibration over simulated days");
  common(b_cal);
  long cal_days = 10;
  long cal_m = 40;
  std::string cal_curve;
  b_cal->add_option("--days", cal_days, "simulated days")->capture_default_str();
  b_cal->add_option("--m", cal_m, "grid size per class")->capture_default_str();
  b_cal->add_option("--curve", cal_curve, "also write the Lambda(a) curve here");
  b_cal->callback([&] {
    action = [&] {
      SimConfig base = b_config.empty() ? SimConfig{} : parse_sim_config(read_text_file(b_config));
      if (b_seed) base.seed = *b_seed;
      const auto panels = simulate_daily_panels(base, cal_days);
      const auto grid = default_a_grid();
      const auto demo = run_calibration_demo(panels, cal_m, grid);
      with_output(b_out, [&](std::ostream& out) { write_calibration_days_csv(demo, out); });
      if (!cal_curve.empty()) {
        with_output(cal_curve, [&](std::ostream& out) { write_calibration_csv(demo.calibration, out); });
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (action) action();
  } catch (const ParseError& e) {
    return fail("parse", e.what(), 1);
  } catch (const CholeskyError& e) {
    return fail("cholesky", e.what(), 1);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), 1);
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}
