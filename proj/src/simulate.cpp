#include "hfcov/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "hfcov/rng.hpp"

namespace hfcov {

double noise_multiplier(NoiseLevel level) {
  switch (level) {
    case NoiseLevel::low: return 0.002;
    case NoiseLevel::medium: return 0.127;
    case NoiseLevel::high: return 0.2;
  }
  return 0.0;
}

std::string_view to_string(NoiseLevel level) {
  switch (level) {
    case NoiseLevel::low: return "low";
    case NoiseLevel::medium: return "medium";
    case NoiseLevel::high: return "high";
  }
  return "unknown";
}

std::string_view to_string(SyncMode mode) {
  return mode == SyncMode::synchronized ? "synchronized" : "nonsynchronized";
}

NoiseLevel parse_noise_level(std::string_view s) {
  if (s == "low") return NoiseLevel::low;
  if (s == "medium") return NoiseLevel::medium;
  if (s == "high") return NoiseLevel::high;
  throw std::invalid_argument("unknown noise level '" + std::string(s) + "'");
}

SyncMode parse_sync_mode(std::string_view s) {
  if (s == "synchronized" || s == "sync") return SyncMode::synchronized;
  if (s == "nonsynchronized" || s == "nonsync") return SyncMode::nonsynchronized;
  throw std::invalid_argument("unknown sync mode '" + std::string(s) + "'");
}

VolModel vol_model_for_asset(std::size_t i, std::size_t p) {
  // blocks 1 <= i <= p/4, p/4 < i <= p/2, ... with 1-based i
  const std::size_t one_based = i + 1;
  if (4 * one_based <= p) return VolModel::log_ou;
  if (2 * one_based <= p) return VolModel::two_factor_cir;
  if (4 * one_based <= 3 * p) return VolModel::garch_diffusion;
  return VolModel::log_linear_two_factor;
}

double leverage_for_model(VolModel model) {
  switch (model) {
    case VolModel::log_ou: return -0.62;
    case VolModel::two_factor_cir: return -0.50;
    case VolModel::garch_diffusion: return -0.25;
    case VolModel::log_linear_two_factor: return -0.30;
  }
  return 0.0;
}

std::string_view to_string(VolModel model) {
  switch (model) {
    case VolModel::log_ou: return "log_ou";
    case VolModel::two_factor_cir: return "two_factor_cir";
    case VolModel::garch_diffusion: return "garch_diffusion";
    case VolModel::log_linear_two_factor: return "log_linear_two_factor";
  }
  return "unknown";
}

VolModel parse_vol_model(std::string_view s) {
  for (auto m : {VolModel::log_ou, VolModel::two_factor_cir, VolModel::garch_diffusion,
                 VolModel::log_linear_two_factor}) {
    if (s == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown volatility model '" + std::string(s) + "'");
}

std::vector<double> default_theta(std::size_t p) {
  std::vector<double> theta(p);
  for (std::size_t i = 0; i < p; ++i) theta[i] = 2e-4 * std::pow(static_cast<double>(i + 1), -0.3);
  return theta;
}

std::string simulated_asset_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "A%04zu", i + 1);
  return buf;
}

SimConfig SimConfig::resolved() const {
  SimConfig c = *this;
  if (c.p == 0) throw std::invalid_argument("p must be positive");
  if (!c.vol_model_override && c.p % 4 != 0) throw std::invalid_argument("p must be divisible by 4");
  if (c.n < 2) throw std::invalid_argument("n must be at least 2");
  if (!(std::abs(c.kappa0) < 1.0)) throw std::invalid_argument("kappa0 must lie in (-1,1)");
  if (c.theta.empty()) c.theta = default_theta(c.p);
  if (c.theta.size() != c.p) throw std::invalid_argument("theta length must equal p");
  for (double t : c.theta) {
    if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("theta must be strictly positive");
  }
  if (c.rho.empty()) {
    c.rho.resize(c.p);
    for (std::size_t i = 0; i < c.p; ++i) c.rho[i] = leverage_for_model(c.model_for(i));
  }
  if (c.rho.size() != c.p) throw std::invalid_argument("rho length must equal p");
  for (double r : c.rho) {
    if (!(std::abs(r) <= 1.0)) throw std::invalid_argument("leverage rho must lie in [-1,1]");
  }
  if (c.noise_multiplier_override && !(*c.noise_multiplier_override >= 0.0)) {
    throw std::invalid_argument("noise multiplier must be nonnegative");
  }
  return c;
}

VolModel SimConfig::model_for(std::size_t i) const {
  return vol_model_override ? *vol_model_override : vol_model_for_asset(i, p);
}

double SimConfig::noise_std(std::size_t i) const {
  const double mult = noise_multiplier_override ? *noise_multiplier_override : noise_multiplier(noise_level);
  return mult * std::sqrt(theta.at(i));
}

DrivingIncrements draw_increments(const SimConfig& config, long L) {
  if (L < 1) throw std::invalid_argument("number of Euler steps must be positive");
  DrivingIncrements inc;
  inc.L = L;
  inc.dt = 1.0 / static_cast<double>(L);
  const double sd = std::sqrt(inc.dt);
  const auto p = static_cast<Eigen::Index>(config.p);

  inc.w0.resize(static_cast<std::size_t>(L));
  {
    auto gen = make_stream(config.seed, config.repetition, StreamPurpose::kappa_driver);
    std::normal_distribution<double> z;
    for (auto& w : inc.w0) w = sd * z(gen);
  }
  const auto fill = [&](Eigen::MatrixXd& m, StreamPurpose purpose) {
    m.resize(p, L);
    for (Eigen::Index i = 0; i < p; ++i) {
      auto gen = make_stream(config.seed, config.repetition, purpose, static_cast<std::uint64_t>(i));
      std::normal_distribution<double> z;
      for (long l = 0; l < L; ++l) m(i, l) = sd * z(gen);
    }
  };
  fill(inc.dB, StreamPurpose::price);
  fill(inc.dU1, StreamPurpose::vol_u1);
  fill(inc.dU2, StreamPurpose::vol_u2);
  return inc;
}

std::vector<double> kappa_driver_increments(const DrivingIncrements& inc) {
  const double a = std::sqrt(0.96);
  const double b = 0.2 / std::sqrt(static_cast<double>(inc.dB.rows()));
  std::vector<double> out(static_cast<std::size_t>(inc.L));
  for (long l = 0; l < inc.L; ++l) out[static_cast<std::size_t>(l)] = a * inc.w0[static_cast<std::size_t>(l)] - b * inc.dB.col(l).sum();
  return out;
}

Eigen::MatrixXd leverage_increments(std::span<const double> rho, const Eigen::MatrixXd& dB, const Eigen::MatrixXd& dU) {
  if (static_cast<Eigen::Index>(rho.size()) != dB.rows() || dB.rows() != dU.rows() || dB.cols() != dU.cols()) {
    throw std::invalid_argument("leverage increments: shape mismatch");
  }
  Eigen::MatrixXd out(dB.rows(), dB.cols());
  for (Eigen::Index i = 0; i < dB.rows(); ++i) {
    const double r = rho[static_cast<std::size_t>(i)];
    out.row(i) = r * dB.row(i) + std::sqrt(1.0 - r * r) * dU.row(i);
  }
  return out;
}

double kappa_from_u(double u) { return std::tanh(u); }

KappaPath simulate_kappa_path(double kappa0, long L, std::span<const double> kappa_driver) {
  if (!(std::abs(kappa0) < 1.0)) throw std::invalid_argument("kappa0 must lie in (-1,1)");
  if (static_cast<long>(kappa_driver.size()) != L) throw std::invalid_argument("kappa driver length must equal L");
  const double dt = 1.0 / static_cast<double>(L);
  KappaPath path;
  path.u.resize(static_cast<std::size_t>(L) + 1);
  path.kappa.resize(path.u.size());
  path.u[0] = std::atanh(kappa0);
  for (std::size_t l = 1; l < path.u.size(); ++l) {
    const double u = path.u[l - 1];
    path.u[l] = u + 0.03 * (0.64 - u) * dt + 0.118 * u * kappa_driver[l - 1];
  }
  for (std::size_t l = 0; l < path.u.size(); ++l) path.kappa[l] = kappa_from_u(path.u[l]);
  return path;
}

double s_exp(double u) {
  static const double log85 = std::log(8.5);
  if (u <= log85) return std::exp(u);
  return 8.5 * std::sqrt(1.0 - log85 + u * u / log85);
}

std::vector<double> simulate_vol_block(VolModel model, std::span<const double> dW1, std::span<const double> dW2,
                                       double dt) {
  if (dW1.size() != dW2.size()) throw std::invalid_argument("volatility drivers differ in length");
  const std::size_t L = dW1.size();
  std::vector<double> gamma(L + 1);

  switch (model) {
    case VolModel::log_ou: {
      double h = -0.157;
      gamma[0] = std::exp(h);
      for (std::size_t l = 1; l <= L; ++l) {
        h += -0.6 * (0.157 + h) * dt + 0.25 * dW1[l - 1];
        gamma[l] = std::exp(h);
      }
      break;
    }
    case VolModel::two_factor_cir: {
      // full truncation: drift and diffusion see max(v, 0)
      double v1 = 0.108;
      double v2 = 0.401;
      gamma[0] = 0.98 * (v1 + v2);
      for (std::size_t l = 1; l <= L; ++l) {
        const double p1 = std::max(v1, 0.0);
        const double p2 = std::max(v2, 0.0);
        v1 += 0.0429 * (0.108 - p1) * dt + 0.1539 * std::sqrt(p1) * dW1[l - 1];
        v2 += 3.74 * (0.401 - p2) * dt + 1.4369 * std::sqrt(p2) * dW2[l - 1];
        gamma[l] = 0.98 * (std::max(v1, 0.0) + std::max(v2, 0.0));
      }
      break;
    }
    case VolModel::garch_diffusion: {
      double g = 0.1;
      gamma[0] = g;
      for (std::size_t l = 1; l <= L; ++l) {
        g += (0.1 - g) * dt + 0.2 * g * dW1[l - 1];
        gamma[l] = g;
      }
      break;
    }
    case VolModel::log_linear_two_factor: {
      const double scale = std::exp(-6.8753);
      double v1 = 0.0;
      double v2 = 0.0;
      gamma[0] = scale * s_exp(-1.2);
      for (std::size_t l = 1; l <= L; ++l) {
        const double v2_prev = v2;
        v1 += -0.00137 * v1 * dt + dW1[l - 1];
        v2 += -1.386 * v2_prev * dt + (1.0 + 0.25 * v2_prev) * dW2[l - 1];
        gamma[l] = scale * s_exp(0.04 * v1 + 1.5 * v2 - 1.2);
      }
      break;
    }
  }
  return gamma;
}

Eigen::MatrixXd simulate_diag_vols(const SimConfig& config, const DrivingIncrements& inc) {
  const SimConfig cfg = config.resolved();
  const auto p = static_cast<Eigen::Index>(cfg.p);
  if (inc.dB.rows() != p) throw std::invalid_argument("increments do not match p");
  const Eigen::MatrixXd dW1 = leverage_increments(cfg.rho, inc.dB, inc.dU1);
  const Eigen::MatrixXd dW2 = leverage_increments(cfg.rho, inc.dB, inc.dU2);

  Eigen::MatrixXd out(p, inc.L + 1);
  std::vector<double> w1(static_cast<std::size_t>(inc.L));
  std::vector<double> w2(static_cast<std::size_t>(inc.L));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (long l = 0; l < inc.L; ++l) {
      w1[static_cast<std::size_t>(l)] = dW1(i, l);
      w2[static_cast<std::size_t>(l)] = dW2(i, l);
    }
    const auto path = simulate_vol_block(cfg.model_for(static_cast<std::size_t>(i)), w1, w2, inc.dt);
    const double scale = 1000.0 * cfg.theta[static_cast<std::size_t>(i)];
    for (long l = 0; l <= inc.L; ++l) out(i, l) = scale * path[static_cast<std::size_t>(l)];
  }
  return out;
}

Eigen::MatrixXd build_gamma(const Eigen::VectorXd& diag, double kappa) {
  if (!(std::abs(kappa) < 1.0)) throw std::invalid_argument("correlation factor kappa must satisfy |kappa| < 1");
  const auto p = diag.size();
  Eigen::VectorXd root(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(diag(i) > 0.0) || !std::isfinite(diag(i))) {
      throw std::invalid_argument("diagonal volatility must be positive and finite (asset " + std::to_string(i) + ")");
    }
    root(i) = std::sqrt(diag(i));
  }
  // Toeplitz powers kappa^{|i-j|}
  Eigen::VectorXd powers(p);
  double pw = 1.0;
  for (Eigen::Index d = 0; d < p; ++d) {
    powers(d) = pw;
    pw *= kappa;
  }
  Eigen::MatrixXd gamma(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = j; i < p; ++i) {
      const double v = powers(i - j) * root(i) * root(j);
      gamma(i, j) = v;
      gamma(j, i) = v;
    }
    gamma(j, j) = diag(j);
  }
  return gamma;
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& gamma) {
  const auto p = gamma.rows();
  if (gamma.cols() != p) throw std::invalid_argument("Cholesky factor of a non-square matrix");
  // Upper factor U = L^T built column by column so every dot product runs over contiguous storage.
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < j; ++k) {
      const double s = gamma(k, j) - U.col(k).head(k).dot(U.col(j).head(k));
      U(k, j) = s / U(k, k);
    }
    const double d = gamma(j, j) - U.col(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw CholeskyError("matrix is not positive definite: leading minor " + std::to_string(j + 1) + " of " +
                              std::to_string(p) + " has pivot " + std::to_string(d),
                          j + 1);
    }
    U(j, j) = std::sqrt(d);
  }
  return U.transpose();
}

VolMatrix integrated_truth(const Eigen::MatrixXd& gamma_sum, long n_retained, std::vector<std::string> asset_ids) {
  if (n_retained <= 0) throw std::invalid_argument("integrated truth needs at least one retained point");
  return VolMatrix::from_upper(gamma_sum / static_cast<double>(n_retained), MatrixKind::truth, std::move(asset_ids),
                               {{"n", static_cast<double>(n_retained)}});
}

Eigen::MatrixXd simulate_prices(const Eigen::MatrixXd& diag_vols, std::span<const double> kappa,
                                const Eigen::MatrixXd& dB, TruthAccumulator* truth, long stride) {
  const auto p = diag_vols.rows();
  const auto L = dB.cols();
  if (diag_vols.cols() != L + 1 || static_cast<Eigen::Index>(kappa.size()) != L + 1 || dB.rows() != p) {
    throw std::invalid_argument("simulate_prices: shape mismatch");
  }
  if (stride < 1) throw std::invalid_argument("truth stride must be positive");
  Eigen::MatrixXd X(p, L + 1);
  X.col(0).setZero();
  for (Eigen::Index l = 0; l <= L; ++l) {
    const Eigen::MatrixXd gamma = build_gamma(diag_vols.col(l), kappa[static_cast<std::size_t>(l)]);
    if (truth != nullptr && l >= 1 && l % stride == 0) truth->add(gamma);
    if (l < L) {
      const Eigen::MatrixXd chol = cholesky_factor(gamma);
      X.col(l + 1) = X.col(l) + chol.triangularView<Eigen::Lower>() * dB.col(l);
    }
  }
  return X;
}

Eigen::MatrixXd add_noise(const Eigen::MatrixXd& log_prices, const SimConfig& config) {
  const SimConfig cfg = config.resolved();
  if (log_prices.rows() != static_cast<Eigen::Index>(cfg.p)) throw std::invalid_argument("add_noise: p mismatch");
  Eigen::MatrixXd Y = log_prices;
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    const double sd = cfg.noise_std(static_cast<std::size_t>(i));
    if (sd == 0.0) continue;
    auto gen = make_stream(cfg.seed, cfg.repetition, StreamPurpose::noise, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> eps(0.0, sd);
    for (Eigen::Index l = 1; l < Y.cols(); ++l) Y(i, l) += eps(gen);
  }
  return Y;
}

Panel desynchronize(const PathBundle& bundle, const SimConfig& config) {
  const SimConfig cfg = config.resolved();
  const long L = bundle.noisy_prices.cols() - 1;
  if (L != 3 * cfg.n) throw std::invalid_argument("desynchronize needs a bundle with L = 3n steps");
  std::vector<TickSeries> assets;
  assets.reserve(cfg.p);
  for (std::size_t i = 0; i < cfg.p; ++i) {
    auto gen = make_stream(cfg.seed, cfg.repetition, StreamPurpose::desync, i);
    std::uniform_int_distribution<int> pick(0, 2);
    std::vector<double> times(static_cast<std::size_t>(cfg.n));
    std::vector<double> prices(times.size());
    for (long r = 1; r <= cfg.n; ++r) {
      const long l = 3 * r - 2 + pick(gen);
      times[static_cast<std::size_t>(r - 1)] = bundle.step_times[static_cast<std::size_t>(l)];
      prices[static_cast<std::size_t>(r - 1)] = bundle.noisy_prices(static_cast<Eigen::Index>(i), l);
    }
    assets.emplace_back(simulated_asset_id(i), std::move(times), std::move(prices));
  }
  return Panel(std::move(assets));
}

SimulatedPaths simulate_paths(const SimConfig& config) {
  const SimConfig cfg = config.resolved();
  const bool sync = cfg.sync_mode == SyncMode::synchronized;
  const long L = sync ? cfg.n : 3 * cfg.n;

  const DrivingIncrements inc = draw_increments(cfg, L);
  const KappaPath kp = simulate_kappa_path(cfg.kappa0, L, kappa_driver_increments(inc));

  PathBundle bundle;
  bundle.step_times.resize(static_cast<std::size_t>(L) + 1);
  for (long l = 0; l <= L; ++l) bundle.step_times[static_cast<std::size_t>(l)] = static_cast<double>(l) / static_cast<double>(L);
  bundle.kappa_path = kp.kappa;
  bundle.diag_vols = simulate_diag_vols(cfg, inc);

  TruthAccumulator acc(static_cast<Eigen::Index>(cfg.p));
  bundle.log_prices = simulate_prices(bundle.diag_vols, bundle.kappa_path, inc.dB, &acc, sync ? 1 : 3);
  bundle.noisy_prices = add_noise(bundle.log_prices, cfg);

  std::vector<std::string> ids;
  for (std::size_t i = 0; i < cfg.p; ++i) ids.push_back(simulated_asset_id(i));
  VolMatrix truth = integrated_truth(acc.sum(), acc.count(), std::move(ids));
  return {std::move(bundle), std::move(truth)};
}

Scenario simulate_scenario(const SimConfig& config) {
  const SimConfig cfg = config.resolved();
  SimulatedPaths sim = simulate_paths(cfg);
  if (cfg.sync_mode == SyncMode::nonsynchronized) return {desynchronize(sim.bundle, cfg), std::move(sim.truth)};

  const auto& b = sim.bundle;
  std::vector<double> times(b.step_times.begin() + 1, b.step_times.end());
  std::vector<TickSeries> assets;
  assets.reserve(cfg.p);
  for (std::size_t i = 0; i < cfg.p; ++i) {
    std::vector<double> prices(times.size());
    for (std::size_t l = 0; l < times.size(); ++l) prices[l] = b.noisy_prices(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l + 1));
    assets.emplace_back(simulated_asset_id(i), times, std::move(prices));
  }
  return {Panel(std::move(assets)), std::move(sim.truth)};
}

}  // namespace hfcov
