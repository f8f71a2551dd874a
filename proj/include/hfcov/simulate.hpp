#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hfcov/panel.hpp"
#include "hfcov/vol_matrix.hpp"

namespace hfcov {

enum class NoiseLevel { low, medium, high };
enum class SyncMode { synchronized, nonsynchronized };

/// Noise standard deviation as a multiple of sqrt(theta_i): 0.002, 0.127, 0.2.
double noise_multiplier(NoiseLevel level);

std::string_view to_string(NoiseLevel level);
std::string_view to_string(SyncMode mode);
NoiseLevel parse_noise_level(std::string_view s);
SyncMode parse_sync_mode(std::string_view s);

/// The four diagonal volatility families, one per quartile of assets.
enum class VolModel {
  log_ou,                 // geometric Ornstein-Uhlenbeck
  two_factor_cir,         // 0.98 (v1 + v2), two CIR factors
  garch_diffusion,        // GARCH diffusion limit
  log_linear_two_factor,  // e^{-6.8753} s-exp(0.04 v1 + 1.5 v2 - 1.2)
};

VolModel vol_model_for_asset(std::size_t i, std::size_t p);
double leverage_for_model(VolModel model);
std::string_view to_string(VolModel model);
VolModel parse_vol_model(std::string_view s);

/// Default theta profile 2e-4 * i^{-0.3}, i = 1..p (decreasing).
std::vector<double> default_theta(std::size_t p);

/// Name given to simulated asset i: "A0001", "A0002", ...
std::string simulated_asset_id(std::size_t i);

struct SimConfig {
  std::size_t p = 64;
  long n = 200;
  double kappa0 = 0.537;
  NoiseLevel noise_level = NoiseLevel::low;
  std::optional<double> noise_multiplier_override;  // replaces the level's multiplier (0 disables noise)
  std::vector<double> theta;                        // empty: default_theta(p)
  std::vector<double> rho;                          // empty: block leverage values
  std::optional<VolModel> vol_model_override;       // one family for every asset; lifts p % 4 == 0
  SyncMode sync_mode = SyncMode::synchronized;
  std::uint64_t seed = 0;
  std::uint64_t repetition = 0;

  /// Copy with theta/rho filled in; throws std::invalid_argument on any violated invariant.
  SimConfig resolved() const;

  VolModel model_for(std::size_t i) const;
  double noise_std(std::size_t i) const;  // requires resolved()
};

/// Shared Brownian increments for L Euler steps of size 1/L. Column l-1
/// holds the increments of step l.
struct DrivingIncrements {
  long L = 0;
  double dt = 0.0;
  std::vector<double> w0;  // correlation-factor driver W0
  Eigen::MatrixXd dB;      // p x L, price Brownian motion
  Eigen::MatrixXd dU1;     // p x L
  Eigen::MatrixXd dU2;     // p x L
};

DrivingIncrements draw_increments(const SimConfig& config, long L);

/// dW_kappa = sqrt(0.96) dW0 - 0.2 sum_i dB_i / sqrt(p), per step.
std::vector<double> kappa_driver_increments(const DrivingIncrements& inc);

/// dW_i = rho_i dB_i + sqrt(1 - rho_i^2) dU_i.
Eigen::MatrixXd leverage_increments(std::span<const double> rho, const Eigen::MatrixXd& dB, const Eigen::MatrixXd& dU);

/// tanh(u)
double kappa_from_u(double u);

struct KappaPath {
  std::vector<double> u;      // L+1 states, u[0] = atanh(kappa0)
  std::vector<double> kappa;  // tanh(u)
};

/// Euler scheme for du = 0.03 (0.64 - u) dt + 0.118 u dW_kappa with dt = 1/L.
KappaPath simulate_kappa_path(double kappa0, long L, std::span<const double> kappa_driver);

/// e^u up to log 8.5, 8.5 sqrt(1 - log 8.5 + u^2 / log 8.5) beyond.
double s_exp(double u);

/// One unscaled gamma_ii path (L+1 states starting at the model's drift fixed
/// point) driven by the leverage-coupled increments dW1, dW2.
std::vector<double> simulate_vol_block(VolModel model, std::span<const double> dW1, std::span<const double> dW2,
                                       double dt);

/// p x (L+1) diagonal volatilities, each row scaled by 1000 theta_i.
Eigen::MatrixXd simulate_diag_vols(const SimConfig& config, const DrivingIncrements& inc);

/// gamma_ij = kappa^{|i-j|} sqrt(gamma_ii gamma_jj); requires |kappa| < 1 and positive diagonal.
Eigen::MatrixXd build_gamma(const Eigen::VectorXd& diag, double kappa);

class CholeskyError : public std::runtime_error {
 public:
  CholeskyError(const std::string& what, Eigen::Index minor) : std::runtime_error(what), minor_(minor) {}
  Eigen::Index leading_minor() const { return minor_; }  // 1-based

 private:
  Eigen::Index minor_;
};

/// Lower-triangular L with L L^T = gamma. Throws CholeskyError naming the
/// first leading minor that is not positive definite.
Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& gamma);

/// Running sum of gamma(t_l) over the retained time points.
class TruthAccumulator {
 public:
  explicit TruthAccumulator(Eigen::Index p) : sum_(Eigen::MatrixXd::Zero(p, p)) {}
  void add(const Eigen::MatrixXd& gamma) {
    sum_ += gamma;
    ++count_;
  }
  const Eigen::MatrixXd& sum() const { return sum_; }
  long count() const { return count_; }

 private:
  Eigen::MatrixXd sum_;
  long count_ = 0;
};

/// Entrywise mean of the accumulated gamma matrices.
VolMatrix integrated_truth(const Eigen::MatrixXd& gamma_sum, long n_retained, std::vector<std::string> asset_ids = {});

/// X(0) = 0 and X_l = X_{l-1} + chol(gamma(t_{l-1})) dB_l, gamma rebuilt per step
/// and never stored. When `truth` is given, gamma(t_l) for l = stride, 2 stride, ...
/// is added to it.
Eigen::MatrixXd simulate_prices(const Eigen::MatrixXd& diag_vols, std::span<const double> kappa,
                                const Eigen::MatrixXd& dB, TruthAccumulator* truth = nullptr, long stride = 1);

/// Y = X + eps, eps_i ~ N(0, noise_std(i)^2) i.i.d. from its own stream.
Eigen::MatrixXd add_noise(const Eigen::MatrixXd& log_prices, const SimConfig& config);

struct PathBundle {
  std::vector<double> step_times;  // L+1 points l/L, l = 0..L
  std::vector<double> kappa_path;  // L+1
  Eigen::MatrixXd diag_vols;       // p x (L+1)
  Eigen::MatrixXd log_prices;      // p x (L+1)
  Eigen::MatrixXd noisy_prices;    // p x (L+1)
};

/// Panel from a 3n-step bundle: for every asset and group {t_{3r-2}, t_{3r-1}, t_{3r}}
/// one time point chosen uniformly at random.
Panel desynchronize(const PathBundle& bundle, const SimConfig& config);

struct SimulatedPaths {
  PathBundle bundle;
  VolMatrix truth;
};

/// L = n (synchronized) or 3n (nonsynchronized) Euler steps; truth over t_l
/// (synchronized) or t_{3r} (nonsynchronized).
SimulatedPaths simulate_paths(const SimConfig& config);

struct Scenario {
  Panel panel;
  VolMatrix truth;
};

Scenario simulate_scenario(const SimConfig& config);

}  // namespace hfcov
