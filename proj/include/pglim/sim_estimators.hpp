#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pglim/rng.hpp"
#include "pglim/types.hpp"

namespace pglim {

// One rollout: states x_0..x_T (columns), inputs u_0..u_{T-1}, optionally
// outputs y_0..y_T. x_0 = 0 always.
struct Trajectory {
  Eigen::MatrixXd states;
  Eigen::MatrixXd inputs;
  std::optional<Eigen::MatrixXd> outputs;

  double input_energy() const { return inputs.squaredNorm(); }
};

struct ExperimentDataset {
  std::vector<Trajectory> trajectories;
  std::uint64_t seed = 0;
  ExplorationPolicy policy;
  double realized_input_energy = 0.0;

  long n() const { return static_cast<long>(trajectories.size()); }
  long horizon() const {
    return trajectories.empty() ? 0 : trajectories.front().inputs.cols();
  }
};

enum class EstimatorMethod { plugin_ls, zeroth_order };

struct GradientEstimate {
  Eigen::MatrixXd estimate;
  EstimatorMethod method = EstimatorMethod::plugin_ls;
  bool failed = false;
  std::string failure_reason;
  // Method-specific diagnostics.
  double regressor_condition = 0.0;  // plug-in
  double radius = 0.0;               // zeroth-order
  int batch_size = 0;
  int failed_samples = 0;
};

// N independent rollouts of length T under u = Kx + eta. Trajectory n draws
// from stream_seed(seed, n); per step the excitation is drawn before the
// process noise. Unstable loops are simulated as-is (values may overflow).
ExperimentDataset simulate_trajectories(const StateSpaceSystem& S,
                                        const ExplorationPolicy& policy, long N,
                                        long T, std::uint64_t seed,
                                        int workers = 1);

struct BudgetReport {
  double realized_average = 0.0;
  bool within_budget = false;
};

// realized_average = total input energy / (N T), compared to beta with the
// given relative slack.
BudgetReport budget_report(const ExperimentDataset& dataset, double beta,
                           double slack = 0.05);

struct IdentifiedSystem {
  Eigen::MatrixXd A_hat;
  Eigen::MatrixXd B_hat;
  double regressor_condition = 0.0;
};

// Ridge-regularized least squares over all transitions:
//   min sum ||x_next - A x - B u||^2 + ridge (||A||_F^2 + ||B||_F^2).
// ridge = 0 with a rank-deficient regressor raises SingularRegressor.
IdentifiedSystem least_squares_identify(const ExperimentDataset& dataset,
                                        double ridge);
IdentifiedSystem least_squares_identify(const std::vector<Trajectory>& trajs,
                                        double ridge);

// Certainty-equivalent estimate: identify (A, B), then evaluate the exact
// gradient of the identified model (noise covariance supplied by the caller)
// at K. A gain that fails to stabilize the identified model yields a
// failure-marked estimate rather than an exception. ridge < 0 selects the
// default 1e-10 * (#transitions).
GradientEstimate plugin_gradient_estimator(const ExperimentDataset& dataset,
                                           const CostSpec& cost,
                                           const Controller& K,
                                           const Eigen::MatrixXd& SigmaW,
                                           double ridge = -1.0);

// Smoothed-functional estimate from single rollouts at gains K + U_i, with
// U_i uniform on the Frobenius sphere of the given radius:
//   (d / (r^2 m)) sum_i Jhat_i U_i,  d = d_u * d_x.
// Jhat_i is the time-averaged rollout cost. Samples whose perturbed gain is
// destabilizing are skipped and counted in failed_samples.
GradientEstimate zeroth_order_gradient_estimator(const StateSpaceSystem& S,
                                                 const CostSpec& cost,
                                                 const Controller& K,
                                                 double radius, int batch,
                                                 long T_roll,
                                                 std::uint64_t seed);

struct MonteCarloKl {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Brute-force divergence oracle: averages the Gaussian log-likelihood ratio of
// simulated datasets drawn under S1.
MonteCarloKl monte_carlo_kl(const StateSpaceSystem& S1,
                            const StateSpaceSystem& S2,
                            const ExplorationPolicy& policy, long N, long T,
                            long reps, std::uint64_t seed);

struct Figure1Config {
  std::vector<double> b_grid{0.05, 0.1, 0.25, 0.5, 1.0};
  double a = 1.0;
  double sigma_w_var = 1.0;
  long T = 100;
  long n_plugin = 100;
  long n_zeroth = 10000;
  long zeroth_batch = 100;
  double excitation_std = 1.0;  // plug-in dataset excitation
  double zeroth_radius = 0.05;
  double eval_gain_b_ref = 1.0;  // evaluation gain: optimal gain at this b
  std::vector<std::string> methods{"plugin", "zeroth"};
  std::uint64_t seed = 1;
  int workers = 1;
};

struct Figure1Row {
  double b = 0.0;
  std::string method;
  double error_std = 0.0;
  long n_failures = 0;
  long n_samples = 0;
  std::uint64_t seed = 0;
};

// Gradient-estimator spread across a controllability sweep: for each b the
// named estimators run at a fixed evaluation gain and the standard deviation
// of ||estimate - exact gradient||_op is reported (failures counted apart).
std::vector<Figure1Row> figure1_experiment(const Figure1Config& config);

// Interconnection of an output system with a dynamic controller; per step the
// measurement noise is drawn before the process noise. Outputs are recorded.
ExperimentDataset simulate_po_trajectories(const OutputSystem& G,
                                           const DynamicController& controller,
                                           long N, long T, std::uint64_t seed,
                                           int workers = 1);

double sample_std(const std::vector<double>& values);

}  // namespace pglim
