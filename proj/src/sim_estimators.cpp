#include "pglim/sim_estimators.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

#include "pglim/core_lqr.hpp"
#include "pglim/errors.hpp"
#include "pglim/linalg.hpp"

namespace pglim {

namespace {

void parallel_indexed(long count, int workers, const std::function<void(long)>& body) {
  workers = std::max(1, workers);
  if (workers == 1 || count < 2) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (long i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

Trajectory simulate_one(const StateSpaceSystem& S,
                        const ExplorationPolicy& policy, long T,
                        const Eigen::MatrixXd& noise_sqrt,
                        const Eigen::MatrixXd& excitation_sqrt,
                        bool has_excitation, std::uint64_t stream) {
  NormalSampler rng(stream);
  Trajectory traj;
  traj.states = Eigen::MatrixXd::Zero(S.dx(), T + 1);
  traj.inputs = Eigen::MatrixXd::Zero(S.du(), T);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(S.dx());
  for (long t = 0; t < T; ++t) {
    Eigen::VectorXd u = policy.feedback.K * x;
    if (has_excitation) u += excitation_sqrt * rng.normal_vector(S.du());
    Eigen::VectorXd w = noise_sqrt * rng.normal_vector(S.dx());
    traj.inputs.col(t) = u;
    x = S.A * x + S.B * u + w;
    traj.states.col(t + 1) = x;
  }
  return traj;
}

}  // namespace

ExperimentDataset simulate_trajectories(const StateSpaceSystem& S,
                                        const ExplorationPolicy& policy, long N,
                                        long T, std::uint64_t seed,
                                        int workers) {
  validate_system(S);
  validate_policy(policy, S.dx(), S.du());
  if (N < 1 || T < 1) {
    throw ValidationError("simulate_trajectories: N and T must be positive");
  }
  Eigen::MatrixXd noise_sqrt = covariance_sqrt(S.SigmaW);
  bool has_excitation = policy.excitation_cov.cwiseAbs().maxCoeff() > 0.0;
  Eigen::MatrixXd excitation_sqrt =
      has_excitation ? covariance_sqrt(policy.excitation_cov)
                     : Eigen::MatrixXd::Zero(S.du(), S.du());

  ExperimentDataset dataset;
  dataset.seed = seed;
  dataset.policy = policy;
  dataset.trajectories.resize(N);
  parallel_indexed(N, workers, [&](long n) {
    dataset.trajectories[n] =
        simulate_one(S, policy, T, noise_sqrt, excitation_sqrt, has_excitation,
                     stream_seed(seed, static_cast<std::uint64_t>(n)));
  });
  double energy = 0.0;
  for (const Trajectory& traj : dataset.trajectories) {
    energy += traj.input_energy();
  }
  dataset.realized_input_energy = energy;
  return dataset;
}

BudgetReport budget_report(const ExperimentDataset& dataset, double beta,
                           double slack) {
  BudgetReport report;
  double nt = static_cast<double>(dataset.n()) *
              static_cast<double>(dataset.horizon());
  report.realized_average =
      nt > 0 ? dataset.realized_input_energy / nt : 0.0;
  report.within_budget = report.realized_average <= beta * (1.0 + slack);
  return report;
}

IdentifiedSystem least_squares_identify(const std::vector<Trajectory>& trajs,
                                        double ridge) {
  if (trajs.empty()) {
    throw ValidationError("least_squares_identify: dataset is empty");
  }
  const int dx = static_cast<int>(trajs.front().states.rows());
  const int du = static_cast<int>(trajs.front().inputs.rows());
  const int dz = dx + du;

  // Normal equations on z = [x; u]: G theta = H with theta = [A B]'.
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(dz, dz);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dz, dx);
  Eigen::VectorXd z(dz);
  for (const Trajectory& traj : trajs) {
    for (long t = 0; t < traj.inputs.cols(); ++t) {
      z.head(dx) = traj.states.col(t);
      z.tail(du) = traj.inputs.col(t);
      G.noalias() += z * z.transpose();
      H.noalias() += z * traj.states.col(t + 1).transpose();
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  double lam_max = es.eigenvalues().maxCoeff();
  double lam_min = es.eigenvalues().minCoeff();
  if (ridge == 0.0 && lam_min <= 1e-12 * std::max(1.0, lam_max)) {
    throw SingularRegressor(
        "least_squares_identify: rank-deficient regressor with ridge = 0");
  }
  Eigen::MatrixXd theta =
      (G + ridge * Eigen::MatrixXd::Identity(dz, dz)).ldlt().solve(H);

  IdentifiedSystem out;
  out.A_hat = theta.topRows(dx).transpose();
  out.B_hat = theta.bottomRows(du).transpose();
  out.regressor_condition =
      lam_min > 0 ? std::sqrt(lam_max / lam_min)
                  : std::numeric_limits<double>::infinity();
  return out;
}

IdentifiedSystem least_squares_identify(const ExperimentDataset& dataset,
                                        double ridge) {
  return least_squares_identify(dataset.trajectories, ridge);
}

GradientEstimate plugin_gradient_estimator(const ExperimentDataset& dataset,
                                           const CostSpec& cost,
                                           const Controller& K,
                                           const Eigen::MatrixXd& SigmaW,
                                           double ridge) {
  GradientEstimate out;
  out.method = EstimatorMethod::plugin_ls;
  double nt = static_cast<double>(dataset.n()) *
              static_cast<double>(dataset.horizon());
  if (ridge < 0.0) ridge = 1e-10 * nt;

  IdentifiedSystem fit;
  try {
    fit = least_squares_identify(dataset, ridge);
  } catch (const SingularRegressor& err) {
    out.failed = true;
    out.failure_reason = err.what();
    return out;
  }
  out.regressor_condition = fit.regressor_condition;
  StateSpaceSystem model{fit.A_hat, fit.B_hat, SigmaW};
  if (!fit.A_hat.allFinite() || !fit.B_hat.allFinite() ||
      !is_stabilizing(K, model)) {
    out.failed = true;
    out.failure_reason = "identified model is not stabilized by K";
    return out;
  }
  out.estimate = exact_policy_gradient(model, cost, K);
  return out;
}

GradientEstimate zeroth_order_gradient_estimator(const StateSpaceSystem& S,
                                                 const CostSpec& cost,
                                                 const Controller& K,
                                                 double radius, int batch,
                                                 long T_roll,
                                                 std::uint64_t seed) {
  validate_system(S);
  validate_cost(cost, S.dx(), S.du());
  if (!is_stabilizing(K, S)) {
    throw UnstableClosedLoop(
        "zeroth_order_gradient_estimator: K is not stabilizing");
  }
  if (radius <= 0.0 || batch < 1 || T_roll < 1) {
    throw ValidationError(
        "zeroth_order_gradient_estimator: invalid radius/batch/horizon");
  }
  const double dim = static_cast<double>(S.du() * S.dx());
  Eigen::MatrixXd noise_sqrt = covariance_sqrt(S.SigmaW);

  GradientEstimate out;
  out.method = EstimatorMethod::zeroth_order;
  out.radius = radius;
  out.batch_size = batch;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(S.du(), S.dx());
  int good = 0;
  for (int i = 0; i < batch; ++i) {
    NormalSampler rng(stream_seed(seed, static_cast<std::uint64_t>(i)));
    Eigen::MatrixXd U(S.du(), S.dx());
    for (int r = 0; r < U.rows(); ++r) {
      for (int c = 0; c < U.cols(); ++c) U(r, c) = rng.normal();
    }
    double norm = U.norm();
    if (norm == 0.0) continue;
    U *= radius / norm;

    Controller perturbed{K.K + U};
    if (!is_stabilizing(perturbed, S)) {
      ++out.failed_samples;
      continue;
    }
    // Single rollout under the perturbed gain, cost averaged over the horizon.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(S.dx());
    double total = 0.0;
    for (long t = 0; t < T_roll; ++t) {
      Eigen::VectorXd u = perturbed.K * x;
      total += x.dot(cost.Q * x) + u.dot(cost.R * u);
      x = S.A * x + S.B * u + noise_sqrt * rng.normal_vector(S.dx());
    }
    sum += (total / static_cast<double>(T_roll)) * U;
    ++good;
  }
  if (good == 0) {
    out.failed = true;
    out.failure_reason = "all perturbed gains were destabilizing";
    return out;
  }
  out.estimate = dim / (radius * radius * static_cast<double>(good)) * sum;
  return out;
}

MonteCarloKl monte_carlo_kl(const StateSpaceSystem& S1,
                            const StateSpaceSystem& S2,
                            const ExplorationPolicy& policy, long N, long T,
                            long reps, std::uint64_t seed) {
  validate_system(S1);
  validate_policy(policy, S1.dx(), S1.du());
  Eigen::LLT<Eigen::MatrixXd> noise(symmetrize(S1.SigmaW));
  if (noise.info() != Eigen::Success) {
    throw SingularNoise("monte_carlo_kl: SigmaW must be positive definite");
  }
  Eigen::MatrixXd noise_sqrt = covariance_sqrt(S1.SigmaW);
  bool has_excitation = policy.excitation_cov.cwiseAbs().maxCoeff() > 0.0;
  Eigen::MatrixXd excitation_sqrt =
      has_excitation ? covariance_sqrt(policy.excitation_cov)
                     : Eigen::MatrixXd::Zero(S1.du(), S1.du());

  // log dP1/dP2 accumulated over every transition of a dataset.
  double sum = 0.0;
  double sum_sq = 0.0;
  for (long rep = 0; rep < reps; ++rep) {
    NormalSampler rng(stream_seed(seed, static_cast<std::uint64_t>(rep)));
    double llr = 0.0;
    for (long n = 0; n < N; ++n) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(S1.dx());
      for (long t = 0; t < T; ++t) {
        Eigen::VectorXd u = policy.feedback.K * x;
        if (has_excitation) u += excitation_sqrt * rng.normal_vector(S1.du());
        Eigen::VectorXd next =
            S1.A * x + S1.B * u + noise_sqrt * rng.normal_vector(S1.dx());
        Eigen::VectorXd r1 = next - S1.A * x - S1.B * u;
        Eigen::VectorXd r2 = next - S2.A * x - S2.B * u;
        llr += 0.5 * (r2.dot(noise.solve(r2)) - r1.dot(noise.solve(r1)));
        x = next;
      }
    }
    sum += llr;
    sum_sq += llr * llr;
  }
  MonteCarloKl out;
  double mean = sum / static_cast<double>(reps);
  double var =
      std::max(0.0, sum_sq / static_cast<double>(reps) - mean * mean);
  out.estimate = mean;
  out.standard_error =
      std::sqrt(var / std::max<long>(1, reps - 1));
  return out;
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<Figure1Row> figure1_experiment(const Figure1Config& config) {
  if (config.b_grid.empty()) {
    throw ValidationError("figure1_experiment: empty b grid");
  }
  if (config.T < 1 || config.n_plugin < 1 || config.n_zeroth < 1 ||
      config.zeroth_batch < 1 || config.n_zeroth % config.zeroth_batch != 0) {
    throw ValidationError("figure1_experiment: invalid sample counts");
  }
  bool run_plugin = false, run_zeroth = false;
  for (const std::string& m : config.methods) {
    if (m == "plugin") {
      run_plugin = true;
    } else if (m == "zeroth") {
      run_zeroth = true;
    } else {
      throw ValidationError("figure1_experiment: unknown method '" + m + "'");
    }
  }
  CostSpec cost = make_scalar_cost(1.0, 1.0);

  // Fixed evaluation gain from the reference b, so only conditioning varies
  // across the sweep.
  StateSpaceSystem ref =
      make_scalar_system(config.a, config.eval_gain_b_ref, config.sigma_w_var);
  Controller K_eval = solve_dare_optimal(ref, cost).K;

  std::vector<Figure1Row> rows;
  for (std::size_t bi = 0; bi < config.b_grid.size(); ++bi) {
    double b = config.b_grid[bi];
    StateSpaceSystem S = make_scalar_system(config.a, b, config.sigma_w_var);
    if (!is_stabilizing(K_eval, S)) {
      throw ValidationError(
          "figure1_experiment: evaluation gain does not stabilize b = " +
          std::to_string(b));
    }
    Eigen::MatrixXd grad_true = exact_policy_gradient(S, cost, K_eval);

    if (run_plugin) {
      ExplorationPolicy policy;
      policy.feedback = K_eval;
      policy.excitation_cov = Eigen::MatrixXd::Constant(
          1, 1, config.excitation_std * config.excitation_std);
      ExperimentDataset dataset = simulate_trajectories(
          S, policy, config.n_plugin, config.T,
          stream_seed(config.seed, 2 * bi), config.workers);

      std::vector<double> errors;
      long failures = 0;
      for (const Trajectory& traj : dataset.trajectories) {
        GradientEstimate est = plugin_gradient_estimator(
            ExperimentDataset{{traj}, dataset.seed, policy, traj.input_energy()},
            cost, K_eval, S.SigmaW);
        if (est.failed) {
          ++failures;
        } else {
          errors.push_back(operator_norm(est.estimate - grad_true));
        }
      }
      rows.push_back(Figure1Row{b, "plugin", sample_std(errors), failures,
                                config.n_plugin, config.seed});
    }
    if (run_zeroth) {
      long batches = config.n_zeroth / config.zeroth_batch;
      std::uint64_t method_seed = stream_seed(config.seed, 2 * bi + 1);
      std::vector<double> errors(batches, 0.0);
      std::vector<char> ok(batches, 0);
      std::vector<long> per_batch_failures(batches, 0);
      parallel_indexed(batches, config.workers, [&](long j) {
        GradientEstimate est = zeroth_order_gradient_estimator(
            S, cost, K_eval, config.zeroth_radius,
            static_cast<int>(config.zeroth_batch), config.T,
            stream_seed(method_seed, static_cast<std::uint64_t>(j)));
        per_batch_failures[j] = est.failed_samples;
        if (!est.failed) {
          ok[j] = 1;
          errors[j] = operator_norm(est.estimate - grad_true);
        }
      });
      std::vector<double> good;
      long failures = 0;
      for (long j = 0; j < batches; ++j) {
        failures += per_batch_failures[j];
        if (ok[j]) good.push_back(errors[j]);
      }
      rows.push_back(Figure1Row{b, "zeroth", sample_std(good), failures,
                                config.n_zeroth, config.seed});
    }
  }
  return rows;
}

ExperimentDataset simulate_po_trajectories(const OutputSystem& G,
                                           const DynamicController& controller,
                                           long N, long T, std::uint64_t seed,
                                           int workers) {
  validate_output_system(G);
  const int dxi = static_cast<int>(controller.A_dyn.rows());
  if (controller.A_dyn.cols() != dxi || controller.B_dyn.rows() != dxi ||
      controller.B_dyn.cols() != G.dy() || controller.K.rows() != G.du() ||
      controller.K.cols() != dxi) {
    throw DimensionError("simulate_po_trajectories: controller shapes");
  }
  if (N < 1 || T < 1) {
    throw ValidationError("simulate_po_trajectories: N and T must be positive");
  }
  Eigen::MatrixXd w_sqrt = covariance_sqrt(G.SigmaW);
  Eigen::MatrixXd v_sqrt = covariance_sqrt(G.SigmaV);

  ExperimentDataset dataset;
  dataset.seed = seed;
  dataset.policy.feedback.K = Eigen::MatrixXd::Zero(G.du(), G.dx());
  dataset.policy.excitation_cov = Eigen::MatrixXd::Zero(G.du(), G.du());
  dataset.trajectories.resize(N);
  parallel_indexed(N, workers, [&](long n) {
    NormalSampler rng(stream_seed(seed, static_cast<std::uint64_t>(n)));
    Trajectory traj;
    traj.states = Eigen::MatrixXd::Zero(G.dx(), T + 1);
    traj.inputs = Eigen::MatrixXd::Zero(G.du(), T);
    traj.outputs = Eigen::MatrixXd::Zero(G.dy(), T + 1);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(G.dx());
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(dxi);
    for (long t = 0; t < T; ++t) {
      Eigen::VectorXd y = G.C * x + v_sqrt * rng.normal_vector(G.dy());
      traj.outputs->col(t) = y;
      Eigen::VectorXd u = controller.K * xi;
      traj.inputs.col(t) = u;
      xi = controller.A_dyn * xi + controller.B_dyn * y;
      x = G.A * x + G.B * u + w_sqrt * rng.normal_vector(G.dx());
      traj.states.col(t + 1) = x;
    }
    traj.outputs->col(T) = G.C * x + v_sqrt * rng.normal_vector(G.dy());
    dataset.trajectories[n] = std::move(traj);
  });
  double energy = 0.0;
  for (const Trajectory& traj : dataset.trajectories) {
    energy += traj.input_energy();
  }
  dataset.realized_input_energy = energy;
  return dataset;
}

}  // namespace pglim
