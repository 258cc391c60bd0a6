#include "pglim/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <json.hpp>
#include <map>

#include "pglim/core_lqr.hpp"
#include "pglim/errors.hpp"
#include "pglim/hard_instances.hpp"
#include "pglim/partial_obs.hpp"
#include "pglim/serialize.hpp"

namespace pglim {

namespace {

using nlohmann::json;

constexpr const char* kExperimentDefault = " [experiment default]";
constexpr const char* kToolDefault = " [tool default]";

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string token = text.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!token.empty()) tokens.push_back(token);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return tokens;
}

void emit(const json& j, const std::string& out_path) {
  std::string text = j.dump(2);
  text.push_back('\n');
  if (out_path.empty()) {
    std::cout << text;
  } else {
    atomic_write_file(out_path, text);
  }
}

void emit_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    atomic_write_file(out_path, text);
  }
}

// --delta accepts an inline JSON array or a path to a JSON file holding one
// (optionally wrapped as {"Delta": [[...]]}).
Eigen::MatrixXd load_delta(const std::string& text) {
  json j;
  if (!text.empty() && (text.front() == '[' || text.front() == '{')) {
    try {
      j = json::parse(text);
    } catch (const json::parse_error& err) {
      throw ValidationError(std::string("cannot parse --delta: ") + err.what());
    }
  } else {
    try {
      j = json::parse(read_file(text));
    } catch (const json::parse_error& err) {
      throw ValidationError("cannot parse delta file '" + text +
                            "': " + err.what());
    }
  }
  if (j.is_object() && j.contains("Delta")) j = j["Delta"];
  return matrix_from_json(j, "Delta");
}

struct BudgetOpts {
  long N = 1;
  long T = 1;
  long NT = 0;  // overrides N=1, T=NT when set
  double beta = 1.0;

  ExperimentBudget resolve() const {
    ExperimentBudget budget;
    if (NT > 0) {
      budget.N = 1;
      budget.T = NT;
    } else {
      budget.N = N;
      budget.T = T;
    }
    budget.beta = beta;
    validate_budget(budget);
    return budget;
  }
};

void add_budget_opts(CLI::App* cmd, BudgetOpts& opts, long default_n,
                     long default_t, double default_beta) {
  opts.N = default_n;
  opts.T = default_t;
  opts.beta = default_beta;
  cmd->add_option("--N", opts.N, std::string("number of rollouts") + kToolDefault)
      ->capture_default_str();
  cmd->add_option("--T", opts.T, std::string("rollout length") + kToolDefault)
      ->capture_default_str();
  cmd->add_option("--NT", opts.NT,
                  "total steps; shorthand for --N 1 --T <NT>");
  cmd->add_option("--beta", opts.beta,
                  std::string("average input energy per step") + kToolDefault)
      ->capture_default_str();
}

json budget_to_json(const ExperimentBudget& budget) {
  return json{{"N", budget.N}, {"T", budget.T}, {"beta", budget.beta}};
}

json certificate_to_json(const LowerBoundCertificate& cert) {
  json j;
  j["bound_value"] = cert.bound_value;
  j["gradient_gap"] = cert.gradient_gap;
  j["kl_value"] = cert.kl_value;
  j["vacuous"] = cert.vacuous;
  j["Delta"] = matrix_to_json(cert.delta_used.Delta);
  return j;
}

// Optimum-side intermediates shared by the certificate commands.
json optimum_to_json(const StateSpaceSystem& S, const CostSpec& cost) {
  DareSolution opt = solve_dare_optimal(S, cost);
  Gramian G = closed_loop_gramian(S, opt.K);
  json j;
  j["K_star"] = matrix_to_json(opt.K.K);
  j["P"] = matrix_to_json(opt.P.P);
  j["Gamma"] = matrix_to_json(G.Gamma);
  return j;
}

json scalar_po_to_json(const ScalarPoCertificate& detail) {
  json j = certificate_to_json(detail.cert);
  j["k_star"] = detail.k_star;
  j["p_star"] = detail.p_star;
  j["closed_loop"] = detail.closed_loop;
  j["filter_F"] = detail.filter_f;
  j["filter_gain"] = detail.filter_gain;
  j["sigma_nu"] = detail.sigma_nu;
  j["gamma_nu"] = detail.gamma_nu;
  j["delta"] = detail.delta;
  j["excitation_var"] = detail.excitation_var;
  j["closed_form_value"] = detail.closed_form_value;
  return j;
}

struct GradientArgs {
  std::string system_path;
  double a = 0.0, b = 0.0, sigma_w = 1.0, q = 1.0, r = 1.0;
  bool scalar = false;
  double k = 0.0;
  bool has_k = false;
  std::string K_text;
  std::string out_path;
};

void run_gradient(const GradientArgs& args) {
  StateSpaceSystem S;
  CostSpec cost;
  if (!args.system_path.empty()) {
    SystemFile file = load_system_file(args.system_path);
    S = file.system;
    cost = file.cost;
  } else if (args.scalar) {
    S = make_scalar_system(args.a, args.b, args.sigma_w);
    cost = make_scalar_cost(args.q, args.r);
  } else {
    throw ValidationError("gradient: provide --system or scalar flags (--a/--b)");
  }

  Controller K;
  if (args.has_k) {
    K.K = Eigen::MatrixXd::Constant(1, 1, args.k);
  } else if (!args.K_text.empty()) {
    K.K = load_delta(args.K_text);
  } else {
    throw ValidationError("gradient: provide --k or --K");
  }
  validate_controller(K, S.dx(), S.du());
  if (!is_stabilizing(K, S)) {
    throw UnstableClosedLoop("gradient: K does not stabilize the system");
  }

  ValueMatrix P = solve_lyapunov_value(S, cost, K);
  Gramian G = closed_loop_gramian(S, K);
  json j;
  j["gradient"] = matrix_to_json(exact_policy_gradient(S, cost, K));
  j["cost"] = (P.P * S.SigmaW).trace();
  j["P"] = matrix_to_json(P.P);
  j["Gamma"] = matrix_to_json(G.Gamma);
  j["spectral_radius"] = spectral_radius(closed_loop(S, K));
  emit(j, args.out_path);
}

std::vector<std::vector<std::string>> certificate_csv_rows(
    const std::vector<std::pair<double, LowerBoundCertificate>>& points) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(points.size());
  for (const auto& [x, cert] : points) {
    rows.push_back({format_double(x), format_double(cert.bound_value),
                    format_double(cert.gradient_gap),
                    format_double(cert.kl_value),
                    cert.vacuous ? "true" : "false"});
  }
  return rows;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::string body = text;
  bool logspace = false;
  if (body.rfind("logspace:", 0) == 0) {
    logspace = true;
    body = body.substr(9);
  }
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t comma = body.find(',', pos);
    std::string token = body.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!token.empty()) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw ValidationError("grid: cannot parse '" + token + "'");
      }
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (logspace) {
    if (values.size() != 3 || values[2] < 2 || values[0] <= 0 || values[1] <= 0) {
      throw ValidationError("grid: logspace wants start,stop,count (count >= 2)");
    }
    int count = static_cast<int>(values[2]);
    double lo = std::log10(values[0]);
    double hi = std::log10(values[1]);
    for (int i = 0; i < count; ++i) {
      grid.push_back(std::pow(10.0, lo + (hi - lo) * i / (count - 1)));
    }
  } else {
    grid = values;
  }
  if (grid.empty()) throw ValidationError("grid: empty");
  return grid;
}

std::string figure1_csv(const std::vector<Figure1Row>& rows) {
  std::vector<std::vector<std::string>> body;
  body.reserve(rows.size());
  for (const Figure1Row& row : rows) {
    body.push_back({format_double(row.b), row.method,
                    format_double(row.error_std),
                    std::to_string(row.n_failures),
                    std::to_string(row.n_samples), std::to_string(row.seed)});
  }
  return to_csv({"b", "method", "error_std", "n_failures", "n_samples", "seed"},
                body);
}

std::string figure1_svg(const std::vector<Figure1Row>& rows) {
  constexpr int kW = 640, kH = 480, kPad = 60;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double bmin = 1e300, bmax = -1e300, emin = 1e300, emax = -1e300;
  for (const Figure1Row& row : rows) {
    if (row.error_std <= 0.0) continue;
    series[row.method].push_back({row.b, row.error_std});
    bmin = std::min(bmin, row.b);
    bmax = std::max(bmax, row.b);
    emin = std::min(emin, row.error_std);
    emax = std::max(emax, row.error_std);
  }
  if (series.empty() || bmin >= bmax) {
    bmin = 0.0;
    bmax = 1.0;
    emin = 0.1;
    emax = 1.0;
  }
  double lo = std::floor(std::log10(emin));
  double hi = std::ceil(std::log10(emax));
  if (hi <= lo) hi = lo + 1;
  auto xpix = [&](double b) {
    return kPad + (b - bmin) / (bmax - bmin) * (kW - 2 * kPad);
  };
  auto ypix = [&](double e) {
    return kH - kPad - (std::log10(e) - lo) / (hi - lo) * (kH - 2 * kPad);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
      << "\" height=\"" << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\""
      << kW - kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad
      << "\" y2=\"" << kH - kPad << "\" stroke=\"black\"/>\n";
  for (double d = lo; d <= hi; d += 1.0) {
    double y = ypix(std::pow(10.0, d));
    svg << "<line x1=\"" << kPad - 4 << "\" y1=\"" << y << "\" x2=\"" << kPad
        << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"4\" y=\"" << y + 4 << "\" font-size=\"11\">1e"
        << static_cast<int>(d) << "</text>\n";
  }
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c"};
  int ci = 0;
  int legend_y = kPad;
  for (const auto& [method, points] : series) {
    svg << "<polyline fill=\"none\" stroke=\"" << colors[ci % 3]
        << "\" stroke-width=\"2\" points=\"";
    for (const auto& [b, e] : points) svg << xpix(b) << ',' << ypix(e) << ' ';
    svg << "\"/>\n";
    for (const auto& [b, e] : points) {
      svg << "<circle cx=\"" << xpix(b) << "\" cy=\"" << ypix(e)
          << "\" r=\"3\" fill=\"" << colors[ci % 3] << "\"/>\n";
      svg << "<text x=\"" << xpix(b) << "\" y=\"" << kH - kPad + 16
          << "\" font-size=\"11\" text-anchor=\"middle\">" << b << "</text>\n";
    }
    svg << "<text x=\"" << kW - kPad - 120 << "\" y=\"" << legend_y
        << "\" font-size=\"12\" fill=\"" << colors[ci % 3] << "\">" << method
        << "</text>\n";
    legend_y += 16;
    ++ci;
  }
  svg << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12
      << "\" font-size=\"12\" text-anchor=\"middle\">b</text>\n";
  svg << "<text x=\"14\" y=\"" << kH / 2
      << "\" font-size=\"12\" transform=\"rotate(-90 14 " << kH / 2
      << ")\" text-anchor=\"middle\">error std</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

int run_cli(int argc, char** argv) {
  CLI::App app{"pg-limits: exact policy gradients and estimation-hardness "
               "certificates for linear-quadratic control"};
  app.require_subcommand(1);

  // ---- gradient ----------------------------------------------------------
  auto grad_args = std::make_shared<GradientArgs>();
  CLI::App* grad = app.add_subcommand(
      "gradient", "exact policy gradient, cost and gramians at a gain");
  grad->add_option("--system", grad_args->system_path, "system JSON file");
  auto* opt_a = grad->add_option("--a", grad_args->a, "scalar dynamics");
  grad->add_option("--b", grad_args->b, "scalar input gain");
  grad->add_option("--sigma-w", grad_args->sigma_w,
                   std::string("scalar noise variance") + kToolDefault)
      ->capture_default_str();
  grad->add_option("--q", grad_args->q, std::string("state weight") + kToolDefault)
      ->capture_default_str();
  grad->add_option("--r", grad_args->r, std::string("input weight") + kToolDefault)
      ->capture_default_str();
  auto* opt_k = grad->add_option("--k", grad_args->k, "scalar gain");
  grad->add_option("--K", grad_args->K_text, "gain matrix (inline JSON or file)");
  grad->add_option("--out", grad_args->out_path, "output path (default stdout)");
  grad->callback([grad_args, opt_a, opt_k]() {
    grad_args->scalar = opt_a->count() > 0;
    grad_args->has_k = opt_k->count() > 0;
    run_gradient(*grad_args);
  });

  // ---- certificate -------------------------------------------------------
  CLI::App* cert = app.add_subcommand(
      "certificate", "two-point estimation-error lower bounds");
  cert->require_subcommand(1);

  {
    auto path = std::make_shared<std::string>();
    auto delta_text = std::make_shared<std::string>();
    auto opts = std::make_shared<BudgetOpts>();
    auto out = std::make_shared<std::string>();
    CLI::App* c = cert->add_subcommand(
        "theorem1", "state-feedback certificate for a given perturbation");
    c->add_option("--system", *path, "system JSON file")->required();
    c->add_option("--delta", *delta_text, "perturbation (inline JSON or file)")
        ->required();
    add_budget_opts(c, *opts, 100, 100, 1.0);
    c->add_option("--out", *out, "output path (default stdout)");
    c->callback([path, delta_text, opts, out]() {
      SystemFile file = load_system_file(*path);
      ExperimentBudget budget = opts->resolve();
      Perturbation delta{load_delta(*delta_text)};
      ExplorationPolicy policy =
          budget_normalized_policy(file.system, file.cost, budget);
      LowerBoundCertificate result =
          lower_bound_theorem1(file.system, file.cost, delta, policy, budget);
      json j = certificate_to_json(result);
      j["mode"] = "theorem1";
      j["budget"] = budget_to_json(budget);
      j.update(optimum_to_json(file.system, file.cost));
      emit(j, *out);
    });
  }
  {
    auto path = std::make_shared<std::string>();
    auto delta_text = std::make_shared<std::string>();
    auto opts = std::make_shared<BudgetOpts>();
    auto epsilon = std::make_shared<double>(1.0);
    auto out = std::make_shared<std::string>();
    CLI::App* c = cert->add_subcommand(
        "corollary1", "nullspace-perturbation certificate at 1/sqrt(beta N T)");
    c->add_option("--system", *path, "system JSON file")->required();
    c->add_option("--delta", *delta_text,
                  "perturbation with Delta K_star = 0 (inline JSON or file)")
        ->required();
    add_budget_opts(c, *opts, 100, 100, 1.0);
    c->add_option("--epsilon", *epsilon,
                  std::string("perturbation scale") + kToolDefault)
        ->capture_default_str();
    c->add_option("--out", *out, "output path (default stdout)");
    c->callback([path, delta_text, opts, epsilon, out]() {
      SystemFile file = load_system_file(*path);
      ExperimentBudget budget = opts->resolve();
      Perturbation delta{load_delta(*delta_text)};
      LowerBoundCertificate result = corollary_nullspace_bound(
          file.system, file.cost, budget, delta, *epsilon);
      json j = certificate_to_json(result);
      j["mode"] = "corollary1";
      j["budget"] = budget_to_json(budget);
      j.update(optimum_to_json(file.system, file.cost));
      emit(j, *out);
    });
  }
  {
    auto a = std::make_shared<double>(1.0);
    auto b = std::make_shared<double>(1.0);
    auto q = std::make_shared<double>(1.0);
    auto r = std::make_shared<double>(1.0);
    auto sw = std::make_shared<double>(1.0);
    auto opts = std::make_shared<BudgetOpts>();
    auto out = std::make_shared<std::string>();
    CLI::App* c = cert->add_subcommand(
        "scalar", "scalar certificate with delta^2 = 1/(2NT(Gamma+beta))");
    c->add_option("--a", *a, "dynamics")->required();
    c->add_option("--b", *b, "input gain")->required();
    c->add_option("--q", *q, std::string("state weight") + kToolDefault)
        ->capture_default_str();
    c->add_option("--r", *r, std::string("input weight") + kToolDefault)
        ->capture_default_str();
    c->add_option("--sigma-w", *sw,
                  std::string("noise variance") + kToolDefault)
        ->capture_default_str();
    add_budget_opts(c, *opts, 100, 100, 1.0);
    c->add_option("--out", *out, "output path (default stdout)");
    c->callback([a, b, q, r, sw, opts, out]() {
      ExperimentBudget budget = opts->resolve();
      ScalarCertificate detail = scalar_lower_bound(*a, *b, *q, *r, *sw, budget);
      json j = certificate_to_json(detail.cert);
      j["mode"] = "scalar";
      j["budget"] = budget_to_json(budget);
      j["k_star"] = detail.k_star;
      j["p_star"] = detail.p_star;
      j["gamma"] = detail.gamma;
      j["closed_loop"] = detail.closed_loop;
      j["delta"] = detail.delta;
      j["closed_form_value"] = detail.closed_form_value;
      j["kl_upper"] = detail.kl_upper;
      emit(j, *out);
    });
  }
  {
    auto path = std::make_shared<std::string>();
    auto delta_text = std::make_shared<std::string>();
    auto opts = std::make_shared<BudgetOpts>();
    auto out = std::make_shared<std::string>();
    CLI::App* c = cert->add_subcommand(
        "theorem2", "output-feedback certificate on the filter reduction");
    c->add_option("--system", *path, "system JSON file with C and SigmaV")
        ->required();
    c->add_option("--delta", *delta_text, "perturbation (inline JSON or file)")
        ->required();
    add_budget_opts(c, *opts, 100, 100, 1.0);
    c->add_option("--out", *out, "output path (default stdout)");
    c->callback([path, delta_text, opts, out]() {
      SystemFile file = load_system_file(*path);
      if (!file.partially_observed()) {
        throw ValidationError("theorem2: system file must provide C and SigmaV");
      }
      OutputSystem G = file.output_system();
      ExperimentBudget budget = opts->resolve();
      Perturbation delta{load_delta(*delta_text)};
      StateSpaceSystem reduction = filter_reduction(G);
      ExplorationPolicy policy =
          budget_normalized_policy(reduction, file.cost, budget);
      LowerBoundCertificate result =
          lower_bound_theorem2(G, file.cost, delta, policy, budget);
      json j = certificate_to_json(result);
      j["mode"] = "theorem2";
      j["budget"] = budget_to_json(budget);
      j["SigmaNu"] = matrix_to_json(reduction.SigmaW);
      j.update(optimum_to_json(reduction, file.cost));
      emit(j, *out);
    });
  }
  {
    auto a = std::make_shared<double>(0.9);
    auto b = std::make_shared<double>(0.0);
    auto c_par = std::make_shared<double>(0.0);
    auto m = std::make_shared<double>(0.0);
    auto s = std::make_shared<double>(1.0);
    auto opts = std::make_shared<BudgetOpts>();
    auto out = std::make_shared<std::string>();
    CLI::App* c = cert->add_subcommand(
        "scalar-po", "almost-scalar output-feedback certificate, "
                     "delta^2 = 1/(NT beta) on the dead input");
    c->add_option("--a", *a, "dynamics")->required();
    auto* opt_b = c->add_option("--b", *b, "input gain");
    auto* opt_c = c->add_option("--c", *c_par, "output gain");
    auto* opt_m =
        c->add_option("--m", *m, "Markov parameter; sets b = sqrt(m) s, c = sqrt(m)/s");
    c->add_option("--s", *s,
                  std::string("representation scale for --m") + kToolDefault)
        ->capture_default_str();
    add_budget_opts(c, *opts, 100, 100, 1.0);
    c->add_option("--out", *out, "output path (default stdout)");
    c->callback([a, b, c_par, m, s, opts, out, opt_b, opt_c, opt_m]() {
      double bb, cc;
      if (opt_m->count() > 0) {
        if (*m <= 0.0) throw ValidationError("scalar-po: m must be positive");
        bb = std::sqrt(*m) * *s;
        cc = std::sqrt(*m) / *s;
      } else if (opt_b->count() > 0 && opt_c->count() > 0) {
        bb = *b;
        cc = *c_par;
      } else {
        throw ValidationError("scalar-po: provide --m or both --b and --c");
      }
      ExperimentBudget budget = opts->resolve();
      ScalarPoCertificate detail = scalar_po_bound(*a, bb, cc, budget);
      json j = scalar_po_to_json(detail);
      j["mode"] = "scalar-po";
      j["budget"] = budget_to_json(budget);
      j["b"] = bb;
      j["c"] = cc;
      emit(j, *out);
    });
  }
  {
    auto dx = std::make_shared<int>(6);
    auto rho = std::make_shared<double>(0.5);
    auto opts = std::make_shared<BudgetOpts>();
    auto total = std::make_shared<double>(0.0);
    auto out = std::make_shared<std::string>();
    CLI::App* c = cert->add_subcommand(
        "curse", "integrator-chain certificate with exponential growth in dx");
    c->add_option("--dx", *dx, "state dimension (>= 3)")->required();
    c->add_option("--rho", *rho, std::string("chain decay in (0,1)") + kToolDefault)
        ->capture_default_str();
    add_budget_opts(c, *opts, 100, 100, 100.0);
    auto* opt_budget = c->add_option(
        "--budget", *total, "total energy beta*N*T; sets beta = budget/(N T)");
    c->add_option("--out", *out, "output path (default stdout)");
    c->callback([dx, rho, opts, total, out, opt_budget]() {
      if (opt_budget->count() > 0) {
        if (*total <= 0.0) throw ValidationError("curse: budget must be positive");
        opts->beta = *total / (static_cast<double>(opts->N) *
                               static_cast<double>(opts->T));
      }
      ExperimentBudget budget = opts->resolve();
      CurseCertificate detail = dimension_curse_bound(*dx, *rho, budget);
      json j = certificate_to_json(detail.cert);
      j["mode"] = "curse";
      j["budget"] = budget_to_json(budget);
      j["subsystem_gap"] = detail.subsystem_gap;
      j["riccati_value"] = detail.riccati_value;
      j["delta1"] = matrix_to_json(detail.delta1);
      IntegratorChain chain = make_integrator_chain(*dx, *rho);
      j.update(optimum_to_json(chain.system, chain.cost));
      emit(j, *out);
    });
  }

  // ---- figure1 -----------------------------------------------------------
  {
    auto config = std::make_shared<Figure1Config>();
    auto grid_text = std::make_shared<std::string>();
    auto methods_text = std::make_shared<std::string>("plugin,zeroth");
    auto out = std::make_shared<std::string>();
    auto svg = std::make_shared<std::string>();
    CLI::App* c = app.add_subcommand(
        "figure1", "gradient-estimator spread across a controllability sweep");
    c->add_option("--b-grid", *grid_text,
                  std::string("input gains (default 0.05,0.1,0.25,0.5,1.0)") +
                      kExperimentDefault);
    c->add_option("--a", config->a, std::string("dynamics") + kExperimentDefault)
        ->capture_default_str();
    c->add_option("--sigma-w", config->sigma_w_var,
                  std::string("noise variance") + kExperimentDefault)
        ->capture_default_str();
    c->add_option("--T", config->T,
                  std::string("rollout length") + kExperimentDefault)
        ->capture_default_str();
    c->add_option("--n-plugin", config->n_plugin,
                  std::string("plug-in rollouts") + kExperimentDefault)
        ->capture_default_str();
    c->add_option("--n-zeroth", config->n_zeroth,
                  std::string("zeroth-order rollouts") + kExperimentDefault)
        ->capture_default_str();
    c->add_option("--batch", config->zeroth_batch,
                  std::string("rollouts per zeroth-order batch") + kExperimentDefault)
        ->capture_default_str();
    c->add_option("--excitation-std", config->excitation_std,
                  std::string("plug-in input excitation") + kToolDefault)
        ->capture_default_str();
    c->add_option("--radius", config->zeroth_radius,
                  std::string("zeroth-order smoothing radius") + kToolDefault)
        ->capture_default_str();
    c->add_option("--b-ref", config->eval_gain_b_ref,
                  std::string("evaluation gain comes from the optimum at this b") +
                      kToolDefault)
        ->capture_default_str();
    c->add_option("--methods", *methods_text,
                  std::string("comma list: plugin,zeroth") + kToolDefault)
        ->capture_default_str();
    c->add_option("--seed", config->seed, std::string("RNG seed") + kToolDefault)
        ->capture_default_str();
    c->add_option("--workers", config->workers,
                  std::string("worker threads") + kToolDefault)
        ->capture_default_str();
    c->add_option("--out", *out, "CSV output path (default stdout)");
    c->add_option("--svg", *svg, "also write an SVG line plot here");
    c->callback([config, grid_text, methods_text, out, svg]() {
      if (!grid_text->empty()) config->b_grid = parse_grid(*grid_text);
      config->methods = split_commas(*methods_text);
      if (config->methods.empty()) {
        throw ValidationError("figure1: --methods must name at least one method");
      }
      std::vector<Figure1Row> rows = figure1_experiment(*config);
      emit_text(figure1_csv(rows), *out);
      if (!svg->empty()) atomic_write_file(*svg, figure1_svg(rows));
    });
  }

  // ---- sweep -------------------------------------------------------------
  CLI::App* sweep = app.add_subcommand("sweep", "certificate sweeps to CSV");
  sweep->require_subcommand(1);
  {
    auto a = std::make_shared<double>(1.0);
    auto q = std::make_shared<double>(1.0);
    auto r = std::make_shared<double>(1.0);
    auto sw = std::make_shared<double>(1.0);
    auto grid_text = std::make_shared<std::string>("1,0.5,0.1,0.05");
    auto opts = std::make_shared<BudgetOpts>();
    auto out = std::make_shared<std::string>();
    CLI::App* c = sweep->add_subcommand("b-sweep",
                                        "scalar certificate across input gains");
    c->add_option("--a", *a, std::string("dynamics") + kToolDefault)
        ->capture_default_str();
    c->add_option("--q", *q, std::string("state weight") + kToolDefault)
        ->capture_default_str();
    c->add_option("--r", *r, std::string("input weight") + kToolDefault)
        ->capture_default_str();
    c->add_option("--sigma-w", *sw, std::string("noise variance") + kToolDefault)
        ->capture_default_str();
    c->add_option("--b-grid", *grid_text, std::string("grid") + kToolDefault)
        ->capture_default_str();
    add_budget_opts(c, *opts, 100, 100, 1.0);
    c->add_option("--out", *out, "CSV output path (default stdout)");
    c->callback([a, q, r, sw, grid_text, opts, out]() {
      ExperimentBudget budget = opts->resolve();
      std::vector<std::pair<double, LowerBoundCertificate>> points;
      for (double b : parse_grid(*grid_text)) {
        points.emplace_back(b,
                            scalar_lower_bound(*a, b, *q, *r, *sw, budget).cert);
      }
      emit_text(
          to_csv({"b", "bound_value", "gradient_gap", "kl_value", "vacuous"},
                 certificate_csv_rows(points)),
          *out);
    });
  }
  {
    auto a = std::make_shared<double>(0.9);
    auto s = std::make_shared<double>(1.0);
    auto grid_text = std::make_shared<std::string>("logspace:1,1e-3,7");
    auto opts = std::make_shared<BudgetOpts>();
    auto out = std::make_shared<std::string>();
    CLI::App* c = sweep->add_subcommand(
        "markov", "almost-scalar certificate across Markov parameters");
    c->add_option("--a", *a, std::string("dynamics") + kToolDefault)
        ->capture_default_str();
    c->add_option("--s", *s, std::string("representation scale") + kToolDefault)
        ->capture_default_str();
    c->add_option("--m-grid", *grid_text, std::string("grid") + kToolDefault)
        ->capture_default_str();
    add_budget_opts(c, *opts, 100, 100, 100.0);
    c->add_option("--out", *out, "CSV output path (default stdout)");
    c->callback([a, s, grid_text, opts, out]() {
      ExperimentBudget budget = opts->resolve();
      std::vector<MarkovSweepRow> rows =
          markov_parameter_sweep(*a, parse_grid(*grid_text), *s, budget);
      std::vector<std::vector<std::string>> body;
      for (const MarkovSweepRow& row : rows) {
        body.push_back({format_double(row.m), format_double(row.b),
                        format_double(row.c),
                        format_double(row.detail.cert.bound_value),
                        format_double(row.detail.cert.gradient_gap),
                        format_double(row.detail.cert.kl_value),
                        row.detail.cert.vacuous ? "true" : "false"});
      }
      emit_text(to_csv({"m", "b", "c", "bound_value", "gradient_gap",
                        "kl_value", "vacuous"},
                       body),
                *out);
    });
  }
  {
    auto dx_from = std::make_shared<int>(4);
    auto dx_to = std::make_shared<int>(8);
    auto rho = std::make_shared<double>(0.5);
    auto opts = std::make_shared<BudgetOpts>();
    auto out = std::make_shared<std::string>();
    CLI::App* c = sweep->add_subcommand(
        "dimension", "integrator-chain certificate across state dimensions");
    c->add_option("--dx-from", *dx_from, std::string("first dx") + kToolDefault)
        ->capture_default_str();
    c->add_option("--dx-to", *dx_to, std::string("last dx") + kToolDefault)
        ->capture_default_str();
    c->add_option("--rho", *rho, std::string("chain decay") + kToolDefault)
        ->capture_default_str();
    add_budget_opts(c, *opts, 100, 100, 100.0);
    c->add_option("--out", *out, "CSV output path (default stdout)");
    c->callback([dx_from, dx_to, rho, opts, out]() {
      if (*dx_from < 3 || *dx_to < *dx_from) {
        throw ValidationError("dimension sweep: need 3 <= dx-from <= dx-to");
      }
      ExperimentBudget budget = opts->resolve();
      std::vector<std::vector<std::string>> body;
      double previous = 0.0;
      for (int dx = *dx_from; dx <= *dx_to; ++dx) {
        CurseCertificate detail = dimension_curse_bound(dx, *rho, budget);
        double ratio =
            previous > 0.0 ? detail.cert.bound_value / previous : 0.0;
        previous = detail.cert.bound_value;
        body.push_back({std::to_string(dx),
                        format_double(detail.cert.bound_value),
                        format_double(detail.cert.gradient_gap),
                        format_double(detail.cert.kl_value),
                        detail.cert.vacuous ? "true" : "false",
                        format_double(detail.subsystem_gap),
                        format_double(detail.riccati_value),
                        format_double(ratio)});
      }
      emit_text(to_csv({"dx", "bound_value", "gradient_gap", "kl_value",
                        "vacuous", "subsystem_gap", "riccati_value",
                        "ratio_to_previous"},
                       body),
                *out);
    });
  }

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: validation: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: precondition: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace pglim
