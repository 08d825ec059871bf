#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "djds/abstraction.hpp"
#include "djds/model.hpp"
#include "djds/simulate.hpp"
#include "djds/stability.hpp"
#include "djds/synthesis.hpp"

using namespace djds;

namespace {

constexpr int EXIT_PARSE = 1;
constexpr int EXIT_INFEASIBLE = 2;
constexpr int EXIT_EMPTY_CONTROLLER = 3;
constexpr int EXIT_NO_MATCH = 4;

Vec parse_vec(const std::string& s, std::size_t n) {
  Vec v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
  if (v.size() == 1) v.assign(n, v[0]);
  if (v.size() != n)
    throw std::runtime_error("expected 1 or " + std::to_string(n) + " values: " + s);
  return v;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// CSV artifacts carry full double precision so downstream audits can
// recompute the defining inequalities without rounding slack
std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

struct PlanContext {
  ModelFile mf;
  CertificateFile cf;
  KlEnvelope env;
  SigmaBound bound;
  AbstractionParams params;
  SimConfig cfg;
};

PlanContext make_context(const std::string& model_path, const std::string& cert_path,
                         double h, std::size_t N, const std::string& zs_spec,
                         double eta, double dt, double dq, std::uint64_t seed) {
  PlanContext ctx;
  ctx.mf = parse_model_file(model_path);
  ctx.cf = read_certificate(cert_path);
  if (ctx.cf.model_hash != ctx.mf.model.hash())
    throw std::runtime_error("certificate was computed for a different model");
  if (!ctx.mf.region)
    throw std::runtime_error("model file lacks a [region] section (needed for sigma)");
  double tau = ctx.mf.model.tau();
  ctx.env = derive_envelope(ctx.cf.cert, tau);
  ctx.cfg.dt = dt > 0 ? dt : h / 100.0;
  ctx.cfg.seed = seed;
  ctx.params.h = h;
  ctx.params.N = N;
  ctx.params.inputs = quantize(ctx.mf.input, eta);
  Vec zs = parse_vec(zs_spec, ctx.mf.model.n);
  ctx.params.zeta_s = HistorySegment::constant(zs, tau, ctx.cfg.dt);
  ctx.bound = make_sigma_bound(ctx.mf.model, ctx.cf.cert, ctx.env, *ctx.mf.region,
                               ctx.params.inputs, ctx.params.zeta_s, dq);
  return ctx;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"sampled-data safety controller synthesis for linear delayed "
               "jump-diffusion systems"};
  app.require_subcommand(1);

  std::string model_path, cert_path, out_dir = ".", controller_path;
  std::string zs_spec = "0", z0_spec = "0", w_lo_spec, w_hi_spec, mode_str = "noiseless";
  double h = 0, eps = -1, eta = 1, dt = -1, dq = 0.1, tol = -1;
  std::size_t N = 0, trials = 500, periods = 300, iterations = 6;
  std::uint64_t seed = 1;
  std::vector<std::size_t> N_list;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--model", model_path, "model file")->required();
    cmd->add_option("--out", out_dir, "output directory");
  };

  CLI::App* certify = app.add_subcommand("certify", "search a stability certificate");
  add_common(certify);
  certify->add_option("--tol", tol, "inequality tolerance (negative: scale-aware)");
  certify->add_option("--iterations", iterations, "V-K outer iterations");

  CLI::App* plan = app.add_subcommand("plan", "solve for epsilon or N");
  add_common(plan);
  plan->add_option("--cert", cert_path, "certificate file")->required();
  plan->add_option("--period", h, "sampling period")->required();
  plan->add_option("--N", N_list, "temporal horizon(s)");
  plan->add_option("--eps", eps, "target precision (solves for N when set)");
  plan->add_option("--zs", zs_spec, "source state (scalar or comma list)");
  plan->add_option("--eta", eta, "input quantization");
  plan->add_option("--dt", dt, "integration step (default h/100)");
  plan->add_option("--dq", dq, "quadrature step");
  plan->add_option("--seed", seed, "master seed");
  plan->add_option("--trials", trials, "Monte Carlo trials (stochastic mode)");
  plan->add_option("--mode", mode_str, "noiseless | stochastic");

  CLI::App* synth = app.add_subcommand("synthesize", "build abstraction and controller");
  add_common(synth);
  synth->add_option("--cert", cert_path, "certificate file")->required();
  synth->add_option("--period", h, "sampling period")->required();
  synth->add_option("--N", N, "temporal horizon")->required();
  synth->add_option("--zs", zs_spec, "source state");
  synth->add_option("--w-lo", w_lo_spec, "comfort zone lower corner")->required();
  synth->add_option("--w-hi", w_hi_spec, "comfort zone upper corner")->required();
  synth->add_option("--eta", eta, "input quantization");
  synth->add_option("--dt", dt, "integration step (default h/100)");
  synth->add_option("--dq", dq, "quadrature step");
  synth->add_option("--seed", seed, "master seed");
  synth->add_option("--trials", trials, "Monte Carlo trials (stochastic mode)");
  synth->add_option("--mode", mode_str, "noiseless | stochastic");

  CLI::App* sim = app.add_subcommand("simulate", "run the closed loop");
  sim->add_option("--model", model_path, "model file")->required();
  sim->add_option("--out", out_dir, "output directory");
  sim->add_option("--controller", controller_path, "controller file")->required();
  sim->add_option("--z0", z0_spec, "initial history (scalar or comma list)");
  sim->add_option("--trials", trials, "realizations");
  sim->add_option("--periods", periods, "sampling periods per realization");
  sim->add_option("--dt", dt, "integration step (default h/100)");
  sim->add_option("--seed", seed, "master seed");

  CLI::App* report = app.add_subcommand("report", "describe an artifact");
  report->add_option("--controller", controller_path, "controller file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int r = app.exit(e);
    return r == 0 ? 0 : EXIT_PARSE;
  }

  try {
    std::filesystem::create_directories(out_dir);
    if (certify->parsed()) {
      Timer timer;
      ModelFile mf = parse_model_file(model_path);
      VkOptions opt;
      opt.iterations = iterations;
      opt.tol = tol;
      auto cert = vk_search(mf.model, Matrix::identity(mf.model.n), opt);
      if (!cert) {
        std::cerr << "infeasible: no certificate found on the search grid\n";
        return EXIT_INFEASIBLE;
      }
      std::string path = out_dir + "/certificate.txt";
      write_certificate(path, *cert, tol, mf.model.hash());
      KlEnvelope env = derive_envelope(*cert, mf.model.tau());
      std::cout << "kappa = " << fmt(cert->kappa) << "\n"
                << "kappa0 = " << fmt(cert->kappa0) << "\n"
                << "c = " << fmt(cert->c[0]) << " " << fmt(cert->c[1]) << " "
                << fmt(cert->c[2]) << " " << fmt(cert->c[3]) << " " << fmt(cert->c[4])
                << "\n"
                << "lambda_min_P = " << fmt(cert->lambda_min_P)
                << ", lambda_max_P = " << fmt(cert->lambda_max_P) << "\n"
                << "beta ratio = " << fmt(env.ratio)
                << ", gamma coeff = " << fmt(env.gamma_coeff) << "\n"
                << "certificate written to " << path << "\n"
                << "wall time s = " << fmt(timer.seconds()) << "\n";
      return 0;
    }

    if (plan->parsed()) {
      PrecisionMode mode = mode_str == "stochastic" ? PrecisionMode::stochastic
                                                    : PrecisionMode::noiseless;
      if (N_list.empty() && eps < 0)
        throw std::runtime_error("plan: provide --N or --eps");
      PlanContext ctx = make_context(model_path, cert_path, h, 1, zs_spec, eta, dt, dq, seed);

      if (!N_list.empty()) {
        std::string path = out_dir + "/plan.csv";
        std::ofstream csv(path);
        csv << "N,feasible,epsilon,self_coeff,sigma_term,tail_term,lhs_at_eps,"
               "quant_term,total,Z\n";
        bool any = false;
        for (std::size_t n : N_list) {
          ctx.params.N = n;
          EpsilonPlan p =
              min_epsilon(ctx.mf.model, ctx.params, ctx.bound, mode, ctx.cfg, trials);
          csv << n << "," << (p.feasible ? 1 : 0) << ","
              << fmt_full(p.feasible ? p.budget.epsilon : 0) << ","
              << fmt_full(p.self_coeff) << "," << fmt_full(p.sigma_term) << ","
              << fmt_full(p.tail_term) << ","
              << fmt_full(p.feasible ? p.lhs(p.budget.epsilon) : 0) << ","
              << fmt_full(p.budget.quant_term) << ","
              << fmt_full(p.feasible ? p.budget.total : 0) << "," << fmt_full(p.Z)
              << "\n";
          if (p.feasible) {
            any = true;
            std::cout << "N = " << n << ": epsilon = " << fmt(p.budget.epsilon)
                      << " (sigma term " << fmt(p.sigma_term) << ", tail term "
                      << fmt(p.tail_term) << ", total " << fmt(p.budget.total) << ")\n";
          } else {
            std::cout << "N = " << n << ": infeasible — " << p.obstruction << "\n";
          }
        }
        std::cout << "plan written to " << path << "\n";
        if (!any) return EXIT_INFEASIBLE;
        return 0;
      }
      auto nmin = min_horizon(ctx.mf.model, ctx.params, ctx.bound, eps, mode, ctx.cfg);
      if (!nmin) {
        std::cerr << "infeasible: no horizon achieves epsilon = " << fmt(eps) << "\n";
        return EXIT_INFEASIBLE;
      }
      std::cout << "minimal N = " << *nmin << " for epsilon = " << fmt(eps) << "\n";
      return 0;
    }

    if (synth->parsed()) {
      Timer timer;
      PrecisionMode mode = mode_str == "stochastic" ? PrecisionMode::stochastic
                                                    : PrecisionMode::noiseless;
      PlanContext ctx = make_context(model_path, cert_path, h, N, zs_spec, eta, dt, dq, seed);
      EpsilonPlan p = min_epsilon(ctx.mf.model, ctx.params, ctx.bound, mode, ctx.cfg, trials);
      if (!p.feasible) {
        std::cerr << "infeasible plan: " << p.obstruction << "\n";
        return EXIT_INFEASIBLE;
      }
      SafetySpec spec;
      spec.w_lo = parse_vec(w_lo_spec, ctx.mf.model.n);
      spec.w_hi = parse_vec(w_hi_spec, ctx.mf.model.n);
      spec.contraction = p.budget.total;
      std::cout << "epsilon = " << fmt(p.budget.epsilon)
                << ", total precision = " << fmt(p.budget.total) << "\n";
      write_manifest(out_dir + "/manifest.txt", ctx.params, p.budget,
                     ctx.mf.model.hash());
      if (!spec.contracted_nonempty()) {
        std::cerr << "empty controller: contracted comfort zone is empty\n";
        return EXIT_EMPTY_CONTROLLER;
      }
      Bitmap safe = label_safe(ctx.mf.model, ctx.params, spec, ctx.cfg);
      std::uint64_t n_labeled = safe.count();
      Bitmap inv = maximal_invariant(safe, ctx.params);
      std::cout << "states = " << ctx.params.num_states()
                << ", transitions = " << ctx.params.num_transitions()
                << ", labeled safe = " << n_labeled
                << ", invariant = " << inv.count() << "\n";
      std::ofstream stats(out_dir + "/stats.csv");
      stats << "N,states,transitions,labeled_safe,invariant,controller_transitions,"
               "epsilon,total_precision\n";
      if (inv.count() == 0) {
        stats << N << "," << ctx.params.num_states() << ","
              << ctx.params.num_transitions() << "," << n_labeled << ",0,0,"
              << fmt(p.budget.epsilon) << "," << fmt(p.budget.total) << "\n";
        std::cerr << "empty controller: maximal invariant set is empty\n";
        return EXIT_EMPTY_CONTROLLER;
      }
      Controller ctrl = extract_controller(inv, ctx.params, spec, p.budget,
                                           ctx.mf.model.hash(), ctx.mf.model, ctx.cfg);
      stats << N << "," << ctx.params.num_states() << "," << ctx.params.num_transitions()
            << "," << n_labeled << "," << inv.count() << "," << ctrl.transitions()
            << "," << fmt(p.budget.epsilon) << "," << fmt(p.budget.total) << "\n";
      write_controller(out_dir + "/controller.bin", ctrl);
      std::cout << "controller transitions = " << ctrl.transitions() << "\n"
                << "controller written to " << out_dir << "/controller.bin\n"
                << "wall time s = " << fmt(timer.seconds()) << "\n";
      return 0;
    }

    if (sim->parsed()) {
      ModelFile mf = parse_model_file(model_path);
      Controller ctrl = read_controller(controller_path);
      if (ctrl.model_hash != mf.model.hash())
        throw std::runtime_error("controller was synthesized for a different model");
      SimConfig cfg;
      cfg.dt = dt > 0 ? dt : ctrl.params.h / 100.0;
      cfg.seed = seed;
      Vec z0 = parse_vec(z0_spec, mf.model.n);
      HistorySegment zeta0 = HistorySegment::constant(z0, mf.model.tau(), cfg.dt);

      auto m = match_initial(zeta0, mf.model, ctrl, cfg);
      if (!m) {
        std::cerr << "no safe abstract state within total precision "
                  << fmt(ctrl.budget.total) << "\n";
        return EXIT_NO_MATCH;
      }
      std::cout << "matched abstract state " << m->state << " at distance "
                << fmt(m->distance) << "\n";

      // per-time accumulation of squared distance to W, fixed trial order
      std::size_t rows = 0;
      std::vector<double> sum, sumsq;
      std::vector<unsigned> trace0;
      for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng = Rng::for_trial(seed, trial);
        ClosedLoopRun run = run_closed_loop(mf.model, ctrl, zeta0, periods, cfg, rng);
        std::size_t r = run.path.steps() + 1;
        if (rows == 0) {
          rows = r;
          sum.assign(rows, 0.0);
          sumsq.assign(rows, 0.0);
          trace0 = run.input_trace;
          if (trial == 0) {
            write_path_csv(out_dir + "/path0.csv", run.path);
            std::ofstream tr(out_dir + "/inputs0.csv");
            tr << "step,time,input_id";
            for (std::size_t i = 1; i <= ctrl.params.inputs.points.front().size(); ++i)
              tr << ",u" << i;
            tr << "\n";
            for (std::size_t k = 0; k < run.input_trace.size(); ++k) {
              tr << k << "," << fmt(double(k) * ctrl.params.h) << ","
                 << run.input_trace[k];
              for (double v : ctrl.params.inputs.points[run.input_trace[k]])
                tr << "," << fmt(v);
              tr << "\n";
            }
          }
        }
        for (std::size_t k = 0; k < rows; ++k) {
          double d = distance_to_box(&run.path.states[k * mf.model.n], ctrl.spec.w_lo,
                                     ctrl.spec.w_hi);
          sum[k] += d * d;
          sumsq[k] += d * d * d * d;
        }
      }
      std::ofstream csv(out_dir + "/distance.csv");
      csv << "time,mean_sq_distance,stderr,rms_distance\n";
      double worst = 0;
      for (std::size_t k = 0; k < rows; ++k) {
        double mean = sum[k] / double(trials);
        double var = trials > 1
                         ? std::max(0.0, (sumsq[k] - sum[k] * sum[k] / double(trials)) /
                                             double(trials - 1))
                         : 0.0;
        double se = std::sqrt(var / double(trials));
        double rms = std::sqrt(mean);
        worst = std::max(worst, rms);
        csv << fmt(double(k) * cfg.dt) << "," << fmt(mean) << "," << fmt(se) << ","
            << fmt(rms) << "\n";
      }
      std::cout << "max over time of rms distance to W = " << fmt(worst)
                << " (total precision " << fmt(ctrl.budget.total) << ")\n"
                << "csv written to " << out_dir << "/distance.csv\n";
      return 0;
    }

    if (report->parsed()) {
      Controller ctrl = read_controller(controller_path);
      std::cout << "h = " << fmt(ctrl.params.h) << ", N = " << ctrl.params.N
                << ", inputs = " << ctrl.params.inputs.size() << "\n"
                << "states = " << ctrl.params.num_states()
                << ", safe = " << ctrl.safe.count()
                << ", controller transitions = " << ctrl.transitions() << "\n"
                << "epsilon = " << fmt(ctrl.budget.epsilon)
                << ", total precision = " << fmt(ctrl.budget.total) << "\n"
                << "model hash = " << ctrl.model_hash << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    if (what.find("Infeasible") != std::string::npos) return EXIT_INFEASIBLE;
    if (what.find("EmptyController") != std::string::npos ||
        what.find("EmptyContractedZone") != std::string::npos)
      return EXIT_EMPTY_CONTROLLER;
    if (what.find("NoMatch") != std::string::npos) return EXIT_NO_MATCH;
    return EXIT_PARSE;
  }
  return 0;
}
