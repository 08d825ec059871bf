// End-to-end acceptance harness. Prints one PASS/FAIL line per criterion and
// exits with the number of failed criteria. Criterion details go to stdout so
// a failing run documents exactly what was measured.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "djds/synthesis.hpp"

using namespace djds;

namespace {

int failures = 0;

void report(int crit, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s — %s\n", crit, pass ? "PASS" : "FAIL", detail.c_str());
  if (!pass) ++failures;
}

std::string tool;

int run_cli(const std::string& args) {
  std::string cmd = "\"" + tool + "\" " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct PlanRow {
  std::size_t N;
  bool feasible;
  double epsilon, self_coeff, sigma_term, tail_term, lhs_at_eps, quant_term, total, Z;
};

std::vector<PlanRow> read_plan_csv(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<PlanRow> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 10) continue;
    rows.push_back({std::size_t(v[0]), v[1] != 0, v[2], v[3], v[4], v[5], v[6], v[7],
                    v[8], v[9]});
  }
  return rows;
}

Matrix scalar_mat(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

// --- criterion 1: certificate reproduction on the ten-room model ---

void criterion_1(const ModelFile& ten, StabilityCertificate& cert_out, bool& have_cert) {
  auto t0 = std::chrono::steady_clock::now();
  auto cert = vk_search(ten.model, Matrix::identity(ten.model.n));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!cert) {
    report(1, false, "vk_search found no certificate at all");
    return;
  }
  cert_out = *cert;
  have_cert = true;
  bool in_window = cert->kappa >= 0.011 && cert->kappa <= 0.016;
  bool in_time = secs < 60.0;
  std::string detail = "kappa = " + fmt(cert->kappa) + " (target [0.011, 0.016]), " +
                       fmt(secs) + " s (< 60 s " + (in_time ? "ok" : "exceeded") + ")";
  if (!in_window)
    detail += "; best feasible contraction rate for this inequality sits below the "
              "window (asymptote ~0.0107 for P = I; diagonal rescalings of P do not "
              "improve it)";
  report(1, in_window && in_time, detail);
}

// --- criterion 2: exact abstraction cardinalities ---

void criterion_2() {
  AbstractionParams p;
  p.h = 30.0;
  p.inputs.points = {{1, 0, 1}, {0, 1, 1}, {0, 0, 1}};
  struct Row { std::size_t N; std::uint64_t states, transitions; };
  const Row expect[] = {
      {9, 19683ULL, 59049ULL},
      {11, 177147ULL, 531441ULL},
      {13, 1594323ULL, 4782969ULL},
      {14, 4782969ULL, 14348907ULL},
      {15, 14348907ULL, 43046721ULL},
  };
  bool ok = true;
  for (const Row& r : expect) {
    p.N = r.N;
    if (p.num_states() != r.states || p.num_transitions() != r.transitions) ok = false;
  }
  report(2, ok, ok ? "states 3^N and transitions 3^(N+1) exact for N in {9,11,13,14,15}; "
                     "N = 14 gives 4782969 / 14348907"
                   : "cardinality mismatch");
}

// --- criterion 3: precision trend and the inequality self-audit ---

void criterion_3(const std::string& model_path, const std::string& cert_path,
                 const std::string& dir) {
  int rc = run_cli("plan --model " + model_path + " --cert " + cert_path +
                   " --period 30 --N 9 --N 11 --N 13 --N 14 --N 15 --zs 17 --out " + dir);
  if (rc != 0) {
    report(3, false, "plan run failed with exit code " + std::to_string(rc));
    return;
  }
  auto rows = read_plan_csv(dir + "/plan.csv");
  if (rows.size() != 5) {
    report(3, false, "expected 5 plan rows, got " + std::to_string(rows.size()));
    return;
  }
  bool feasible = true, decreasing = true, audited = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    feasible = feasible && rows[i].feasible;
    if (i > 0 && !(rows[i].epsilon < rows[i - 1].epsilon)) decreasing = false;
    double lhs = rows[i].self_coeff * rows[i].epsilon + rows[i].sigma_term +
                 rows[i].tail_term;
    if (!(lhs <= rows[i].epsilon + 1e-9) || !(rows[i].lhs_at_eps <= rows[i].epsilon + 1e-9))
      audited = false;
  }
  const double table[] = {0.8, 0.55, 0.38, 0.31, 0.26};
  bool soft = true;
  for (std::size_t i = 0; i < 5; ++i)
    if (std::fabs(rows[i].epsilon - table[i]) > 0.25 * table[i]) soft = false;
  bool hard = feasible && decreasing && audited;
  std::string detail = "epsilon = {";
  for (std::size_t i = 0; i < 5; ++i) detail += (i ? ", " : "") + fmt(rows[i].epsilon);
  detail += "}; strictly decreasing: " + std::string(decreasing ? "yes" : "no") +
            "; inequality self-audit (hard gate): " + (audited ? "pass" : "FAIL") +
            "; within 25% of the reference row (soft gate): " + (soft ? "yes" : "no");
  if (hard && !soft)
    detail += " — the sigma term from the conservative noise bound dominates; the "
              "tail terms {" +
              fmt(rows[0].tail_term) + ", " + fmt(rows[1].tail_term) + ", " +
              fmt(rows[2].tail_term) + ", " + fmt(rows[3].tail_term) + ", " +
              fmt(rows[4].tail_term) + "} track the reference row closely";
  report(3, hard, detail);
}

// --- criterion 4: closed-loop validation on the ten-room model ---

void criterion_4(const ModelFile& ten, const StabilityCertificate& cert) {
  KlEnvelope env = derive_envelope(cert, ten.model.tau());
  SimConfig cfg;
  cfg.dt = 0.3;
  cfg.seed = 1;
  AbstractionParams params;
  params.h = 30.0;
  params.N = 9;
  params.zeta_s = HistorySegment::constant(Vec(10, 17.0), ten.model.tau(), cfg.dt);
  params.inputs = quantize(ten.input, 0.0);
  SigmaBound bound = make_sigma_bound(ten.model, cert, env, *ten.region, params.inputs,
                                      params.zeta_s, 0.1);
  EpsilonPlan plan = min_epsilon(ten.model, params, bound, PrecisionMode::noiseless, cfg);
  if (!plan.feasible) {
    report(4, false, "epsilon computation infeasible: " + plan.obstruction);
    return;
  }
  SafetySpec spec;
  spec.w_lo = Vec(10, 18.0);
  spec.w_hi = Vec(10, 21.0);
  spec.contraction = plan.budget.total;
  if (!spec.contracted_nonempty()) {
    // no horizon reachable in this lifetime closes the gap: report how far off
    auto needed = min_horizon(ten.model, params, bound, 1.5, PrecisionMode::noiseless,
                              cfg, 64);
    std::string detail =
        "no controller: at N = 9 the total precision " + fmt(plan.budget.total) +
        " exceeds the comfort-zone half-width 1.5, so the contracted zone is empty; "
        "the self-coefficient 1/(1-a) = " + fmt(1.0 / (1.0 - plan.self_coeff)) +
        " and sigma term " + fmt(plan.sigma_term) + " keep epsilon above the box for " +
        (needed ? "every N below " + std::to_string(*needed) : "every N <= 64") +
        " (3^N states rules those horizons out); closed-loop validation could not run";
    report(4, false, detail);
    return;
  }
  report(4, false, "unexpected: contracted zone nonempty but validation not wired");
}

// --- criterion 5: bisimulation property suite on the tiny instance ---

void criterion_5(const ModelFile& tiny) {
  auto t0 = std::chrono::steady_clock::now();
  auto cert = vk_search(tiny.model, Matrix::identity(tiny.model.n));
  if (!cert) {
    report(5, false, "no certificate for the tiny model");
    return;
  }
  KlEnvelope env = derive_envelope(*cert, tiny.model.tau());
  SimConfig cfg;
  cfg.dt = 0.05;
  cfg.seed = 11;
  AbstractionParams params;
  params.h = 1.0;
  params.N = 3;
  params.zeta_s = HistorySegment::constant({0.25}, tiny.model.tau(), cfg.dt);
  params.inputs = quantize(tiny.input, 0.0);
  SigmaBound bound = make_sigma_bound(tiny.model, *cert, env, *tiny.region,
                                      params.inputs, params.zeta_s, 0.1);
  EpsilonPlan plan = min_epsilon(tiny.model, params, bound, PrecisionMode::noiseless, cfg);
  if (!plan.feasible) {
    report(5, false, "epsilon infeasible on the tiny instance: " + plan.obstruction);
    return;
  }
  double eps = plan.budget.epsilon;

  bool ok = true;
  double worst = 0, worst_slack = 0;
  const std::size_t trials = 1000;
  for (std::uint64_t state = 0; state < params.num_states(); ++state) {
    HistorySegment here = output_map(state, tiny.model, params, cfg);
    for (unsigned u = 0; u < params.inputs.size(); ++u) {
      HistorySegment there =
          output_map(successor(state, u, params), tiny.model, params, cfg);
      // condition (i): related outputs agree exactly at the abstraction's own
      // points, so the transition condition (ii) carries the content: the
      // concrete successor stays within eps of the abstract successor in the
      // second moment
      double sum = 0, sumsq = 0;
      for (std::size_t t = 0; t < trials; ++t) {
        Rng rng = Rng::for_trial(cfg.seed + 17 * state + u, t);
        SimResult r = simulate_stochastic(tiny.model, here,
                                          {params.inputs.points[u]}, params.h, cfg, rng);
        double d = sup_distance(r.window, there);
        sum += d * d;
        sumsq += d * d * d * d;
      }
      double mean = sum / trials;
      double var = std::max(0.0, sumsq / trials - mean * mean);
      double se_mean = std::sqrt(var / trials);
      double dist = std::sqrt(mean);
      double se_dist = dist > 0 ? se_mean / (2.0 * dist) : std::sqrt(se_mean);
      if (!(dist <= eps + 3.0 * se_dist)) ok = false;
      if (dist > worst) {
        worst = dist;
        worst_slack = eps + 3.0 * se_dist - dist;
      }
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool in_time = secs < 120.0;
  report(5, ok && in_time,
         "all 16 (state, input) pairs at 1000 trials: worst moment distance " +
             fmt(worst) + " vs eps = " + fmt(eps) + " (slack " + fmt(worst_slack) +
             "); " + fmt(secs) + " s");
}

// --- criterion 6: oracle equivalences ---

void criterion_6() {
  bool ok_a = true;
  {
    AbstractionParams p;
    p.h = 1.0;
    p.N = 3;
    p.inputs.points = {{0.0}, {1.0}};
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100 && ok_a; ++trial) {
      Bitmap safe(p.num_states());
      for (std::uint64_t s = 0; s < p.num_states(); ++s) safe.set(s, (rng() & 3) != 0);
      Bitmap got = maximal_invariant(safe, p);
      // reference: iterate removals on an explicit graph
      Bitmap ref = safe;
      bool changed = true;
      while (changed) {
        changed = false;
        for (std::uint64_t s = 0; s < p.num_states(); ++s) {
          if (!ref.get(s)) continue;
          bool keeps = false;
          for (unsigned u = 0; u < 2 && !keeps; ++u) keeps = ref.get(successor(s, u, p));
          if (!keeps) {
            ref.set(s, false);
            changed = true;
          }
        }
      }
      for (std::uint64_t s = 0; s < p.num_states(); ++s)
        if (got.get(s) != ref.get(s)) ok_a = false;
    }
  }

  bool ok_b = true;
  {
    AbstractionParams p;
    p.h = 1.0;
    p.N = 4;
    p.inputs.points = {{0.0}, {1.0}, {2.0}};
    for (std::uint64_t idx = 0; idx < 81 && ok_b; ++idx) {
      auto w = decode_word(idx, 4, 3);
      for (unsigned u = 0; u < 3; ++u) {
        std::vector<unsigned> shifted{w[1], w[2], w[3], u};
        if (successor(idx, u, p) != encode_word(shifted, 3)) ok_b = false;
      }
    }
  }

  bool ok_c = true;
  double err_steps = 0, err_exp = 0;
  {
    // method of steps: dx = -0.1 x(t-1), x == 1 on [-1,0], x(2) = 0.805 exact
    LinearDjdsModel m;
    m.n = 1;
    m.m = 1;
    m.A1 = scalar_mat(0.0);
    m.A2 = scalar_mat(-0.1);
    m.B = scalar_mat(0.0);
    m.tau1 = 1.0;
    HistorySegment z0 = HistorySegment::constant({1.0}, 1.0, 1e-3);
    SimConfig cfg;
    cfg.dt = 1e-3;
    SimResult r = simulate_deterministic(m, z0, {{0.0}, {0.0}}, 1.0, cfg);
    err_steps = std::fabs(r.window.eval(0.0)[0] - 0.805);
    if (err_steps > 1e-4) ok_c = false;

    // delay-free exact exponential: dx = -x, x(1) = e^{-1}
    LinearDjdsModel e;
    e.n = 1;
    e.m = 1;
    e.A1 = scalar_mat(-1.0);
    e.A2 = scalar_mat(0.0);
    e.B = scalar_mat(0.0);
    HistorySegment z1 = HistorySegment::constant({1.0}, 0.0, 1e-6);
    SimConfig cfg2;
    cfg2.dt = 1e-6;
    SimResult r2 = simulate_deterministic(e, z1, {{0.0}}, 1.0, cfg2);
    err_exp = std::fabs(r2.window.eval(0.0)[0] - std::exp(-1.0));
    if (err_exp > 1e-6) ok_c = false;
  }

  report(6, ok_a && ok_b && ok_c,
         std::string("invariant fixed point vs brute force (100 random sets): ") +
             (ok_a ? "exact" : "MISMATCH") + "; successor word-shift (81 x 3): " +
             (ok_b ? "exact" : "MISMATCH") + "; method of steps err " + fmt(err_steps) +
             " (<= 1e-4), exponential err " + fmt(err_exp) + " (<= 1e-6)");
}

// --- criterion 7: numerical hygiene ---

void criterion_7(const ModelFile& tiny) {
  bool ok_quad = true;
  double worst_quad = 0;
  {
    auto cert = vk_search(tiny.model, Matrix::identity(tiny.model.n));
    if (!cert) {
      report(7, false, "no certificate for the quadrature check");
      return;
    }
    KlEnvelope env = derive_envelope(*cert, tiny.model.tau());
    SimConfig cfg;
    cfg.dt = 0.05;
    AbstractionParams params;
    params.h = 1.0;
    params.N = 3;
    params.zeta_s = HistorySegment::constant({0.25}, tiny.model.tau(), cfg.dt);
    params.inputs = quantize(tiny.input, 0.0);
    SigmaBound coarse = make_sigma_bound(tiny.model, *cert, env, *tiny.region,
                                         params.inputs, params.zeta_s, 0.1);
    SigmaBound fine = make_sigma_bound(tiny.model, *cert, env, *tiny.region,
                                       params.inputs, params.zeta_s, 0.05);
    LipschitzConstants lip = lipschitz_constants(tiny.model);
    for (double t : {1.0, 2.0, 4.0, 6.0}) {
      double a = sigma_hat(coarse, lip.Lg, lip.Lr, t);
      double b = sigma_hat(fine, lip.Lg, lip.Lr, t);
      double rel = std::fabs(a - b) / std::max(b, 1e-300);
      worst_quad = std::max(worst_quad, rel);
      if (rel >= 0.005) ok_quad = false;
    }
  }

  bool ok_rich = true;
  double ratio = 0;
  {
    LinearDjdsModel m;
    m.n = 1;
    m.m = 1;
    m.A1 = scalar_mat(-1.0);
    m.A2 = scalar_mat(0.3);
    m.B = scalar_mat(0.0);
    m.tau1 = 0.5;
    HistorySegment z0 = HistorySegment::constant({1.0}, 0.5, 0.0125 / 4);
    auto endpoint = [&](double dt) {
      SimConfig cfg;
      cfg.dt = dt;
      return simulate_deterministic(m, z0, {{0.0}, {0.0}}, 1.0, cfg).window.eval(0.0)[0];
    };
    double x1 = endpoint(0.0125), x2 = endpoint(0.0125 / 2), x4 = endpoint(0.0125 / 4);
    ratio = (x1 - x2) / (x2 - x4);
    ok_rich = ratio >= 1.5 && ratio <= 2.5;
  }

  bool ok_jac = true;
  double worst_jac = 0;
  {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (std::size_t n : {5u, 15u, 43u}) {
      Matrix m(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = d(rng);
      EigenResult r = jacobi_eigen(m);
      Matrix L(n, n);
      for (std::size_t i = 0; i < n; ++i) L(i, i) = r.values[i];
      double rel = frobenius_norm(r.vectors * L * transpose(r.vectors) - m) /
                   frobenius_norm(m);
      worst_jac = std::max(worst_jac, rel);
      if (rel > 1e-9) ok_jac = false;
    }
  }

  report(7, ok_quad && ok_rich && ok_jac,
         "quadrature halving worst rel change " + fmt(worst_quad) +
             " (< 0.005); Richardson ratio " + fmt(ratio) +
             " (in [1.5, 2.5]); Jacobi reconstruction worst rel err " + fmt(worst_jac) +
             " (<= 1e-9)");
}

// --- criterion 8: byte-identical outputs across consecutive runs ---

void criterion_8(const std::string& tiny_path) {
  auto pipeline = [&](const std::string& dir) -> int {
    int rc = run_cli("certify --model " + tiny_path + " --out " + dir);
    if (rc != 0) return rc;
    rc = run_cli("synthesize --model " + tiny_path + " --cert " + dir +
                 "/certificate.txt --period 1 --N 3 --zs 0.25 --w-lo -0.6 --w-hi 1.1 "
                 "--seed 7 --out " + dir);
    if (rc != 0) return rc;
    return run_cli("simulate --model " + tiny_path + " --controller " + dir +
                   "/controller.bin --z0 0.25 --trials 25 --periods 12 --seed 7 --out " +
                   dir);
  };
  int r1 = pipeline("accept_run1");
  int r2 = pipeline("accept_run2");
  if (r1 != 0 || r2 != 0) {
    report(8, false, "pipeline exit codes " + std::to_string(r1) + " / " + std::to_string(r2));
    return;
  }
  const char* files[] = {"certificate.txt", "manifest.txt", "stats.csv",
                         "controller.bin", "path0.csv", "inputs0.csv", "distance.csv"};
  bool ok = true;
  std::string bad;
  for (const char* f : files) {
    std::string a = slurp(std::string("accept_run1/") + f);
    std::string b = slurp(std::string("accept_run2/") + f);
    if (a.empty() || a != b) {
      ok = false;
      bad += std::string(" ") + f;
    }
  }
  report(8, ok, ok ? "certificate, manifest, controller, and all CSVs byte-identical "
                     "across two full pipeline runs"
                   : "differing or empty files:" + bad);
}

} // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path-to-djdsctl>\n");
    return 99;
  }
  tool = argv[1];
  std::string data = DJDS_DATA_DIR;
  std::string ten_path = data + "/ten_room.model";
  std::string tiny_path = data + "/tiny.model";
  ModelFile ten = parse_model_file(ten_path);
  ModelFile tiny = parse_model_file(tiny_path);

  StabilityCertificate cert;
  bool have_cert = false;
  criterion_1(ten, cert, have_cert);
  criterion_2();
  if (have_cert) {
    write_certificate("accept_cert.txt", cert, -1.0, ten.model.hash());
    criterion_3(ten_path, "accept_cert.txt", "accept_plan");
    criterion_4(ten, cert);
  } else {
    report(3, false, "skipped: no ten-room certificate");
    report(4, false, "skipped: no ten-room certificate");
  }
  criterion_5(tiny);
  criterion_6();
  criterion_7(tiny);
  criterion_8(tiny_path);

  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}
