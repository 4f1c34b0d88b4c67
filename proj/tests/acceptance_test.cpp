// Acceptance gate at desk scale: d = 1, n = 512 steps, m = 50,000 paths,
// seeds 1..10. Statistical criteria must hold for at least 8 of the 10 seeds;
// algebraic and reproducibility criteria are deterministic. Every test prints
// one [ACCEPT] line with the verdict and the measured numbers, so the log
// doubles as the acceptance report. Tolerances are pinned here, not tuned.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <optional>
#include <vector>

#include <gtest/gtest.h>

#include "semicrit/action.hpp"
#include "semicrit/euler_lagrange.hpp"
#include "semicrit/fbs_example.hpp"
#include "semicrit/grid_paths.hpp"
#include "semicrit/lagrangian.hpp"
#include "semicrit/rng.hpp"
#include "semicrit/runner.hpp"
#include "semicrit/semimartingale.hpp"
#include "semicrit/stats.hpp"
#include "semicrit/variations.hpp"

namespace semicrit {
namespace {

constexpr int kSteps = 512;
constexpr int kPaths = 50000;
constexpr int kSeeds = 10;  // seeds 1..10
constexpr int kRequiredSeeds = 8;
constexpr double kAlpha = 0.01;

// Closed-form benchmark values.
constexpr double kMeanTarget = 1.718282;                  // e - 1
constexpr double kVarTarget = 2.333333;                   // 7/3
constexpr double kActionTarget = 1.847264;                // e^2/4
constexpr double kCosDsTarget = -0.342081;                // -(e+1)/(1+pi^2)
constexpr double kControlDsTarget = -0.0693;              // (e-1)/2 (2e^{1/4}-1-e^{1/2})

struct SeedMetrics {
  // benchmark law
  double mean_x1 = 0, var_x1 = 0, ks_p = 0;
  double action_value = 0, action_se = 0;
  double sup_a_dev = 0;
  bool el_pass = false;
  double el_tmax = 0, el_threshold = 0;
  bool bank_critical = false;
  double bank_max_ratio = 0;  // max |dS| / max(0.02, 3 SE) over the bank
  double ds_cos_pre = 0, ds_cos_pre_se = 0;
  double ds_cos_post = 0, ds_cos_post_se = 0;
  double fd_rel_err[2] = {0, 0};   // eps 1e-3, 1e-2
  double fd_abs_err[2] = {0, 0};
  double second_diff[2] = {0, 0};  // per-path (S(+e) - 2S + S(-e))/e^2, averaged
  bool fbs_pass = false;
  double qv_realized = 0;
  // linear-feedback control law
  bool control_el_fail = false;
  double control_ds = 0, control_ds_se = 0;
  bool control_noncritical = false;
  bool control_fbs_fail = false;
  // strong-order refinement
  double strong_ratio = 0;
};

VariationProcess cosine_variation() {
  VariationProcess vp;
  vp.descriptor = "det:cos_pi_t";
  vp.kdot = stateless_functional(
      [](int, double t, std::span<const double>, std::span<double> out) {
        out[0] = std::cos(std::numbers::pi * t);
      });
  return vp;
}

// Per-path kinetic action sum_i v_i^2/2 dt (the QEM integrand with V = 0),
// kept per path so second differences cancel before averaging.
std::vector<double> per_path_action(const PathEnsemble& ens) {
  std::vector<double> out(ens.m_paths);
  for (int p = 0; p < ens.m_paths; ++p) {
    double acc = 0.0;
    for (int i = 0; i < ens.n(); ++i) {
      const double v = ens.v_at(p, i);
      acc += 0.5 * v * v;
    }
    out[p] = acc * ens.grid.dt;
  }
  return out;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SeedMetrics compute_seed(std::uint64_t seed) {
  SeedMetrics m;
  const TimeGrid grid = make_grid(kSteps);
  const Lagrangian L = make_qem(zero_potential());

  const auto t_example = std::chrono::steady_clock::now();
  {
    const PathEnsemble ens = simulate(example_model(), grid, kPaths, seed);

    std::vector<double> x1(kPaths);
    for (int p = 0; p < kPaths; ++p) x1[p] = ens.x_at(p, kSteps);
    m.mean_x1 = sample_mean(x1);
    m.var_x1 = sample_variance(x1);
    m.ks_p = ks_test(x1, target_cdf).p_value;

    const MonteCarloValue act = action(ens, L);
    m.action_value = act.value;
    m.action_se = act.se;

    const ResidualSamples res = el_residual(ens, L);
    {
      const ELDecomposition decomp = decompose(res);
      double sup = 0.0;
      for (int i = 0; i < kSteps; ++i) {
        sup = std::max(sup, std::abs(decomp.A_at(i) - std::exp(grid.times[i])));
      }
      m.sup_a_dev = sup;
      const ELVerdict verdict = el_verdict(decomp, ens, kAlpha);
      m.el_pass = verdict.satisfied;
      m.el_tmax = verdict.test.max_abs_t;
      m.el_threshold = verdict.test.threshold;
    }

    {
      const CriticalityReport report =
          criticality_test(ens, L, random_variation_bank(777, 20, 10.0), {});
      m.bank_critical = report.critical;
      for (const CriticalityRow& row : report.rows) {
        m.bank_max_ratio = std::max(
            m.bank_max_ratio, std::abs(row.ds_analytic) / std::max(0.02, 3.0 * row.se));
      }
    }

    {
      const VariationSamples vs = eval_variation(cosine_variation(), ens);
      const MonteCarloValue pre = gateaux_analytic(res, vs);
      m.ds_cos_pre = pre.value;
      m.ds_cos_pre_se = pre.se;
      {
        const MonteCarloValue post = gateaux_analytic(res, project_average(vs));
        m.ds_cos_post = post.value;
        m.ds_cos_post_se = post.se;
      }
      const std::vector<double> base = per_path_action(ens);
      const double eps_list[2] = {1e-3, 1e-2};
      for (int e = 0; e < 2; ++e) {
        const double eps = eps_list[e];
        const double fd = gateaux_fd(ens, L, vs, eps);
        m.fd_abs_err[e] = std::abs(fd - pre.value);
        m.fd_rel_err[e] = m.fd_abs_err[e] / std::abs(pre.value);
        std::vector<double> dd(kPaths);
        {
          const std::vector<double> plus = per_path_action(perturb(ens, vs, eps));
          for (int p = 0; p < kPaths; ++p) dd[p] = plus[p] - 2.0 * base[p];
        }
        {
          const std::vector<double> minus = per_path_action(perturb(ens, vs, -eps));
          for (int p = 0; p < kPaths; ++p) dd[p] = (dd[p] + minus[p]) / (eps * eps);
        }
        m.second_diff[e] = sample_mean(dd);
      }
    }

    {
      const FbsReport fbs = fbs_verify(ens, zero_potential(), dirac_marginal(0.0),
                                       example_target_marginal(), kAlpha);
      m.fbs_pass = fbs.verdict;
      m.qv_realized = fbs.qv_realized;
    }
  }
  const double example_s = elapsed_s(t_example);

  const auto t_control = std::chrono::steady_clock::now();
  {
    const PathEnsemble ens = simulate(linear_drift_model(1.0), grid, kPaths, seed);
    const ResidualSamples res = el_residual(ens, L);
    const ELVerdict verdict = el_verdict(decompose(res), ens, kAlpha);
    m.control_el_fail = !verdict.satisfied;

    const std::vector<VariationProcess> bank = {designed_control_variation(10.0)};
    const CriticalityReport crit = criticality_test(ens, L, bank, {});
    m.control_noncritical = !crit.critical;
    m.control_ds = crit.rows[0].ds_analytic;
    m.control_ds_se = crit.rows[0].se;

    MarginalSpec nu1;  // the law's true time-1 marginal, so only (b) can fail
    nu1.name = "normal(0,(e^2-1)/2)";
    const double sd = std::sqrt((std::exp(2.0) - 1.0) / 2.0);
    nu1.cdf = [sd](double x) { return normal_cdf(x / sd); };
    const FbsReport fbs = fbs_verify(ens, zero_potential(), dirac_marginal(0.0), nu1, kAlpha);
    m.control_fbs_fail = !fbs.verdict;
  }
  const double control_s = elapsed_s(t_control);

  const auto t_order = std::chrono::steady_clock::now();
  {
    // Each resolution scored against the closed form driven by the same
    // (coarsened) noise on its own grid; order 1 gives a ratio near 2.
    const int m_small = 2000;
    auto mean_sup_error = [&](const NoiseBlock& noise, const TimeGrid& g) {
      const PathEnsemble ens = simulate_with_noise(example_model(), g, noise, seed);
      const OraclePaths oracle = example_oracle(noise, g);
      double acc = 0.0;
      for (int p = 0; p < m_small; ++p) {
        double sup = 0.0;
        for (int i = 0; i <= g.n_steps; ++i) {
          sup = std::max(sup, std::abs(ens.x_at(p, i) - oracle.x_at(p, i)));
        }
        acc += sup;
      }
      return acc / m_small;
    };
    const TimeGrid fine = make_grid(512);
    const NoiseBlock noise = gaussian_stream(seed, m_small, 512, 1, fine.dt);
    const double err_fine = mean_sup_error(noise, fine);
    const double err_coarse = mean_sup_error(coarsen(noise, 2), make_grid(256));
    m.strong_ratio = err_coarse / err_fine;
  }
  std::printf("[ACCEPT] seed %llu pipelines: benchmark %.1f s, control %.1f s, refinement %.1f s\n",
              static_cast<unsigned long long>(seed), example_s, control_s, elapsed_s(t_order));
  std::fflush(stdout);
  return m;
}

const SeedMetrics& metrics(int idx) {
  static std::optional<SeedMetrics> cache[kSeeds];
  if (!cache[idx]) cache[idx] = compute_seed(static_cast<std::uint64_t>(idx) + 1);
  return *cache[idx];
}

void report(const char* id, const char* name, bool ok, const std::string& detail) {
  std::printf("[ACCEPT] %s %s: %s (%s)\n", id, name, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

TEST(Acceptance, C1ExampleMarginal) {
  int pass = 0;
  double max_mean_dev = 0, max_var_dev = 0, min_ks = 1;
  for (int s = 0; s < kSeeds; ++s) {
    const SeedMetrics& m = metrics(s);
    const double mean_dev = std::abs(m.mean_x1 - kMeanTarget);
    const double var_dev = std::abs(m.var_x1 - kVarTarget);
    if (mean_dev < 0.03 && var_dev < 0.06 && m.ks_p > 0.01) ++pass;
    max_mean_dev = std::max(max_mean_dev, mean_dev);
    max_var_dev = std::max(max_var_dev, var_dev);
    min_ks = std::min(min_ks, m.ks_p);
  }
  const bool ok = pass >= kRequiredSeeds;
  report("C1", "time-1 marginal", ok,
         fmt("%d/10 seeds; max |mean dev| %.4f < 0.03, max |var dev| %.4f < 0.06, min KS p %.3f",
             pass, max_mean_dev, max_var_dev, min_ks));
  EXPECT_TRUE(ok);
}

TEST(Acceptance, C2ActionValue) {
  int pass = 0;
  double max_dev = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const double dev = std::abs(metrics(s).action_value - kActionTarget);
    if (dev < 0.02) ++pass;
    max_dev = std::max(max_dev, dev);
  }
  const bool ok = pass >= kRequiredSeeds;
  report("C2", "action value", ok,
         fmt("%d/10 seeds; max |S - %.6f| = %.4f < 0.02", pass, kActionTarget, max_dev));
  EXPECT_TRUE(ok);
}

TEST(Acceptance, C3ElDecomposition) {
  int pass = 0;
  double max_sup = 0, max_t = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const SeedMetrics& m = metrics(s);
    if (m.sup_a_dev < 0.05 && m.el_pass) ++pass;
    max_sup = std::max(max_sup, m.sup_a_dev);
    max_t = std::max(max_t, m.el_tmax);
  }
  const bool ok = pass >= kRequiredSeeds;
  report("C3", "deterministic + martingale split", ok,
         fmt("%d/10 seeds; max sup|A - e^t| %.4f < 0.05, max martingale |t| %.2f (threshold %.2f)",
             pass, max_sup, max_t, metrics(0).el_threshold));
  EXPECT_TRUE(ok);
}

TEST(Acceptance, C4BankCriticality) {
  int pass = 0;
  double max_ratio = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const SeedMetrics& m = metrics(s);
    if (m.bank_critical) ++pass;
    max_ratio = std::max(max_ratio, m.bank_max_ratio);
  }
  const bool ok = pass >= kRequiredSeeds;
  report("C4", "bank-of-20 criticality", ok,
         fmt("%d/10 seeds; max |dS|/max(0.02, 3 SE) = %.3f over all members", pass, max_ratio));
  EXPECT_TRUE(ok);
}

TEST(Acceptance, C5DeterministicVariationOracle) {
  int pass = 0;
  double max_pre_dev = 0, max_post_abs = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const SeedMetrics& m = metrics(s);
    const double pre_dev = std::abs(m.ds_cos_pre - kCosDsTarget);
    // Projection kills this deterministic variation exactly, so |dS| and its SE
    // are both 0; compare directly instead of forming a 0/0 ratio.
    const bool post_ok = std::abs(m.ds_cos_post) <= 3.0 * m.ds_cos_post_se;
    if (pre_dev < 0.01 && post_ok) ++pass;
    max_pre_dev = std::max(max_pre_dev, pre_dev);
    max_post_abs = std::max(max_post_abs, std::abs(m.ds_cos_post));
  }
  const bool ok = pass >= kRequiredSeeds;
  report("C5", "cos(pi t) variation", ok,
         fmt("%d/10 seeds; max |dS - (%.6f)| = %.4f < 0.01 pre, max |dS| %.2e <= 3 SE post",
             pass, kCosDsTarget, max_pre_dev, max_post_abs));
  EXPECT_TRUE(ok);
}

TEST(Acceptance, C6GateauxFiniteDifference) {
  int pass = 0;
  double max_rel = 0, max_const_dev = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const SeedMetrics& m = metrics(s);
    bool seed_ok = true;
    for (int e = 0; e < 2; ++e) {
      const bool fd_ok = std::abs(m.ds_cos_pre) < 0.05 ? m.fd_abs_err[e] < 1e-3
                                                       : m.fd_rel_err[e] < 0.01;
      seed_ok = seed_ok && fd_ok;
      max_rel = std::max(max_rel, m.fd_rel_err[e]);
    }
    const double const_dev =
        std::abs(m.second_diff[0] - m.second_diff[1]) / std::abs(m.second_diff[1]);
    seed_ok = seed_ok && const_dev < 1e-8;
    max_const_dev = std::max(max_const_dev, const_dev);
    if (seed_ok) ++pass;
  }
  const bool ok = pass >= kRequiredSeeds;
  report("C6", "analytic vs finite difference", ok,
         fmt("%d/10 seeds; max rel err %.2e < 1e-2 (eps 1e-3, 1e-2), "
             "second-difference constancy dev %.2e < 1e-8",
             pass, max_rel, max_const_dev));
  EXPECT_TRUE(ok);
}

TEST(Acceptance, C7NegativeControl) {
  int pass = 0;
  double max_ds_dev = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const SeedMetrics& m = metrics(s);
    const double ds_dev = std::abs(m.control_ds - kControlDsTarget);
    if (m.control_el_fail && ds_dev < 0.015 && m.control_noncritical) ++pass;
    max_ds_dev = std::max(max_ds_dev, ds_dev);
  }
  const bool ok = pass >= kRequiredSeeds;
  report("C7", "linear-feedback control", ok,
         fmt("%d/10 seeds; EL fails, non-critical, max |dS - (%.4f)| = %.4f < 0.015",
             pass, kControlDsTarget, max_ds_dev));
  EXPECT_TRUE(ok);
}

TEST(Acceptance, C8StrongOrder) {
  int pass = 0;
  double min_ratio = 1e9, max_ratio = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const double r = metrics(s).strong_ratio;
    if (r > 1.6 && r < 2.4) ++pass;
    min_ratio = std::min(min_ratio, r);
    max_ratio = std::max(max_ratio, r);
  }
  const bool ok = pass >= kRequiredSeeds;
  report("C8", "refinement ratio", ok,
         fmt("%d/10 seeds; sup-error ratio n=256/n=512 in [%.3f, %.3f], bounds [1.6, 2.4]",
             pass, min_ratio, max_ratio));
  EXPECT_TRUE(ok);
}

TEST(Acceptance, C9ProjectionAlgebra) {
  // Deterministic algebra on a small ensemble; no seed sweep needed.
  const PathEnsemble ens = simulate(example_model(), make_grid(128), 500, 42);
  const auto bank = random_variation_bank(31, 4, 10.0);
  // odd-index members are path-dependent, so neither side projects to zero
  const VariationSamples h = eval_variation(bank[1], ens);
  const VariationSamples k = eval_variation(bank[3], ens);
  const size_t len = h.kdot.size();

  // linearity: j(a h + b k) = a j(h) + b j(k)
  const double a = 0.3, b = -1.7;
  VariationSamples combo = h;
  double sup_combo = 0;
  for (size_t i = 0; i < len; ++i) {
    combo.kdot[i] = a * h.kdot[i] + b * k.kdot[i];
    sup_combo = std::max(sup_combo, std::abs(combo.kdot[i]));
  }
  const VariationSamples jh = project_average(h);
  const VariationSamples jk = project_average(k);
  const VariationSamples jcombo = project_average(combo);
  double lin_dev = 0;
  for (size_t i = 0; i < len; ++i) {
    lin_dev = std::max(lin_dev, std::abs(jcombo.kdot[i] - (a * jh.kdot[i] + b * jk.kdot[i])));
  }
  const double lin_rel = lin_dev / std::max(1.0, sup_combo);

  // idempotence and mean-zero
  const VariationSamples jjk = project_average(jk);
  double idem_dev = 0;
  for (size_t i = 0; i < len; ++i) {
    idem_dev = std::max(idem_dev, std::abs(jjk.kdot[i] - jk.kdot[i]));
  }
  const double idem_rel = idem_dev / std::max(1.0, jk.max_sup_norm);
  const double mean_rel = jk.mean_norm / std::max(1.0, k.max_sup_norm);

  // exact annihilation of a deterministic (path-independent) variation
  const VariationSamples jcos = project_average(eval_variation(cosine_variation(), ens));
  bool annihilated = true;
  for (double value : jcos.kdot) annihilated = annihilated && value == 0.0;

  const bool ok = lin_rel < 1e-12 && idem_rel < 1e-12 && mean_rel < 1e-12 && annihilated;
  report("C9", "projection algebra", ok,
         fmt("linearity dev %.2e, idempotence dev %.2e, |E j(h)|_H %.2e (all < 1e-12 rel); "
             "deterministic variation killed exactly: %s",
             lin_rel, idem_rel, mean_rel, annihilated ? "yes" : "no"));
  EXPECT_TRUE(ok);
}

TEST(Acceptance, C10GradientChecks) {
  // Gradient check points drawn from simulated paths, eps = 1e-5.
  const PathEnsemble ens = simulate(example_model(), make_grid(64), 30, 43);
  std::vector<GradientCheckPoint> points;
  for (int p = 0; p < 20; ++p) {
    GradientCheckPoint pt;
    pt.t = ens.grid.times[p * 3];
    pt.x = {ens.x_at(p, p * 3)};
    pt.v = {ens.v_at(p, p * 3)};
    pt.a = {ens.alpha_at(p, p * 3)};
    points.push_back(pt);
  }
  QEMPotential bump = custom_potential(
      "gauss-bump", [](std::span<const double> x) { return std::exp(-x[0] * x[0]); },
      [](std::span<const double> x, std::span<double> g) {
        g[0] = -2.0 * x[0] * std::exp(-x[0] * x[0]);
      });
  double worst = 0;
  bool ok = true;
  for (const QEMPotential& pot :
       {zero_potential(), quadratic_potential(0.8), linear_potential({0.7}), bump}) {
    const GradientCheckReport rep = gradient_check(make_qem(pot), points, 1e-5);
    ok = ok && rep.pass(1e-6) && rep.points_checked == 20;
    worst = std::max({worst, rep.max_rel_err_x, rep.max_rel_err_v});
  }
  report("C10", "analytic gradients", ok,
         fmt("4 potentials x 20 points, eps 1e-5: max rel err %.2e < 1e-6", worst));
  EXPECT_TRUE(ok);
}

TEST(Acceptance, C11FbsEquivalence) {
  int pass = 0;
  double max_qv_dev = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const SeedMetrics& m = metrics(s);
    const double qv_dev = std::abs(m.qv_realized - 1.0);
    const bool agree = (m.fbs_pass && m.el_pass) && (m.control_fbs_fail && m.control_el_fail);
    if (agree && qv_dev < 0.05) ++pass;
    max_qv_dev = std::max(max_qv_dev, qv_dev);
  }
  const bool ok = pass >= kRequiredSeeds;
  report("C11", "forward-backward equivalence", ok,
         fmt("%d/10 seeds; pass/pass on benchmark, fail/fail on control; max |QV - 1| %.4f < 0.05",
             pass, max_qv_dev));
  EXPECT_TRUE(ok);
}

TEST(Acceptance, C12Reproducibility) {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "semicrit_accept_repro";
  fs::remove_all(base);
  RunConfig cfg;
  cfg.experiment = "example";
  cfg.n_steps = 128;
  cfg.m_paths = 2000;
  cfg.bank_size = 4;
  cfg.exact_repro = true;
  cfg.output_dir = (base / "run").string();
  const RunResult first = run(cfg);
  const RunResult second = run(cfg);  // identical config, identical dir
  const bool identical =
      !first.manifest_json.empty() && first.manifest_json == second.manifest_json;

  bool audits = true;
  const TimeGrid grid = make_grid(128);
  const SemimartingaleModel models[] = {wiener_model(1), constant_model({0.5}, {1.0}, {0.2}),
                                        linear_drift_model(1.0), example_model()};
  for (const SemimartingaleModel& model : models) {
    const PathEnsemble ens = simulate(model, grid, 200, 21);
    audits = audits && audit_adaptedness(model, ens, 200, 77).pass;
  }

  const PathEnsemble ens = simulate(example_model(), grid, 200, 22);
  auto bank = random_variation_bank(777, 20, 10.0);
  bank.push_back(designed_control_variation(10.0));
  int audited = 0;
  for (const VariationProcess& vp : bank) {
    std::vector<double> recorded(static_cast<size_t>(200) * 128);
    auto fn = vp.kdot(grid);
    for (int p = 0; p < 200; ++p) {
      fn->begin_path();
      const std::span<const double> values = ens.path_values(p);
      for (int i = 0; i < 128; ++i) {
        double out = 0.0;
        fn->eval(i, grid.times[i], values.subspan(0, static_cast<size_t>(i) + 1), {&out, 1});
        recorded[static_cast<size_t>(p) * 128 + i] = out;
      }
    }
    const AdaptednessAuditReport rep =
        audit_adapted_functional(vp.kdot, 1, ens, recorded, 200, 55);
    audits = audits && rep.pass;
    ++audited;
  }

  const bool ok = identical && audits;
  report("C12", "reproducibility + adaptedness", ok,
         fmt("exact-repro manifests byte-identical: %s; audits pass on 4 models and %d "
             "variation functionals",
             identical ? "yes" : "no", audited));
  EXPECT_TRUE(ok);
}

}  // namespace
}  // namespace semicrit
