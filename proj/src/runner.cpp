#include "semicrit/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "semicrit/action.hpp"
#include "semicrit/euler_lagrange.hpp"
#include "semicrit/fbs_example.hpp"
#include "semicrit/grid_paths.hpp"
#include "semicrit/lagrangian.hpp"
#include "semicrit/semimartingale.hpp"
#include "semicrit/stats.hpp"
#include "semicrit/variations.hpp"

namespace semicrit {

using ordered_json = nlohmann::ordered_json;

std::string format_float(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

void require_keys(const nlohmann::json& obj, const std::vector<std::string>& known,
                  const std::string& section, std::vector<std::string>& bad) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& k : known) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) bad.push_back(section.empty() ? it.key() : section + "." + it.key());
  }
}

}  // namespace

RunConfig parse_config_text(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");

  std::vector<std::string> bad;
  require_keys(j,
               {"experiment", "n_steps", "m_paths", "seed", "threads", "exact_repro", "alpha",
                "lagrangian", "bank", "eps_list", "output_dir", "custom"},
               "", bad);
  RunConfig cfg;
  if (j.contains("experiment")) cfg.experiment = j["experiment"].get<std::string>();
  if (j.contains("n_steps")) cfg.n_steps = j["n_steps"].get<int>();
  if (j.contains("m_paths")) cfg.m_paths = j["m_paths"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("exact_repro")) cfg.exact_repro = j["exact_repro"].get<bool>();
  if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("eps_list")) cfg.eps_list = j["eps_list"].get<std::vector<double>>();
  if (j.contains("lagrangian")) {
    const auto& lag = j["lagrangian"];
    require_keys(lag, {"type", "potential"}, "lagrangian", bad);
    if (lag.contains("type") && lag["type"].get<std::string>() != "qem") {
      bad.push_back("lagrangian.type (only \"qem\" is supported)");
    }
    if (lag.contains("potential")) {
      const auto& pot = lag["potential"];
      require_keys(pot, {"kind", "coeff", "lin"}, "lagrangian.potential", bad);
      if (pot.contains("kind")) cfg.potential_kind = pot["kind"].get<std::string>();
      if (pot.contains("coeff")) cfg.potential_coeff = pot["coeff"].get<double>();
      if (pot.contains("lin")) cfg.potential_lin = pot["lin"].get<std::vector<double>>();
    }
  }
  if (j.contains("bank")) {
    const auto& bank = j["bank"];
    require_keys(bank, {"size", "clip_bound", "seed"}, "bank", bad);
    if (bank.contains("size")) cfg.bank_size = bank["size"].get<int>();
    if (bank.contains("clip_bound")) cfg.bank_clip = bank["clip_bound"].get<double>();
    if (bank.contains("seed")) cfg.bank_seed = bank["seed"].get<std::uint64_t>();
  }
  if (j.contains("custom")) {
    const auto& c = j["custom"];
    require_keys(c, {"drift", "sigma_diag", "x0"}, "custom", bad);
    if (c.contains("drift")) cfg.custom_drift = c["drift"].get<std::vector<double>>();
    if (c.contains("sigma_diag")) cfg.custom_sigma = c["sigma_diag"].get<std::vector<double>>();
    if (c.contains("x0")) cfg.custom_x0 = c["x0"].get<std::vector<double>>();
  }
  if (!bad.empty()) {
    std::string msg = "config: unrecognized or invalid keys:";
    for (const auto& k : bad) msg += " " + k;
    throw std::invalid_argument(msg);
  }

  if (cfg.experiment != "example" && cfg.experiment != "wiener" &&
      cfg.experiment != "ou_control" && cfg.experiment != "custom") {
    throw std::invalid_argument("config: unknown experiment \"" + cfg.experiment + "\"");
  }
  if (cfg.n_steps < 1 || cfg.m_paths < 1 || cfg.threads < 1 || cfg.bank_size < 1) {
    throw std::invalid_argument("config: n_steps, m_paths, threads, bank.size must be positive");
  }
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw std::invalid_argument("config: alpha must be in (0,1)");
  }
  if (!(cfg.bank_clip > 0.0)) throw std::invalid_argument("config: bank.clip_bound must be positive");
  if (cfg.potential_kind != "zero" && cfg.potential_kind != "quadratic" &&
      cfg.potential_kind != "linear") {
    throw std::invalid_argument("config: potential kind must be zero|quadratic|linear");
  }
  for (double e : cfg.eps_list) {
    if (!(e > 0.0)) throw std::invalid_argument("config: eps_list entries must be positive");
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

QEMPotential potential_from_config(const RunConfig& cfg) {
  if (cfg.potential_kind == "quadratic") return quadratic_potential(cfg.potential_coeff);
  if (cfg.potential_kind == "linear") {
    return linear_potential(cfg.potential_lin.empty() ? std::vector<double>{1.0}
                                                      : cfg.potential_lin);
  }
  return zero_potential();
}

SemimartingaleModel model_from_config(const RunConfig& cfg) {
  if (cfg.experiment == "example") return example_model();
  if (cfg.experiment == "wiener") return wiener_model(1);
  if (cfg.experiment == "ou_control") return linear_drift_model(1.0);
  return constant_model(cfg.custom_drift, cfg.custom_sigma, cfg.custom_x0);
}

// Time-1 marginal of the experiment's law, when known in closed form.
bool known_marginal(const RunConfig& cfg, MarginalSpec& out) {
  if (cfg.experiment == "example") {
    out = example_target_marginal();
    return true;
  }
  if (cfg.experiment == "wiener") {
    out.name = "gaussian(mean=0,var=1)";
    out.cdf = [](double x) { return normal_cdf(x); };
    return true;
  }
  if (cfg.experiment == "ou_control") {
    const double var = (std::numbers::e * std::numbers::e - 1.0) / 2.0;
    out.name = "gaussian(mean=0,var=(e^2-1)/2)";
    out.cdf = [var](double x) { return normal_cdf(x / std::sqrt(var)); };
    return true;
  }
  return false;
}

VariationProcess cosine_reference_variation() {
  VariationProcess vp;
  vp.descriptor = "det:cos_pi_t";
  vp.clip_bound = 10.0;
  vp.kdot = stateless_functional(
      [](int, double t, std::span<const double>, std::span<double> out) {
        out[0] = std::cos(std::numbers::pi * t);
      });
  return vp;
}

ordered_json config_echo(const RunConfig& cfg) {
  ordered_json j;
  j["experiment"] = cfg.experiment;
  j["n_steps"] = cfg.n_steps;
  j["m_paths"] = cfg.m_paths;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["exact_repro"] = cfg.exact_repro;
  j["alpha"] = cfg.alpha;
  j["lagrangian"] = {{"type", "qem"},
                     {"potential",
                      {{"kind", cfg.potential_kind},
                       {"coeff", cfg.potential_coeff},
                       {"lin", cfg.potential_lin}}}};
  j["bank"] = {{"size", cfg.bank_size}, {"clip_bound", cfg.bank_clip}, {"seed", cfg.bank_seed}};
  j["eps_list"] = cfg.eps_list;
  j["output_dir"] = cfg.output_dir;
  if (cfg.experiment == "custom") {
    j["custom"] = {{"drift", cfg.custom_drift},
                   {"sigma_diag", cfg.custom_sigma},
                   {"x0", cfg.custom_x0}};
  }
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

// Mean over paths of sup_t |X_t - oracle X_t| on the simulation's own noise.
double oracle_sup_error(const PathEnsemble& ens) {
  const int n = ens.grid.n_steps;
  std::vector<double> noise(n);
  double acc = 0.0;
  for (int p = 0; p < ens.m_paths; ++p) {
    fill_path_noise(ens.seed, p, n, 1, ens.grid.dt, noise.data());
    double b = 0.0, ib = 0.0, sup = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double oracle_x = b + ib + std::exp(ens.grid.times[i]) - 1.0;
      sup = std::max(sup, std::abs(ens.x_at(p, i) - oracle_x));
      if (i < n) {
        ib += b * ens.grid.dt;
        b += noise[i];
      }
    }
    acc += sup;
  }
  return acc / ens.m_paths;
}

}  // namespace

std::string bank_descriptors_json(std::uint64_t seed, int size, double clip_bound) {
  const auto bank = random_variation_bank(seed, size, clip_bound);
  ordered_json arr = ordered_json::array();
  for (const auto& member : bank) {
    arr.push_back({{"descriptor", member.descriptor}, {"clip_bound", member.clip_bound}});
  }
  ordered_json doc;
  doc["seed"] = seed;
  doc["size"] = size;
  doc["clip_bound"] = clip_bound;
  doc["members"] = arr;
  return doc.dump(2) + "\n";
}

RunResult run(const RunConfig& config, unsigned stages) {
  const auto t_start = std::chrono::steady_clock::now();
  RunConfig cfg = config;
  if (cfg.exact_repro) cfg.threads = 1;

  const TimeGrid grid = make_grid(cfg.n_steps);
  const SemimartingaleModel model = model_from_config(cfg);
  const QEMPotential potential = potential_from_config(cfg);
  const Lagrangian L = make_qem(potential);

  ordered_json manifest;
  manifest["config"] = config_echo(cfg);
  manifest["versions"] = {{"toolkit", "0.1.0"}, {"compiler", __VERSION__}};

  const PathEnsemble ens = simulate(model, grid, cfg.m_paths, cfg.seed, cfg.threads);
  manifest["simulate"] = {{"provenance", ens.provenance},
                          {"n_steps", cfg.n_steps},
                          {"m_paths", cfg.m_paths},
                          {"seed", cfg.seed}};

  bool all_pass = true;
  const MonteCarloValue act = action(ens, L);
  manifest["action"] = {{"value", act.value}, {"se", act.se}};

  const IntegrabilityReport integ = integrability_diagnostic(ens, L, 2.0, 2.0);
  manifest["integrability"] = {{"action", integ.action},
                              {"moment_grad_x", integ.moment_x},
                              {"moment_grad_v", integ.moment_v},
                              {"tail_share_action", integ.tail_action},
                              {"tail_share_grad_x", integ.tail_moment_x},
                              {"tail_share_grad_v", integ.tail_moment_v},
                              {"heavy_tail_warning", integ.heavy_tail_warning}};

  const ResidualSamples residual = el_residual(ens, L);
  const ELDecomposition decomp = decompose(residual);

  ordered_json verdicts;
  std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir);

  // A_process.csv is always written (cheap, n rows).
  {
    std::string csv = "t";
    for (int c = 0; c < decomp.d; ++c) csv += ",A_" + std::to_string(c);
    csv += "\n";
    for (int i = 0; i < grid.n_steps; ++i) {
      csv += format_float(grid.times[i]);
      for (int c = 0; c < decomp.d; ++c) csv += "," + format_float(decomp.A_at(i, c));
      csv += "\n";
    }
    write_file(out_dir / "A_process.csv", csv);
  }

  if (stages & kStageEl) {
    const ELVerdict el = el_verdict(decomp, ens, cfg.alpha);
    manifest["el"] = {{"energy_A", el.energy_A},
                      {"energy_N", el.energy_N},
                      {"max_abs_t", el.test.max_abs_t},
                      {"threshold", el.test.threshold},
                      {"skipped_cells", el.test.skipped_cells},
                      {"satisfied", el.satisfied}};
    verdicts["el_satisfied"] = el.satisfied;
    all_pass = all_pass && el.satisfied;
  }

  if (stages & kStageCriticality) {
    auto bank = random_variation_bank(cfg.bank_seed, cfg.bank_size, cfg.bank_clip);
    if (cfg.experiment == "ou_control") {
      bank.push_back(designed_control_variation(cfg.bank_clip));
    }
    const CriticalityReport crit = criticality_test(ens, L, bank, {});
    ordered_json rows = ordered_json::array();
    std::string csv = "variation_id,ds_analytic,se,ds_fd,verdict\n";
    for (const auto& row : crit.rows) {
      rows.push_back({{"variation_id", row.variation_id},
                      {"ds_analytic", row.ds_analytic},
                      {"se", row.se},
                      {"ds_fd", row.ds_fd},
                      {"critical", row.critical}});
      csv += row.variation_id + "," + format_float(row.ds_analytic) + "," +
             format_float(row.se) + "," + format_float(row.ds_fd) + "," +
             (row.critical ? "critical" : "non-critical") + "\n";
    }
    write_file(out_dir / "criticality.csv", csv);
    manifest["criticality"] = {{"rows", rows}, {"critical", crit.critical}};
    verdicts["critical"] = crit.critical;
    all_pass = all_pass && crit.critical;

    // Finite-difference agreement on the fixed cosine reference variation.
    const VariationSamples cos_vs = eval_variation(cosine_reference_variation(), ens);
    const MonteCarloValue ds_ref = gateaux_analytic(residual, cos_vs);
    ordered_json fd_rows = ordered_json::array();
    bool fd_ok = true;
    for (double eps : cfg.eps_list) {
      const double fd = gateaux_fd(ens, L, cos_vs, eps);
      const double dev = std::abs(fd - ds_ref.value);
      const bool ok = std::abs(ds_ref.value) >= 0.05 ? dev / std::abs(ds_ref.value) < 0.01
                                                     : dev < 1e-3;
      fd_ok = fd_ok && ok;
      fd_rows.push_back({{"eps", eps},
                         {"ds_fd", fd},
                         {"ds_analytic", ds_ref.value},
                         {"abs_dev", dev},
                         {"ok", ok}});
    }
    manifest["fd_agreement"] = {{"variation", "det:cos_pi_t"}, {"rows", fd_rows}, {"ok", fd_ok}};
    verdicts["fd_agreement"] = fd_ok;
    all_pass = all_pass && fd_ok;
  }

  MarginalSpec nu1;
  const bool have_marginal = known_marginal(cfg, nu1);

  if ((stages & kStageMarginal) && have_marginal && !nu1.is_dirac) {
    std::vector<double> x1(ens.m_paths);
    for (int p = 0; p < ens.m_paths; ++p) x1[p] = ens.x_at(p, grid.n_steps);
    const double mean_x1 = sample_mean(x1);
    const double var_x1 = sample_variance(x1);
    const KsResult ks = ks_test(x1, nu1.cdf);
    const bool marginal_ok = ks.p_value > cfg.alpha;
    manifest["marginal"] = {{"target", nu1.name},
                           {"mean_x1", mean_x1},
                           {"var_x1", var_x1},
                           {"ks_statistic", ks.statistic},
                           {"ks_p_value", ks.p_value},
                           {"ok", marginal_ok}};
    verdicts["marginal_ok"] = marginal_ok;
    all_pass = all_pass && marginal_ok;
  }

  if (cfg.experiment == "example") {
    manifest["oracle"] = {{"mean_sup_error", oracle_sup_error(ens)}};
  }

  if (stages & kStageFbs) {
    if (cfg.experiment == "example" || cfg.experiment == "wiener" ||
        cfg.experiment == "ou_control") {
      MarginalSpec nu0 = dirac_marginal(0.0);
      MarginalSpec nu1_fbs;
      known_marginal(cfg, nu1_fbs);
      const FbsReport fbs = fbs_verify(ens, potential, nu0, nu1_fbs, cfg.alpha);
      manifest["fbs"] = {{"initial_ok", fbs.initial_ok},
                         {"marginal_ks_p", fbs.marginal_ks.p_value},
                         {"marginal_ok", fbs.marginal_ok},
                         {"backward_max_abs_t", fbs.backward_test.max_abs_t},
                         {"backward_threshold", fbs.backward_test.threshold},
                         {"backward_ok", fbs.backward_ok},
                         {"qv_realized", fbs.qv_realized},
                         {"qv_expected", fbs.qv_expected},
                         {"qv_error", fbs.qv_error},
                         {"qv_ok", fbs.qv_ok},
                         {"moment_y", fbs.moment_y},
                         {"moment_grad_v", fbs.moment_grad_v},
                         {"verdict", fbs.verdict}};
      verdicts["fbs_verdict"] = fbs.verdict;
      all_pass = all_pass && fbs.verdict;
    }
  }

  // action.csv: headline scalars.
  {
    std::string csv = "quantity,value,se\n";
    csv += "action," + format_float(act.value) + "," + format_float(act.se) + "\n";
    csv += "moment_grad_x," + format_float(integ.moment_x) + ",\n";
    csv += "moment_grad_v," + format_float(integ.moment_v) + ",\n";
    write_file(out_dir / "action.csv", csv);
  }
  // x1_samples.csv.
  {
    std::string csv = "path";
    for (int c = 0; c < ens.d; ++c) csv += ",x1_" + std::to_string(c);
    csv += "\n";
    for (int p = 0; p < ens.m_paths; ++p) {
      csv += std::to_string(p);
      for (int c = 0; c < ens.d; ++c) csv += "," + format_float(ens.x_at(p, grid.n_steps, c));
      csv += "\n";
    }
    write_file(out_dir / "x1_samples.csv", csv);
  }

  manifest["verdicts"] = verdicts;
  manifest["all_pass"] = all_pass;
  if (!cfg.exact_repro) {
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                              t_start);
    manifest["wall_time_ms"] = elapsed.count();
  }

  RunResult result;
  result.manifest_json = manifest.dump(2) + "\n";
  result.all_pass = all_pass;
  result.output_dir = out_dir.string();
  write_file(out_dir / "manifest.json", result.manifest_json);
  return result;
}

}  // namespace semicrit
