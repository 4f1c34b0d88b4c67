#pragma once

// Generative semimartingale models and their Euler-Maruyama simulation into
// PathEnsembles carrying drift and dispersion samples at the left endpoint of
// each interval. Drift and dispersion are adapted prefix functionals: at step
// i they may read path values with node index <= i only. Functionals may keep
// per-path state across increasing i (for O(n) evaluation of path-history
// integrals); a fresh instance replayed over any prefix must reproduce the
// same outputs, which is what the adaptedness audit checks with garbled
// suffixes.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "semicrit/grid_paths.hpp"
#include "semicrit/lagrangian.hpp"
#include "semicrit/rng.hpp"

namespace semicrit {

class PrefixFunctional {
 public:
  virtual ~PrefixFunctional() = default;
  // Reset per-path state; called once before each path's i = 0, 1, ... sweep.
  virtual void begin_path() {}
  // values holds at least (i+1)*d node entries; only the first (i+1)*d may be
  // read (entries beyond are unrelated data during audits). Must be called
  // with i strictly increasing within a path.
  virtual void eval(int i, double t_i, std::span<const double> values, std::span<double> out) = 0;
};

using PrefixFunctionalFactory =
    std::function<std::unique_ptr<PrefixFunctional>(const TimeGrid& grid)>;

// Stateless adapted functional from a plain callable.
PrefixFunctionalFactory stateless_functional(
    std::function<void(int i, double t_i, std::span<const double> values, std::span<double> out)>
        fn);

struct SemimartingaleModel {
  int d = 1;
  std::string descriptor;
  // Draws W_0; receives the path's initial-condition substream.
  std::function<void(CounterRng& rng, std::span<double> out)> initial_sampler;
  PrefixFunctionalFactory drift;       // out: d values b(t_i, prefix)
  PrefixFunctionalFactory dispersion;  // out: d*d row-major sigma(t_i, prefix)
};

// Common building blocks.
SemimartingaleModel wiener_model(int d = 1);                       // drift 0, sigma = I, W_0 = 0
SemimartingaleModel constant_model(std::vector<double> drift_value,
                                   std::vector<double> sigma_diag,
                                   std::vector<double> x0);        // constant characteristics
SemimartingaleModel linear_drift_model(double a = 1.0);            // dX = dB + a X dt, X_0 = 0 (d=1)

// Euler-Maruyama: X_{i+1} = X_i + sigma(t_i, prefix) dB_i + b(t_i, prefix) dt,
// with v_i = b and alpha_i = sigma sigma^T stored. Noise comes from the
// per-path substreams of `seed`, identical to gaussian_stream(seed, ...).
// Deterministic for fixed (seed, grid, m_paths) regardless of `threads`.
// Non-finite drift/dispersion output aborts with an error naming path/step.
PathEnsemble simulate(const SemimartingaleModel& model, const TimeGrid& grid, int m_paths,
                      std::uint64_t seed, int threads = 1);

// Same scheme driven by an explicit noise block (shared-noise comparisons).
PathEnsemble simulate_with_noise(const SemimartingaleModel& model, const TimeGrid& grid,
                                 const NoiseBlock& noise, std::uint64_t init_seed, int threads = 1);

struct AdaptednessAuditReport {
  int checks = 0;
  double max_deviation = 0.0;
  bool pass = false;
};

// Re-evaluates the model's drift and dispersion on ensemble paths whose
// entries beyond the current step are garbled, and compares against the
// stored samples. Any dependence on the future surfaces as a deviation.
AdaptednessAuditReport audit_adaptedness(const SemimartingaleModel& model,
                                         const PathEnsemble& ens, int n_checks,
                                         std::uint64_t audit_seed, double tol = 1e-12);

// Same audit for a bare adapted functional producing out_dim values per step
// (used for variation processes). `recorded` is m x n x out_dim.
AdaptednessAuditReport audit_adapted_functional(const PrefixFunctionalFactory& factory,
                                                int out_dim, const PathEnsemble& ens,
                                                const std::vector<double>& recorded, int n_checks,
                                                std::uint64_t audit_seed, double tol = 1e-12);

struct IntegrabilityReport {
  double action = 0.0;          // E int L dt
  double moment_x = 0.0;        // E int |grad_x L|^p1 dt
  double moment_v = 0.0;        // E int |grad_v L|^p2 dt
  double tail_action = 0.0;     // share contributed by the top 1% of paths
  double tail_moment_x = 0.0;
  double tail_moment_v = 0.0;
  bool all_finite = false;
  bool heavy_tail_warning = false;  // any tail share > 0.5
};

// Empirical moments behind the integrability hypothesis. Finite-sample values
// are always finite, so the tail shares act as the heavy-tail heuristic.
IntegrabilityReport integrability_diagnostic(const PathEnsemble& ens, const Lagrangian& L,
                                             double p1, double p2);

}  // namespace semicrit
