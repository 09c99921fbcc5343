#pragma once

#include "vaelab/datasets.hpp"
#include "vaelab/models.hpp"
#include "vaelab/rng.hpp"

namespace vaelab {

/// Monte-Carlo / weighting knobs shared by the objectives.
struct ObjectiveConfig {
  int mc_samples = 1;          // L, reconstruction samples per datum
  int importance_samples = 1;  // S
  double alpha = 0.0;          // discriminator term weight
  double gamma = 1.0;          // labeled-bound weight
  bool hard_labels = false;    // evaluation-time hard y in relaxed paths
  double gumbel_temperature = 2.2;
  bool operator==(const ObjectiveConfig&) const = default;
};

/// A minibatch view: x always present; labels only where observed.
struct SsBatch {
  Tensor x_unlabeled;            // Nu x D
  Tensor x_labeled;              // Nl x D
  std::vector<double> y_labeled; // Nl raw labels
};

// ---- Tape builders (objective value to MAXIMIZE, mean per datum) ----

/// Mean over the batch of E_q[log p(x|z)] - KL(q(z|x) || p(z)), reparameterized,
/// analytic KL.
Value elbo_g(Graph& g, const VaeModel& m, const BoundParams& bp,
             const Tensor& x, Rng& noise, const ObjectiveConfig& cfg);

/// Mean over the batch of log (1/S) sum_s p(x,z_s)/q(z_s|x), stable LSE.
Value iwae_g(Graph& g, const VaeModel& m, const BoundParams& bp,
             const Tensor& x, Rng& noise, int S);

/// Labeled bound L(x,y) rows (Nl x 1):
/// E_q(z|x,y)[log p(x|z,y)] + log p(y) - KL(q(z|x,y)||p(z)), or its IWAE form.
Value ss_labeled_rows_g(Graph& g, const VaeModel& m, const BoundParams& bp,
                        const Tensor& x, const std::vector<double>& y,
                        Rng& noise, const ObjectiveConfig& cfg, bool iwae);

/// Unlabeled bound U(x) rows (Nu x 1):
/// E_{q(y|x) q(z|x)}[log p(x|z,y)] - KL(q(y|x)||p(y)) - KL(q(z|x)||p(z)),
/// or the joint-importance-weight IWAE form. Discrete y uses relaxed samples
/// at the configured temperature.
Value ss_unlabeled_rows_g(Graph& g, const VaeModel& m, const BoundParams& bp,
                          const Tensor& x, Rng& noise,
                          const ObjectiveConfig& cfg, bool iwae);

/// log q(y|x) rows for observed labels (the discriminator term).
Value ss_disc_logq_rows_g(Graph& g, const VaeModel& m, const BoundParams& bp,
                          const Tensor& x, const std::vector<double>& y);

/// Per-datum mean of sum U + gamma * sum L + alpha * sum log q(y|x) over the
/// mixed batch. The trainer minimizes the negation.
Value ss_objective_g(Graph& g, const VaeModel& m, const BoundParams& bp,
                     const SsBatch& batch, Rng& noise,
                     const ObjectiveConfig& cfg, bool iwae);

// ---- Plain estimates (no gradients) ----

double elbo_estimate(const VaeModel& m, const Tensor& x, Rng& noise,
                     const ObjectiveConfig& cfg);
double iwae_estimate(const VaeModel& m, const Tensor& x, Rng& noise, int S);
double ss_objective_estimate(const VaeModel& m, const SsBatch& batch,
                             Rng& noise, const ObjectiveConfig& cfg, bool iwae);
/// Single-datum bounds, for tests and diagnostics.
double ss_bound_labeled(const VaeModel& m, const std::vector<double>& x,
                        double y, Rng& noise, const ObjectiveConfig& cfg,
                        bool iwae);
double ss_bound_unlabeled(const VaeModel& m, const std::vector<double>& x,
                          Rng& noise, const ObjectiveConfig& cfg, bool iwae);

/// Per-dimension ELBO-stationary noise variance:
/// sigma2_d = (1/N) sum_n E_q(z|x_n) [ (x_nd - f(z)_d)^2 ], mc_samples draws.
std::vector<double> optimal_sigma_sq(const VaeModel& m, const Tensor& x,
                                     int mc_samples, Rng& noise);

/// Splits a dataset row range into the labeled/unlabeled batch view.
SsBatch make_ss_batch(const LabeledDataset& ds, const std::vector<int>& rows);

}  // namespace vaelab
