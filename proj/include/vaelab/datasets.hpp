#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vaelab/models.hpp"
#include "vaelab/rng.hpp"
#include "vaelab/tensor.hpp"

namespace vaelab {

enum class PriorKind : uint8_t { std_normal, uniform01 };

/// Stable CLI identifiers for the benchmark generators.
enum class Kind : uint8_t {
  figure8,
  circle,
  absval,
  clusters,
  spiral_dots,
  stepfn,
  quad1,
  quad2,
  quad3,
  linear_cholesky,
  ss_discrete,
  ss_continuous,
  gaussian,
};

const char* kind_name(Kind k);
Kind kind_from_name(const std::string& name);
std::vector<Kind> all_kinds();

/// Analytic prior + mean function + observation noise, able to sample and to
/// evaluate exact densities by quadrature (K = 1) or closed form (linear
/// Gaussian kinds).
struct GroundTruthModel {
  Kind kind = Kind::gaussian;
  std::string name;
  int latent_dim = 1;
  int data_dim = 2;
  PriorKind prior = PriorKind::std_normal;
  std::vector<double> sigma2;
  LabelKind label_kind = LabelKind::none;

  /// Batched mean map: z is n x K; y is n x 1 (labels as real numbers,
  /// class index for discrete) or empty when unlabeled. Returns n x D.
  std::function<Tensor(const Tensor& z, const Tensor& y)> mean_batch;

  /// Closed-form Gaussian marginal N(0, W W^T + diag(sigma2)), when linear.
  bool linear_gaussian = false;
  Tensor linear_w;  // D x K

  std::vector<double> mean(const std::vector<double>& z,
                           std::optional<double> y = std::nullopt) const;
  double prior_logpdf(double z) const;
  double label_logpdf(double y) const;
};

/// Observation matrix with optional true latents, labels, and observed mask.
struct LabeledDataset {
  Tensor x;                           // N x D
  Tensor z_true;                      // N x K (empty if absent)
  std::vector<double> y;              // empty if absent
  std::vector<uint8_t> y_observed;    // empty iff y absent
  std::string split;                  // train / validation / test
  std::string generator;
  uint64_t seed = 0;

  int n() const { return x.rows; }
  bool has_y() const { return !y.empty(); }
};

GroundTruthModel make_ground_truth(Kind kind);

/// Samples n points exactly per the cited generative process; z_true always
/// recorded; labels carry a 10%-observed mask for semi-supervised kinds.
std::pair<GroundTruthModel, LabeledDataset> generate(Kind kind, int n,
                                                     uint64_t seed);

struct DatasetVersion {
  GroundTruthModel gt;
  LabeledDataset train, validation, test;
};
/// Appendix-style version: 5000/2000/2000 split of a 9000-point draw.
DatasetVersion make_version(Kind kind, uint64_t seed);

// ---- Exact densities by quadrature ----

struct QuadratureSpec {
  int z_points = 4001;
  double z_lo = -8.0, z_hi = 8.0;  // replaced by [0,1] for uniform priors
  int y_points = 801;
  double y_lo = -8.0, y_hi = 8.0;
};

/// Precomputed quadrature evaluator over a ground-truth (or model-as-gt)
/// density. Supports K = 1 (optionally with a discrete/1-D label), plus the
/// linear-Gaussian closed form.
class GtDensity {
 public:
  GtDensity(const GroundTruthModel& gt, QuadratureSpec spec = {});

  double log_density(const std::vector<double>& x) const;
  /// p(z|x) on grid, normalized by the trapezoid rule (marginalized over y
  /// for labeled models). Throws if all unnormalized mass underflows.
  std::vector<double> posterior(const std::vector<double>& x) const;
  const std::vector<double>& z_grid() const { return z_grid_; }

 private:
  const GroundTruthModel gt_;
  QuadratureSpec spec_;
  std::vector<double> z_grid_, z_logw_;  // trapezoid log-weights + prior
  std::vector<double> y_grid_, y_logw_;
  Tensor means_;  // (G*Y|G) x D precomputed mean table
  bool closed_form_ = false;
  Tensor marg_cov_inv_;
  double marg_logdet_ = 0.0;

  double joint_row_logpdf(const std::vector<double>& x, int row) const;
};

double gt_log_density(const GroundTruthModel& gt, const std::vector<double>& x,
                      const QuadratureSpec& spec = {});

std::vector<double> gt_posterior(const GroundTruthModel& gt,
                                 const std::vector<double>& x,
                                 const std::vector<double>& z_grid);

/// Wraps a trained unsupervised model as a ground truth for density work.
GroundTruthModel as_ground_truth(const VaeModel& m);

// ---- 5-D embedding ----

/// Default 2x5 lift from the latent-dimension sweep setup.
Tensor default_embedding();

/// Lifts a 2-D ground truth to D = 5: mean map A^T f(z), fresh isotropic
/// noise at the source sigma2. Throws on rank-deficient A.
GroundTruthModel embed_5d(const GroundTruthModel& gt, const Tensor& a);

/// Least-squares projection of lifted means back to 2-D (for tests).
Tensor project_back(const Tensor& a, const Tensor& x5);

// ---- Surrogate decoder fitting ----

struct Surrogate {
  MlpArch arch;
  ParameterSet params;  // named dec.*
  double holdout_mse = 0.0;
};

struct SurrogateConfig {
  double tolerance = 1e-4;
  int n_train = 5000, n_holdout = 1000;
  int batch = 100;
  int max_steps = 9000;
  uint64_t seed = 0;
};

/// Supervised regression of the ground-truth mean map on dense prior samples.
/// Throws (reporting the best MSE) if the tolerance is unreached.
Surrogate fit_surrogate(const GroundTruthModel& gt, const MlpArch& arch,
                        const SurrogateConfig& cfg);

// ---- CSV round trip ----

void save_csv(const LabeledDataset& ds, const std::string& path);
LabeledDataset load_csv(const std::string& path);

}  // namespace vaelab
