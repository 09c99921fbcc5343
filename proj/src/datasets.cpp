#include "vaelab/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vaelab/graph.hpp"
#include "vaelab/optim.hpp"
#include "vaelab/smallmat.hpp"
#include "vaelab/special.hpp"

namespace vaelab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kPi = 3.14159265358979323846264338327950288;

struct KindInfo {
  Kind kind;
  const char* name;
};
const KindInfo kKinds[] = {
    {Kind::figure8, "figure8"},
    {Kind::circle, "circle"},
    {Kind::absval, "absval"},
    {Kind::clusters, "clusters"},
    {Kind::spiral_dots, "spiral_dots"},
    {Kind::stepfn, "stepfn"},
    {Kind::quad1, "quad1"},
    {Kind::quad2, "quad2"},
    {Kind::quad3, "quad3"},
    {Kind::linear_cholesky, "linear_cholesky"},
    {Kind::ss_discrete, "ss_discrete"},
    {Kind::ss_continuous, "ss_continuous"},
    {Kind::gaussian, "gaussian"},
};

double semi_circle_angle(double z, double h) {
  const double phi = norm_cdf(z);
  return h * kPi * std::sqrt(phi) + (1.0 - h) * kPi * phi * phi * phi;
}

}  // namespace

const char* kind_name(Kind k) {
  for (const auto& ki : kKinds)
    if (ki.kind == k) return ki.name;
  throw std::logic_error("kind_name: unknown kind");
}

Kind kind_from_name(const std::string& name) {
  for (const auto& ki : kKinds)
    if (name == ki.name) return ki.kind;
  throw std::invalid_argument("unknown generator kind: " + name);
}

std::vector<Kind> all_kinds() {
  std::vector<Kind> ks;
  for (const auto& ki : kKinds) ks.push_back(ki.kind);
  return ks;
}

std::vector<double> GroundTruthModel::mean(const std::vector<double>& z,
                                           std::optional<double> y) const {
  Tensor zt(1, latent_dim);
  zt.v = z;
  Tensor yt;
  if (label_kind != LabelKind::none) {
    if (!y) throw std::invalid_argument("gt mean: label required");
    yt = Tensor::scalar(*y);
  } else if (y) {
    throw std::invalid_argument("gt mean: unexpected label");
  }
  Tensor out = mean_batch(zt, yt);
  return out.v;
}

double GroundTruthModel::prior_logpdf(double z) const {
  if (prior == PriorKind::std_normal) return norm_logpdf(z);
  return (z >= 0.0 && z <= 1.0) ? 0.0 : -1e308;
}

double GroundTruthModel::label_logpdf(double y) const {
  if (label_kind == LabelKind::discrete) return std::log(0.5);
  if (label_kind == LabelKind::continuous) return norm_logpdf(y);
  throw std::logic_error("label_logpdf: unlabeled model");
}

GroundTruthModel make_ground_truth(Kind kind) {
  GroundTruthModel gt;
  gt.kind = kind;
  gt.name = kind_name(kind);
  auto rowwise = [](int d, std::function<void(double, double*)> f) {
    return [d, f](const Tensor& z, const Tensor&) {
      Tensor out(z.rows, d);
      for (int r = 0; r < z.rows; ++r) f(z.at(r, 0), &out.v[r * d]);
      return out;
    };
  };
  auto rowwise_y = [](int d, std::function<void(double, double, double*)> f) {
    return [d, f](const Tensor& z, const Tensor& y) {
      if (y.rows != z.rows)
        throw std::invalid_argument("labeled gt mean: y block missing");
      Tensor out(z.rows, d);
      for (int r = 0; r < z.rows; ++r)
        f(z.at(r, 0), y.at(r, 0), &out.v[r * d]);
      return out;
    };
  };
  switch (kind) {
    case Kind::figure8:
      gt.data_dim = 2;
      gt.sigma2 = {0.02, 0.02};
      gt.mean_batch = rowwise(2, [](double z, double* o) {
        const double u = (0.6 + 1.8 * norm_cdf(z)) * kPi;
        const double s = std::sin(u), c = std::cos(u);
        o[0] = (std::sqrt(2.0) / 2.0) * c / (s * s + 1.0);
        o[1] = std::sqrt(2.0) * c * s / (s * s + 1.0);
      });
      break;
    case Kind::circle:
      gt.data_dim = 2;
      gt.sigma2 = {0.01, 0.01};
      gt.mean_batch = rowwise(2, [](double z, double* o) {
        const double a = 2.0 * kPi * norm_cdf(z);
        o[0] = std::cos(a);
        o[1] = std::sin(a);
      });
      break;
    case Kind::absval:
      gt.data_dim = 2;
      gt.sigma2 = {0.01, 0.01};
      gt.mean_batch = rowwise(2, [](double z, double* o) {
        const double a = std::abs(norm_cdf(z));
        o[0] = a;
        o[1] = a;
      });
      break;
    case Kind::clusters:
      gt.data_dim = 2;
      gt.sigma2 = {0.2, 0.2};
      gt.mean_batch = rowwise(2, [](double z, double* o) {
        const double u = 2.0 * kPi / (1.0 + std::exp(-0.5 * kPi * z));
        const double fl = std::floor(u / 2.0);
        const double t = 2.0 * std::tanh(10.0 * u - 20.0 * fl - 10.0) + 4.0 * fl + 2.0;
        o[0] = std::cos(t);
        o[1] = std::sin(t);
      });
      break;
    case Kind::spiral_dots:
      gt.data_dim = 2;
      gt.sigma2 = {0.01, 0.01};
      gt.mean_batch = rowwise(2, [](double z, double* o) {
        const double u = 4.0 * kPi / (1.0 + std::exp(-0.5 * kPi * z));
        const double fl = std::floor(u / 2.0);
        const double t = std::tanh(10.0 * u - 20.0 * fl - 10.0) + 2.0 * fl + 1.0;
        o[0] = t * std::cos(t);
        o[1] = t * std::sin(t);
      });
      break;
    case Kind::stepfn:
      gt.data_dim = 1;
      gt.sigma2 = {0.01};
      gt.mean_batch = rowwise(1, [](double z, double* o) { o[0] = std::floor(z); });
      break;
    case Kind::quad1:
      gt.data_dim = 1;
      gt.prior = PriorKind::uniform01;
      gt.sigma2 = {0.01};
      gt.mean_batch =
          rowwise(1, [](double z, double* o) { o[0] = (z - 0.5) * (z - 0.5); });
      break;
    case Kind::quad2:
      gt.data_dim = 1;
      gt.prior = PriorKind::uniform01;
      gt.sigma2 = {0.01};
      gt.mean_batch = rowwise(1, [](double z, double* o) { o[0] = 0.25 * z * z; });
      break;
    case Kind::quad3:
      gt.data_dim = 1;
      gt.prior = PriorKind::uniform01;
      gt.sigma2 = {0.01};
      gt.mean_batch = rowwise(1, [](double z, double* o) {
        o[0] = z < 0.5 ? (2.0 * z - 0.5) * (2.0 * z - 0.5)
                       : (2.0 * z - 1.5) * (2.0 * z - 1.5);
      });
      break;
    case Kind::linear_cholesky: {
      gt.latent_dim = 2;
      gt.data_dim = 2;
      Tensor a{{0.75, 0.25}, {1.5, -1.0}};
      Tensor b{{0.006, 0.0}, {0.0, 0.006}};
      const double sig2 = 0.01;
      Tensor l = mat_cholesky(
          Tensor{{a.at(0, 0) * a.at(0, 0) + a.at(0, 1) * a.at(0, 1) + b.at(0, 0),
                  a.at(0, 0) * a.at(1, 0) + a.at(0, 1) * a.at(1, 1)},
                 {a.at(0, 0) * a.at(1, 0) + a.at(0, 1) * a.at(1, 1),
                  a.at(1, 0) * a.at(1, 0) + a.at(1, 1) * a.at(1, 1) + b.at(1, 1)}});
      gt.sigma2 = {sig2 - b.at(0, 0), sig2 - b.at(1, 1)};
      gt.linear_gaussian = true;
      gt.linear_w = l;
      gt.mean_batch = [l](const Tensor& z, const Tensor&) {
        Tensor out(z.rows, 2);
        for (int r = 0; r < z.rows; ++r) {
          out.at(r, 0) = l.at(0, 0) * z.at(r, 0);
          out.at(r, 1) = l.at(1, 0) * z.at(r, 0) + l.at(1, 1) * z.at(r, 1);
        }
        return out;
      };
      break;
    }
    case Kind::ss_discrete:
      gt.data_dim = 2;
      gt.sigma2 = {0.01, 0.01};
      gt.label_kind = LabelKind::discrete;
      gt.mean_batch = rowwise_y(2, [](double z, double y, double* o) {
        const double a = semi_circle_angle(z, y < 0.5 ? 1.0 : 0.0);
        o[0] = std::cos(a);
        o[1] = std::sin(a);
      });
      break;
    case Kind::ss_continuous:
      gt.data_dim = 2;
      gt.sigma2 = {0.01, 0.01};
      gt.label_kind = LabelKind::continuous;
      gt.mean_batch = rowwise_y(2, [](double z, double y, double* o) {
        const double h = betainc_inv(0.2, 0.2, norm_cdf(y));
        const double a = semi_circle_angle(z, h);
        o[0] = std::cos(a);
        o[1] = std::sin(a);
      });
      break;
    case Kind::gaussian:
      gt.data_dim = 2;
      gt.sigma2 = {1.0, 1.0};
      gt.linear_gaussian = true;
      gt.linear_w = Tensor(2, 1);
      gt.mean_batch = rowwise(2, [](double, double* o) {
        o[0] = 0.0;
        o[1] = 0.0;
      });
      break;
  }
  return gt;
}

std::pair<GroundTruthModel, LabeledDataset> generate(Kind kind, int n,
                                                     uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate: n must be >= 1");
  GroundTruthModel gt = make_ground_truth(kind);
  Rng rng(Rng::mix(seed, static_cast<uint64_t>(kind)));
  LabeledDataset ds;
  ds.generator = gt.name;
  ds.seed = seed;
  ds.split = "all";
  ds.z_true = Tensor(n, gt.latent_dim);
  Tensor ycol;
  if (gt.label_kind != LabelKind::none) {
    ds.y.resize(n);
    ds.y_observed.assign(n, 0);
    ycol = Tensor(n, 1);
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < gt.latent_dim; ++k)
      ds.z_true.at(i, k) = gt.prior == PriorKind::std_normal
                               ? rng.normal()
                               : rng.uniform();
    if (gt.label_kind == LabelKind::discrete)
      ds.y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
    else if (gt.label_kind == LabelKind::continuous)
      ds.y[i] = rng.normal();
    if (gt.label_kind != LabelKind::none) ycol.at(i, 0) = ds.y[i];
  }
  Tensor means = gt.mean_batch(ds.z_true, ycol);
  ds.x = Tensor(n, gt.data_dim);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < gt.data_dim; ++d)
      ds.x.at(i, d) = means.at(i, d) + std::sqrt(gt.sigma2[d]) * rng.normal();
  if (gt.label_kind != LabelKind::none) {
    const int observed = static_cast<int>(std::ceil(0.1 * n));
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    shuffle_indices(idx, rng);
    for (int i = 0; i < observed; ++i) ds.y_observed[idx[i]] = 1;
  }
  return {std::move(gt), std::move(ds)};
}

namespace {
LabeledDataset take_rows(const LabeledDataset& src, int begin, int end,
                         const std::string& split) {
  LabeledDataset out;
  out.generator = src.generator;
  out.seed = src.seed;
  out.split = split;
  const int n = end - begin, d = src.x.cols;
  out.x = Tensor(n, d);
  std::copy(src.x.v.begin() + static_cast<size_t>(begin) * d,
            src.x.v.begin() + static_cast<size_t>(end) * d, out.x.v.begin());
  if (src.z_true.size()) {
    const int k = src.z_true.cols;
    out.z_true = Tensor(n, k);
    std::copy(src.z_true.v.begin() + static_cast<size_t>(begin) * k,
              src.z_true.v.begin() + static_cast<size_t>(end) * k,
              out.z_true.v.begin());
  }
  if (src.has_y()) {
    out.y.assign(src.y.begin() + begin, src.y.begin() + end);
    out.y_observed.assign(src.y_observed.begin() + begin,
                          src.y_observed.begin() + end);
  }
  return out;
}
}  // namespace

DatasetVersion make_version(Kind kind, uint64_t seed) {
  auto [gt, all] = generate(kind, 9000, seed);
  DatasetVersion v;
  v.gt = std::move(gt);
  v.train = take_rows(all, 0, 5000, "train");
  v.validation = take_rows(all, 5000, 7000, "validation");
  v.test = take_rows(all, 7000, 9000, "test");
  return v;
}

// ---- Quadrature ----

GtDensity::GtDensity(const GroundTruthModel& gt, QuadratureSpec spec)
    : gt_(gt), spec_(spec) {
  if (gt_.linear_gaussian) {
    closed_form_ = true;
    const int d = gt_.data_dim;
    Tensor cov(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0;
        for (int k = 0; k < gt_.linear_w.cols; ++k)
          s += gt_.linear_w.at(i, k) * gt_.linear_w.at(j, k);
        cov.at(i, j) = s + (i == j ? gt_.sigma2[i] : 0.0);
      }
    marg_cov_inv_ = mat_inverse(cov);
    marg_logdet_ = std::log(mat_det(cov));
    return;
  }
  if (gt_.latent_dim != 1)
    throw std::invalid_argument(
        "gt_density: quadrature supports 1-D latents only (kind " + gt_.name +
        ")");
  const bool uniform = gt_.prior == PriorKind::uniform01;
  const double lo = uniform ? 0.0 : spec_.z_lo;
  const double hi = uniform ? 1.0 : spec_.z_hi;
  const int g = spec_.z_points;
  const double h = (hi - lo) / (g - 1);
  z_grid_.resize(g);
  z_logw_.resize(g);
  for (int i = 0; i < g; ++i) {
    z_grid_[i] = lo + h * i;
    const double w = (i == 0 || i == g - 1) ? h / 2.0 : h;
    z_logw_[i] = std::log(w) + gt_.prior_logpdf(z_grid_[i]);
  }
  if (gt_.label_kind == LabelKind::none) {
    Tensor zcol = Tensor::col(z_grid_);
    means_ = gt_.mean_batch(zcol, Tensor());
  } else if (gt_.label_kind == LabelKind::discrete) {
    y_grid_ = {0.0, 1.0};
    y_logw_ = {std::log(0.5), std::log(0.5)};
  } else {
    const int yg = spec_.y_points;
    const double yh = (spec_.y_hi - spec_.y_lo) / (yg - 1);
    y_grid_.resize(yg);
    y_logw_.resize(yg);
    for (int i = 0; i < yg; ++i) {
      y_grid_[i] = spec_.y_lo + yh * i;
      const double w = (i == 0 || i == yg - 1) ? yh / 2.0 : yh;
      y_logw_[i] = std::log(w) + norm_logpdf(y_grid_[i]);
    }
  }
  if (gt_.label_kind != LabelKind::none) {
    // Mean table over the z x y product grid, y-major within each z row.
    const int yg = static_cast<int>(y_grid_.size());
    Tensor zs(g * yg, 1), ys(g * yg, 1);
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < yg; ++j) {
        zs.at(i * yg + j, 0) = z_grid_[i];
        ys.at(i * yg + j, 0) = y_grid_[j];
      }
    means_ = gt_.mean_batch(zs, ys);
  }
}

double GtDensity::joint_row_logpdf(const std::vector<double>& x, int row) const {
  double lp = 0.0;
  for (int d = 0; d < gt_.data_dim; ++d) {
    const double diff = x[d] - means_.at(row, d);
    lp += -0.5 * (kLog2Pi + std::log(gt_.sigma2[d]) +
                  diff * diff / gt_.sigma2[d]);
  }
  return lp;
}

double GtDensity::log_density(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != gt_.data_dim)
    throw std::invalid_argument("log_density: wrong x dimension");
  if (closed_form_) {
    double q = 0.0;
    for (int i = 0; i < gt_.data_dim; ++i)
      for (int j = 0; j < gt_.data_dim; ++j)
        q += x[i] * marg_cov_inv_.at(i, j) * x[j];
    return -0.5 * (gt_.data_dim * kLog2Pi + marg_logdet_ + q);
  }
  const int g = static_cast<int>(z_grid_.size());
  const int yg = gt_.label_kind == LabelKind::none
                     ? 1
                     : static_cast<int>(y_grid_.size());
  double mx = -1e308;
  std::vector<double> terms(static_cast<size_t>(g) * yg);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < yg; ++j) {
      const int row = i * yg + j;
      double t = z_logw_[i] + joint_row_logpdf(x, row);
      if (yg > 1) t += y_logw_[j];
      terms[row] = t;
      mx = std::max(mx, t);
    }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

std::vector<double> GtDensity::posterior(const std::vector<double>& x) const {
  if (closed_form_ && !z_grid_.empty())
    throw std::logic_error("posterior: unexpected state");
  if (closed_form_)
    throw std::invalid_argument("gt_posterior: closed-form kind " + gt_.name +
                                " has no 1-D grid posterior");
  const int g = static_cast<int>(z_grid_.size());
  const int yg = gt_.label_kind == LabelKind::none
                     ? 1
                     : static_cast<int>(y_grid_.size());
  std::vector<double> logu(g, -1e308);
  double mx = -1e308;
  for (int i = 0; i < g; ++i) {
    double acc = -1e308;
    for (int j = 0; j < yg; ++j) {
      const int row = i * yg + j;
      double t = joint_row_logpdf(x, row);
      if (yg > 1) t += y_logw_[j];
      acc = acc > t ? acc + std::log1p(std::exp(t - acc))
                    : t + std::log1p(std::exp(acc - t));
    }
    logu[i] = acc + gt_.prior_logpdf(z_grid_[i]);
    mx = std::max(mx, logu[i]);
  }
  if (mx < -700.0)
    throw std::runtime_error(
        "gt_posterior: unnormalized posterior mass underflows (x too far)");
  std::vector<double> dens(g);
  double norm = 0.0;
  for (int i = 0; i < g; ++i) {
    dens[i] = std::exp(logu[i] - mx);
    const double w = std::exp(z_logw_[i] - gt_.prior_logpdf(z_grid_[i]));
    norm += dens[i] * w;
  }
  for (double& d : dens) d /= norm;
  return dens;
}

double gt_log_density(const GroundTruthModel& gt, const std::vector<double>& x,
                      const QuadratureSpec& spec) {
  return GtDensity(gt, spec).log_density(x);
}

std::vector<double> gt_posterior(const GroundTruthModel& gt,
                                 const std::vector<double>& x,
                                 const std::vector<double>& z_grid) {
  if (gt.latent_dim != 1)
    throw std::invalid_argument("gt_posterior: 1-D latent required");
  if (!std::is_sorted(z_grid.begin(), z_grid.end()))
    throw std::invalid_argument("gt_posterior: grid must be sorted");
  const int g = static_cast<int>(z_grid.size());
  Tensor zcol = Tensor::col(z_grid);
  std::vector<double> logu(g, -1e308);
  auto accumulate_y = [&](const Tensor& means, double log_wy) {
    for (int i = 0; i < g; ++i) {
      double lp = 0.0;
      for (int d = 0; d < gt.data_dim; ++d) {
        const double diff = x[d] - means.at(i, d);
        lp += -0.5 * (kLog2Pi + std::log(gt.sigma2[d]) +
                      diff * diff / gt.sigma2[d]);
      }
      const double t = lp + log_wy;
      logu[i] = logu[i] > t ? logu[i] + std::log1p(std::exp(t - logu[i]))
                            : t + std::log1p(std::exp(logu[i] - t));
    }
  };
  if (gt.label_kind == LabelKind::none) {
    accumulate_y(gt.mean_batch(zcol, Tensor()), 0.0);
  } else if (gt.label_kind == LabelKind::discrete) {
    for (double yv : {0.0, 1.0}) {
      accumulate_y(gt.mean_batch(zcol, Tensor(g, 1, yv)), std::log(0.5));
    }
  } else {
    QuadratureSpec spec;
    const double yh = (spec.y_hi - spec.y_lo) / (spec.y_points - 1);
    for (int j = 0; j < spec.y_points; ++j) {
      const double yv = spec.y_lo + yh * j;
      const double w = (j == 0 || j == spec.y_points - 1) ? yh / 2 : yh;
      accumulate_y(gt.mean_batch(zcol, Tensor(g, 1, yv)),
                   std::log(w) + norm_logpdf(yv));
    }
  }
  double mx = -1e308;
  for (int i = 0; i < g; ++i) {
    logu[i] += gt.prior_logpdf(z_grid[i]);
    mx = std::max(mx, logu[i]);
  }
  if (mx < -700.0)
    throw std::runtime_error(
        "gt_posterior: unnormalized posterior mass underflows (x too far)");
  std::vector<double> dens(g);
  for (int i = 0; i < g; ++i) dens[i] = std::exp(logu[i] - mx);
  double norm = 0.0;
  for (int i = 0; i + 1 < g; ++i)
    norm += 0.5 * (dens[i] + dens[i + 1]) * (z_grid[i + 1] - z_grid[i]);
  for (double& d : dens) d /= norm;
  return dens;
}

GroundTruthModel as_ground_truth(const VaeModel& m) {
  GroundTruthModel gt;
  gt.name = "model";
  gt.latent_dim = m.latent_dim;
  gt.data_dim = m.data_dim;
  gt.sigma2 = m.sigma2();
  gt.label_kind = m.label_kind;
  VaeModel snapshot = m;
  gt.mean_batch = [snapshot](const Tensor& z, const Tensor& y) {
    Tensor y_repr;
    if (snapshot.label_kind == LabelKind::discrete) {
      y_repr = Tensor(z.rows, snapshot.n_classes);
      for (int r = 0; r < z.rows; ++r)
        y_repr.at(r, static_cast<int>(y.at(r, 0))) = 1.0;
    } else if (snapshot.label_kind == LabelKind::continuous) {
      y_repr = y;
    }
    return decode_batch(snapshot, z, y_repr);
  };
  if (m.decoder_kind == DecoderKind::linear_cholesky) {
    gt.latent_dim = 2;
    gt.linear_gaussian = true;
    const Tensor& a = m.params.find("dec.A");
    Tensor aat(2, 2);
    aat.at(0, 0) = a.v[0] * a.v[0] + a.v[1] * a.v[1] + m.chol_b.v[0];
    aat.at(0, 1) = aat.at(1, 0) = a.v[0] * a.v[2] + a.v[1] * a.v[3];
    aat.at(1, 1) = a.v[2] * a.v[2] + a.v[3] * a.v[3] + m.chol_b.v[1];
    gt.linear_w = mat_cholesky(aat);
  }
  return gt;
}

// ---- Embedding ----

Tensor default_embedding() {
  return Tensor{{1.0, 0.0, 0.5, 0.2, -0.8}, {0.0, 1.0, -0.5, 0.3, -0.1}};
}

GroundTruthModel embed_5d(const GroundTruthModel& gt, const Tensor& a) {
  if (gt.data_dim != 2)
    throw std::invalid_argument("embed_5d: source must be 2-D");
  if (a.rows != 2)
    throw std::invalid_argument("embed_5d: embedding must have 2 rows");
  Tensor gram = mat_mul(a, mat_transpose(a));
  if (std::abs(mat_det(gram)) < 1e-12)
    throw std::invalid_argument("embed_5d: rank-deficient embedding");
  GroundTruthModel lifted = gt;
  lifted.name = gt.name + "_5d";
  lifted.data_dim = a.cols;
  lifted.sigma2.assign(a.cols, gt.sigma2[0]);
  lifted.linear_gaussian = false;
  auto base = gt.mean_batch;
  Tensor acopy = a;
  lifted.mean_batch = [base, acopy](const Tensor& z, const Tensor& y) {
    Tensor m2 = base(z, y);
    Tensor out(m2.rows, acopy.cols);
    matmul(m2, acopy, out);
    return out;
  };
  return lifted;
}

Tensor project_back(const Tensor& a, const Tensor& x5) {
  Tensor gram_inv = mat_inverse(mat_mul(a, mat_transpose(a)));
  Tensor pinv = mat_mul(mat_transpose(a), gram_inv);  // cols x 2
  Tensor out(x5.rows, 2);
  matmul(x5, pinv, out);
  return out;
}

// ---- Surrogate fitting ----

namespace {
// Builds (inputs, targets) for the supervised fit: z from the prior plus the
// label representation for labeled models.
void surrogate_data(const GroundTruthModel& gt, int n, Rng& rng, Tensor& in,
                    Tensor& target) {
  const int ydim = gt.label_kind == LabelKind::none ? 0
                   : gt.label_kind == LabelKind::discrete ? 2
                                                          : 1;
  Tensor z(n, gt.latent_dim);
  for (auto& v : z.v)
    v = gt.prior == PriorKind::std_normal ? rng.normal() : rng.uniform();
  Tensor ycol;
  in = Tensor(n, gt.latent_dim + ydim);
  for (int r = 0; r < n; ++r)
    for (int k = 0; k < gt.latent_dim; ++k) in.at(r, k) = z.at(r, k);
  if (gt.label_kind != LabelKind::none) {
    ycol = Tensor(n, 1);
    for (int r = 0; r < n; ++r) {
      if (gt.label_kind == LabelKind::discrete) {
        const int c = rng.uniform() < 0.5 ? 0 : 1;
        ycol.at(r, 0) = c;
        in.at(r, gt.latent_dim + c) = 1.0;
      } else {
        const double yv = rng.normal();
        ycol.at(r, 0) = yv;
        in.at(r, gt.latent_dim) = yv;
      }
    }
  }
  target = gt.mean_batch(z, ycol);
}

double mse_eval(const ParameterSet& ps, const MlpArch& arch, const Tensor& in,
                const Tensor& target) {
  Tensor out = mlp_eval(ps, "dec", arch, in);
  double s = 0;
  for (size_t i = 0; i < out.size(); ++i) {
    const double d = out.v[i] - target.v[i];
    s += d * d;
  }
  return s / out.size();
}

// Closed-form least squares for a purely linear architecture.
void linear_fit(ParameterSet& ps, const MlpArch& arch, const Tensor& in,
                const Tensor& target) {
  const int d = arch.in;
  Tensor aug(in.rows, d + 1);
  for (int r = 0; r < in.rows; ++r) {
    for (int c = 0; c < d; ++c) aug.at(r, c) = in.at(r, c);
    aug.at(r, d) = 1.0;
  }
  Tensor gram(d + 1, d + 1);
  matmul_at_b_acc(aug, aug, gram);
  Tensor rhs(d + 1, arch.out);
  matmul_at_b_acc(aug, target, rhs);
  Tensor sol = mat_mul(mat_inverse(gram), rhs);
  Tensor& w = ps.find("dec.w0");
  Tensor& b = ps.find("dec.b0");
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < arch.out; ++c) w.at(r, c) = sol.at(r, c);
  for (int c = 0; c < arch.out; ++c) b.at(0, c) = sol.at(d, c);
}
}  // namespace

Surrogate fit_surrogate(const GroundTruthModel& gt, const MlpArch& arch_in,
                        const SurrogateConfig& cfg) {
  MlpArch arch = arch_in;
  const int ydim = gt.label_kind == LabelKind::none ? 0
                   : gt.label_kind == LabelKind::discrete ? 2
                                                          : 1;
  arch.in = gt.latent_dim + ydim;
  arch.out = gt.data_dim;

  Rng rng(Rng::mix(cfg.seed, 0x5fa9));
  Tensor in, target, hin, htarget;
  surrogate_data(gt, cfg.n_train, rng, in, target);
  surrogate_data(gt, cfg.n_holdout, rng, hin, htarget);

  Surrogate s;
  s.arch = arch;
  mlp_init(s.params, "dec", arch, rng);

  if (arch.hidden.empty()) {
    linear_fit(s.params, arch, in, target);
    s.holdout_mse = mse_eval(s.params, arch, hin, htarget);
    if (s.holdout_mse >= cfg.tolerance)
      throw std::runtime_error("fit_surrogate: tolerance unreached, best MSE " +
                               std::to_string(s.holdout_mse));
    return s;
  }

  Adam opt;
  opt.init(s.params);
  double best = 1e308;
  ParameterSet best_params = s.params;
  const int nb = cfg.n_train / cfg.batch;
  for (int step = 0; step < cfg.max_steps; ++step) {
    const double frac = static_cast<double>(step) / cfg.max_steps;
    const double lr = frac < 0.4 ? 1e-2 : frac < 0.7 ? 3e-3 : 1e-3;
    const int b0 = (step % nb) * cfg.batch;
    Tensor bx(cfg.batch, arch.in), bt(cfg.batch, arch.out);
    std::copy(in.v.begin() + static_cast<size_t>(b0) * arch.in,
              in.v.begin() + static_cast<size_t>(b0 + cfg.batch) * arch.in,
              bx.v.begin());
    std::copy(target.v.begin() + static_cast<size_t>(b0) * arch.out,
              target.v.begin() + static_cast<size_t>(b0 + cfg.batch) * arch.out,
              bt.v.begin());
    Graph g;
    BoundParams bp = bind(g, s.params);
    Value out = mlp_forward(g, s.params, bp, "dec", arch, g.leaf(bx));
    Value loss = mean_all(square(sub(out, g.leaf(bt))));
    g.backward(loss);
    ParameterSet grads = collect_grads(g, s.params, bp);
    opt.step(s.params, grads, lr);
    if ((step + 1) % 200 == 0 || step + 1 == cfg.max_steps) {
      const double mse = mse_eval(s.params, arch, hin, htarget);
      if (mse < best) {
        best = mse;
        best_params = s.params;
      }
      if (best < cfg.tolerance && frac > 0.4) break;
    }
  }
  s.params = best_params;
  s.holdout_mse = best;
  if (best >= cfg.tolerance)
    throw std::runtime_error("fit_surrogate: tolerance unreached, best MSE " +
                             std::to_string(best));
  return s;
}

// ---- CSV ----

void save_csv(const LabeledDataset& ds, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("save_csv: cannot write " + path);
  const int d = ds.x.cols;
  const int k = ds.z_true.size() ? ds.z_true.cols : 0;
  std::string header;
  for (int c = 0; c < d; ++c) header += (c ? ",x" : "x") + std::to_string(c);
  for (int c = 0; c < k; ++c) header += ",z" + std::to_string(c);
  if (ds.has_y()) header += ",y,y_observed";
  std::fprintf(f, "%s\n", header.c_str());
  for (int r = 0; r < ds.n(); ++r) {
    for (int c = 0; c < d; ++c)
      std::fprintf(f, c ? ",%.17g" : "%.17g", ds.x.at(r, c));
    for (int c = 0; c < k; ++c) std::fprintf(f, ",%.17g", ds.z_true.at(r, c));
    if (ds.has_y())
      std::fprintf(f, ",%.17g,%d", ds.y[r], ds.y_observed[r] ? 1 : 0);
    std::fputc('\n', f);
  }
  std::fclose(f);
}

LabeledDataset load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("load_csv: empty file");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  int d = 0, k = 0;
  bool has_y = false, has_obs = false;
  size_t i = 0;
  while (i < cols.size() && cols[i] == "x" + std::to_string(d)) {
    ++d;
    ++i;
  }
  while (i < cols.size() && cols[i] == "z" + std::to_string(k)) {
    ++k;
    ++i;
  }
  if (i < cols.size() && cols[i] == "y") {
    has_y = true;
    ++i;
    if (i < cols.size() && cols[i] == "y_observed") {
      has_obs = true;
      ++i;
    }
  }
  if (d == 0 || i != cols.size() || (has_y && !has_obs))
    throw std::runtime_error("load_csv: malformed header '" + line + "'");

  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
    if (row.size() != cols.size())
      throw std::runtime_error("load_csv: ragged row with " +
                               std::to_string(row.size()) + " fields");
    rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  LabeledDataset ds;
  ds.x = Tensor(n, d);
  if (k) ds.z_true = Tensor(n, k);
  if (has_y) {
    ds.y.resize(n);
    ds.y_observed.assign(n, 0);
  }
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) ds.x.at(r, c) = rows[r][c];
    for (int c = 0; c < k; ++c) ds.z_true.at(r, c) = rows[r][d + c];
    if (has_y) {
      ds.y[r] = rows[r][d + k];
      const double obs = rows[r][d + k + 1];
      if (obs != 0.0 && obs != 1.0)
        throw std::runtime_error("load_csv: y_observed must be 0 or 1");
      ds.y_observed[r] = obs != 0.0;
    }
  }
  return ds;
}

}  // namespace vaelab
