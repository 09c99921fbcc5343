#include "vaelab/models.hpp"

#include <cmath>
#include <stdexcept>

namespace vaelab {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Tensor logvar_tensor(const std::vector<double>& sigma2) {
  Tensor t(1, static_cast<int>(sigma2.size()));
  for (size_t i = 0; i < sigma2.size(); ++i) {
    if (sigma2[i] <= 0.0)
      throw std::invalid_argument("observation variance must be positive");
    t.v[i] = std::log(sigma2[i]);
  }
  return t;
}

// Lower-triangular factor entries of A A^T + B for the 2x2 case.
void chol_entries(const double* a, const double* b, double& l11, double& l21,
                  double& l22) {
  const double m11 = a[0] * a[0] + a[1] * a[1] + b[0];
  const double m21 = a[0] * a[2] + a[1] * a[3];
  const double m22 = a[2] * a[2] + a[3] * a[3] + b[1];
  l11 = std::sqrt(m11);
  l21 = m21 / l11;
  l22 = std::sqrt(m22 - l21 * l21);
}
}  // namespace

std::vector<double> VaeModel::sigma2() const {
  const Tensor& lv = params.find("obs_logvar");
  std::vector<double> out(lv.size());
  for (size_t i = 0; i < lv.size(); ++i) out[i] = std::exp(lv.v[i]);
  return out;
}

VaeModel make_vae(int latent_dim, int data_dim, const std::vector<int>& hidden,
                  const std::vector<double>& sigma2, Rng& rng) {
  VaeModel m;
  m.latent_dim = latent_dim;
  m.data_dim = data_dim;
  m.dec_arch = {latent_dim, data_dim, hidden};
  m.enc_arch = {data_dim, 2 * latent_dim, hidden};
  mlp_init(m.params, "dec", m.dec_arch, rng);
  mlp_init(m.params, "enc", m.enc_arch, rng);
  m.params.add("obs_logvar", logvar_tensor(sigma2));
  return m;
}

VaeModel make_ss_vae(int latent_dim, int data_dim, LabelKind label_kind,
                     const std::vector<int>& hidden,
                     const std::vector<double>& sigma2, Rng& rng) {
  if (label_kind == LabelKind::none)
    throw std::invalid_argument("make_ss_vae: label kind required");
  VaeModel m;
  m.latent_dim = latent_dim;
  m.data_dim = data_dim;
  m.label_kind = label_kind;
  const int ydim = m.y_repr_dim();
  m.dec_arch = {latent_dim + ydim, data_dim, hidden};
  m.enc_arch = {data_dim, 2 * latent_dim, hidden};
  m.enc_l_arch = {data_dim + ydim, 2 * latent_dim, hidden};
  m.disc_arch = {data_dim,
                 label_kind == LabelKind::discrete ? m.n_classes : 2, hidden};
  mlp_init(m.params, "dec", m.dec_arch, rng);
  mlp_init(m.params, "enc", m.enc_arch, rng);
  mlp_init(m.params, "encl", m.enc_l_arch, rng);
  mlp_init(m.params, "disc", m.disc_arch, rng);
  m.params.add("obs_logvar", logvar_tensor(sigma2));
  return m;
}

VaeModel make_linear_cholesky_vae(const Tensor& a_init, const Tensor& b_diag,
                                  double sigma2, const std::vector<int>& enc_hidden,
                                  Rng& rng) {
  if (a_init.rows != 2 || a_init.cols != 2)
    throw std::invalid_argument("make_linear_cholesky_vae: A must be 2x2");
  VaeModel m;
  m.latent_dim = 2;
  m.data_dim = 2;
  m.decoder_kind = DecoderKind::linear_cholesky;
  m.chol_b = b_diag;
  m.enc_arch = {2, 4, enc_hidden};
  Tensor a(1, 4);
  a.v = {a_init.at(0, 0), a_init.at(0, 1), a_init.at(1, 0), a_init.at(1, 1)};
  m.params.add("dec.A", a);
  mlp_init(m.params, "enc", m.enc_arch, rng);
  // Noise covariance sigma2*I - B must stay positive definite.
  std::vector<double> noise(2);
  for (int d = 0; d < 2; ++d) {
    noise[d] = sigma2 - b_diag.v[d];
    if (noise[d] <= 0.0)
      throw std::invalid_argument("sigma2*I - B not positive definite");
  }
  m.params.add("obs_logvar", logvar_tensor(noise));
  return m;
}

EncoderHeads encode_g(Graph& g, const VaeModel& m, const BoundParams& bp,
                      Value x, bool labeled, Value y) {
  Value h;
  if (labeled) {
    if (!m.has_labels() || !y.valid())
      throw std::invalid_argument("encode_g: labeled path needs y");
    h = mlp_forward(g, m.params, bp, "encl", m.enc_l_arch, concat_cols(x, y));
  } else {
    h = mlp_forward(g, m.params, bp, "enc", m.enc_arch, x);
  }
  const int k = m.latent_dim;
  return {slice_cols(h, 0, k), clamp(slice_cols(h, k, k), kLogVarLo, kLogVarHi)};
}

Value decode_g(Graph& g, const VaeModel& m, const BoundParams& bp, Value z,
               Value y) {
  if (m.has_labels() != y.valid())
    throw std::invalid_argument("decode_g: label presence mismatch");
  if (m.decoder_kind == DecoderKind::linear_cholesky) {
    Value a = bp[param_index(m.params, "dec.A")];
    Value a11 = slice_cols(a, 0, 1), a12 = slice_cols(a, 1, 1);
    Value a21 = slice_cols(a, 2, 1), a22 = slice_cols(a, 3, 1);
    Value m11 = add_const(add(square(a11), square(a12)), m.chol_b.v[0]);
    Value m21 = add(mul(a11, a21), mul(a12, a22));
    Value m22 = add_const(add(square(a21), square(a22)), m.chol_b.v[1]);
    Value l11 = sqrt_(m11);
    Value l21 = div(m21, l11);
    Value l22 = sqrt_(sub(m22, square(l21)));
    Value z1 = slice_cols(z, 0, 1), z2 = slice_cols(z, 1, 1);
    return concat_cols(mul(z1, l11), add(mul(z1, l21), mul(z2, l22)));
  }
  Value in = m.has_labels() ? concat_cols(z, y) : z;
  return mlp_forward(g, m.params, bp, "dec", m.dec_arch, in);
}

Value obs_logvar_g(const VaeModel& m, const BoundParams& bp) {
  return bp[param_index(m.params, "obs_logvar")];
}

Value log_px_given_z_g(Graph& g, const VaeModel& m, const BoundParams& bp,
                       Value x, Value z, Value y) {
  return diag_gauss_logpdf(x, decode_g(g, m, bp, z, y), obs_logvar_g(m, bp));
}

Value kl_std_normal_g(Graph& g, Value mu, Value logvar) {
  // 0.5 * sum_k (mu^2 + exp(lv) - 1 - lv)
  Value t = sub(add(square(mu), exp_(logvar)), add_const(logvar, 1.0));
  return scale(row_sum(t), 0.5);
}

Value reparam_g(Graph& g, Value mu, Value logvar, Value noise) {
  return add(mu, mul(exp_(scale(logvar, 0.5)), noise));
}

Value gumbel_softmax_g(Graph& g, Value logits, double temperature,
                       Value uniform_noise) {
  if (temperature <= 0.0)
    throw std::invalid_argument("gumbel_softmax: temperature must be positive");
  Value gumbel = neg(log_(neg(log_(uniform_noise))));
  return softmax_rows(scale(add(logits, gumbel), 1.0 / temperature));
}

Value disc_logits_g(Graph& g, const VaeModel& m, const BoundParams& bp, Value x) {
  if (m.label_kind != LabelKind::discrete)
    throw std::invalid_argument("disc_logits_g: discrete discriminator required");
  return mlp_forward(g, m.params, bp, "disc", m.disc_arch, x);
}

EncoderHeads disc_gauss_g(Graph& g, const VaeModel& m, const BoundParams& bp,
                          Value x) {
  if (m.label_kind != LabelKind::continuous)
    throw std::invalid_argument("disc_gauss_g: continuous discriminator required");
  Value h = mlp_forward(g, m.params, bp, "disc", m.disc_arch, x);
  return {slice_cols(h, 0, 1), clamp(slice_cols(h, 1, 1), kLogVarLo, kLogVarHi)};
}

Tensor decode_batch(const VaeModel& m, const Tensor& z, const Tensor& y_repr) {
  if (z.cols != m.latent_dim)
    throw std::invalid_argument("decode_batch: z has " + z.shape_str());
  if (m.decoder_kind == DecoderKind::linear_cholesky) {
    const Tensor& a = m.params.find("dec.A");
    double l11, l21, l22;
    chol_entries(a.v.data(), m.chol_b.v.data(), l11, l21, l22);
    Tensor out(z.rows, 2);
    for (int r = 0; r < z.rows; ++r) {
      out.at(r, 0) = l11 * z.at(r, 0);
      out.at(r, 1) = l21 * z.at(r, 0) + l22 * z.at(r, 1);
    }
    return out;
  }
  if (m.has_labels()) {
    if (y_repr.rows != z.rows || y_repr.cols != m.y_repr_dim())
      throw std::invalid_argument("decode_batch: bad label block " +
                                  y_repr.shape_str());
    Tensor in(z.rows, z.cols + y_repr.cols);
    for (int r = 0; r < z.rows; ++r) {
      for (int c = 0; c < z.cols; ++c) in.at(r, c) = z.at(r, c);
      for (int c = 0; c < y_repr.cols; ++c)
        in.at(r, z.cols + c) = y_repr.at(r, c);
    }
    return mlp_eval(m.params, "dec", m.dec_arch, in);
  }
  if (y_repr.size() != 0)
    throw std::invalid_argument("decode_batch: unexpected label block");
  return mlp_eval(m.params, "dec", m.dec_arch, z);
}

std::vector<double> decode(const VaeModel& m, const std::vector<double>& z,
                           std::optional<double> y) {
  if (static_cast<int>(z.size()) != m.latent_dim)
    throw std::invalid_argument("decode: z has length " +
                                std::to_string(z.size()) + ", expected " +
                                std::to_string(m.latent_dim));
  if (m.has_labels() != y.has_value())
    throw std::invalid_argument("decode: label presence mismatch");
  Tensor zt(1, m.latent_dim);
  zt.v = z;
  Tensor yt;
  if (m.has_labels()) {
    if (m.label_kind == LabelKind::discrete)
      yt = one_hot(static_cast<int>(*y), m.n_classes);
    else
      yt = Tensor::scalar(*y);
  }
  Tensor out = decode_batch(m, zt, yt);
  return out.v;
}

std::pair<Tensor, Tensor> encode(const VaeModel& m, const Tensor& x) {
  if (x.cols != m.data_dim)
    throw std::invalid_argument("encode: x has " + x.shape_str() +
                                ", expected cols=" + std::to_string(m.data_dim));
  Tensor h = mlp_eval(m.params, "enc", m.enc_arch, x);
  const int k = m.latent_dim;
  Tensor mu(x.rows, k), sig2(x.rows, k);
  for (int r = 0; r < x.rows; ++r)
    for (int c = 0; c < k; ++c) {
      mu.at(r, c) = h.at(r, c);
      double lv = std::min(std::max(h.at(r, k + c), kLogVarLo), kLogVarHi);
      sig2.at(r, c) = std::exp(lv);
    }
  return {std::move(mu), std::move(sig2)};
}

double log_px_given_z(const VaeModel& m, const std::vector<double>& x,
                      const std::vector<double>& z, std::optional<double> y) {
  std::vector<double> mean = decode(m, z, y);
  std::vector<double> s2 = m.sigma2();
  if (x.size() != mean.size())
    throw std::invalid_argument("log_px_given_z: x length mismatch");
  double lp = 0.0;
  for (size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - mean[d];
    lp += -0.5 * (kLog2Pi + std::log(s2[d]) + diff * diff / s2[d]);
  }
  return lp;
}

double kl_diag_gaussian_to_std(const std::vector<double>& mu,
                               const std::vector<double>& sigma2) {
  double kl = 0.0;
  for (size_t k = 0; k < mu.size(); ++k) {
    if (sigma2[k] <= 0.0)
      throw std::invalid_argument("kl_diag_gaussian_to_std: sigma2 <= 0");
    kl += 0.5 * (mu[k] * mu[k] + sigma2[k] - 1.0 - std::log(sigma2[k]));
  }
  return kl;
}

std::vector<double> reparam_sample(const std::vector<double>& mu,
                                   const std::vector<double>& sigma2,
                                   const std::vector<double>& unit_noise) {
  std::vector<double> z(mu.size());
  for (size_t k = 0; k < mu.size(); ++k)
    z[k] = mu[k] + std::sqrt(sigma2[k]) * unit_noise[k];
  return z;
}

std::vector<double> gumbel_softmax_sample(const std::vector<double>& logits,
                                          double temperature,
                                          const std::vector<double>& uniform_noise) {
  if (temperature <= 0.0)
    throw std::invalid_argument("gumbel_softmax_sample: temperature <= 0");
  std::vector<double> t(logits.size());
  double mx = -1e300;
  for (size_t c = 0; c < logits.size(); ++c) {
    const double u = uniform_noise[c];
    if (u <= 0.0 || u >= 1.0)
      throw std::invalid_argument("gumbel_softmax_sample: noise at {0,1}");
    t[c] = (logits[c] - std::log(-std::log(u))) / temperature;
    mx = std::max(mx, t[c]);
  }
  double denom = 0.0;
  for (double& x : t) {
    x = std::exp(x - mx);
    denom += x;
  }
  for (double& x : t) x /= denom;
  return t;
}

Tensor one_hot(int cls, int n_classes, int rows) {
  Tensor t(rows, n_classes);
  for (int r = 0; r < rows; ++r) t.at(r, cls) = 1.0;
  return t;
}

}  // namespace vaelab
