#pragma once

#include <optional>
#include <string>

#include "vaelab/nets.hpp"

namespace vaelab {

enum class LabelKind : uint8_t { none, discrete, continuous };
enum class DecoderKind : uint8_t { mlp, linear_cholesky };

constexpr double kLogVarLo = -18.420680743952367;  // log 1e-8
constexpr double kLogVarHi = 9.210340371976184;    // log 1e4

/// Generative + inference networks for one model instance.
///
/// Parameter naming: "dec.*" decoder, "enc.*" encoder q(z|x),
/// "encl.*" labeled encoder q(z|x,y) (semi-supervised only),
/// "disc.*" discriminator q(y|x), "obs_logvar" per-dimension noise.
/// The decoder for linear_cholesky has a single "dec.A" row tensor
/// (a11, a12, a21, a22); B and the noise covariance are fixed metadata.
struct VaeModel {
  int latent_dim = 1;
  int data_dim = 2;
  LabelKind label_kind = LabelKind::none;
  int n_classes = 2;
  double gumbel_temperature = 2.2;
  DecoderKind decoder_kind = DecoderKind::mlp;

  MlpArch dec_arch, enc_arch, enc_l_arch, disc_arch;
  Tensor chol_b;  // 1 x 2 diagonal of B (linear_cholesky only)
  bool sigma_trainable = false;

  ParameterSet params;

  int y_repr_dim() const {
    return label_kind == LabelKind::none ? 0
           : label_kind == LabelKind::discrete ? n_classes
                                               : 1;
  }
  bool has_labels() const { return label_kind != LabelKind::none; }
  std::vector<double> sigma2() const;
};

/// Unsupervised MFG-VAE with MLP decoder f: R^K -> R^D and encoder
/// x -> (mu, logvar).
VaeModel make_vae(int latent_dim, int data_dim, const std::vector<int>& hidden,
                  const std::vector<double>& sigma2, Rng& rng);

/// M2-style semi-supervised model: decoder f(z, y), unlabeled encoder q(z|x),
/// labeled encoder q(z|x,y), discriminator q(y|x).
VaeModel make_ss_vae(int latent_dim, int data_dim, LabelKind label_kind,
                     const std::vector<int>& hidden,
                     const std::vector<double>& sigma2, Rng& rng);

/// Structured linear decoder z -> Cholesky(A A^T + B) z with fixed noise
/// covariance sigma2*I - B; A trainable, encoder an MLP.
VaeModel make_linear_cholesky_vae(const Tensor& a_init, const Tensor& b_diag,
                                  double sigma2, const std::vector<int>& enc_hidden,
                                  Rng& rng);

// ---- Tape-side builders (used by objectives/training) ----

struct EncoderHeads {
  Value mu;
  Value logvar;  // clamped to [log 1e-8, log 1e4]
};

/// q(z|x) heads. For labeled=true uses the labeled encoder on concat(x, y).
EncoderHeads encode_g(Graph& g, const VaeModel& m, const BoundParams& bp,
                      Value x, bool labeled = false, Value y = {});

/// Decoder mean; y required iff the model is label-conditioned.
Value decode_g(Graph& g, const VaeModel& m, const BoundParams& bp, Value z,
               Value y = {});

/// Observation-noise log-variance as a bound parameter value (1 x D).
Value obs_logvar_g(const VaeModel& m, const BoundParams& bp);

/// Row-wise sum_d log N(x_d; mean_d, sigma2_d).
Value log_px_given_z_g(Graph& g, const VaeModel& m, const BoundParams& bp,
                       Value x, Value z, Value y = {});

/// Row-wise KL(N(mu, diag(exp(logvar))) || N(0, I)).
Value kl_std_normal_g(Graph& g, Value mu, Value logvar);

/// z = mu + exp(logvar/2) * noise.
Value reparam_g(Graph& g, Value mu, Value logvar, Value noise);

/// softmax((logits + Gumbel(noise)) / temperature), rows on the simplex.
Value gumbel_softmax_g(Graph& g, Value logits, double temperature,
                       Value uniform_noise);

/// Discriminator forward: discrete -> logits (B x C);
/// continuous -> heads (mu_y, logvar_y).
Value disc_logits_g(Graph& g, const VaeModel& m, const BoundParams& bp, Value x);
EncoderHeads disc_gauss_g(Graph& g, const VaeModel& m, const BoundParams& bp,
                          Value x);

// ---- Plain (tape-free) operations ----

/// Decoder mean for a single latent point (z length K), optional label.
std::vector<double> decode(const VaeModel& m, const std::vector<double>& z,
                           std::optional<double> y = std::nullopt);
/// Batched decoder mean: z (N x K), y_repr (N x y_repr_dim) or empty.
Tensor decode_batch(const VaeModel& m, const Tensor& z, const Tensor& y_repr);

/// Encoder q(z|x): returns (mu, sigma2), sigma2 strictly positive.
std::pair<Tensor, Tensor> encode(const VaeModel& m, const Tensor& x);

double log_px_given_z(const VaeModel& m, const std::vector<double>& x,
                      const std::vector<double>& z,
                      std::optional<double> y = std::nullopt);

double kl_diag_gaussian_to_std(const std::vector<double>& mu,
                               const std::vector<double>& sigma2);

std::vector<double> reparam_sample(const std::vector<double>& mu,
                                   const std::vector<double>& sigma2,
                                   const std::vector<double>& unit_noise);

std::vector<double> gumbel_softmax_sample(const std::vector<double>& logits,
                                          double temperature,
                                          const std::vector<double>& uniform_noise);

/// One-hot row representation for a discrete label.
Tensor one_hot(int cls, int n_classes, int rows = 1);

}  // namespace vaelab
