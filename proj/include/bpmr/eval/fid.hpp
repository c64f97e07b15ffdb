#pragma once

// Fréchet distance between Gaussian fits of autoencoder features.
// The feature extractor is a temporal conv autoencoder; the FID feature is the
// third encoder layer's output, averaged over time.

#include <iostream>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "bpmr/core/ops.hpp"
#include "bpmr/motion/clip.hpp"
#include "bpmr/net/model.hpp"
#include "bpmr/train/adam.hpp"

namespace bpmr {

struct SingularCovariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FidConfig {
  int channels = 256;  // conv channels in all three encoder layers
  int in_channels = 0; // 4*(L+1), set from data
  double lr = 1e-3;
  double lrelu_slope = 0.2;
};

class FidFeatureModel {
 public:
  FidFeatureModel() = default;

  FidFeatureModel(FidConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    std::mt19937_64 rng(seed);
    const int c = cfg.channels, ci = cfg.in_channels;
    auto bound = [](int fan_in) { return std::sqrt(1.0 / fan_in); };
    params_.add("enc1.W", {c, ci, 15}, rng, bound(ci * 15));
    params_.add("enc1.b", {c}, rng, 0.0);
    params_.add("enc2.W", {c, c, 15}, rng, bound(c * 15));
    params_.add("enc2.b", {c}, rng, 0.0);
    params_.add("enc3.W", {c, c, 3}, rng, bound(c * 3));
    params_.add("enc3.b", {c}, rng, 0.0);
    params_.add("dec1.W", {c, c, 3}, rng, bound(c * 3));
    params_.add("dec1.b", {c}, rng, 0.0);
    params_.add("dec2.W", {c, c, 15}, rng, bound(c * 15));
    params_.add("dec2.b", {c}, rng, 0.0);
    params_.add("dec3.W", {ci, c, 15}, rng, bound(c * 15));
    params_.add("dec3.b", {ci}, rng, 0.0);
  }

  const FidConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }

  // x: (4(L+1), T) -> L3 features (channels, T/32).
  ad::Tensor encode(const ad::Tensor& x) const {
    using namespace ad;
    Tensor h = leaky_relu(conv1d(x, params_.get("enc1.W"), params_.get("enc1.b"), 2, 7),
                          cfg_.lrelu_slope);
    h = maxpool1d(h, 2, 2);
    h = leaky_relu(conv1d(h, params_.get("enc2.W"), params_.get("enc2.b"), 2, 7),
                   cfg_.lrelu_slope);
    h = maxpool1d(h, 2, 2);
    return tanh_t(conv1d(h, params_.get("enc3.W"), params_.get("enc3.b"), 2, 1));
  }

  ad::Tensor decode(const ad::Tensor& z) const {
    using namespace ad;
    Tensor h = leaky_relu(
        conv1d(upsample_linear(z, 2), params_.get("dec1.W"), params_.get("dec1.b"), 1, 1),
        cfg_.lrelu_slope);
    h = leaky_relu(
        conv1d(upsample_linear(h, 4), params_.get("dec2.W"), params_.get("dec2.b"), 1, 7),
        cfg_.lrelu_slope);
    return conv1d(upsample_linear(h, 4), params_.get("dec3.W"), params_.get("dec3.b"), 1, 7);
  }

  // Temporal mean of the L3 features: the FID feature vector.
  std::vector<double> features(const ad::Tensor& x) const {
    ad::NoGradGuard guard;
    ad::Tensor z = encode(x);
    const int C = z.dim(0), T = z.dim(1);
    std::vector<double> f(static_cast<size_t>(C), 0.0);
    for (int c = 0; c < C; ++c) {
      for (int t = 0; t < T; ++t) f[static_cast<size_t>(c)] += z.at(c, t);
      f[static_cast<size_t>(c)] /= T;
    }
    return f;
  }

 private:
  FidConfig cfg_;
  ParamStore params_;
};

// Train the autoencoder on real motions (each (4(L+1), T) column-major frames).
// Returns per-step reconstruction losses for smoke checks.
inline std::vector<double> train_fid_model(FidFeatureModel& model,
                                           const std::vector<ad::Tensor>& motions, int steps,
                                           std::uint64_t seed) {
  if (motions.empty()) throw EmptyDataset("train_fid_model: no motions");
  Adam opt(model.config().lr);
  opt.attach("fid", model.params());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(motions.size()) - 1);
  std::vector<double> losses;
  for (int s = 0; s < steps; ++s) {
    const ad::Tensor& x = motions[static_cast<size_t>(pick(rng))];
    model.params().zero_grad();
    ad::Tensor loss = ad::mse(model.decode(model.encode(x)), x);
    losses.push_back(loss.item());
    loss.backward();
    opt.step();
  }
  return losses;
}

// FID = ||m - m_w||^2 + Tr(c + c_w - 2 (c c_w)^{1/2}); matrix square roots via
// symmetric eigendecomposition with negative eigenvalues clipped at 0.
inline double fid(const std::vector<std::vector<double>>& feats_a,
                  const std::vector<std::vector<double>>& feats_b) {
  if (feats_a.empty() || feats_b.empty()) throw EmptyDataset("fid: empty feature set");
  const int D = static_cast<int>(feats_a[0].size());
  auto fit = [D](const std::vector<std::vector<double>>& f) {
    const int n = static_cast<int>(f.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(D);
    for (const auto& row : f)
      mean += Eigen::Map<const Eigen::VectorXd>(row.data(), D);
    mean /= n;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(D, D);
    for (const auto& row : f) {
      const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(row.data(), D) - mean;
      cov += d * d.transpose();
    }
    cov /= std::max(1, n - 1);
    return std::make_pair(mean, cov);
  };
  auto [ma, ca] = fit(feats_a);
  auto [mb, cb] = fit(feats_b);

  auto regularize = [D](Eigen::MatrixXd& c, const char* which) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    if (es.eigenvalues().minCoeff() < 1e-10) {
      std::cerr << "warning: near-singular covariance (" << which << "), adding 1e-6 I\n";
      c += 1e-6 * Eigen::MatrixXd::Identity(D, D);
    }
  };
  regularize(ca, "set a");
  regularize(cb, "set b");

  // sqrt(ca) via eigendecomposition, clipping negatives
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ca);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sqrt_ca =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  const Eigen::MatrixXd inner = sqrt_ca * cb * sqrt_ca;
  // inner is similar to ca*cb; symmetrize against round-off
  const Eigen::MatrixXd sym = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(sym);
  const double trace_sqrt = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double mean_term = (ma - mb).squaredNorm();
  return mean_term + ca.trace() + cb.trace() - 2.0 * trace_sqrt;
}

}  // namespace bpmr
