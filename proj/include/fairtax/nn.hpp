#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "fairtax/market.hpp" // Rng

// Minimal dense network machinery for the planner's learner: an MLP with
// ReLU hidden layers, explicit backprop, and Adam. Double precision
// throughout so training runs are reproducible and gradients can be checked
// against finite differences.

namespace fairtax::nn {

using Mat = Eigen::MatrixXd; // one row per batch sample
using Vec = Eigen::VectorXd;

struct Linear {
  Mat weight; // [out x in]
  Vec bias;   // [out]
  Mat grad_weight;
  Vec grad_bias;

  Linear(int in, int out, Rng& rng)
      : weight(out, in), bias(out), grad_weight(Mat::Zero(out, in)),
        grad_bias(Vec::Zero(out)) {
    // PyTorch-style fan-in uniform init
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) weight(r, c) = u(rng);
      bias(r) = u(rng);
    }
  }
};

/// Feed-forward net: linear layers with ReLU between them, linear output.
/// forward() caches activations, so each instance is single-threaded.
class Mlp {
public:
  Mlp(const std::vector<int>& sizes, Rng& rng) {
    if (sizes.size() < 2) {
      throw std::invalid_argument("Mlp: need at least input and output size");
    }
    for (size_t i = 0; i + 1 < sizes.size(); ++i) {
      layers_.emplace_back(sizes[i], sizes[i + 1], rng);
    }
  }

  int input_size() const { return static_cast<int>(layers_.front().weight.cols()); }
  int output_size() const { return static_cast<int>(layers_.back().weight.rows()); }

  Mat forward(const Mat& x) {
    inputs_.assign(1, x);
    pre_acts_.clear();
    Mat a = x;
    for (size_t k = 0; k < layers_.size(); ++k) {
      Mat z = (a * layers_[k].weight.transpose()).rowwise() +
              layers_[k].bias.transpose();
      pre_acts_.push_back(z);
      if (k + 1 < layers_.size()) {
        a = z.cwiseMax(0.0);
        inputs_.push_back(a);
      } else {
        a = std::move(z);
      }
    }
    return a;
  }

  /// Backpropagates dL/dY from the last forward() call. Overwrites the
  /// layer gradients and returns dL/dX.
  Mat backward(const Mat& grad_out) {
    Mat dz = grad_out;
    for (int k = static_cast<int>(layers_.size()) - 1;; --k) {
      Linear& lin = layers_[static_cast<size_t>(k)];
      lin.grad_weight = dz.transpose() * inputs_[static_cast<size_t>(k)];
      lin.grad_bias = dz.colwise().sum().transpose();
      Mat da = dz * lin.weight;
      if (k == 0) return da;
      const Mat& z = pre_acts_[static_cast<size_t>(k - 1)];
      dz = da.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
    }
  }

  void zero_grad() {
    for (Linear& l : layers_) {
      l.grad_weight.setZero();
      l.grad_bias.setZero();
    }
  }

  std::vector<Linear>& layers() { return layers_; }
  const std::vector<Linear>& layers() const { return layers_; }

  /// theta_target += rho * (theta_online - theta_target)
  void soft_update_from(const Mlp& online, double rho) {
    for (size_t k = 0; k < layers_.size(); ++k) {
      layers_[k].weight += rho * (online.layers_[k].weight - layers_[k].weight);
      layers_[k].bias += rho * (online.layers_[k].bias - layers_[k].bias);
    }
  }

private:
  std::vector<Linear> layers_;
  std::vector<Mat> inputs_;   // input to each layer
  std::vector<Mat> pre_acts_; // z of each layer
};

/// Adam with bias correction, one instance per network.
class Adam {
public:
  Adam(const Mlp& net, double lr) : lr_(lr) {
    for (const Linear& l : net.layers()) {
      m_w_.push_back(Mat::Zero(l.weight.rows(), l.weight.cols()));
      v_w_.push_back(Mat::Zero(l.weight.rows(), l.weight.cols()));
      m_b_.push_back(Vec::Zero(l.bias.size()));
      v_b_.push_back(Vec::Zero(l.bias.size()));
    }
  }

  void step(Mlp& net) {
    if (lr_ == 0.0) return;
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto& layers = net.layers();
    for (size_t k = 0; k < layers.size(); ++k) {
      m_w_[k] = beta1_ * m_w_[k] + (1.0 - beta1_) * layers[k].grad_weight;
      v_w_[k] = beta2_ * v_w_[k] +
                (1.0 - beta2_) * layers[k].grad_weight.cwiseProduct(
                                     layers[k].grad_weight);
      m_b_[k] = beta1_ * m_b_[k] + (1.0 - beta1_) * layers[k].grad_bias;
      v_b_[k] = beta2_ * v_b_[k] +
                (1.0 - beta2_) * layers[k].grad_bias.cwiseProduct(
                                     layers[k].grad_bias);
      layers[k].weight.array() -=
          lr_ * (m_w_[k].array() / c1) /
          ((v_w_[k].array() / c2).sqrt() + eps_);
      layers[k].bias.array() -=
          lr_ * (m_b_[k].array() / c1) /
          ((v_b_[k].array() / c2).sqrt() + eps_);
    }
  }

  double learning_rate() const { return lr_; }

private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<Mat> m_w_, v_w_;
  std::vector<Vec> m_b_, v_b_;
};

/// Adam on a single scalar (used for the entropy temperature).
class ScalarAdam {
public:
  explicit ScalarAdam(double lr) : lr_(lr) {}

  void step(double& value, double grad) {
    if (lr_ == 0.0) return;
    ++t_;
    m_ = 0.9 * m_ + 0.1 * grad;
    v_ = 0.999 * v_ + 0.001 * grad * grad;
    const double mhat = m_ / (1.0 - std::pow(0.9, static_cast<double>(t_)));
    const double vhat = v_ / (1.0 - std::pow(0.999, static_cast<double>(t_)));
    value -= lr_ * mhat / (std::sqrt(vhat) + 1e-8);
  }

private:
  double lr_;
  double m_ = 0.0, v_ = 0.0;
  long t_ = 0;
};

} // namespace fairtax::nn
