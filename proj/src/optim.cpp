// Copyright (C) 2026 The mivae Authors
// SPDX-License-Identifier: Apache-2.0
#include "mivae/optim.hpp"

#include "mivae/error.hpp"

#include <cmath>
#include <string>

namespace mivae {

void Adam::step(std::span<Tensor* const> params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->grad.allFinite())
      throw NumericError("Adam::step: non-finite gradient in parameter " + std::to_string(i) + " at step " +
                         std::to_string(step_ + 1));
  }
  if (m_.empty()) {
    for (Tensor* p : params) {
      m_.push_back(Matrix::Zero(p->data.rows(), p->data.cols()));
      v_.push_back(Matrix::Zero(p->data.rows(), p->data.cols()));
    }
  } else if (m_.size() != params.size()) {
    throw DimensionError("Adam::step: parameter count changed from " + std::to_string(m_.size()) + " to " +
                         std::to_string(params.size()));
  }

  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (m_[i].rows() != p.data.rows() || m_[i].cols() != p.data.cols())
      throw DimensionError("Adam::step: shape of parameter " + std::to_string(i) + " changed");
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p.grad;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad);
    p.data.array() -= cfg_.learning_rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.epsilon);
    p.grad.setZero();
  }
}

double grad_norm(std::span<Tensor* const> params) {
  double sq = 0.0;
  for (const Tensor* p : params) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

double clip_grad_norm(std::span<Tensor* const> params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Tensor* p : params) p->grad *= s;
  }
  return norm;
}

void zero_grads(std::span<Tensor* const> params) {
  for (Tensor* p : params) p->grad.setZero();
}

}  // namespace mivae
