#pragma once

#include <cmath>

#include "vidvec/core/types.hpp"

namespace vidvec {

struct DslResult {
  double loss = 0.0;
  Matrix grad;                   // d loss / d m
  double grad_temperature = 0.0;  // d loss / d temperature
};

// Dual-softmax loss on a square in-batch similarity matrix whose diagonal
// holds the positives:
//   loss = -(1/N) sum_i log( rowsoftmax(t*m)[i][i] * colsoftmax(t*m)[i][i] )
// i.e. the text->video and video->text InfoNCE terms summed. `temperature`
// scales the logits.
inline DslResult dsl_loss(const Matrix& m, double temperature) {
  VIDVEC_REQUIRE(m.rows() == m.cols(), "dsl_loss: similarity matrix must be square");
  VIDVEC_REQUIRE(m.rows() >= 2, "dsl_loss: need at least 2 pairs for in-batch negatives");
  VIDVEC_REQUIRE(temperature > 0.0 && std::isfinite(temperature), "dsl_loss: temperature must be positive");
  const Eigen::Index n = m.rows();
  const Matrix z = temperature * m;

  Matrix row_p(n, n), col_p(n, n);
  Eigen::VectorXd row_lse(n), col_lse(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = z.row(i).maxCoeff();
    row_p.row(i) = (z.row(i).array() - mx).exp().matrix();
    const double s = row_p.row(i).sum();
    row_p.row(i) /= s;
    row_lse(i) = mx + std::log(s);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mx = z.col(j).maxCoeff();
    col_p.col(j) = (z.col(j).array() - mx).exp().matrix();
    const double s = col_p.col(j).sum();
    col_p.col(j) /= s;
    col_lse(j) = mx + std::log(s);
  }

  DslResult r;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) r.loss -= (z(i, i) - row_lse(i)) + (z(i, i) - col_lse(i));
  r.loss *= inv_n;

  Matrix dz = row_p + col_p;
  dz.diagonal().array() -= 2.0;
  dz *= inv_n;
  r.grad = temperature * dz;
  r.grad_temperature = (dz.array() * m.array()).sum();
  return r;
}

}  // namespace vidvec
