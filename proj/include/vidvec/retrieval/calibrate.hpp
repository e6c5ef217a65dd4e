#pragma once

#include "vidvec/core/kernels.hpp"

namespace vidvec {

// Dual-softmax calibration: row_softmax(scale * m) .* col_softmax(scale * m).
// `temperature` multiplies the scores (it is a logit scale, not a divisor).
inline SimilarityMatrix dual_softmax_calibrate(const SimilarityMatrix& m, double temperature) {
  VIDVEC_REQUIRE(m.rows() > 0 && m.cols() > 0, "dual_softmax_calibrate: empty matrix");
  VIDVEC_REQUIRE(temperature > 0.0 && std::isfinite(temperature),
                 "dual_softmax_calibrate: temperature must be positive");
  SimilarityMatrix scaled = m;
  scaled.scores *= temperature;
  auto out = row_softmax(scaled, 1.0);
  out.scores.array() *= col_softmax(scaled, 1.0).scores.array();
  return out;
}

}  // namespace vidvec
