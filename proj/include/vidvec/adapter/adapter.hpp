#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "vidvec/core/hash.hpp"
#include "vidvec/core/types.hpp"

namespace vidvec {

// Low-rank residual map on readout embeddings: e + (alpha / rank) * up * (down * e).
struct AdapterParams {
  Eigen::MatrixXd down;  // rank x dim
  Eigen::MatrixXd up;    // dim x rank
  double alpha = 1.0;

  int rank() const noexcept { return static_cast<int>(down.rows()); }
  int dim() const noexcept { return static_cast<int>(down.cols()); }
  double scale() const noexcept { return alpha / static_cast<double>(rank()); }

  // Identity adapter in the usual low-rank initialization: `down` seeded
  // Gaussian with std 1/sqrt(dim), `up` zero.
  static AdapterParams zero_init(int dim, int rank, double alpha, std::uint64_t seed) {
    VIDVEC_REQUIRE(dim >= 1 && rank >= 1 && rank <= dim, "adapter rank must be in [1, dim]");
    VIDVEC_REQUIRE(alpha > 0.0, "adapter alpha must be positive");
    AdapterParams p;
    p.alpha = alpha;
    p.down.resize(rank, dim);
    SplitMix64 g(hash_combine(seed, 0xada97e5ULL));
    const double s = 1.0 / std::sqrt(static_cast<double>(dim));
    for (Eigen::Index i = 0; i < p.down.size(); ++i) p.down.data()[i] = g.normal() * s;
    p.up = Eigen::MatrixXd::Zero(dim, rank);
    return p;
  }
};

inline void validate(const AdapterParams& p) {
  VIDVEC_REQUIRE(p.rank() >= 1 && p.rank() <= p.dim(), "adapter rank must be in [1, dim]");
  VIDVEC_REQUIRE(p.up.rows() == p.dim() && p.up.cols() == p.rank(), "adapter factor shapes disagree");
  VIDVEC_REQUIRE(p.alpha > 0.0 && std::isfinite(p.alpha), "adapter alpha must be positive");
  VIDVEC_REQUIRE(p.down.allFinite() && p.up.allFinite(), "adapter has non-finite entries");
}

inline Embedding apply_adapter(const AdapterParams& p, const Embedding& e) {
  VIDVEC_REQUIRE(static_cast<int>(e.dim()) == p.dim(),
                 "apply_adapter: embedding dim " + std::to_string(e.dim()) + " != adapter dim " +
                     std::to_string(p.dim()));
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXf>(e.values.data(), p.dim()).cast<double>();
  const Eigen::VectorXd delta = p.scale() * (p.up * (p.down * x));
  Embedding out = e;
  for (int i = 0; i < p.dim(); ++i)
    out.values[static_cast<std::size_t>(i)] = static_cast<float>(x(i) + delta(i));
  return out;
}

}  // namespace vidvec
