#pragma once

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vidvec/adapter/adapter.hpp"
#include "vidvec/adapter/dsl_loss.hpp"
#include "vidvec/adapter/pairs.hpp"
#include "vidvec/backends/backend.hpp"
#include "vidvec/core/kernels.hpp"
#include "vidvec/core/parallel.hpp"
#include "vidvec/retrieval/metrics.hpp"
#include "vidvec/retrieval/rank.hpp"

namespace vidvec {

enum class Optimizer { Sgd, Adam };

inline std::string_view to_string(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

inline Optimizer optimizer_from_string(std::string_view s) {
  if (s == "sgd") return Optimizer::Sgd;
  if (s == "adam") return Optimizer::Adam;
  throw ContractError("unknown optimizer '" + std::string(s) + "'");
}

struct TrainConfig {
  int batch_size = 288;
  int epochs = 1;
  double learning_rate = 1e-3;
  double loss_temperature = 1.0 / 0.07;
  bool learn_temperature = true;
  Optimizer optimizer = Optimizer::Sgd;
  std::uint64_t seed = 0;
  int rank = 64;
  double alpha = 128.0;
  int layer = -1;          // -1: final layer of the backend
  unsigned threads = 0;    // embedding precomputation; 0: backend limit
};

inline constexpr double kMinLossTemperature = 1.0;
inline constexpr double kMaxLossTemperature = 100.0;

inline void validate(const TrainConfig& c) {
  VIDVEC_REQUIRE(c.batch_size >= 2, "batch_size must be >= 2 for in-batch negatives");
  VIDVEC_REQUIRE(c.epochs >= 1, "epochs must be >= 1");
  VIDVEC_REQUIRE(c.learning_rate >= 0.0 && std::isfinite(c.learning_rate), "learning_rate must be >= 0");
  VIDVEC_REQUIRE(c.loss_temperature > 0.0, "loss_temperature must be positive");
  VIDVEC_REQUIRE(c.rank >= 1 && c.alpha > 0.0, "adapter rank and alpha must be positive");
}

struct TrainLogRow {
  int step = 0;
  double loss = 0.0;
  double temperature = 0.0;
};

struct TrainResult {
  AdapterParams params;
  double temperature = 0.0;
  std::vector<TrainLogRow> log;
  std::size_t dropped_pairs = 0;   // epoch remainder below one batch
  std::size_t short_dense = 0;     // pairs whose dense text is not longer than the summary
};

// Loss and gradients of the whole batch pipeline
//   adapter(dense), adapter(summary) -> unit-normalize -> cosine matrix -> dsl_loss.
// Rows of `dense` and `summary` are raw embeddings of paired texts.
struct PipelineGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad_down;
  Eigen::MatrixXd grad_up;
  double grad_temperature = 0.0;
};

inline PipelineGrad adapter_loss_and_grad(const AdapterParams& p, const Eigen::MatrixXd& dense,
                                          const Eigen::MatrixXd& summary, double temperature) {
  VIDVEC_REQUIRE(dense.rows() == summary.rows() && dense.cols() == p.dim() && summary.cols() == p.dim(),
                 "adapter_loss_and_grad: batch shape mismatch");
  const double s = p.scale();

  struct Side {
    Eigen::MatrixXd proj;  // x D^T  (N x r)
    Eigen::MatrixXd unit;  // normalized adapted rows
    Eigen::VectorXd norm;
  };
  auto forward = [&](const Eigen::MatrixXd& x) {
    Side side;
    side.proj = x * p.down.transpose();
    Eigen::MatrixXd a = x + s * side.proj * p.up.transpose();
    side.norm = a.rowwise().norm();
    VIDVEC_REQUIRE((side.norm.array() > 0.0).all(), "adapted embedding has zero norm");
    side.unit = side.norm.asDiagonal().inverse() * a;
    return side;
  };
  const Side d = forward(dense);
  const Side t = forward(summary);

  const Matrix sim = d.unit * t.unit.transpose();
  const auto dsl = dsl_loss(sim, temperature);

  PipelineGrad g;
  g.loss = dsl.loss;
  g.grad_temperature = dsl.grad_temperature;
  g.grad_down = Eigen::MatrixXd::Zero(p.rank(), p.dim());
  g.grad_up = Eigen::MatrixXd::Zero(p.dim(), p.rank());

  const Eigen::MatrixXd g_unit_d = dsl.grad * t.unit;
  const Eigen::MatrixXd g_unit_t = dsl.grad.transpose() * d.unit;
  auto backward = [&](const Side& side, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g_unit) {
    // Through row normalization: (g - u (u.g)) / |a|.
    const Eigen::VectorXd radial = (side.unit.array() * g_unit.array()).rowwise().sum();
    const Eigen::MatrixXd g_a =
        side.norm.asDiagonal().inverse() * (g_unit - radial.asDiagonal() * side.unit);
    g.grad_up += s * g_a.transpose() * side.proj;
    const Eigen::MatrixXd g_proj = s * g_a * p.up;
    g.grad_down += g_proj.transpose() * x;
  };
  backward(d, dense, g_unit_d);
  backward(t, summary, g_unit_t);
  return g;
}

inline Eigen::MatrixXd to_matrix(std::span<const Embedding> es) {
  VIDVEC_REQUIRE(!es.empty(), "to_matrix: no embeddings");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(es.size()), static_cast<Eigen::Index>(es.front().dim()));
  for (std::size_t i = 0; i < es.size(); ++i) {
    VIDVEC_REQUIRE(es[i].dim() == es.front().dim(), "to_matrix: mixed dimensions");
    for (std::size_t k = 0; k < es[i].dim(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = es[i].values[k];
  }
  return m;
}

struct PairEmbeddings {
  std::vector<Embedding> dense;
  std::vector<Embedding> summary;
};

// Text embeddings of both sides of every pair; item ids are the pair ids.
inline PairEmbeddings embed_pairs(std::span<const TextPair> pairs, const Backend& backend, int layer,
                                  unsigned threads = 0) {
  PairEmbeddings out;
  out.dense.resize(pairs.size());
  out.summary.resize(pairs.size());
  parallel_for(2 * pairs.size(), threads ? threads : backend.max_in_flight(), [&](std::size_t k) {
    const auto& pair = pairs[k / 2];
    auto& slot = (k % 2 == 0) ? out.dense[k / 2] : out.summary[k / 2];
    slot = backend.embed_text(k % 2 == 0 ? pair.dense : pair.summary, TemplateId::TextEOL, layer);
    slot.item_id = pair.pair_id;
  });
  return out;
}

// R@1 for summary->dense and dense->summary retrieval over paired embeddings.
struct PairRecall {
  double summary_to_dense = 0.0;
  double dense_to_summary = 0.0;
  double mean() const noexcept { return 0.5 * (summary_to_dense + dense_to_summary); }
};

inline PairRecall pair_recall_at_1(const PairEmbeddings& e, const AdapterParams* adapter = nullptr) {
  auto adapted = [&](const std::vector<Embedding>& in) {
    if (!adapter) return in;
    std::vector<Embedding> out;
    out.reserve(in.size());
    for (const auto& x : in) out.push_back(apply_adapter(*adapter, x));
    return out;
  };
  const auto dense = adapted(e.dense);
  const auto summary = adapted(e.summary);
  PositiveMap positives;
  for (const auto& x : dense) positives[x.item_id] = {x.item_id};
  PairRecall r;
  r.summary_to_dense = recall_at_k(rank(build_similarity_matrix(summary, dense)), positives, 1);
  r.dense_to_summary = recall_at_k(rank(build_similarity_matrix(dense, summary)), positives, 1);
  return r;
}

namespace detail {

// First-order update rule over a flat parameter vector.
class Stepper {
 public:
  Stepper(Optimizer kind, double lr, std::size_t n) : kind_(kind), lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    if (kind_ == Optimizer::Sgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
      return;
    }
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(b1, t_), c2 = 1.0 - std::pow(b2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
      v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
    }
  }

 private:
  Optimizer kind_;
  double lr_;
  std::vector<double> m_, v_;
  int t_ = 0;
};

}  // namespace detail

// One optimization run over precomputed pair embeddings.
inline TrainResult train_on_embeddings(const PairEmbeddings& emb, const TrainConfig& cfg) {
  validate(cfg);
  const std::size_t n = emb.dense.size();
  VIDVEC_REQUIRE(n == emb.summary.size(), "train: dense/summary count mismatch");
  VIDVEC_REQUIRE(n >= static_cast<std::size_t>(cfg.batch_size),
                 "train: need at least batch_size pairs (" + std::to_string(n) + " < " +
                     std::to_string(cfg.batch_size) + ")");
  const Eigen::MatrixXd dense = to_matrix(emb.dense);
  const Eigen::MatrixXd summary = to_matrix(emb.summary);
  const auto dim = static_cast<int>(dense.cols());

  TrainResult r;
  r.params = AdapterParams::zero_init(dim, cfg.rank, cfg.alpha, cfg.seed);
  r.temperature = std::clamp(cfg.loss_temperature, kMinLossTemperature, kMaxLossTemperature);

  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const auto n_down = static_cast<std::size_t>(r.params.down.size());
  const auto n_up = static_cast<std::size_t>(r.params.up.size());
  detail::Stepper stepper(cfg.optimizer, cfg.learning_rate, n_down + n_up + 1);
  std::vector<double> flat(n_down + n_up + 1), flat_grad(flat.size());
  std::vector<std::size_t> order(n);
  std::mt19937_64 rng(cfg.seed);
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t full = n / batch;
    r.dropped_pairs += n - full * batch;
    for (std::size_t b = 0; b < full; ++b) {
      Eigen::MatrixXd xd(cfg.batch_size, dim), xs(cfg.batch_size, dim);
      for (std::size_t i = 0; i < batch; ++i) {
        xd.row(static_cast<Eigen::Index>(i)) = dense.row(static_cast<Eigen::Index>(order[b * batch + i]));
        xs.row(static_cast<Eigen::Index>(i)) = summary.row(static_cast<Eigen::Index>(order[b * batch + i]));
      }
      const auto g = adapter_loss_and_grad(r.params, xd, xs, r.temperature);
      r.log.push_back({step++, g.loss, r.temperature});
      std::copy_n(r.params.down.data(), n_down, flat.begin());
      std::copy_n(r.params.up.data(), n_up, flat.begin() + static_cast<std::ptrdiff_t>(n_down));
      flat.back() = r.temperature;
      std::copy_n(g.grad_down.data(), n_down, flat_grad.begin());
      std::copy_n(g.grad_up.data(), n_up, flat_grad.begin() + static_cast<std::ptrdiff_t>(n_down));
      flat_grad.back() = cfg.learn_temperature ? g.grad_temperature : 0.0;
      stepper.step(flat, flat_grad);
      std::copy_n(flat.begin(), n_down, r.params.down.data());
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(n_down), n_up, r.params.up.data());
      r.temperature = std::clamp(flat.back(), kMinLossTemperature, kMaxLossTemperature);
    }
  }
  validate(r.params);
  return r;
}

// Embeds every pair with the frozen backend, then trains the adapter.
inline TrainResult train(std::span<const TextPair> pairs, const Backend& backend, const TrainConfig& cfg) {
  validate(cfg);
  const auto desc = backend.descriptor();
  const int layer = cfg.layer < 0 ? desc.num_layers - 1 : cfg.layer;
  VIDVEC_REQUIRE(cfg.rank <= desc.dim, "adapter rank exceeds backend dim");
  VIDVEC_REQUIRE(pairs.size() >= static_cast<std::size_t>(cfg.batch_size),
                 "train: need at least batch_size pairs");
  std::size_t short_dense = 0;
  for (const auto& p : pairs) {
    VIDVEC_REQUIRE(!p.dense.empty() && !p.summary.empty(), "train: empty text in pair '" + p.pair_id + "'");
    if (whitespace_tokens(p.dense) <= whitespace_tokens(p.summary)) ++short_dense;
  }
  const auto emb = embed_pairs(pairs, backend, layer, cfg.threads);
  auto r = train_on_embeddings(emb, cfg);
  r.short_dense = short_dense;
  return r;
}

inline std::string format_train_log(std::span<const TrainLogRow> log) {
  std::string out = "step,loss,temperature\n";
  char buf[128];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", row.step, row.loss, row.temperature);
    out += buf;
  }
  return out;
}

}  // namespace vidvec
