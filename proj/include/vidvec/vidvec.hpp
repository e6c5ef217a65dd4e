#pragma once

#include "vidvec/adapter/adapter.hpp"
#include "vidvec/adapter/adapter_io.hpp"
#include "vidvec/adapter/dsl_loss.hpp"
#include "vidvec/adapter/pairs.hpp"
#include "vidvec/adapter/train.hpp"
#include "vidvec/backends/backend.hpp"
#include "vidvec/backends/dispatch.hpp"
#include "vidvec/backends/mock.hpp"
#include "vidvec/backends/prompt.hpp"
#include "vidvec/backends/remote.hpp"
#include "vidvec/backends/toy.hpp"
#include "vidvec/backends/wire.hpp"
#include "vidvec/core/cache.hpp"
#include "vidvec/core/errors.hpp"
#include "vidvec/core/hash.hpp"
#include "vidvec/core/kernels.hpp"
#include "vidvec/core/types.hpp"
#include "vidvec/rerank/progress.hpp"
#include "vidvec/rerank/rerank.hpp"
#include "vidvec/retrieval/calibrate.hpp"
#include "vidvec/retrieval/evaluate.hpp"
#include "vidvec/retrieval/metrics.hpp"
#include "vidvec/retrieval/rank.hpp"
#include "vidvec/retrieval/report.hpp"
#include "vidvec/sweep/embedding_store.hpp"
#include "vidvec/sweep/layer_sweep.hpp"
#include "vidvec/cli/config.hpp"
#include "vidvec/cli/manifest_io.hpp"
#include "vidvec/cli/pipeline.hpp"
