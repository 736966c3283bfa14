#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "signtok/nn.hpp"
#include "signtok/tokens.hpp"
#include "signtok/vocab.hpp"

namespace signtok {

struct ModelConfig {
  std::size_t layers = 4;
  std::size_t heads = 4;
  std::size_t width = 128;
  std::size_t context = 256;
  double dropout = 0.0;
  double learning_rate = 1e-3;
  std::size_t steps = 600;
  std::size_t batch = 8;
  std::uint64_t seed = 1;
  std::string sampling = "greedy";  // greedy | top_k
  std::size_t top_k = 5;
  std::size_t log_interval = 50;
};

struct LoraConfig {
  std::size_t rank = 8;     // 0 disables the adapters entirely
  double alpha = 16.0;      // effective multiplier is alpha / rank
  bool base_frozen = false; // true: only adapter parameters receive updates
  double scaling() const {
    return rank == 0 ? 0.0 : alpha / static_cast<double>(rank);
  }
};

struct LayerNormParams {
  std::vector<double> gain, bias;
};

struct BlockParams {
  LayerNormParams ln1, ln2;
  Mat wq, wk, wv, wo;                 // width x width
  std::vector<double> bq, bk, bv, bo;
  Mat w1, w2;                         // 4*width x width, width x 4*width
  std::vector<double> b1, b2;
};

// Low-rank update W + s * B * A on the attention query/value projections.
// A: rank x width, B: width x rank (B starts at zero, so fresh adapters are
// an exact identity).
struct LoraPair {
  Mat a, b;
};

struct BlockAdapters {
  LoraPair q, v;
};

struct ModelParams {
  ModelConfig config;
  LoraConfig lora;
  Vocabulary vocab;
  Mat tok_emb;  // V x width
  Mat pos_emb;  // context x width
  std::vector<BlockParams> blocks;
  LayerNormParams ln_f;
  Mat head;  // V x width
  std::vector<BlockAdapters> adapters;
};

ModelParams init_model(const ModelConfig& config, const LoraConfig& lora,
                       const Vocabulary& vocab);

// Same tensor shapes, zeroed; used as the gradient accumulator.
ModelParams zeros_like(const ModelParams& params);
void zero_tensors(ModelParams& params);

// Deterministic enumeration of every tensor (used by the optimizer, the
// checkpoint writer and the freeze checksum).
struct ParamRef {
  std::string name;
  std::vector<double>* data;
  bool adapter;
};
std::vector<ParamRef> param_refs(ModelParams& params);

// FNV-1a over the bytes of every non-adapter tensor.
std::uint64_t base_checksum(const ModelParams& params);

// W' = W + s*B*A materialized into the base weights; the returned copy has
// zeroed B so its runtime path adds exactly nothing.
ModelParams merge_lora(const ModelParams& params);

// --- forward / loss ----------------------------------------------------------

// Logits for every position (row-major T x V).
std::vector<double> forward_logits(const ModelParams& params,
                                   const std::vector<int>& ids);

// Mean cross-entropy of `targets` under `logits` (rows aligned with targets).
double ce_loss(const std::vector<std::vector<double>>& logits,
               const std::vector<int>& targets);

// Teacher-forced masked CE of one sample (mean over its target span).
double sample_ce(const ModelParams& params, const TrainingSample& sample);

// Computes sample_ce and accumulates `scale`-weighted gradients of it into
// `grads` (dropout applied when rng is non-null and config.dropout > 0).
double sample_ce_gradients(const ModelParams& params, const TrainingSample& sample,
                           double scale, ModelParams& grads, Rng* dropout_rng = nullptr);

// --- training -----------------------------------------------------------------

struct ModelLogEntry {
  std::size_t step = 0;
  double ce = 0.0;
};

struct ModelTrainResult {
  ModelParams params;
  std::vector<ModelLogEntry> log;
};

// Deterministic in config.seed. With lora.base_frozen, non-adapter tensors
// are bitwise untouched. Throws TrainError on non-finite loss.
ModelTrainResult train_model(const std::vector<TrainingSample>& samples,
                             const ModelConfig& config, const LoraConfig& lora,
                             const Vocabulary& vocab);

// --- generation -----------------------------------------------------------------

// Per-layer key/value rows accumulated during incremental decoding.
struct KvCache {
  std::vector<std::vector<double>> k, v;  // per layer, len * width
  std::size_t len = 0;
};

// Feeds one token and returns the logits for the next position. Equivalent
// to the last row of forward_logits over the tokens fed so far.
std::vector<double> incremental_logits(const ModelParams& params, KvCache& cache,
                                       int token_id);

struct SamplingConfig {
  std::string mode = "greedy";  // greedy | top_k
  std::size_t top_k = 5;
  std::uint64_t seed = 0;
  std::size_t max_new = 0;  // 0: up to the context limit
};

struct GenerationResult {
  TokenSequence tokens;  // pose indices, not vocabulary ids
  bool truncated = false;
};

// Autoregressive decode with a KV cache. After the prompt, only pose tokens
// and EOS are admissible (all other logits are masked to -inf), so outputs
// satisfy the token-sequence invariant by construction.
GenerationResult generate_tokens(const ModelParams& params,
                                 const std::vector<int>& prompt_ids,
                                 const SamplingConfig& sampling);

// --- persistence -----------------------------------------------------------------

// Versioned archive: config echo, vocabulary, weights, adapter block.
void save_model(const std::string& path, const ModelParams& params);
ModelParams load_model(const std::string& path);

}  // namespace signtok
