#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "signtok/nn.hpp"
#include "signtok/pose.hpp"
#include "signtok/tokens.hpp"

namespace signtok {

struct CodecConfig {
  std::size_t codebook_size = 64;  // K
  std::size_t code_dim = 16;       // D
  std::vector<std::size_t> hidden = {64, 64};
  double alpha = 0.25;  // commitment weight
  double beta = 1.0;    // repetition uniqueness weight
  double gamma = 1.0;   // repetition frequency weight
  double learning_rate = 1e-3;
  std::size_t steps = 4000;
  std::uint64_t seed = 1;
  std::size_t batch_sequences = 8;
  // Codebook training: exponential moving average of assigned encoder
  // outputs by default; the alternative gradient route adds an alignment
  // term ||sg[z_e] - e_k||^2 and trains the codebook by Adam instead.
  double ema_decay = 0.99;
  bool codebook_gradient_term = false;
  double codebook_gradient_weight = 1.0;
  // Repetition surrogate: when the most frequent code exceeds this share of
  // a batch, its EMA update is damped by (1 - gamma * share) and, with
  // probability min(beta, 1), the nearest unused code is re-seeded to a
  // random encoder output assigned to it.
  double refreq_threshold = 0.5;
  std::size_t window = 1;  // frames per token
  std::size_t log_interval = 200;
};

struct Codebook {
  std::size_t entry_count = 0;  // K
  std::size_t dim = 0;          // D
  std::vector<double> v;        // K x D, row-major

  Codebook() = default;
  Codebook(std::size_t k, std::size_t d) : entry_count(k), dim(d), v(k * d, 0.0) {}
  double* row(std::size_t k) { return v.data() + k * dim; }
  const double* row(std::size_t k) const { return v.data() + k * dim; }
};

struct CodecParams {
  CodecConfig config;
  double fps = 12.0;           // carried so decoded sequences keep the corpus rate
  std::size_t joint_count = 0; // J implied by the decoder output dimension
  Mlp encoder;  // 2J*window -> hidden -> D
  Mlp decoder;  // D -> hidden (mirrored) -> 2J*window
  Codebook codebook;
  // EMA accumulators, persisted so training is resumable and deterministic.
  std::vector<double> ema_cluster_size;  // K
  std::vector<double> ema_cluster_sum;   // K x D
};

// Fresh parameters for the given config, deterministic in config.seed.
CodecParams init_codec(const CodecConfig& config, std::size_t joint_count, double fps);

// --- frame <-> vector plumbing -------------------------------------------

// Flattened (x, y) coordinates of `window` consecutive frames starting at
// the sequence's chunk boundaries; a short tail repeats the last frame.
std::vector<std::vector<double>> sequence_vectors(const PoseSequence& seq,
                                                  std::size_t window);
// Inverse of sequence_vectors up to tail padding; confidence is set to 1.
PoseSequence vectors_to_sequence(const std::vector<std::vector<double>>& vecs,
                                 std::size_t window, std::size_t joint_count, double fps,
                                 const std::string& id);

std::vector<double> encoder_forward(const CodecParams& params,
                                    const std::vector<double>& input);
std::vector<double> decoder_forward(const CodecParams& params,
                                    const std::vector<double>& code);

// --- quantization and the sequence codec ----------------------------------

// Nearest codebook row by Euclidean distance, lowest index on ties.
std::pair<int, std::vector<double>> quantize(const std::vector<double>& z,
                                             const Codebook& codebook);

TokenSequence encode_sequence(const PoseSequence& seq, const CodecParams& params);
PoseSequence decode_tokens(const TokenSequence& tokens, const CodecParams& params);

// --- losses ----------------------------------------------------------------

struct ReconLossValue {
  double total = 0.0;       // recon_mse + alpha * commitment
  double recon_mse = 0.0;   // mean squared reconstruction error
  double commitment = 0.0;  // mean squared encoder-to-code distance (unweighted)
};

// Forward evaluation of the reconstruction + commitment loss on one
// normalized sequence.
ReconLossValue recon_loss(const PoseSequence& seq, const CodecParams& params,
                          double alpha);

struct RepetitionStats {
  std::size_t k_uniq = 0;  // distinct indices
  std::size_t k_freq = 0;  // highest occurrence count of any single index
  std::size_t n = 0;       // sequence length
};

// L = beta * (1 - k_uniq / n) + gamma * (k_freq / n)
std::pair<double, RepetitionStats> repetition_loss(const TokenSequence& tokens,
                                                   double beta, double gamma);

// recon_loss + repetition_loss under the given config weights.
double total_loss(const PoseSequence& seq, const CodecParams& params,
                  const CodecConfig& config);

// Analytic gradients of the reconstruction objective over a set of input
// vectors (straight-through estimator through the quantizer; commitment term
// to the encoder only; codebook gradient only from the optional alignment
// term). Returns the loss breakdown; `assignments` receives the code index
// per input vector.
struct CodecGradients {
  Mlp encoder;
  Mlp decoder;
  std::vector<double> codebook;  // K x D
};

ReconLossValue recon_loss_gradients(
    const std::vector<std::vector<double>>& inputs, const CodecParams& params,
    double alpha, double align_weight, CodecGradients& grads,
    std::vector<int>* assignments = nullptr,
    std::vector<std::vector<double>>* encoder_outputs = nullptr);

// --- training ---------------------------------------------------------------

struct CodecLogEntry {
  std::size_t step = 0;
  double recon_mse = 0.0;
  double commitment = 0.0;
  double repetition = 0.0;  // Eq-style scalar, averaged over batch sequences
  double k_uniq_mean = 0.0;
  double k_freq_mean = 0.0;
  std::size_t batch_distinct_codes = 0;
  double perplexity = 0.0;
  std::size_t reseed_events = 0;
};

struct CodecTrainResult {
  CodecParams params;
  std::vector<CodecLogEntry> log;
};

// Runs config.steps optimizer steps on normalized sequences. Deterministic
// in config.seed; throws TrainError (naming the step) if the loss leaves the
// finite range.
CodecTrainResult train_codec(const std::vector<PoseSequence>& dataset,
                             const CodecConfig& config);

// --- utilization -------------------------------------------------------------

struct CodebookStats {
  std::size_t distinct = 0;
  std::vector<long long> histogram;  // K buckets
  double perplexity = 0.0;           // exp(entropy) of empirical code usage
};

CodebookStats codebook_stats(const std::vector<TokenSequence>& token_sequences,
                             std::size_t codebook_size);

// --- persistence --------------------------------------------------------------

// Single JSON archive: config echo, every weight array, codebook, EMA state,
// format-version field.
void save_codec(const std::string& path, const CodecParams& params);
CodecParams load_codec(const std::string& path);

}  // namespace signtok
