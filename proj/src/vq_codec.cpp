#include "signtok/vq_codec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "signtok/errors.hpp"

namespace signtok {

namespace {

std::vector<std::size_t> decoder_dims(const CodecConfig& cfg, std::size_t input_dim) {
  std::vector<std::size_t> dims;
  dims.push_back(cfg.code_dim);
  for (auto it = cfg.hidden.rbegin(); it != cfg.hidden.rend(); ++it) {
    dims.push_back(*it);
  }
  dims.push_back(input_dim);
  return dims;
}

std::vector<std::size_t> encoder_dims(const CodecConfig& cfg, std::size_t input_dim) {
  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  for (std::size_t h : cfg.hidden) {
    dims.push_back(h);
  }
  dims.push_back(cfg.code_dim);
  return dims;
}

}  // namespace

CodecParams init_codec(const CodecConfig& config, std::size_t joint_count, double fps) {
  if (config.codebook_size < 2) {
    throw ContractError("codec: codebook_size must be >= 2");
  }
  if (config.code_dim < 1) {
    throw ContractError("codec: code_dim must be >= 1");
  }
  if (config.alpha < 0.0 || config.beta < 0.0 || config.gamma < 0.0) {
    throw ContractError("codec: loss weights must be non-negative");
  }
  if (config.window < 1) {
    throw ContractError("codec: window must be >= 1");
  }
  Rng rng(config.seed);
  const std::size_t input_dim = 2 * joint_count * config.window;
  CodecParams params;
  params.config = config;
  params.fps = fps;
  params.joint_count = joint_count;
  params.encoder = Mlp::create(encoder_dims(config, input_dim), rng);
  params.decoder = Mlp::create(decoder_dims(config, input_dim), rng);
  params.codebook = Codebook(config.codebook_size, config.code_dim);
  for (double& x : params.codebook.v) {
    x = rng.normal(0.0, 0.5);
  }
  params.ema_cluster_size.assign(config.codebook_size, 0.0);
  params.ema_cluster_sum.assign(config.codebook_size * config.code_dim, 0.0);
  return params;
}

std::vector<std::vector<double>> sequence_vectors(const PoseSequence& seq,
                                                  std::size_t window) {
  if (seq.frames.empty()) {
    throw ContractError("sequence_vectors: empty sequence");
  }
  const std::size_t j = seq.joint_count();
  std::vector<std::vector<double>> out;
  for (std::size_t start = 0; start < seq.frames.size(); start += window) {
    std::vector<double> vec;
    vec.reserve(2 * j * window);
    for (std::size_t w = 0; w < window; ++w) {
      const std::size_t f = std::min(start + w, seq.frames.size() - 1);
      for (std::size_t jj = 0; jj < j; ++jj) {
        vec.push_back(seq.frames[f].coords[jj][0]);
        vec.push_back(seq.frames[f].coords[jj][1]);
      }
    }
    out.push_back(std::move(vec));
  }
  return out;
}

PoseSequence vectors_to_sequence(const std::vector<std::vector<double>>& vecs,
                                 std::size_t window, std::size_t joint_count, double fps,
                                 const std::string& id) {
  PoseSequence seq;
  seq.id = id;
  seq.fps = fps;
  for (const std::vector<double>& vec : vecs) {
    if (vec.size() != 2 * joint_count * window) {
      throw ContractError("vectors_to_sequence: vector dimension mismatch");
    }
    for (std::size_t w = 0; w < window; ++w) {
      PoseFrame frame;
      frame.coords.resize(joint_count);
      frame.confidence.assign(joint_count, 1.0);
      for (std::size_t jj = 0; jj < joint_count; ++jj) {
        frame.coords[jj][0] = vec[2 * (w * joint_count + jj)];
        frame.coords[jj][1] = vec[2 * (w * joint_count + jj) + 1];
      }
      seq.frames.push_back(std::move(frame));
    }
  }
  return seq;
}

std::vector<double> encoder_forward(const CodecParams& params,
                                    const std::vector<double>& input) {
  if (input.size() != params.encoder.dims.front()) {
    throw ContractError("encoder_forward: input dimension mismatch");
  }
  return mlp_apply(params.encoder, input.data());
}

std::vector<double> decoder_forward(const CodecParams& params,
                                    const std::vector<double>& code) {
  if (code.size() != params.decoder.dims.front()) {
    throw ContractError("decoder_forward: code dimension mismatch");
  }
  return mlp_apply(params.decoder, code.data());
}

std::pair<int, std::vector<double>> quantize(const std::vector<double>& z,
                                             const Codebook& codebook) {
  if (z.size() != codebook.dim || codebook.entry_count == 0) {
    throw ContractError("quantize: dimension mismatch");
  }
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < codebook.entry_count; ++k) {
    const double d = kernels::l2sq(z.data(), codebook.row(k), codebook.dim);
    if (d < best_dist) {  // strict: ties keep the lowest index
      best_dist = d;
      best = static_cast<int>(k);
    }
  }
  const double* row = codebook.row(static_cast<std::size_t>(best));
  return {best, std::vector<double>(row, row + codebook.dim)};
}

TokenSequence encode_sequence(const PoseSequence& seq, const CodecParams& params) {
  TokenSequence tokens;
  tokens.id = seq.id;
  for (const std::vector<double>& vec : sequence_vectors(seq, params.config.window)) {
    const std::vector<double> z = encoder_forward(params, vec);
    tokens.indices.push_back(quantize(z, params.codebook).first);
  }
  return tokens;
}

PoseSequence decode_tokens(const TokenSequence& tokens, const CodecParams& params) {
  if (tokens.indices.empty()) {
    throw ContractError("decode_tokens: empty token sequence");
  }
  std::vector<std::vector<double>> outputs;
  for (int k : tokens.indices) {
    if (k < 0 || static_cast<std::size_t>(k) >= params.codebook.entry_count) {
      throw ContractError("decode_tokens: index " + std::to_string(k) +
                          " outside codebook of size " +
                          std::to_string(params.codebook.entry_count));
    }
    const double* row = params.codebook.row(static_cast<std::size_t>(k));
    outputs.push_back(
        decoder_forward(params, std::vector<double>(row, row + params.codebook.dim)));
  }
  return vectors_to_sequence(outputs, params.config.window, params.joint_count,
                             params.fps, tokens.id);
}

ReconLossValue recon_loss(const PoseSequence& seq, const CodecParams& params,
                          double alpha) {
  const auto inputs = sequence_vectors(seq, params.config.window);
  const std::size_t n = inputs.size();
  const std::size_t dx = inputs[0].size();
  const std::size_t dz = params.config.code_dim;
  ReconLossValue value;
  for (const std::vector<double>& x : inputs) {
    const std::vector<double> z = encoder_forward(params, x);
    const auto [k, code] = quantize(z, params.codebook);
    (void)k;
    const std::vector<double> xhat = decoder_forward(params, code);
    value.recon_mse +=
        kernels::l2sq(xhat.data(), x.data(), dx) / static_cast<double>(n * dx);
    value.commitment +=
        kernels::l2sq(z.data(), code.data(), dz) / static_cast<double>(n * dz);
  }
  value.total = value.recon_mse + alpha * value.commitment;
  return value;
}

std::pair<double, RepetitionStats> repetition_loss(const TokenSequence& tokens,
                                                   double beta, double gamma) {
  if (tokens.indices.empty()) {
    throw ContractError("repetition_loss: empty token sequence");
  }
  std::map<int, std::size_t> counts;
  for (int k : tokens.indices) {
    ++counts[k];
  }
  RepetitionStats stats;
  stats.n = tokens.indices.size();
  stats.k_uniq = counts.size();
  for (const auto& [k, c] : counts) {
    (void)k;
    stats.k_freq = std::max(stats.k_freq, c);
  }
  const double n = static_cast<double>(stats.n);
  const double loss = beta * (1.0 - static_cast<double>(stats.k_uniq) / n) +
                      gamma * (static_cast<double>(stats.k_freq) / n);
  return {loss, stats};
}

double total_loss(const PoseSequence& seq, const CodecParams& params,
                  const CodecConfig& config) {
  const ReconLossValue recon = recon_loss(seq, params, config.alpha);
  double loss = recon.total;
  if (config.codebook_gradient_term) {
    // the alignment term shares the commitment distance value
    loss += config.codebook_gradient_weight * recon.commitment;
  }
  const TokenSequence tokens = encode_sequence(seq, params);
  loss += repetition_loss(tokens, config.beta, config.gamma).first;
  return loss;
}

ReconLossValue recon_loss_gradients(const std::vector<std::vector<double>>& inputs,
                                    const CodecParams& params, double alpha,
                                    double align_weight, CodecGradients& grads,
                                    std::vector<int>* assignments,
                                    std::vector<std::vector<double>>* encoder_outputs) {
  const std::size_t n = inputs.size();
  if (n == 0) {
    throw ContractError("recon_loss_gradients: no inputs");
  }
  const std::size_t dx = inputs[0].size();
  const std::size_t dz = params.config.code_dim;

  grads.encoder = params.encoder.zeros_like();
  grads.decoder = params.decoder.zeros_like();
  grads.codebook.assign(params.codebook.v.size(), 0.0);
  if (assignments != nullptr) {
    assignments->clear();
  }
  if (encoder_outputs != nullptr) {
    encoder_outputs->clear();
  }

  ReconLossValue value;
  const double recon_scale = 1.0 / static_cast<double>(n * dx);
  const double code_scale = 1.0 / static_cast<double>(n * dz);

  MlpCache enc_cache, dec_cache;
  for (const std::vector<double>& x : inputs) {
    mlp_forward(params.encoder, x.data(), enc_cache);
    const std::vector<double>& z = enc_cache.acts.back();
    const auto [k, code] = quantize(z, params.codebook);
    mlp_forward(params.decoder, code.data(), dec_cache);
    const std::vector<double>& xhat = dec_cache.acts.back();

    value.recon_mse += kernels::l2sq(xhat.data(), x.data(), dx) * recon_scale;
    value.commitment += kernels::l2sq(z.data(), code.data(), dz) * code_scale;

    // decoder path: d recon / d xhat
    std::vector<double> dxhat(dx);
    for (std::size_t i = 0; i < dx; ++i) {
      dxhat[i] = 2.0 * (xhat[i] - x[i]) * recon_scale;
    }
    std::vector<double> dcode(dz, 0.0);
    mlp_backward(params.decoder, dec_cache, dxhat.data(), grads.decoder, dcode.data());

    // straight-through: copy the decoder-input gradient onto the encoder
    // output, then add the commitment pull
    std::vector<double> dz_vec = dcode;
    for (std::size_t i = 0; i < dz; ++i) {
      dz_vec[i] += alpha * 2.0 * (z[i] - code[i]) * code_scale;
    }
    mlp_backward(params.encoder, enc_cache, dz_vec.data(), grads.encoder, nullptr);

    // optional alignment term trains the codebook by gradient
    if (align_weight != 0.0) {
      double* gk = grads.codebook.data() + static_cast<std::size_t>(k) * dz;
      for (std::size_t i = 0; i < dz; ++i) {
        gk[i] += align_weight * 2.0 * (code[i] - z[i]) * code_scale;
      }
    }

    if (assignments != nullptr) {
      assignments->push_back(k);
    }
    if (encoder_outputs != nullptr) {
      encoder_outputs->push_back(z);
    }
  }
  value.total = value.recon_mse + alpha * value.commitment +
                align_weight * value.commitment;
  return value;
}

CodecTrainResult train_codec(const std::vector<PoseSequence>& dataset,
                             const CodecConfig& config) {
  if (dataset.empty()) {
    throw ContractError("train_codec: empty dataset");
  }
  const std::size_t joints = dataset[0].joint_count();
  for (const PoseSequence& seq : dataset) {
    if (seq.joint_count() != joints) {
      throw ContractError("train_codec: inconsistent joint counts in dataset");
    }
  }

  CodecTrainResult result;
  result.params = init_codec(config, joints, dataset[0].fps);
  CodecParams& params = result.params;

  // vectorize the corpus once
  std::vector<std::vector<std::vector<double>>> per_seq_vecs;
  per_seq_vecs.reserve(dataset.size());
  for (const PoseSequence& seq : dataset) {
    per_seq_vecs.push_back(sequence_vectors(seq, config.window));
  }

  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  const AdamConfig adam{config.learning_rate, 0.9, 0.999, 1e-8};
  std::vector<AdamState> enc_w_state(params.encoder.layer_count());
  std::vector<AdamState> enc_b_state(params.encoder.layer_count());
  std::vector<AdamState> dec_w_state(params.decoder.layer_count());
  std::vector<AdamState> dec_b_state(params.decoder.layer_count());
  AdamState cb_state;

  const std::size_t batch = std::max<std::size_t>(1, config.batch_sequences);
  const double align_weight =
      config.codebook_gradient_term ? config.codebook_gradient_weight : 0.0;
  const std::size_t dz = config.code_dim;

  for (std::size_t step = 0; step < config.steps; ++step) {
    // assemble batch
    std::vector<std::size_t> seq_ids;
    std::vector<std::vector<double>> inputs;
    std::vector<std::size_t> seq_lengths;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t s = static_cast<std::size_t>(rng.below(dataset.size()));
      seq_ids.push_back(s);
      seq_lengths.push_back(per_seq_vecs[s].size());
      inputs.insert(inputs.end(), per_seq_vecs[s].begin(), per_seq_vecs[s].end());
    }

    CodecGradients grads;
    std::vector<int> assignments;
    std::vector<std::vector<double>> zs;
    const ReconLossValue loss = recon_loss_gradients(inputs, params, config.alpha,
                                                     align_weight, grads, &assignments,
                                                     &zs);
    if (!std::isfinite(loss.total)) {
      throw TrainError("train_codec: loss diverged at step " + std::to_string(step));
    }

    const long t = static_cast<long>(step) + 1;
    for (std::size_t l = 0; l < params.encoder.layer_count(); ++l) {
      adam_step(params.encoder.weights[l].v.data(), grads.encoder.weights[l].v.data(),
                params.encoder.weights[l].size(), enc_w_state[l], adam, t);
      adam_step(params.encoder.biases[l].data(), grads.encoder.biases[l].data(),
                params.encoder.biases[l].size(), enc_b_state[l], adam, t);
    }
    for (std::size_t l = 0; l < params.decoder.layer_count(); ++l) {
      adam_step(params.decoder.weights[l].v.data(), grads.decoder.weights[l].v.data(),
                params.decoder.weights[l].size(), dec_w_state[l], adam, t);
      adam_step(params.decoder.biases[l].data(), grads.decoder.biases[l].data(),
                params.decoder.biases[l].size(), dec_b_state[l], adam, t);
    }
    if (config.codebook_gradient_term) {
      adam_step(params.codebook.v.data(), grads.codebook.data(), params.codebook.v.size(),
                cb_state, adam, t);
    }

    // batch code usage
    std::vector<std::size_t> histogram(config.codebook_size, 0);
    for (int k : assignments) {
      ++histogram[static_cast<std::size_t>(k)];
    }
    std::size_t top_code = 0;
    for (std::size_t k = 1; k < histogram.size(); ++k) {
      if (histogram[k] > histogram[top_code]) {
        top_code = k;
      }
    }
    const double top_share = static_cast<double>(histogram[top_code]) /
                             static_cast<double>(assignments.size());

    std::size_t reseeds = 0;
    if (!config.codebook_gradient_term) {
      // EMA codebook update; repetition surrogate damps the dominant code
      double top_damp = 1.0;
      if (top_share > config.refreq_threshold) {
        top_damp = std::clamp(1.0 - config.gamma * top_share, 0.0, 1.0);
      }
      std::vector<double> cluster_sum(config.codebook_size * dz, 0.0);
      for (std::size_t i = 0; i < assignments.size(); ++i) {
        kernels::axpy(1.0, zs[i].data(),
                      cluster_sum.data() + static_cast<std::size_t>(assignments[i]) * dz,
                      dz);
      }
      const double d = config.ema_decay;
      for (std::size_t k = 0; k < config.codebook_size; ++k) {
        double fresh = static_cast<double>(histogram[k]);
        double weight = 1.0;
        if (k == top_code && top_share > config.refreq_threshold) {
          weight = top_damp;
        }
        params.ema_cluster_size[k] = d * params.ema_cluster_size[k] +
                                     (1.0 - d) * weight * fresh;
        double* msum = params.ema_cluster_sum.data() + k * dz;
        for (std::size_t i = 0; i < dz; ++i) {
          msum[i] = d * msum[i] + (1.0 - d) * weight * cluster_sum[k * dz + i];
        }
        if (params.ema_cluster_size[k] > 1e-9) {
          double* row = params.codebook.row(k);
          for (std::size_t i = 0; i < dz; ++i) {
            row[i] = msum[i] / params.ema_cluster_size[k];
          }
        }
      }
    }

    // dead-code re-seeding, frequency scaled by beta
    if (top_share > config.refreq_threshold && config.beta > 0.0 &&
        rng.uniform() < std::min(config.beta, 1.0)) {
      // nearest unused code to the dominant one
      long best_unused = -1;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < config.codebook_size; ++k) {
        if (histogram[k] != 0) {
          continue;
        }
        const double dist = kernels::l2sq(params.codebook.row(k),
                                          params.codebook.row(top_code), dz);
        if (dist < best_dist) {
          best_dist = dist;
          best_unused = static_cast<long>(k);
        }
      }
      if (best_unused >= 0) {
        // a random encoder output currently assigned to the dominant code
        std::vector<std::size_t> owners;
        for (std::size_t i = 0; i < assignments.size(); ++i) {
          if (static_cast<std::size_t>(assignments[i]) == top_code) {
            owners.push_back(i);
          }
        }
        const std::size_t pick = owners[static_cast<std::size_t>(rng.below(owners.size()))];
        const auto ku = static_cast<std::size_t>(best_unused);
        double* row = params.codebook.row(ku);
        for (std::size_t i = 0; i < dz; ++i) {
          row[i] = zs[pick][i];
        }
        params.ema_cluster_size[ku] = 1.0;
        std::copy(zs[pick].begin(), zs[pick].end(),
                  params.ema_cluster_sum.begin() + ku * dz);
        ++reseeds;
      }
    }

    const bool log_now = config.log_interval != 0 &&
                         (step % config.log_interval == 0 || step + 1 == config.steps);
    if (log_now) {
      CodecLogEntry entry;
      entry.step = step;
      entry.recon_mse = loss.recon_mse;
      entry.commitment = loss.commitment;
      entry.reseed_events = reseeds;
      // per-sequence repetition scalars over the batch, Eq-style
      double rep = 0.0, uniq = 0.0, freq = 0.0;
      std::size_t offset = 0;
      std::vector<TokenSequence> batch_tokens;
      for (std::size_t b = 0; b < seq_ids.size(); ++b) {
        TokenSequence ts;
        ts.indices.assign(assignments.begin() + static_cast<std::ptrdiff_t>(offset),
                          assignments.begin() +
                              static_cast<std::ptrdiff_t>(offset + seq_lengths[b]));
        offset += seq_lengths[b];
        const auto [value, stats] = repetition_loss(ts, config.beta, config.gamma);
        rep += value;
        uniq += static_cast<double>(stats.k_uniq);
        freq += static_cast<double>(stats.k_freq);
        batch_tokens.push_back(std::move(ts));
      }
      const double nb = static_cast<double>(seq_ids.size());
      entry.repetition = rep / nb;
      entry.k_uniq_mean = uniq / nb;
      entry.k_freq_mean = freq / nb;
      const CodebookStats stats = codebook_stats(batch_tokens, config.codebook_size);
      entry.batch_distinct_codes = stats.distinct;
      entry.perplexity = stats.perplexity;
      result.log.push_back(entry);
    }
  }
  return result;
}

CodebookStats codebook_stats(const std::vector<TokenSequence>& token_sequences,
                             std::size_t codebook_size) {
  CodebookStats stats;
  stats.histogram.assign(codebook_size, 0);
  long long total = 0;
  for (const TokenSequence& ts : token_sequences) {
    for (int k : ts.indices) {
      if (k >= 0 && static_cast<std::size_t>(k) < codebook_size) {
        ++stats.histogram[static_cast<std::size_t>(k)];
        ++total;
      }
    }
  }
  double entropy = 0.0;
  for (long long c : stats.histogram) {
    if (c > 0) {
      ++stats.distinct;
      const double q = static_cast<double>(c) / static_cast<double>(total);
      entropy -= q * std::log(q);
    }
  }
  stats.perplexity = total > 0 ? std::exp(entropy) : 0.0;
  return stats;
}

// --- persistence -------------------------------------------------------------

namespace {

using nlohmann::json;

json mlp_to_json(const Mlp& net) {
  json j;
  j["dims"] = net.dims;
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    weights.push_back(net.weights[l].v);
    biases.push_back(net.biases[l]);
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j;
}

Mlp mlp_from_json(const json& j) {
  Mlp net;
  net.dims = j.at("dims").get<std::vector<std::size_t>>();
  const json& weights = j.at("weights");
  const json& biases = j.at("biases");
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    Mat w(net.dims[l + 1], net.dims[l]);
    w.v = weights.at(l).get<std::vector<double>>();
    if (w.v.size() != w.rows * w.cols) {
      throw FormatError("codec checkpoint: weight shape mismatch");
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(biases.at(l).get<std::vector<double>>());
  }
  return net;
}

json config_to_json(const CodecConfig& c) {
  json j;
  j["codebook_size"] = c.codebook_size;
  j["code_dim"] = c.code_dim;
  j["hidden"] = c.hidden;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["gamma"] = c.gamma;
  j["learning_rate"] = c.learning_rate;
  j["steps"] = c.steps;
  j["seed"] = c.seed;
  j["batch_sequences"] = c.batch_sequences;
  j["ema_decay"] = c.ema_decay;
  j["codebook_gradient_term"] = c.codebook_gradient_term;
  j["codebook_gradient_weight"] = c.codebook_gradient_weight;
  j["refreq_threshold"] = c.refreq_threshold;
  j["window"] = c.window;
  j["log_interval"] = c.log_interval;
  return j;
}

CodecConfig config_from_json(const json& j) {
  CodecConfig c;
  c.codebook_size = j.at("codebook_size").get<std::size_t>();
  c.code_dim = j.at("code_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.steps = j.at("steps").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.batch_sequences = j.at("batch_sequences").get<std::size_t>();
  c.ema_decay = j.at("ema_decay").get<double>();
  c.codebook_gradient_term = j.at("codebook_gradient_term").get<bool>();
  c.codebook_gradient_weight = j.at("codebook_gradient_weight").get<double>();
  c.refreq_threshold = j.at("refreq_threshold").get<double>();
  c.window = j.at("window").get<std::size_t>();
  c.log_interval = j.at("log_interval").get<std::size_t>();
  return c;
}

}  // namespace

void save_codec(const std::string& path, const CodecParams& params) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "vq_codec";
  j["config"] = config_to_json(params.config);
  j["fps"] = params.fps;
  j["joint_count"] = params.joint_count;
  j["encoder"] = mlp_to_json(params.encoder);
  j["decoder"] = mlp_to_json(params.decoder);
  j["codebook"] = params.codebook.v;
  j["ema_cluster_size"] = params.ema_cluster_size;
  j["ema_cluster_sum"] = params.ema_cluster_sum;
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write codec checkpoint: " + path);
  }
  out << j.dump() << '\n';
  if (!out) {
    throw IoError("codec checkpoint write failed: " + path);
  }
}

CodecParams load_codec(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open codec checkpoint: " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("codec checkpoint: ") + e.what());
  }
  if (j.value("format_version", 0) != 1 || j.value("kind", "") != "vq_codec") {
    throw FormatError("codec checkpoint: unsupported format");
  }
  CodecParams params;
  params.config = config_from_json(j.at("config"));
  params.fps = j.at("fps").get<double>();
  params.joint_count = j.at("joint_count").get<std::size_t>();
  params.encoder = mlp_from_json(j.at("encoder"));
  params.decoder = mlp_from_json(j.at("decoder"));
  params.codebook = Codebook(params.config.codebook_size, params.config.code_dim);
  params.codebook.v = j.at("codebook").get<std::vector<double>>();
  if (params.codebook.v.size() != params.config.codebook_size * params.config.code_dim) {
    throw FormatError("codec checkpoint: codebook shape mismatch");
  }
  params.ema_cluster_size = j.at("ema_cluster_size").get<std::vector<double>>();
  params.ema_cluster_sum = j.at("ema_cluster_sum").get<std::vector<double>>();
  return params;
}

}  // namespace signtok
