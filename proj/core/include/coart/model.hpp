#pragma once

#include <map>
#include <string>
#include <vector>

#include "coart/dataset.hpp"
#include "coart/nn.hpp"
#include "coart/phoneme.hpp"
#include "coart/timing.hpp"

namespace coart {

struct ModelConfig {
  int inventory = 40;  // phoneme count c
  int embed = 64;
  int hidden = 128;  // per direction
  int layers = 2;
  int channels = 24;  // s: positions + velocities

  bool operator==(const ModelConfig&) const = default;
};

/// Timing encoder f (one-hot -> per-phoneme raw duration/sigma), EMA
/// decoder g over influence-mixed embeddings, one affine head per
/// speaker. The decoder input at frame k is sum_i M'_{k,i} E(x_i).
struct ModelParams {
  ModelConfig config;
  GruStackParams timing_rnn;
  Linear timing_head;  // 2*hidden -> 2
  Matrix embedding;    // c x embed
  GruStackParams decoder_rnn;
  Linear decoder_head;  // 2*hidden -> s
  std::map<std::string, Linear> speaker_heads;  // s -> s affine
};

ModelParams init_model(const ModelConfig& cfg, const std::vector<std::string>& speakers,
                       std::uint64_t seed);
ModelParams zeros_like(const ModelParams& p);

/// Fixed flat enumeration shared by the optimizer, the weight file, and
/// the gradient tests: embedding, timing stack, timing head, decoder
/// stack, decoder head, speaker heads in sorted id order.
std::vector<ParamView> param_views(ModelParams& p);

/// Versioned binary weight file; bit-exact round-trip.
void save_params(const ModelParams& p, const std::string& path);
ModelParams load_params(const std::string& path);

TimingParams predict_timing(const ModelParams& model, const PhonemeSequence& seq,
                            const Inventory& inv);

struct GenerationResult {
  EmaTrajectory ema;  // normalized space, total_frames x s
  TimingParams timing;
  std::string speaker;
};

GenerationResult generate(const ModelParams& model, const PhonemeSequence& seq,
                          const std::string& speaker, const Inventory& inv);

struct TrainConfig {
  double learning_rate = 4e-4;
  int batch_size = 64;
  double gamma = 1.0;
  double clip_norm = 10.0;
  int epochs = 10;
  std::uint64_t seed = 0;
  double length_penalty_weight = 0.0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

/// Loss (and, when grad != nullptr, gradients) for one utterance:
/// sdtw(generated, utt.ema, gamma) plus the optional length penalty
/// weight * (sum_durations - t_truth)^2.
double utterance_loss_grad(const ModelParams& model, const Utterance& utt, double gamma,
                           double length_penalty_weight, const Inventory& inv, ModelParams* grad);

/// Seeded shuffling, mean loss per batch, norm-clipped Adam updates.
std::vector<EpochStats> train(ModelParams& model, const PreparedDataset& data,
                              const TrainConfig& cfg, const Inventory& inv);

}  // namespace coart
