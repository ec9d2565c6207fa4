#pragma once

#include <map>
#include <string>
#include <vector>

#include "coart/ema.hpp"
#include "coart/phoneme.hpp"
#include "coart/rng.hpp"
#include "coart/tensor.hpp"

namespace coart {

/// Synthetic corpus generator with known coarticulation structure.
///
/// Every phoneme type gets a fixed random target vector in position
/// space. A frame mixes the targets of all phonemes in the word with
/// convex weights that decay exponentially with distance in position
/// units (half-life measured in phoneme positions), so the spillover of
/// a substitution onto its neighbours follows a closed form the analysis
/// tests can check against.
struct OracleConfig {
  int speakers = 8;
  int utterances_per_speaker = 25;
  int min_len = 4;
  int max_len = 12;
  int frames_per_phoneme = 9;  // odd, so phoneme centers land on frames
  double half_life = 1.0;      // influence halves per position of distance
  double adjacent_boost = 0.3;  // extra weight on immediate neighbours
  double noise = 0.0;           // additive position noise (post-transform)
  double rate = 100.0;
  // Owner damping of foreign influence: while a consonant of this place
  // holds the frame, every other phoneme's weight is multiplied by the
  // factor. > 1 = less resistant (more coarticulation), < 1 = more.
  std::map<Place, double> resistance;
  std::uint64_t seed = 1;
};

struct Oracle {
  OracleConfig config;
  ChannelLayout layout;
  Matrix targets;  // inventory size x position channels
  const Inventory* inventory = nullptr;
};

Oracle make_oracle(const OracleConfig& cfg, const Inventory& inv);

/// Noise-free closed-form trajectory for one word, no speaker transform.
Matrix oracle_positions(const Oracle& oracle, const PhonemeSequence& seq);

/// Exact phoneme centers: mu_i = i*F + (F-1)/2.
Vector oracle_mu(const Oracle& oracle, int n);

/// Exact alignment spans tiling [0, n*F).
std::vector<AlignSpan> oracle_alignment(const Oracle& oracle, int n);

/// Per-speaker affine perturbation applied to every frame.
struct SpeakerTransform {
  Matrix A;  // position channels x position channels, near identity
  Vector b;
};

struct OracleDataset {
  Oracle oracle;
  std::map<std::string, SpeakerTransform> transforms;
  std::vector<Utterance> utterances;  // raw positions with exact alignments
};

/// Random words over the 39 speech phonemes, speaker transforms
/// I + 0.05 N and 0.1 N, seeded noise. Same config = identical dataset.
OracleDataset synth_oracle(const OracleConfig& cfg, const Inventory& inv);

}  // namespace coart
