#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coart/phoneme.hpp"
#include "coart/rng.hpp"
#include "coart/tensor.hpp"

namespace coart {

/// Channel ordering for a trajectory matrix: the position block first
/// (x then y per sensor, sensors in order), then the velocity block in
/// the same sensor order. The evaluation view is the position block,
/// i.e. the leading position_channels() columns, so no gather is needed.
struct ChannelLayout {
  std::vector<std::string> sensors;

  /// The six standard placements: TT, TB, TD, UL, LL, LI.
  static ChannelLayout standard();

  int sensor_count() const { return static_cast<int>(sensors.size()); }
  int position_channels() const { return 2 * sensor_count(); }
  int total_channels() const { return 4 * sensor_count(); }

  int sensor_index(const std::string& name) const;  // throws if absent
  int pos_x(const std::string& sensor) const { return 2 * sensor_index(sensor); }
  int pos_y(const std::string& sensor) const { return 2 * sensor_index(sensor) + 1; }

  /// Position-channel names in column order: "TT_x", "TT_y", "TB_x", ...
  std::vector<std::string> position_names() const;
};

struct EmaTrajectory {
  Matrix values;        // t x channels, frame-major
  double rate = 100.0;  // frames per second

  // Pipeline provenance: velocities must be appended before
  // normalization (z-scoring is affine, so the order changes values).
  bool has_velocities = false;
  bool normalized = false;

  int frames() const { return static_cast<int>(values.rows()); }
  int channels() const { return static_cast<int>(values.cols()); }
};

/// Half-open frame interval [start_frame, end_frame).
struct AlignSpan {
  int start_frame = 0;
  int end_frame = 0;
};

struct Utterance {
  std::string id;
  std::string speaker;
  PhonemeSequence phonemes;
  EmaTrajectory ema;
  std::optional<std::vector<AlignSpan>> alignment;  // one span per phoneme
};

/// Throws unless the trajectory is finite and nonempty and the alignment,
/// when present, is ordered, non-overlapping, and inside [0, t).
void validate(const Utterance& utt);

struct SpeakerStats {
  std::string speaker;
  Vector mean;  // per channel
  Vector std;   // per channel, strictly positive
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  double split_fraction = 0.9;
};

/// Central differences scaled by rate; one-sided at the two boundary
/// frames. positions is t x c with t >= 2.
Matrix compute_velocities(const Matrix& positions, double rate);

/// Appends the velocity block to a raw position-only trajectory.
/// Refuses normalized input: velocities are derivatives of raw
/// positions, never of z-scored ones.
EmaTrajectory add_velocities(const EmaTrajectory& traj);

/// Per-speaker, per-channel mean and population std over all frames of
/// the given (training) utterances; std floored at 1e-6.
std::map<std::string, SpeakerStats> fit_stats(const std::vector<Utterance>& train);

EmaTrajectory normalize(const EmaTrajectory& traj, const SpeakerStats& stats);
EmaTrajectory denormalize(const EmaTrajectory& traj, const SpeakerStats& stats);

/// Deterministic split, stratified per speaker so every speaker keeps at
/// least one training utterance (the stats fit requires it).
DatasetSplit make_split(const std::vector<Utterance>& utts, double fraction, Rng rng);

}  // namespace coart
