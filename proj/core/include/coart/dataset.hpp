#pragma once

#include <map>
#include <string>
#include <vector>

#include "coart/ema.hpp"
#include "coart/phoneme.hpp"

namespace coart {

/// All 4x per-sensor channel names in column order: the position block
/// ("TT_x", "TT_y", ...) then the velocity block ("TT_vx", "TT_vy", ...).
std::vector<std::string> full_channel_names(const ChannelLayout& layout);

struct ManifestEntry {
  std::string id;
  std::string speaker;
  std::string trajectory_path;  // relative to the manifest's directory
  std::string alignment_path;   // empty = no alignment
  std::string phonemes;         // space-separated symbols
  std::string split;            // "train", "validation", or "" (seeded split)
};

/// Manifest CSV: "id,speaker,trajectory,alignment,phonemes,split".
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

/// EMA-CSV: header "time_s,<ch>,...", one frame per row, frame rate
/// recovered from the time column.
void write_ema_csv(const std::string& path, const EmaTrajectory& traj,
                   const std::vector<std::string>& channel_names);
EmaTrajectory read_ema_csv(const std::string& path, int expected_channels);

/// Alignment CSV: header "start_s,end_s,phoneme", one span per phoneme.
void write_alignment_csv(const std::string& path, const std::vector<AlignSpan>& spans,
                         const PhonemeSequence& seq, double rate);
std::vector<AlignSpan> read_alignment_csv(const std::string& path, const PhonemeSequence& seq,
                                          double rate);

/// A raw dataset: position-only trajectories as listed by a manifest.
struct Dataset {
  ChannelLayout layout;
  std::vector<Utterance> utterances;  // sorted by id
  // Split pinned by the manifest; empty when every row left it blank.
  std::map<std::string, std::string> requested_split;
};

Dataset load_dataset(const std::string& manifest_path, const Inventory& inv);

/// Writes utterances as manifest + per-utterance files under dir
/// (ema/<id>.csv, align/<id>.csv) with blank split fields.
void write_dataset(const std::string& dir, const std::vector<Utterance>& utts,
                   const ChannelLayout& layout);

/// Velocities appended, stats fitted on the training split only,
/// everything normalized. This is what training and evaluation consume.
struct PreparedDataset {
  ChannelLayout layout;
  double rate = 100.0;
  std::map<std::string, SpeakerStats> stats;
  DatasetSplit split;
  std::vector<Utterance> utterances;  // sorted by id, normalized

  const Utterance& by_id(const std::string& id) const;
  std::vector<const Utterance*> train() const;
  std::vector<const Utterance*> validation() const;
};

PreparedDataset prepare_dataset(const Dataset& ds, double split_fraction, std::uint64_t seed);

/// Cache directory: prepared.cfg, stats.csv, split.csv, index.csv,
/// utterances/<id>.csv (+ .align.csv). Deterministic byte-for-byte.
void write_prepared(const std::string& dir, const PreparedDataset& prep);
PreparedDataset load_prepared(const std::string& dir, const Inventory& inv);

}  // namespace coart
