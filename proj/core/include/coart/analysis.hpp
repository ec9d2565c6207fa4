#pragma once

#include <map>
#include <string>
#include <vector>

#include "coart/lexicon.hpp"
#include "coart/model.hpp"
#include "coart/oracle.hpp"
#include "coart/stats.hpp"

namespace coart {

struct AnalysisConfig {
  int tau = 1;               // representation half-width in frames
  int max_offset = 8;        // phonemic distance range
  int baseline_samples = 1000;
  int davg_words = 2000;     // sample size for the phoneme-type centroids
  int bootstrap_resamples = 2000;
  std::uint64_t seed = 0;
};

/// One generated word as the analyses see it: position channels only,
/// plus the per-phoneme influence centers.
struct GeneratedWord {
  Matrix positions;  // t x position channels
  Vector mu;         // length n, frames
};

/// The distance machinery is generic over where trajectories come from,
/// so the planted-structure tests can run it against the closed-form
/// oracle while the pipelines run it against a trained model.
class WordGenerator {
 public:
  virtual ~WordGenerator() = default;
  virtual GeneratedWord generate_word(const PhonemeSequence& seq) const = 0;
  virtual const Inventory& inventory() const = 0;
};

class ModelWordGenerator : public WordGenerator {
 public:
  ModelWordGenerator(const ModelParams& model, std::string speaker, const Inventory& inv,
                     int position_channels);
  GeneratedWord generate_word(const PhonemeSequence& seq) const override;
  const Inventory& inventory() const override { return *inv_; }

 private:
  const ModelParams* model_;
  std::string speaker_;
  const Inventory* inv_;
  int s_pos_;
};

/// Noise-free oracle mixture, no speaker transform.
class OracleWordGenerator : public WordGenerator {
 public:
  explicit OracleWordGenerator(const Oracle& oracle) : oracle_(&oracle) {}
  GeneratedWord generate_word(const PhonemeSequence& seq) const override;
  const Inventory& inventory() const override { return *oracle_->inventory; }

 private:
  const Oracle* oracle_;
};

struct PhonemeRepr {
  Vector values;  // position channels
  Phoneme phoneme;
  std::string word;
  int position = 0;
};

/// Mean of the position rows in [mu_k - tau, mu_k + tau], mu_k rounded
/// to the nearest frame, window clipped at the edges with an adjusted
/// denominator.
PhonemeRepr phoneme_repr(const GeneratedWord& word, const PhonemeSequence& seq, int k, int tau);

double pair_distance(const PhonemeRepr& a, const PhonemeRepr& b);

/// D_avg: mean pairwise distance between per-type centroid
/// representations over a seeded word sample. Types with no occurrence
/// are excluded; their symbols are reported via missing_out when given.
double mean_interphoneme_distance(const WordGenerator& gen, const Lexicon& lex,
                                  const AnalysisConfig& cfg,
                                  std::vector<std::string>* missing_out = nullptr);

struct PairDistanceRecord {
  std::string word_a, word_b;
  int trigger_pos = 0;
  int offset = 0;  // position - trigger_pos; 0 = the trigger itself
  double distance = 0.0;
  double normalized_pct = 0.0;
  Phoneme target;  // the shared phoneme at the measured position
};

/// Distances at every in-range offset (trigger included, marked by
/// offset 0). Pairs whose generation fails are skipped and logged.
std::vector<PairDistanceRecord> pair_records(const WordGenerator& gen,
                                             const std::vector<MinimalPair>& pairs,
                                             const AnalysisConfig& cfg, double d_avg,
                                             std::vector<std::string>* skip_log = nullptr);

struct OffsetStats {
  int n = 0;
  double mean_pct = 0.0;
  double std_pct = 0.0;
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  double p_value = 1.0;
};

struct ExtentProfile {
  double d_avg = 0.0;
  std::map<int, OffsetStats> signed_offsets;  // -max..-1 and 1..max
  std::map<int, OffsetStats> pooled;          // keyed by |offset|
  std::vector<double> baseline;               // normalized pct
};

/// Far-field control: seeded word concatenations with the first or last
/// phoneme swapped (alternating) for another of the same kind, distance
/// read at the opposite end (offset >= max_offset).
std::vector<double> baseline_distances(const WordGenerator& gen, const Lexicon& lex,
                                       const AnalysisConfig& cfg, double d_avg);

ExtentProfile extent_profile(const WordGenerator& gen, const std::vector<MinimalPair>& pairs,
                             const Lexicon& lex, const AnalysisConfig& cfg,
                             std::vector<std::string>* skip_log = nullptr);

/// One-sided Mann-Whitney U: are offset distances stochastically
/// greater than baseline distances?
inline MannWhitneyResult significance(const std::vector<double>& offset_samples,
                                      const std::vector<double>& baseline) {
  return mann_whitney_greater(offset_samples, baseline);
}

struct PlaceStats {
  Place place;
  int n = 0;
  double mean_pct = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
};

/// Records at |offset| = 1 with a consonant target, grouped by place of
/// articulation; per group mean and bootstrap 95% CI; sorted by mean,
/// empty groups last.
std::vector<PlaceStats> resistance_by_place(const std::vector<PairDistanceRecord>& records,
                                            const AnalysisConfig& cfg);

struct TractVariables {
  Vector la, lp, ttcl, tbcl;
};

/// LA = lip distance, LP / TTCL / TBCL = anterior (x) coordinates of
/// UL / TT / TB; z-scored per utterance unless zscore = false.
TractVariables tract_variables(const Matrix& positions, const ChannelLayout& layout,
                               bool zscore = true);

struct VcvResult {
  GenerationResult a, b;
  TractVariables tv_a, tv_b;
  int divergence_onset = -1;  // first frame of the position traces apart; -1 = identical
};

/// Generates both members of a (near-)minimal sequence pair and derives
/// tract-variable traces; stats, when given, denormalizes first.
VcvResult demo_vcv(const ModelParams& model, const PhonemeSequence& seq_a,
                   const PhonemeSequence& seq_b, const std::string& speaker, const Inventory& inv,
                   const ChannelLayout& layout, const SpeakerStats* stats = nullptr);

}  // namespace coart
