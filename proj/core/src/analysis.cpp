#include "coart/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "coart/common.hpp"

namespace coart {

ModelWordGenerator::ModelWordGenerator(const ModelParams& model, std::string speaker,
                                       const Inventory& inv, int position_channels)
    : model_(&model), speaker_(std::move(speaker)), inv_(&inv), s_pos_(position_channels) {
  require(position_channels >= 1 && position_channels <= model.config.channels,
          "bad position channel count {}", position_channels);
}

GeneratedWord ModelWordGenerator::generate_word(const PhonemeSequence& seq) const {
  GenerationResult res = generate(*model_, seq, speaker_, *inv_);
  GeneratedWord w;
  w.positions = res.ema.values.leftCols(s_pos_);
  w.mu = res.timing.mu;
  return w;
}

GeneratedWord OracleWordGenerator::generate_word(const PhonemeSequence& seq) const {
  GeneratedWord w;
  w.positions = oracle_positions(*oracle_, seq);
  w.mu = oracle_mu(*oracle_, seq.size());
  return w;
}

PhonemeRepr phoneme_repr(const GeneratedWord& word, const PhonemeSequence& seq, int k, int tau) {
  require(k >= 0 && k < seq.size(), "phoneme index {} out of range (n = {})", k, seq.size());
  require(tau >= 0, "tau must be >= 0");
  require(word.mu.size() == seq.size(), "word has {} centers for {} phonemes", word.mu.size(),
          seq.size());
  const int t = static_cast<int>(word.positions.rows());
  const int center =
      std::clamp(static_cast<int>(std::lround(word.mu[k])), 0, t - 1);
  const int lo = std::max(0, center - tau);
  const int hi = std::min(t - 1, center + tau);

  PhonemeRepr rep;
  rep.phoneme = seq.tokens[static_cast<std::size_t>(k)];
  rep.word = seq.source_word;
  rep.position = k;
  rep.values = Vector::Zero(word.positions.cols());
  for (int j = lo; j <= hi; ++j) rep.values += word.positions.row(j).transpose();
  rep.values /= static_cast<double>(hi - lo + 1);
  return rep;
}

double pair_distance(const PhonemeRepr& a, const PhonemeRepr& b) {
  require(a.values.size() == b.values.size(), "representation length mismatch: {} vs {}",
          a.values.size(), b.values.size());
  return (a.values - b.values).norm();
}

double mean_interphoneme_distance(const WordGenerator& gen, const Lexicon& lex,
                                  const AnalysisConfig& cfg,
                                  std::vector<std::string>* missing_out) {
  require(!lex.empty(), "mean_interphoneme_distance: empty lexicon");
  std::vector<const PhonemeSequence*> words;
  words.reserve(lex.entries.size());
  for (const auto& [w, seq] : lex.entries) words.push_back(&seq);
  Rng rng = Rng(cfg.seed).substream("davg");
  rng.shuffle(words);
  const std::size_t n_words =
      std::min(words.size(), static_cast<std::size_t>(std::max(cfg.davg_words, 1)));

  const Inventory& inv = gen.inventory();
  std::vector<Vector> sums(static_cast<std::size_t>(inv.size()));
  std::vector<long> counts(static_cast<std::size_t>(inv.size()), 0);
  for (std::size_t w = 0; w < n_words; ++w) {
    const PhonemeSequence& seq = *words[w];
    const GeneratedWord gw = gen.generate_word(seq);
    for (int k = 0; k < seq.size(); ++k) {
      const PhonemeRepr rep = phoneme_repr(gw, seq, k, cfg.tau);
      const auto idx = static_cast<std::size_t>(inv.index_of(rep.phoneme.symbol));
      if (counts[idx] == 0) sums[idx] = Vector::Zero(rep.values.size());
      sums[idx] += rep.values;
      ++counts[idx];
    }
  }

  std::vector<Vector> centroids;
  for (int i = 0; i < inv.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (counts[idx] > 0)
      centroids.push_back(sums[idx] / static_cast<double>(counts[idx]));
    else if (missing_out)
      missing_out->push_back(inv.at(i).symbol);
  }
  require(centroids.size() >= 2, "fewer than two phoneme types occur in the sample");

  double total = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < centroids.size(); ++i)
    for (std::size_t j = i + 1; j < centroids.size(); ++j) {
      total += (centroids[i] - centroids[j]).norm();
      ++pairs;
    }
  return total / static_cast<double>(pairs);
}

std::vector<PairDistanceRecord> pair_records(const WordGenerator& gen,
                                             const std::vector<MinimalPair>& pairs,
                                             const AnalysisConfig& cfg, double d_avg,
                                             std::vector<std::string>* skip_log) {
  require(d_avg > 0.0, "degenerate scale: D_avg must be positive, got {}", d_avg);
  std::vector<PairDistanceRecord> records;
  for (const auto& mp : pairs) {
    GeneratedWord wa, wb;
    try {
      wa = gen.generate_word(mp.seq_a);
      wb = gen.generate_word(mp.seq_b);
    } catch (const Error& e) {
      if (skip_log)
        skip_log->push_back(fmt::format("{}/{}: {}", mp.word_a, mp.word_b, e.what()));
      continue;
    }
    const int n = mp.seq_a.size();
    for (int off = -cfg.max_offset; off <= cfg.max_offset; ++off) {
      const int pos = mp.trigger_pos + off;
      if (pos < 0 || pos >= n) continue;
      PairDistanceRecord rec;
      rec.word_a = mp.word_a;
      rec.word_b = mp.word_b;
      rec.trigger_pos = mp.trigger_pos;
      rec.offset = off;
      rec.distance = pair_distance(phoneme_repr(wa, mp.seq_a, pos, cfg.tau),
                                   phoneme_repr(wb, mp.seq_b, pos, cfg.tau));
      rec.normalized_pct = rec.distance / d_avg * 100.0;
      rec.target = mp.seq_a.tokens[static_cast<std::size_t>(pos)];
      records.push_back(std::move(rec));
    }
  }
  return records;
}

namespace {

OffsetStats stats_of(std::vector<double> pct, const std::vector<double>& baseline) {
  OffsetStats st;
  st.n = static_cast<int>(pct.size());
  if (pct.empty()) return st;
  st.mean_pct = mean(pct);
  st.std_pct = stddev(pct);
  st.p_value = baseline.empty() ? 1.0 : mann_whitney_greater(pct, baseline).p;
  std::sort(pct.begin(), pct.end());
  st.q1 = quantile_sorted(pct, 0.25);
  st.median = quantile_sorted(pct, 0.5);
  st.q3 = quantile_sorted(pct, 0.75);
  return st;
}

}  // namespace

std::vector<double> baseline_distances(const WordGenerator& gen, const Lexicon& lex,
                                       const AnalysisConfig& cfg, double d_avg) {
  require(d_avg > 0.0, "degenerate scale: D_avg must be positive, got {}", d_avg);
  require(!lex.empty(), "baseline_distances: empty lexicon");
  const int needed = std::max(cfg.max_offset + 2, 2);

  std::vector<const PhonemeSequence*> words;
  for (const auto& [w, seq] : lex.entries) words.push_back(&seq);
  const Inventory& inv = gen.inventory();

  Rng rng = Rng(cfg.seed).substream("baseline");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(cfg.baseline_samples));
  for (int s = 0; s < cfg.baseline_samples; ++s) {
    PhonemeSequence seq;
    int guard = 0;
    while (seq.size() < needed) {
      const auto& w = *words[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(words.size()) - 1))];
      seq.tokens.insert(seq.tokens.end(), w.tokens.begin(), w.tokens.end());
      require(++guard <= 1000, "cannot reach {} phonemes by concatenating lexicon words", needed);
    }
    seq.source_word = fmt::format("baseline{}", s);

    const bool mutate_first = s % 2 == 0;
    const int pos = mutate_first ? 0 : seq.size() - 1;
    const Phoneme& orig = seq.tokens[static_cast<std::size_t>(pos)];
    std::vector<const Phoneme*> alts;
    for (const auto& p : inv.entries())
      if (p.kind == orig.kind && !(p == orig)) alts.push_back(&p);
    require(!alts.empty(), "no alternative phoneme of the same kind as '{}'", orig.symbol);
    PhonemeSequence mutated = seq;
    mutated.tokens[static_cast<std::size_t>(pos)] = *alts[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(alts.size()) - 1))];

    const GeneratedWord ga = gen.generate_word(seq);
    const GeneratedWord gb = gen.generate_word(mutated);
    const int far = mutate_first ? seq.size() - 1 : 0;
    const double d = pair_distance(phoneme_repr(ga, seq, far, cfg.tau),
                                   phoneme_repr(gb, mutated, far, cfg.tau));
    out.push_back(d / d_avg * 100.0);
  }
  return out;
}

ExtentProfile extent_profile(const WordGenerator& gen, const std::vector<MinimalPair>& pairs,
                             const Lexicon& lex, const AnalysisConfig& cfg,
                             std::vector<std::string>* skip_log) {
  const double d_avg = mean_interphoneme_distance(gen, lex, cfg);
  require(d_avg > 0.0, "degenerate scale: all phoneme centroids coincide (D_avg = 0)");

  ExtentProfile prof;
  prof.d_avg = d_avg;
  prof.baseline = baseline_distances(gen, lex, cfg, d_avg);

  const auto records = pair_records(gen, pairs, cfg, d_avg, skip_log);
  std::map<int, std::vector<double>> by_signed, by_abs;
  for (const auto& rec : records) {
    if (rec.offset == 0) continue;  // the trigger differs by identity, not spillover
    by_signed[rec.offset].push_back(rec.normalized_pct);
    by_abs[std::abs(rec.offset)].push_back(rec.normalized_pct);
  }
  for (const auto& [off, pct] : by_signed)
    prof.signed_offsets[off] = stats_of(pct, prof.baseline);
  for (const auto& [off, pct] : by_abs) prof.pooled[off] = stats_of(pct, prof.baseline);
  return prof;
}

std::vector<PlaceStats> resistance_by_place(const std::vector<PairDistanceRecord>& records,
                                            const AnalysisConfig& cfg) {
  require(!records.empty(), "resistance_by_place: no records");
  std::map<Place, std::vector<double>> groups;
  for (const auto& rec : records) {
    if (std::abs(rec.offset) != 1) continue;
    if (rec.target.kind != PhonemeKind::kConsonant) continue;
    groups[place_of(rec.target)].push_back(rec.normalized_pct);
  }

  const Rng root = Rng(cfg.seed).substream("resistance");
  std::vector<PlaceStats> out;
  for (Place place : all_places()) {
    PlaceStats st;
    st.place = place;
    auto it = groups.find(place);
    if (it != groups.end()) {
      st.n = static_cast<int>(it->second.size());
      st.mean_pct = mean(it->second);
      std::tie(st.ci_lo, st.ci_hi) = bootstrap_ci(it->second, cfg.bootstrap_resamples,
                                                  root.substream(to_string(place)));
    }
    out.push_back(st);
  }
  std::sort(out.begin(), out.end(), [](const PlaceStats& a, const PlaceStats& b) {
    if ((a.n == 0) != (b.n == 0)) return b.n == 0;  // empty groups last
    if (a.mean_pct != b.mean_pct) return a.mean_pct < b.mean_pct;
    return static_cast<int>(a.place) < static_cast<int>(b.place);
  });
  return out;
}

TractVariables tract_variables(const Matrix& positions, const ChannelLayout& layout,
                               bool zscore) {
  require(positions.cols() == layout.position_channels(),
          "tract_variables: {} channels, layout expects {}", positions.cols(),
          layout.position_channels());
  const int t = static_cast<int>(positions.rows());
  const int ulx = layout.pos_x("UL"), uly = layout.pos_y("UL");
  const int llx = layout.pos_x("LL"), lly = layout.pos_y("LL");

  TractVariables tv;
  tv.la.resize(t);
  for (int j = 0; j < t; ++j) {
    const double dx = positions(j, ulx) - positions(j, llx);
    const double dy = positions(j, uly) - positions(j, lly);
    tv.la[j] = std::sqrt(dx * dx + dy * dy);
  }
  tv.lp = positions.col(ulx);
  tv.ttcl = positions.col(layout.pos_x("TT"));
  tv.tbcl = positions.col(layout.pos_x("TB"));

  if (zscore) {
    for (Vector* v : {&tv.la, &tv.lp, &tv.ttcl, &tv.tbcl}) {
      const double m = v->mean();
      const double sd = std::sqrt((v->array() - m).square().sum() / t);
      if (sd < 1e-12)
        v->setZero();
      else
        *v = (v->array() - m) / sd;
    }
  }
  return tv;
}

VcvResult demo_vcv(const ModelParams& model, const PhonemeSequence& seq_a,
                   const PhonemeSequence& seq_b, const std::string& speaker, const Inventory& inv,
                   const ChannelLayout& layout, const SpeakerStats* stats) {
  VcvResult res;
  res.a = generate(model, seq_a, speaker, inv);
  res.b = generate(model, seq_b, speaker, inv);

  auto positions = [&](const GenerationResult& g) -> Matrix {
    if (!stats) return g.ema.values.leftCols(layout.position_channels());
    return denormalize(g.ema, *stats).values.leftCols(layout.position_channels());
  };
  const Matrix pa = positions(res.a);
  const Matrix pb = positions(res.b);
  res.tv_a = tract_variables(pa, layout);
  res.tv_b = tract_variables(pb, layout);

  const int t = static_cast<int>(std::min(pa.rows(), pb.rows()));
  Vector gap(t);
  for (int j = 0; j < t; ++j) gap[j] = (pa.row(j) - pb.row(j)).norm();
  const double peak = t > 0 ? gap.maxCoeff() : 0.0;
  if (peak > 1e-12) {
    for (int j = 0; j < t; ++j)
      if (gap[j] > 0.05 * peak) {
        res.divergence_onset = j;
        break;
      }
  }
  return res;
}

}  // namespace coart
