#include "coart/oracle.hpp"

#include <cmath>

#include "coart/common.hpp"

namespace coart {

Oracle make_oracle(const OracleConfig& cfg, const Inventory& inv) {
  require(cfg.speakers >= 1 && cfg.utterances_per_speaker >= 1, "oracle: counts must be >= 1");
  require(cfg.frames_per_phoneme >= 1 && cfg.frames_per_phoneme % 2 == 1,
          "oracle: frames_per_phoneme must be odd, got {}", cfg.frames_per_phoneme);
  require(cfg.half_life > 0.0, "oracle: half-life must be positive");
  require(cfg.min_len >= 1 && cfg.max_len >= cfg.min_len, "oracle: bad word length range");
  Oracle oracle;
  oracle.config = cfg;
  oracle.layout = ChannelLayout::standard();
  oracle.inventory = &inv;
  Rng rng = Rng(cfg.seed).substream("targets");
  oracle.targets.resize(inv.size(), oracle.layout.position_channels());
  for (Eigen::Index i = 0; i < oracle.targets.rows(); ++i)
    for (Eigen::Index j = 0; j < oracle.targets.cols(); ++j) oracle.targets(i, j) = rng.normal();
  return oracle;
}

Matrix oracle_positions(const Oracle& oracle, const PhonemeSequence& seq) {
  const auto& cfg = oracle.config;
  const int n = seq.size();
  const int f = cfg.frames_per_phoneme;
  const int t = n * f;
  const double lambda = std::log(2.0) / cfg.half_life;

  std::vector<int> target_row(static_cast<std::size_t>(n));
  std::vector<double> owner_damp(static_cast<std::size_t>(n), 1.0);
  for (int i = 0; i < n; ++i) {
    const Phoneme& p = seq.tokens[static_cast<std::size_t>(i)];
    target_row[static_cast<std::size_t>(i)] = oracle.inventory->index_of(p.symbol);
    if (p.kind == PhonemeKind::kConsonant) {
      auto it = cfg.resistance.find(place_of(p));
      if (it != cfg.resistance.end()) owner_damp[static_cast<std::size_t>(i)] = it->second;
    }
  }

  Matrix out = Matrix::Zero(t, oracle.layout.position_channels());
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int j = 0; j < t; ++j) {
    const int owner = j / f;
    const double pos = (j - (f - 1) / 2.0) / f;  // position units; pos(mu_i) = i
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
      double wk = std::exp(-lambda * std::abs(pos - k));
      if (std::abs(owner - k) == 1) wk *= 1.0 + cfg.adjacent_boost;
      if (k != owner) wk *= owner_damp[static_cast<std::size_t>(owner)];
      w[static_cast<std::size_t>(k)] = wk;
      total += wk;
    }
    for (int k = 0; k < n; ++k)
      out.row(j) += (w[static_cast<std::size_t>(k)] / total) *
                    oracle.targets.row(target_row[static_cast<std::size_t>(k)]);
  }
  return out;
}

Vector oracle_mu(const Oracle& oracle, int n) {
  const int f = oracle.config.frames_per_phoneme;
  Vector mu(n);
  for (int i = 0; i < n; ++i) mu[i] = i * f + (f - 1) / 2.0;
  return mu;
}

std::vector<AlignSpan> oracle_alignment(const Oracle& oracle, int n) {
  const int f = oracle.config.frames_per_phoneme;
  std::vector<AlignSpan> spans(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) spans[static_cast<std::size_t>(i)] = {i * f, (i + 1) * f};
  return spans;
}

OracleDataset synth_oracle(const OracleConfig& cfg, const Inventory& inv) {
  OracleDataset ds;
  ds.oracle = make_oracle(cfg, inv);
  const Rng root(cfg.seed);
  const int s_pos = ds.oracle.layout.position_channels();

  for (int spk = 0; spk < cfg.speakers; ++spk) {
    const std::string speaker = fmt::format("spk{}", spk);
    Rng srng = root.substream("speaker:" + speaker);
    SpeakerTransform tr;
    tr.A = Matrix::Identity(s_pos, s_pos);
    for (Eigen::Index r = 0; r < s_pos; ++r)
      for (Eigen::Index c = 0; c < s_pos; ++c) tr.A(r, c) += 0.05 * srng.normal();
    tr.b.resize(s_pos);
    for (Eigen::Index r = 0; r < s_pos; ++r) tr.b[r] = 0.1 * srng.normal();
    ds.transforms.emplace(speaker, tr);

    for (int u = 0; u < cfg.utterances_per_speaker; ++u) {
      const std::string id = fmt::format("{}_utt{:03}", speaker, u);
      Rng urng = root.substream("utt:" + id);
      const int len = static_cast<int>(urng.uniform_int(cfg.min_len, cfg.max_len));
      PhonemeSequence seq;
      for (int i = 0; i < len; ++i) {
        // Speech phonemes only; SIL is the last inventory entry.
        const auto idx = urng.uniform_int(0, inv.size() - 2);
        seq.tokens.push_back(inv.at(static_cast<int>(idx)));
      }

      Matrix pos = oracle_positions(ds.oracle, seq);
      pos = (pos * tr.A.transpose()).rowwise() + tr.b.transpose();
      if (cfg.noise > 0.0) {
        Rng nrng = root.substream("noise:" + id);
        for (Eigen::Index r = 0; r < pos.rows(); ++r)
          for (Eigen::Index c = 0; c < pos.cols(); ++c) pos(r, c) += cfg.noise * nrng.normal();
      }

      Utterance utt;
      utt.id = id;
      utt.speaker = speaker;
      utt.phonemes = std::move(seq);
      utt.ema.values = std::move(pos);
      utt.ema.rate = cfg.rate;
      utt.alignment = oracle_alignment(ds.oracle, len);
      validate(utt);
      ds.utterances.push_back(std::move(utt));
    }
  }
  return ds;
}

}  // namespace coart
