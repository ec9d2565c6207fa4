// Acceptance gate: twelve pass/fail checks covering the numerical core
// (soft-DTW, gradients, timing kernel), the combinatorics, the planted
// oracle analyses and process-level determinism. One line per
// criterion; the exit status is the number of failures.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "coart/adam.hpp"
#include "coart/alignment.hpp"
#include "coart/analysis.hpp"
#include "coart/dataset.hpp"
#include "coart/lexicon.hpp"
#include "coart/model.hpp"
#include "coart/oracle.hpp"
#include "coart/stats.hpp"
#include "coart/timing.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using namespace coart;
using testutil::central_diff;
using testutil::random_matrix;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// path-enumeration oracles

Matrix cost_matrix(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j) c(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return c;
}

void collect_path_costs(const Matrix& c, int i, int j, double acc, std::vector<double>& out) {
  acc += c(i, j);
  const int ta = static_cast<int>(c.rows()), tb = static_cast<int>(c.cols());
  if (i == ta - 1 && j == tb - 1) {
    out.push_back(acc);
    return;
  }
  if (i + 1 < ta) collect_path_costs(c, i + 1, j, acc, out);
  if (j + 1 < tb) collect_path_costs(c, i, j + 1, acc, out);
  if (i + 1 < ta && j + 1 < tb) collect_path_costs(c, i + 1, j + 1, acc, out);
}

double sdtw_by_enumeration(const Matrix& a, const Matrix& b, double gamma) {
  std::vector<double> costs;
  collect_path_costs(cost_matrix(a, b), 0, 0, 0.0, costs);
  const double m = *std::min_element(costs.begin(), costs.end());
  double sum = 0.0;
  for (double c : costs) sum += std::exp(-(c - m) / gamma);
  return m - gamma * std::log(sum);
}

double dtw_by_enumeration(const Matrix& a, const Matrix& b) {
  std::vector<double> costs;
  collect_path_costs(cost_matrix(a, b), 0, 0, 0.0, costs);
  return *std::min_element(costs.begin(), costs.end());
}

Matrix integer_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = static_cast<double>(rng.uniform_int(-3, 3));
  return m;
}

// ---------------------------------------------------------------------------

Outcome criterion1_sdtw_value() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int ta = 1; ta <= 4; ++ta)
    for (int tb = 1; tb <= 4; ++tb)
      for (double gamma : {0.1, 1.0, 10.0})
        for (int rep = 0; rep < 5; ++rep) {
          const Matrix a = integer_matrix(ta, 2, rng);
          const Matrix b = integer_matrix(tb, 2, rng);
          worst = std::max(worst, std::abs(sdtw(a, b, gamma) - sdtw_by_enumeration(a, b, gamma)));
        }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 30.0,
          fmt::format("max |diff| {:.2e} in {:.2f} s", worst, secs)};
}

Outcome criterion2_sdtw_grad() {
  Rng rng(202);
  const double gammas[] = {0.3, 1.0, 3.0};
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const int ta = static_cast<int>(rng.uniform_int(1, 6));
    const int tb = static_cast<int>(rng.uniform_int(1, 6));
    const double gamma = gammas[inst % 3];
    Matrix a = random_matrix(ta, 2, rng);
    const Matrix b = random_matrix(tb, 2, rng);
    const Matrix an = sdtw_grad(a, b, gamma);
    const auto rep = testutil::fd_compare_matrix(
        a, an, [&] { return sdtw(a, b, gamma); }, 1e-6, 1e-8, 1e-5);
    worst = std::max(worst, rep.max_rel);
  }
  return {worst < 1e-6, fmt::format("max rel err {:.2e}", worst)};
}

Outcome criterion3_hard_dtw() {
  Rng rng(303);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const int ta = static_cast<int>(rng.uniform_int(1, 6));
    const int tb = static_cast<int>(rng.uniform_int(1, 6));
    const Matrix a = random_matrix(ta, 3, rng);
    const Matrix b = random_matrix(tb, 3, rng);
    const auto [cost, path] = dtw_align(a, b);
    const double brute = dtw_by_enumeration(a, b);
    worst = std::max(worst, std::abs(cost - brute));

    // The returned path must realize the optimum.
    if (path.steps.front() != std::make_pair(0, 0)) return {false, "path start"};
    if (path.steps.back() != std::make_pair(ta - 1, tb - 1)) return {false, "path end"};
    const Matrix c = cost_matrix(a, b);
    double along = 0.0;
    for (std::size_t s = 0; s < path.steps.size(); ++s) {
      along += c(path.steps[s].first, path.steps[s].second);
      if (s > 0) {
        const int di = path.steps[s].first - path.steps[s - 1].first;
        const int dj = path.steps[s].second - path.steps[s - 1].second;
        if (di < 0 || dj < 0 || di > 1 || dj > 1 || (di == 0 && dj == 0))
          return {false, "path step"};
      }
    }
    worst = std::max(worst, std::abs(along - cost));
  }
  return {worst <= 1e-9, fmt::format("max |diff| {:.2e}", worst)};
}

Outcome criterion4_gradients() {
  std::string worst_group;
  double worst = 0.0;
  const auto note = [&](const std::string& group, double rel, double bound) {
    if (rel / bound > worst) {
      worst = rel / bound;
      worst_group = fmt::format("{} {:.2e}", group, rel);
    }
    return rel < bound;
  };
  bool ok = true;

  {  // isolated linear layer
    Rng rng(41);
    Linear lin = make_linear(3, 4, rng);
    const Matrix x = random_matrix(5, 4, rng);
    Linear grad = zeros_like(lin);
    const Matrix y = linear_forward(lin, x);
    linear_backward(lin, x, y, grad);
    std::vector<ParamView> pv, gv;
    append_views(lin, "linear", pv);
    append_views(grad, "linear", gv);
    const auto rep = testutil::fd_compare(
        pv, gv, [&] { return 0.5 * linear_forward(lin, x).squaredNorm(); }, 1e-4, 1e-8);
    ok &= note("linear", rep.max_rel, 1e-4);
  }
  {  // every GRU gate of a bidirectional layer
    Rng rng(42);
    BiGruParams gru = make_bigru(3, 4, rng);
    const Matrix x = random_matrix(6, 3, rng);
    const Matrix probe = random_matrix(6, 8, rng);
    const auto loss = [&] {
      return (bigru_forward(gru, x, nullptr).array() * probe.array()).sum();
    };
    BiGruParams grad = zeros_like(gru);
    BiGruCache cache;
    bigru_forward(gru, x, &cache);
    bigru_backward(gru, cache, probe, grad);
    std::vector<ParamView> pv, gv;
    append_views(gru.fwd, "fwd", pv);
    append_views(gru.bwd, "bwd", pv);
    append_views(grad.fwd, "fwd", gv);
    append_views(grad.bwd, "bwd", gv);
    for (std::size_t v = 0; v < pv.size(); ++v) {
      const auto rep = testutil::fd_compare({pv[v]}, {gv[v]}, loss, 1e-4, 1e-8);
      ok &= note("gru gate " + pv[v].name, rep.max_rel, 1e-4);
    }
  }
  {  // embedding reached through the Gaussian influence mixture
    Rng rng(43);
    Matrix embed = random_matrix(6, 4, rng);
    TimingParams tp;
    tp.mu = Vector(3);
    tp.mu << 1.2, 3.9, 6.4;
    tp.sigma = Vector(3);
    tp.sigma << 0.8, 1.1, 0.9;
    tp.durations = Vector(3);
    tp.durations << 2.4, 3.0, 2.0;
    const Matrix onehot = [&] {
      Matrix s = Matrix::Zero(3, 6);
      s(0, 2) = s(1, 0) = s(2, 5) = 1.0;
      return s;
    }();
    const Matrix mix = gaussian_expand(tp, 8).values * onehot;  // 8 x 6
    const Matrix probe = random_matrix(8, 4, rng);
    const Matrix grad = mix.transpose() * probe;
    std::vector<ParamView> pv{{"embedding", embed.data(), 24}};
    std::vector<ParamView> gv{{"embedding", const_cast<double*>(grad.data()), 24}};
    const auto rep = testutil::fd_compare(
        pv, gv, [&] { return ((mix * embed).array() * probe.array()).sum(); }, 1e-4, 1e-8);
    ok &= note("embedding", rep.max_rel, 1e-4);
  }
  {  // speaker head (per-speaker affine output transform)
    Rng rng(44);
    Linear head = make_linear(4, 4, rng);
    const Matrix h = random_matrix(7, 4, rng);
    const Matrix target = random_matrix(7, 4, rng);
    Linear grad = zeros_like(head);
    const Matrix y = linear_forward(head, h);
    linear_backward(head, h, y - target, grad);
    std::vector<ParamView> pv, gv;
    append_views(head, "speaker", pv);
    append_views(grad, "speaker", gv);
    const auto rep = testutil::fd_compare(
        pv, gv, [&] { return 0.5 * (linear_forward(head, h) - target).squaredNorm(); }, 1e-4,
        1e-8);
    ok &= note("speaker head", rep.max_rel, 1e-4);
  }
  {  // timing head chained through timing_from_raw and the expansion
    Rng rng(45);
    Linear head = make_linear(2, 6, rng);
    const Matrix feats = random_matrix(3, 6, rng);
    const Matrix probe = random_matrix(12, 3, rng);
    const auto loss = [&] {
      const TimingParams tp = timing_from_raw(linear_forward(head, feats));
      const InfluenceMatrix m = gaussian_expand(tp, 12);
      return (m.values.array() * probe.array()).sum() + 0.3 * tp.sum_durations * tp.sum_durations;
    };
    const Matrix raw = linear_forward(head, feats);
    const TimingParams tp = timing_from_raw(raw);
    const InfluenceMatrix m = gaussian_expand(tp, 12);
    Vector dmu = Vector::Zero(3), dsigma = Vector::Zero(3);
    gaussian_expand_backward(tp, m, probe, dmu, dsigma);
    Matrix draw = Matrix::Zero(3, 2);
    timing_from_raw_backward(raw, tp, dmu, dsigma, 0.6 * tp.sum_durations, draw);
    Linear grad = zeros_like(head);
    linear_backward(head, feats, draw, grad);
    std::vector<ParamView> pv, gv;
    append_views(head, "timing_head", pv);
    append_views(grad, "timing_head", gv);
    const auto rep = testutil::fd_compare(pv, gv, loss, 1e-4, 1e-8);
    ok &= note("timing head", rep.max_rel, 1e-4);
  }
  {  // full tiny model end to end
    Rng rng(23);
    ModelConfig cfg;
    cfg.embed = 4;
    cfg.hidden = 3;
    cfg.layers = 2;
    cfg.channels = 3;
    ModelParams p = init_model(cfg, {"s0"}, 29);
    Utterance u;
    u.id = "u0";
    u.speaker = "s0";
    u.phonemes = parse_sequence("P AE T", Inventory::arpabet());
    u.ema.values = random_matrix(10, 3, rng);
    u.ema.normalized = true;
    u.ema.has_velocities = true;

    ModelParams grad = zeros_like(p);
    utterance_loss_grad(p, u, 1.0, 0.01, Inventory::arpabet(), &grad);
    auto pviews = param_views(p);
    auto gviews = param_views(grad);
    const auto rep = testutil::fd_compare(
        pviews, gviews,
        [&] { return utterance_loss_grad(p, u, 1.0, 0.01, Inventory::arpabet(), nullptr); },
        1e-3, 1e-6, 1e-5, 7);
    ok &= note("end-to-end", rep.max_rel, 1e-3) && rep.checked > 200;
  }
  return {ok, "worst: " + worst_group};
}

Outcome criterion5_kernel() {
  TimingParams tp;
  tp.mu = Vector(2);
  tp.mu << 2.0, 7.0;
  tp.sigma = Vector(2);
  tp.sigma << 1.0, 2.0;
  tp.durations = Vector(2);
  tp.durations << 4.0, 6.0;
  tp.sum_durations = 10.0;
  tp.total_frames = 10;
  const Matrix m = gaussian_expand(tp, 10).values;
  const double e = std::exp(-0.5);
  double worst = std::abs(m(2, 0) - 1.0);
  worst = std::max(worst, std::abs(m(7, 1) - 1.0));
  for (double d : {std::abs(m(1, 0) - e), std::abs(m(3, 0) - e), std::abs(m(5, 1) - e),
                   std::abs(m(9, 1) - e)})
    worst = std::max(worst, d);
  return {worst <= 1e-12, fmt::format("max |diff| {:.2e}", worst)};
}

Outcome criterion6_norm_scaling() {
  Vector params = Vector::Zero(4);
  Vector grads = Vector::Constant(4, 10.0);  // global L2 norm exactly 20
  std::vector<ParamView> pv{{"p", params.data(), 4}};
  std::vector<ParamView> gv{{"g", grads.data(), 4}};
  AdamConfig cfg;
  cfg.clip_norm = 10.0;
  Adam adam(cfg);
  const double before = adam.step(pv, gv);
  const double after = global_norm(gv);
  return {std::abs(before - 20.0) < 1e-12 && std::abs(after - 10.0) <= 1e-9,
          fmt::format("norm {} -> {}", before, after)};
}

Lexicon random_lexicon(Rng& rng, int n_words) {
  const Inventory& inv = Inventory::arpabet();
  const std::vector<std::string> pool = {"P", "B", "T", "AA", "IY"};
  Lexicon lex;
  int rank = 1;
  while (static_cast<int>(lex.entries.size()) < n_words) {
    PhonemeSequence seq;
    const int len = static_cast<int>(rng.uniform_int(2, 4));
    for (int k = 0; k < len; ++k)
      seq.tokens.push_back(inv.phoneme(pool[static_cast<std::size_t>(rng.uniform_int(0, 4))]));
    const std::string word = fmt::format("w{:03}", rank);
    seq.source_word = word;
    lex.entries[word] = seq;
    lex.rank[word] = rank++;
  }
  return lex;
}

std::vector<MinimalPair> brute_force_pairs(const Lexicon& lex) {
  std::vector<std::pair<std::string, PhonemeSequence>> kept;
  for (const auto& [word, seq] : lex.entries) {
    bool best = true;
    for (const auto& [other, oseq] : lex.entries)
      if (other != word && oseq == seq && lex.rank.at(other) < lex.rank.at(word)) best = false;
    if (best) kept.emplace_back(word, seq);
  }
  std::vector<MinimalPair> pairs;
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (std::size_t j = i + 1; j < kept.size(); ++j) {
      const auto& [wa, sa] = kept[i];
      const auto& [wb, sb] = kept[j];
      if (sa.size() != sb.size()) continue;
      int diff = 0, pos = -1;
      for (int k = 0; k < sa.size(); ++k)
        if (!(sa.tokens[static_cast<std::size_t>(k)] == sb.tokens[static_cast<std::size_t>(k)])) {
          ++diff;
          pos = k;
        }
      if (diff != 1) continue;
      MinimalPair mp;
      mp.word_a = std::min(wa, wb);
      mp.word_b = std::max(wa, wb);
      mp.seq_a = mp.word_a == wa ? sa : sb;
      mp.seq_b = mp.word_a == wa ? sb : sa;
      mp.trigger_pos = pos;
      pairs.push_back(std::move(mp));
    }
  std::sort(pairs.begin(), pairs.end(), [](const MinimalPair& a, const MinimalPair& b) {
    return std::tie(a.word_a, a.word_b, a.trigger_pos) <
           std::tie(b.word_a, b.word_b, b.trigger_pos);
  });
  return pairs;
}

Outcome criterion7_pairs() {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const Lexicon lex = random_lexicon(rng, 50);
    const auto fast = enumerate_minimal_pairs(lex);
    const auto brute = brute_force_pairs(lex);
    if (fast.size() != brute.size())
      return {false, fmt::format("seed {}: {} vs {} pairs", seed, fast.size(), brute.size())};
    for (std::size_t i = 0; i < fast.size(); ++i)
      if (!(fast[i] == brute[i])) return {false, fmt::format("seed {}: pair {} differs", seed, i)};
  }

  const Lexicon snapshot = parse_lexicon_files(std::string(COART_DATA_DIR) + "/cmudict.dict",
                                               std::string(COART_DATA_DIR) + "/wordlist.txt",
                                               10000, Inventory::arpabet());
  const auto run1 = enumerate_minimal_pairs(snapshot);
  const auto run2 = enumerate_minimal_pairs(snapshot);
  if (run1.size() != run2.size()) return {false, "snapshot reruns disagree"};
  for (std::size_t i = 0; i < run1.size(); ++i)
    if (!(run1[i] == run2[i])) return {false, "snapshot reruns disagree"};
  const long count = static_cast<long>(run1.size());
  return {std::labs(count - 9291) <= 464,
          fmt::format("100 seeds exact; snapshot {} pairs (target 9291 +/- 464)", count)};
}

Outcome criterion8_training() {
  const Inventory& inv = Inventory::arpabet();
  OracleConfig ocfg;  // defaults: 8 speakers x 25 utterances
  const OracleDataset ods = synth_oracle(ocfg, inv);
  Dataset ds;
  ds.layout = ods.oracle.layout;
  ds.utterances = ods.utterances;
  const PreparedDataset prep = prepare_dataset(ds, 0.9, 0);

  ModelConfig mcfg;
  mcfg.inventory = inv.size();
  mcfg.embed = 32;
  mcfg.hidden = 32;
  mcfg.layers = 2;
  mcfg.channels = prep.layout.total_channels();
  std::vector<std::string> speakers;
  for (const auto& kv : prep.stats) speakers.push_back(kv.first);
  ModelParams model = init_model(mcfg, speakers, 0);

  TrainConfig tcfg;
  tcfg.learning_rate = 2e-3;
  tcfg.batch_size = 16;
  tcfg.epochs = 150;
  tcfg.seed = 0;
  tcfg.length_penalty_weight = 0.05;

  const auto t0 = Clock::now();
  train(model, prep, tcfg, inv);
  const double secs = seconds_since(t0);

  const int s_pos = prep.layout.position_channels();
  std::vector<double> pccs;
  for (const Utterance* utt : prep.validation()) {
    const GenerationResult g = generate(model, utt->phonemes, utt->speaker, inv);
    const FitMetrics m =
        fit_metrics(g.ema.values.leftCols(s_pos), utt->ema.values.leftCols(s_pos));
    pccs.push_back(m.pcc);
  }
  const double pcc = mean(pccs);
  return {pcc >= 0.80 && secs <= 900.0,
          fmt::format("held-out PCC {:.3f} over {} utterances, trained in {:.0f} s", pcc,
                      pccs.size(), secs)};
}

// Shared construction for the planted-oracle analyses.
const char* kVowels[] = {"AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
                         "EY", "IH", "IY", "OW", "OY", "UH", "UW"};

MinimalPair make_pair(const PhonemeSequence& a, const PhonemeSequence& b, int pos, int id) {
  MinimalPair mp;
  mp.word_a = fmt::format("wa{}", id);
  mp.word_b = fmt::format("wb{}", id);
  mp.seq_a = a;
  mp.seq_b = b;
  mp.trigger_pos = pos;
  return mp;
}

Outcome criterion9_extent_decay() {
  const Inventory& inv = Inventory::arpabet();
  OracleConfig ocfg;  // half-life 1 position
  const Oracle oracle = make_oracle(ocfg, inv);
  OracleWordGenerator gen(oracle);

  Rng rng(321);
  std::vector<std::string> words;
  std::vector<MinimalPair> pairs;
  for (int i = 0; i < 40; ++i) {
    PhonemeSequence seq;
    for (int k = 0; k < 9; ++k)
      seq.tokens.push_back(inv.at(static_cast<int>(rng.uniform_int(0, inv.size() - 2))));
    words.push_back(seq.str());
    PhonemeSequence other = seq;
    while (other.tokens[4] == seq.tokens[4])
      other.tokens[4] = inv.at(static_cast<int>(rng.uniform_int(0, inv.size() - 2)));
    pairs.push_back(make_pair(seq, other, 4, i));
  }
  Lexicon lex;
  int rank = 1;
  for (const auto& w : words) {
    PhonemeSequence seq = parse_sequence(w, inv);
    const std::string name = fmt::format("w{}", rank);
    seq.source_word = name;
    lex.entries[name] = seq;
    lex.rank[name] = rank++;
  }

  AnalysisConfig cfg;
  cfg.max_offset = 4;
  cfg.baseline_samples = 300;
  cfg.seed = 9;
  const ExtentProfile prof = extent_profile(gen, pairs, lex, cfg);
  const double m1 = prof.pooled.at(1).mean_pct;
  const double m2 = prof.pooled.at(2).mean_pct;
  const double m3 = prof.pooled.at(3).mean_pct;
  const double m4 = prof.pooled.at(4).mean_pct;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double ys[] = {std::log(m1), std::log(m2), std::log(m3), std::log(m4)};
  for (int k = 0; k < 4; ++k) {
    const double x = k + 1.0;
    sx += x;
    sy += ys[k];
    sxx += x * x;
    sxy += x * ys[k];
  }
  const double slope = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
  const bool ratio_ok = m1 / m2 >= 2.0;
  const bool monotone = m1 > m2 && m2 > m3 && m3 > m4 && m4 > 0;
  const bool slope_ok = std::abs(slope - std::log(0.5)) < 0.25 * std::log(2.0);
  return {ratio_ok && monotone && slope_ok,
          fmt::format("means {:.1f}/{:.1f}/{:.1f}/{:.1f}%, slope {:.3f} (target {:.3f})", m1, m2,
                      m3, m4, slope, std::log(0.5))};
}

Outcome criterion10_null_calibration() {
  const Inventory& inv = Inventory::arpabet();
  OracleConfig ocfg;
  const Oracle oracle = make_oracle(ocfg, inv);
  OracleWordGenerator gen(oracle);

  Rng lexrng(555);
  Lexicon lex;
  int rank = 1;
  while (static_cast<int>(lex.entries.size()) < 30) {
    PhonemeSequence seq;
    for (int k = 0; k < 9; ++k)
      seq.tokens.push_back(inv.at(static_cast<int>(lexrng.uniform_int(0, inv.size() - 2))));
    const std::string name = fmt::format("w{}", rank);
    seq.source_word = name;
    lex.entries[name] = seq;
    lex.rank[name] = rank++;
  }
  AnalysisConfig cfg;
  cfg.max_offset = 4;
  cfg.baseline_samples = 200;
  cfg.seed = 17;
  const double d_avg = mean_interphoneme_distance(gen, lex, cfg);
  const std::vector<double> pool = baseline_distances(gen, lex, cfg, d_avg);

  Rng root(2024);
  int hits = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Rng r = root.substream(fmt::format("null:{}", trial));
    std::vector<double> a, b;
    for (int k = 0; k < 30; ++k) {
      a.push_back(pool[static_cast<std::size_t>(r.uniform_int(0, static_cast<long long>(pool.size()) - 1))]);
      b.push_back(pool[static_cast<std::size_t>(r.uniform_int(0, static_cast<long long>(pool.size()) - 1))]);
    }
    if (mann_whitney_greater(a, b).p < 0.05) ++hits;
  }
  return {hits >= 2 && hits <= 20, fmt::format("{} of 200 trials below 0.05", hits)};
}

Outcome criterion11_resistance() {
  const Inventory& inv = Inventory::arpabet();
  OracleConfig ocfg;
  ocfg.resistance[Place::kVelar] = 0.55;
  ocfg.resistance[Place::kPostalveolar] = 0.8;
  ocfg.resistance[Place::kAlveolar] = 1.0;
  ocfg.resistance[Place::kLabiodental] = 1.25;
  ocfg.resistance[Place::kBilabial] = 1.6;
  const Oracle oracle = make_oracle(ocfg, inv);
  OracleWordGenerator gen(oracle);

  const std::vector<std::pair<Place, std::string>> probes = {
      {Place::kVelar, "G"},
      {Place::kPostalveolar, "SH"},
      {Place::kAlveolar, "D"},
      {Place::kLabiodental, "F"},
      {Place::kBilabial, "B"},
  };
  Rng rng(77);
  std::vector<MinimalPair> pairs;
  int id = 0;
  for (int i = 0; i < 40; ++i) {
    std::vector<std::string> carrier;
    for (int k = 0; k < 7; ++k) carrier.push_back(kVowels[rng.uniform_int(0, 14)]);
    std::string va = kVowels[rng.uniform_int(0, 14)], vb = kVowels[rng.uniform_int(0, 14)];
    while (vb == va) vb = kVowels[rng.uniform_int(0, 14)];
    for (const auto& [place, probe] : probes) {
      std::vector<std::string> ta = carrier, tb = carrier;
      ta[3] = tb[3] = probe;
      ta[4] = va;
      tb[4] = vb;
      std::string sa, sb;
      for (int k = 0; k < 7; ++k) {
        sa += (k ? " " : "") + ta[static_cast<std::size_t>(k)];
        sb += (k ? " " : "") + tb[static_cast<std::size_t>(k)];
      }
      pairs.push_back(make_pair(parse_sequence(sa, inv), parse_sequence(sb, inv), 4, id++));
    }
  }

  AnalysisConfig cfg;
  cfg.max_offset = 2;
  cfg.seed = 4;
  const auto records = pair_records(gen, pairs, cfg, 1.0);
  const auto table = resistance_by_place(records, cfg);

  std::vector<Place> got;
  for (const auto& st : table)
    if (st.n > 0) got.push_back(st.place);
  const std::vector<Place> want = {Place::kVelar, Place::kPostalveolar, Place::kAlveolar,
                                   Place::kLabiodental, Place::kBilabial};
  const PlaceStats* hi = nullptr;
  for (const auto& st : table)
    if (st.n > 0) hi = &st;
  const bool order_ok = got == want;
  const bool ci_ok = hi != nullptr && table[0].ci_hi < hi->ci_lo;
  return {order_ok && ci_ok,
          fmt::format("planted order {}; extreme CIs [{:.1f}, {:.1f}] vs [{:.1f}, {:.1f}]",
                      order_ok ? "recovered" : "NOT recovered", table[0].ci_lo, table[0].ci_hi,
                      hi ? hi->ci_lo : 0.0, hi ? hi->ci_hi : 0.0)};
}

// ---------------------------------------------------------------------------
// criterion 12: determinism at the process level, through the binary

int run_cmd(const std::string& args) {
  const std::string cmd = std::string(COART_BIN) + " " + args + " >/dev/null 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<std::string> ra, rb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) ra.push_back(fs::relative(e.path(), a).string());
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rb.push_back(fs::relative(e.path(), b).string());
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  if (ra != rb) return false;
  for (const auto& rel : ra)
    if (slurp(a / rel) != slurp(b / rel)) return false;
  return true;
}

Outcome criterion12_determinism() {
  const fs::path base = fs::temp_directory_path() / fmt::format("coart_accept_{}", ::getpid());
  fs::remove_all(base);
  fs::create_directories(base);
  const auto at = [&](const std::string& name) { return (base / name).string(); };
  const std::string data = COART_TEST_DATA_DIR;

  Outcome out{false, ""};
  do {
    if (run_cmd("oracle --out " + at("ds") +
                " --speakers 2 --utterances 4 --min-len 4 --max-len 6 --seed 5") != 0) {
      out.detail = "oracle failed";
      break;
    }
    const std::string prep_args = " --manifest " + at("ds") + "/manifest.csv --seed 7";
    if (run_cmd("prepare --out " + at("c1") + prep_args) != 0 ||
        run_cmd("prepare --out " + at("c2") + prep_args) != 0) {
      out.detail = "prepare failed";
      break;
    }
    if (!same_tree(at("c1"), at("c2"))) {
      out.detail = "prepare reruns differ";
      break;
    }
    const std::string train_args = " --cache " + at("c1") +
                                   " --epochs 2 --hidden 6 --embed 6 --layers 1 --batch-size 4 "
                                   "--seed 3";
    if (run_cmd("train --out " + at("t1") + train_args) != 0 ||
        run_cmd("train --out " + at("t2") + train_args) != 0) {
      out.detail = "train failed";
      break;
    }
    if (!same_tree(at("t1"), at("t2"))) {
      out.detail = "train reruns differ";
      break;
    }
    if (run_cmd("pairs --dict " + data + "/fixture_dict.txt --wordlist " + data +
                "/fixture_words.txt --top-n 100 --out " + at("pr")) != 0) {
      out.detail = "pairs failed";
      break;
    }
    const std::string extent_args = " --pairs " + at("pr") + "/pairs.tsv --dict " + at("pr") +
                                    "/lexicon.txt --wordlist " + at("pr") +
                                    "/wordlist.txt --oracle --max-offset 3 --baseline-samples 80 "
                                    "--resamples 400 --seed 13";
    if (run_cmd("extent --out " + at("e1") + extent_args) != 0 ||
        run_cmd("extent --out " + at("e2") + extent_args) != 0) {
      out.detail = "extent failed";
      break;
    }
    if (!same_tree(at("e1"), at("e2"))) {
      out.detail = "extent reruns differ";
      break;
    }
    out = {true, "prepare, train and extent reruns byte-identical"};
  } while (false);

  fs::remove_all(base);
  return out;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* title;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> entries = {
      {1, "soft-DTW equals the path-enumeration soft-min", criterion1_sdtw_value},
      {2, "soft-DTW gradient matches central differences", criterion2_sdtw_grad},
      {3, "hard DTW equals brute force over all monotone paths", criterion3_hard_dtw},
      {4, "every parameter group passes finite-difference checks", criterion4_gradients},
      {5, "Gaussian kernel peaks at 1 with exp(-1/2) shoulders", criterion5_kernel},
      {6, "gradient norm 20 is scaled to 10 before the update", criterion6_norm_scaling},
      {7, "minimal-pair enumeration is exact and snapshot-stable", criterion7_pairs},
      {8, "oracle training reaches held-out PCC >= 0.80", criterion8_training},
      {9, "planted exponential decay shows in the extent profile", criterion9_extent_decay},
      {10, "baseline-vs-baseline significance is calibrated", criterion10_null_calibration},
      {11, "planted resistance ordering is recovered with separated CIs", criterion11_resistance},
      {12, "prepare/train/extent pipelines rerun byte-identically", criterion12_determinism},
  };

  int failures = 0;
  for (const auto& e : entries) {
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    fmt::print("[{}] criterion {}: {}{}\n", o.pass ? "PASS" : "FAIL", e.id, e.title,
               o.detail.empty() ? "" : " (" + o.detail + ")");
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures;
}
