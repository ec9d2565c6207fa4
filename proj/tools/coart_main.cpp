// coart: reproducible batch front end for the coarticulation toolkit.
// Every command resolves its settings from defaults, then an optional
// key-value config file, then command-line flags; writes all outputs
// into a staged directory that is swapped into --out only on success;
// and echoes the resolved configuration for provenance.

#include <CLI11.hpp>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "coart/alignment.hpp"
#include "coart/analysis.hpp"
#include "coart/common.hpp"
#include "coart/csv.hpp"
#include "coart/dataset.hpp"
#include "coart/kvconfig.hpp"
#include "coart/lexicon.hpp"
#include "coart/model.hpp"
#include "coart/oracle.hpp"

namespace fs = std::filesystem;

namespace coart {
namespace {

/// Collects a command's outputs in a hidden sibling of --out, then
/// replaces --out wholesale. A failed run leaves no partial outputs.
class StagedDir {
 public:
  explicit StagedDir(std::string out) : out_(std::move(out)) {
    require(!out_.empty(), "--out must not be empty");
    stage_ = out_;
    stage_ += fmt::format(".stage-{}", ::getpid());
    std::error_code ec;
    fs::remove_all(stage_, ec);
    if (out_.has_parent_path()) fs::create_directories(out_.parent_path());
    fs::create_directories(stage_);
  }

  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(stage_, ec);
    }
  }

  const fs::path& dir() const { return stage_; }
  std::string file(const std::string& name) const { return (stage_ / name).string(); }

  void commit() {
    fs::remove_all(out_);
    fs::rename(stage_, out_);
    committed_ = true;
  }

 private:
  fs::path out_, stage_;
  bool committed_ = false;
};

// Resolution order: built-in default < config file < command line.
double opt_d(const CLI::Option* o, double cli, const KvConfig& f, const char* key, double dflt) {
  if (o->count() > 0) return cli;
  return f.get_double(key, dflt);
}

int opt_i(const CLI::Option* o, int cli, const KvConfig& f, const char* key, int dflt) {
  if (o->count() > 0) return cli;
  return f.get_int(key, dflt);
}

std::uint64_t opt_seed(const CLI::Option* o, std::uint64_t cli, const KvConfig& f, const char* key,
                       std::uint64_t dflt) {
  if (o->count() > 0) return cli;
  if (!f.has(key)) return dflt;
  try {
    return std::stoull(f.get(key));
  } catch (const std::exception&) {
    fail("config key '{}' is not an unsigned integer: '{}'", key, f.get(key));
  }
}

std::string opt_s(const CLI::Option* o, std::string cli, const KvConfig& f, const char* key,
                  std::string dflt) {
  if (o->count() > 0) return cli;
  return f.get(key, std::move(dflt));
}

KvConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return KvConfig::parse_file(path);
}

void echo_config(const KvConfig& echo, const StagedDir& stage) {
  echo.write_file(stage.file("run_config.txt"));
  echo.write(std::cout);
}

void set_seed(KvConfig& echo, const char* key, std::uint64_t seed) {
  echo.set(key, fmt::format("{}", seed));
}

std::map<Place, double> parse_resistance(const std::string& text) {
  std::map<Place, double> out;
  if (text.empty()) return out;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    require(eq != std::string::npos, "bad resistance entry '{}'; expected place=factor", item);
    const std::string name = item.substr(0, eq);
    bool found = false;
    for (Place p : all_places())
      if (name == to_string(p)) {
        out[p] = parse_double(item.substr(eq + 1), "resistance factor");
        found = true;
      }
    if (!found) {
      std::string known;
      for (Place p : all_places()) known += std::string(known.empty() ? "" : ", ") + to_string(p);
      fail("unknown place '{}'; expected one of: {}", name, known);
    }
  }
  return out;
}

std::string format_resistance(const std::map<Place, double>& r) {
  std::string out;
  for (const auto& [place, factor] : r)
    out += fmt::format("{}{}={}", out.empty() ? "" : ",", to_string(place),
                       format_number(factor));
  return out;
}

// ---------------------------------------------------------------------------
// oracle: synthesize the closed-form corpus as a plain on-disk dataset.

struct OracleOpts {
  std::string config, out, resistance;
  int speakers = 8, utterances = 25, min_len = 4, max_len = 12, frames = 9;
  double half_life = 1.0, boost = 0.3, noise = 0.0, rate = 100.0;
  std::uint64_t seed = 1;
  const CLI::Option *o_speakers = nullptr, *o_utts = nullptr, *o_min = nullptr, *o_max = nullptr,
                    *o_frames = nullptr, *o_half = nullptr, *o_boost = nullptr,
                    *o_noise = nullptr, *o_rate = nullptr, *o_seed = nullptr, *o_res = nullptr;
};

int run_oracle(const OracleOpts& o) {
  const KvConfig file = load_config(o.config);
  OracleConfig cfg;
  cfg.speakers = opt_i(o.o_speakers, o.speakers, file, "speakers", 8);
  cfg.utterances_per_speaker = opt_i(o.o_utts, o.utterances, file, "utterances_per_speaker", 25);
  cfg.min_len = opt_i(o.o_min, o.min_len, file, "min_len", 4);
  cfg.max_len = opt_i(o.o_max, o.max_len, file, "max_len", 12);
  cfg.frames_per_phoneme = opt_i(o.o_frames, o.frames, file, "frames_per_phoneme", 9);
  cfg.half_life = opt_d(o.o_half, o.half_life, file, "half_life", 1.0);
  cfg.adjacent_boost = opt_d(o.o_boost, o.boost, file, "adjacent_boost", 0.3);
  cfg.noise = opt_d(o.o_noise, o.noise, file, "noise", 0.0);
  cfg.rate = opt_d(o.o_rate, o.rate, file, "rate", 100.0);
  cfg.seed = opt_seed(o.o_seed, o.seed, file, "seed", 1);
  cfg.resistance =
      parse_resistance(opt_s(o.o_res, o.resistance, file, "resistance", ""));

  const OracleDataset ds = synth_oracle(cfg, Inventory::arpabet());

  StagedDir stage(o.out);
  write_dataset(stage.dir().string(), ds.utterances, ds.oracle.layout);

  KvConfig echo;
  echo.set("command", "oracle");
  echo.set_int("speakers", cfg.speakers);
  echo.set_int("utterances_per_speaker", cfg.utterances_per_speaker);
  echo.set_int("min_len", cfg.min_len);
  echo.set_int("max_len", cfg.max_len);
  echo.set_int("frames_per_phoneme", cfg.frames_per_phoneme);
  echo.set_double("half_life", cfg.half_life);
  echo.set_double("adjacent_boost", cfg.adjacent_boost);
  echo.set_double("noise", cfg.noise);
  echo.set_double("rate", cfg.rate);
  set_seed(echo, "seed", cfg.seed);
  echo.set("resistance", format_resistance(cfg.resistance));
  echo_config(echo, stage);

  stage.commit();
  fmt::print("oracle: {} utterances across {} speakers -> {}\n", ds.utterances.size(),
             cfg.speakers, o.out);
  return 0;
}

// ---------------------------------------------------------------------------
// prepare: velocities + per-speaker stats + split + normalized cache.

struct PrepareOpts {
  std::string config, manifest, out;
  double split_fraction = 0.9;
  std::uint64_t seed = 0;
  const CLI::Option *o_frac = nullptr, *o_seed = nullptr;
};

int run_prepare(const PrepareOpts& o) {
  const KvConfig file = load_config(o.config);
  const double fraction = opt_d(o.o_frac, o.split_fraction, file, "split_fraction", 0.9);
  const std::uint64_t seed = opt_seed(o.o_seed, o.seed, file, "seed", 0);

  const Dataset ds = load_dataset(o.manifest, Inventory::arpabet());
  const PreparedDataset prep = prepare_dataset(ds, fraction, seed);

  StagedDir stage(o.out);
  write_prepared(stage.dir().string(), prep);

  KvConfig echo;
  echo.set("command", "prepare");
  echo.set("manifest", o.manifest);
  echo.set_double("split_fraction", fraction);
  set_seed(echo, "seed", seed);
  echo_config(echo, stage);

  stage.commit();
  fmt::print("prepare: {} utterances ({} train, {} validation) -> {}\n", prep.utterances.size(),
             prep.split.train.size(), prep.split.validation.size(), o.out);
  return 0;
}

// ---------------------------------------------------------------------------
// train: fit the model on a prepared cache.

struct TrainOpts {
  std::string config, cache, out;
  double lr = 4e-4, gamma = 1.0, clip = 10.0, length_penalty = 0.0;
  int batch = 64, epochs = 10, embed = 64, hidden = 128, layers = 2;
  std::uint64_t seed = 0;
  const CLI::Option *o_lr = nullptr, *o_gamma = nullptr, *o_clip = nullptr, *o_lpw = nullptr,
                    *o_batch = nullptr, *o_epochs = nullptr, *o_embed = nullptr,
                    *o_hidden = nullptr, *o_layers = nullptr, *o_seed = nullptr;
};

void write_loss_history(const std::string& path, const std::vector<EpochStats>& history) {
  std::ofstream os(path);
  require(os.good(), "cannot write {}", path);
  os << "epoch,train_loss,val_loss\n";
  for (const auto& e : history)
    os << e.epoch << ',' << format_number(e.train_loss) << ',' << format_number(e.val_loss)
       << '\n';
}

int run_train(const TrainOpts& o) {
  const KvConfig file = load_config(o.config);
  TrainConfig tcfg;
  tcfg.learning_rate = opt_d(o.o_lr, o.lr, file, "learning_rate", 4e-4);
  tcfg.batch_size = opt_i(o.o_batch, o.batch, file, "batch_size", 64);
  tcfg.gamma = opt_d(o.o_gamma, o.gamma, file, "gamma", 1.0);
  tcfg.clip_norm = opt_d(o.o_clip, o.clip, file, "clip_norm", 10.0);
  tcfg.epochs = opt_i(o.o_epochs, o.epochs, file, "epochs", 10);
  tcfg.length_penalty_weight = opt_d(o.o_lpw, o.length_penalty, file, "length_penalty_weight", 0.0);
  tcfg.seed = opt_seed(o.o_seed, o.seed, file, "seed", 0);

  const Inventory& inv = Inventory::arpabet();
  const PreparedDataset prep = load_prepared(o.cache, inv);

  ModelConfig mcfg;
  mcfg.inventory = inv.size();
  mcfg.channels = prep.layout.total_channels();
  mcfg.embed = opt_i(o.o_embed, o.embed, file, "embed", 64);
  mcfg.hidden = opt_i(o.o_hidden, o.hidden, file, "hidden", 128);
  mcfg.layers = opt_i(o.o_layers, o.layers, file, "layers", 2);

  std::vector<std::string> speakers;
  for (const auto& kv : prep.stats) speakers.push_back(kv.first);

  StagedDir stage(o.out);
  KvConfig echo;
  echo.set("command", "train");
  echo.set("cache", o.cache);
  echo.set_double("learning_rate", tcfg.learning_rate);
  echo.set_int("batch_size", tcfg.batch_size);
  echo.set_double("gamma", tcfg.gamma);
  echo.set_double("clip_norm", tcfg.clip_norm);
  echo.set_int("epochs", tcfg.epochs);
  echo.set_double("length_penalty_weight", tcfg.length_penalty_weight);
  echo.set_int("embed", mcfg.embed);
  echo.set_int("hidden", mcfg.hidden);
  echo.set_int("layers", mcfg.layers);
  set_seed(echo, "seed", tcfg.seed);
  echo_config(echo, stage);

  ModelParams model = init_model(mcfg, speakers, tcfg.seed);
  const std::vector<EpochStats> history = train(model, prep, tcfg, inv);

  save_params(model, stage.file("weights.bin"));
  write_loss_history(stage.file("loss_history.csv"), history);
  stage.commit();

  if (!history.empty())
    fmt::print("train: epoch {} train_loss {} val_loss {}\n", history.back().epoch,
               format_number(history.back().train_loss), format_number(history.back().val_loss));
  fmt::print("train: weights -> {}/weights.bin\n", o.out);
  return 0;
}

// ---------------------------------------------------------------------------
// generate: one word or phoneme string to EMA + timing CSVs.

struct GenerateOpts {
  std::string config, weights, cache, speaker, phonemes, word, dict, out;
};

PhonemeSequence lookup_word(const std::string& word, const std::string& dict_path,
                            const Inventory& inv) {
  std::ifstream dict(dict_path);
  require(dict.good(), "cannot open dictionary {}", dict_path);
  std::istringstream wordlist(word + "\n");
  try {
    const Lexicon lex = parse_lexicon(dict, wordlist, 1, inv);
    return lex.entries.begin()->second;
  } catch (const Error&) {
    fail("word '{}' has no usable pronunciation in {}", word, dict_path);
  }
}

void write_timing_csv(const std::string& path, const TimingParams& timing,
                      const PhonemeSequence& seq) {
  std::ofstream os(path);
  require(os.good(), "cannot write {}", path);
  os << "phoneme,duration_frames,center_frame,sigma_frames\n";
  for (int i = 0; i < timing.n(); ++i)
    os << seq.tokens[static_cast<std::size_t>(i)].symbol << ',' << format_number(timing.durations[i])
       << ',' << format_number(timing.mu[i]) << ',' << format_number(timing.sigma[i]) << '\n';
}

int run_generate(const GenerateOpts& o) {
  load_config(o.config);  // no tunables yet; accepted for interface symmetry
  const Inventory& inv = Inventory::arpabet();
  require(o.phonemes.empty() != o.word.empty(),
          "give exactly one of --phonemes or --word");
  PhonemeSequence seq;
  if (!o.word.empty()) {
    require(!o.dict.empty(), "--word needs --dict to look up the pronunciation");
    seq = lookup_word(o.word, o.dict, inv);
  } else {
    seq = parse_sequence(o.phonemes, inv);
  }

  const ModelParams model = load_params(o.weights);
  const GenerationResult gen = generate(model, seq, o.speaker, inv);

  const ChannelLayout layout = ChannelLayout::standard();
  EmaTrajectory traj = gen.ema;
  if (!o.cache.empty()) {
    const PreparedDataset prep = load_prepared(o.cache, inv);
    const auto it = prep.stats.find(o.speaker);
    require(it != prep.stats.end(), "cache {} has no stats for speaker '{}'", o.cache, o.speaker);
    traj = denormalize(traj, it->second);
  }

  StagedDir stage(o.out);
  write_ema_csv(stage.file("trajectory.csv"), traj, full_channel_names(layout));
  write_timing_csv(stage.file("timing.csv"), gen.timing, seq);

  KvConfig echo;
  echo.set("command", "generate");
  echo.set("weights", o.weights);
  echo.set("speaker", o.speaker);
  echo.set("phonemes", seq.str());
  if (!o.word.empty()) echo.set("word", o.word);
  echo.set("denormalized", o.cache.empty() ? "false" : "true");
  echo_config(echo, stage);

  stage.commit();
  fmt::print("generate: {} phonemes -> {} frames -> {}\n", seq.size(), traj.frames(), o.out);
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate: per-utterance and summary fit against a prepared split.

struct EvaluateOpts {
  std::string config, weights, cache, split = "validation", out;
  bool use_truth = false;
  int resamples = 2000;
  std::uint64_t seed = 0;
  const CLI::Option *o_resamples = nullptr, *o_seed = nullptr;
};

int run_evaluate(const EvaluateOpts& o) {
  const KvConfig file = load_config(o.config);
  const int resamples = opt_i(o.o_resamples, o.resamples, file, "bootstrap_resamples", 2000);
  const std::uint64_t seed = opt_seed(o.o_seed, o.seed, file, "seed", 0);

  const Inventory& inv = Inventory::arpabet();
  const PreparedDataset prep = load_prepared(o.cache, inv);
  require(o.use_truth || !o.weights.empty(), "--weights is required unless --use-truth is set");
  std::optional<ModelParams> model;
  if (!o.use_truth) model = load_params(o.weights);

  std::vector<const Utterance*> utts;
  if (o.split == "train")
    utts = prep.train();
  else if (o.split == "validation")
    utts = prep.validation();
  else
    fail("unknown split '{}'; expected train or validation", o.split);
  require(!utts.empty(), "split '{}' is empty", o.split);

  const int s_pos = prep.layout.position_channels();
  StagedDir stage(o.out);
  std::ofstream per(stage.file("per_utterance.csv"));
  require(per.good(), "cannot write per_utterance.csv");
  per << "id,speaker,frames_pred,frames_truth,pcc,rmse,degenerate\n";

  std::vector<double> pccs, rmses;
  for (const Utterance* utt : utts) {
    const Matrix truth = utt->ema.values.leftCols(s_pos);
    Matrix pred;
    if (o.use_truth) {
      pred = truth;
    } else {
      const GenerationResult gen = generate(*model, utt->phonemes, utt->speaker, inv);
      pred = gen.ema.values.leftCols(s_pos);
    }
    const FitMetrics m = fit_metrics(pred, truth);
    pccs.push_back(m.pcc);
    rmses.push_back(m.rmse);
    per << utt->id << ',' << utt->speaker << ',' << pred.rows() << ',' << truth.rows() << ','
        << format_number(m.pcc) << ',' << format_number(m.rmse) << ','
        << (m.degenerate_channel ? 1 : 0) << '\n';
  }
  per.close();

  Rng root(seed);
  const auto [pcc_lo, pcc_hi] = bootstrap_ci(pccs, resamples, root.substream("ci:pcc"));
  const auto [rmse_lo, rmse_hi] = bootstrap_ci(rmses, resamples, root.substream("ci:rmse"));

  std::ofstream sum(stage.file("summary.csv"));
  require(sum.good(), "cannot write summary.csv");
  sum << "metric,n,mean,ci_lo,ci_hi\n";
  sum << "pcc," << pccs.size() << ',' << format_number(mean(pccs)) << ','
      << format_number(pcc_lo) << ',' << format_number(pcc_hi) << '\n';
  sum << "rmse," << rmses.size() << ',' << format_number(mean(rmses)) << ','
      << format_number(rmse_lo) << ',' << format_number(rmse_hi) << '\n';
  sum.close();

  KvConfig echo;
  echo.set("command", "evaluate");
  echo.set("cache", o.cache);
  echo.set("split", o.split);
  echo.set("use_truth", o.use_truth ? "true" : "false");
  if (!o.use_truth) echo.set("weights", o.weights);
  echo.set_int("bootstrap_resamples", resamples);
  set_seed(echo, "seed", seed);
  echo_config(echo, stage);

  stage.commit();
  fmt::print("evaluate: {} utterances, pcc {} [{}, {}], rmse {}\n", pccs.size(),
             format_number(mean(pccs)), format_number(pcc_lo), format_number(pcc_hi),
             format_number(mean(rmses)));
  return 0;
}

// ---------------------------------------------------------------------------
// pairs: lexicon parsing and minimal-pair enumeration.

struct PairsOpts {
  std::string config, dict, wordlist, out;
  int top_n = 10000;
  const CLI::Option* o_top = nullptr;
};

int run_pairs(const PairsOpts& o) {
  const KvConfig file = load_config(o.config);
  const int top_n = opt_i(o.o_top, o.top_n, file, "top_n", 10000);

  const Inventory& inv = Inventory::arpabet();
  const Lexicon lex = parse_lexicon_files(o.dict, o.wordlist, top_n, inv);
  const std::vector<MinimalPair> pairs = enumerate_minimal_pairs(lex);

  StagedDir stage(o.out);
  write_pairs_file(stage.file("pairs.tsv"), pairs);
  {
    // Echo the resolved lexicon so downstream analyses reuse it as-is.
    std::ofstream dict_os(stage.file("lexicon.txt"));
    write_lexicon(dict_os, lex);
    std::ofstream wl_os(stage.file("wordlist.txt"));
    write_wordlist(wl_os, lex);
  }
  KvConfig summary;
  summary.set_int("lexicon_size", static_cast<long long>(lex.size()));
  summary.set_int("n_pairs", static_cast<long long>(pairs.size()));
  summary.write_file(stage.file("summary.txt"));

  KvConfig echo;
  echo.set("command", "pairs");
  echo.set("dict", o.dict);
  echo.set("wordlist", o.wordlist);
  echo.set_int("top_n", top_n);
  echo_config(echo, stage);

  stage.commit();
  fmt::print("pairs: {} words -> {} minimal pairs -> {}\n", lex.size(), pairs.size(), o.out);
  return 0;
}

// ---------------------------------------------------------------------------
// extent / resistance: distance pipelines over a generator.

struct AnalysisOpts {
  std::string config, pairs, dict, wordlist, out;
  // generator: a trained model or the closed-form oracle
  std::string weights, cache, speaker, resistance;
  bool use_oracle = false;
  double half_life = 1.0, boost = 0.3;
  int frames = 9;
  std::uint64_t oracle_seed = 1;
  // analysis knobs
  int top_n = 10000, tau = 1, max_offset = 8, baseline_samples = 1000, davg_words = 2000,
      resamples = 2000;
  std::uint64_t seed = 0;
  const CLI::Option *o_half = nullptr, *o_boost = nullptr, *o_frames = nullptr,
                    *o_oseed = nullptr, *o_res = nullptr, *o_top = nullptr, *o_tau = nullptr,
                    *o_max = nullptr, *o_base = nullptr, *o_davg = nullptr, *o_resamp = nullptr,
                    *o_seed = nullptr;
};

/// Owns whichever backing objects the generator points into.
struct GeneratorBundle {
  std::unique_ptr<ModelParams> model;
  std::unique_ptr<Oracle> oracle;
  std::unique_ptr<WordGenerator> gen;
};

GeneratorBundle make_generator(const AnalysisOpts& o, const KvConfig& file, KvConfig& echo,
                               const Inventory& inv) {
  GeneratorBundle b;
  if (o.use_oracle) {
    OracleConfig cfg;
    cfg.half_life = opt_d(o.o_half, o.half_life, file, "half_life", 1.0);
    cfg.adjacent_boost = opt_d(o.o_boost, o.boost, file, "adjacent_boost", 0.3);
    cfg.frames_per_phoneme = opt_i(o.o_frames, o.frames, file, "frames_per_phoneme", 9);
    cfg.seed = opt_seed(o.o_oseed, o.oracle_seed, file, "oracle_seed", 1);
    cfg.resistance = parse_resistance(opt_s(o.o_res, o.resistance, file, "resistance", ""));
    b.oracle = std::make_unique<Oracle>(make_oracle(cfg, inv));
    b.gen = std::make_unique<OracleWordGenerator>(*b.oracle);
    echo.set("generator", "oracle");
    echo.set_double("half_life", cfg.half_life);
    echo.set_double("adjacent_boost", cfg.adjacent_boost);
    echo.set_int("frames_per_phoneme", cfg.frames_per_phoneme);
    set_seed(echo, "oracle_seed", cfg.seed);
    echo.set("resistance", format_resistance(cfg.resistance));
  } else {
    require(!o.weights.empty(), "give --weights (with --speaker) or --oracle");
    require(!o.speaker.empty(), "--weights needs --speaker");
    b.model = std::make_unique<ModelParams>(load_params(o.weights));
    const ChannelLayout layout = ChannelLayout::standard();
    b.gen = std::make_unique<ModelWordGenerator>(*b.model, o.speaker, inv,
                                                 layout.position_channels());
    echo.set("generator", "model");
    echo.set("weights", o.weights);
    echo.set("speaker", o.speaker);
  }
  return b;
}

AnalysisConfig resolve_analysis(const AnalysisOpts& o, const KvConfig& file, KvConfig& echo) {
  AnalysisConfig cfg;
  cfg.tau = opt_i(o.o_tau, o.tau, file, "tau", 1);
  cfg.max_offset = opt_i(o.o_max, o.max_offset, file, "max_offset", 8);
  cfg.baseline_samples = opt_i(o.o_base, o.baseline_samples, file, "baseline_samples", 1000);
  cfg.davg_words = opt_i(o.o_davg, o.davg_words, file, "davg_words", 2000);
  cfg.bootstrap_resamples = opt_i(o.o_resamp, o.resamples, file, "bootstrap_resamples", 2000);
  cfg.seed = opt_seed(o.o_seed, o.seed, file, "seed", 0);
  echo.set_int("tau", cfg.tau);
  echo.set_int("max_offset", cfg.max_offset);
  echo.set_int("baseline_samples", cfg.baseline_samples);
  echo.set_int("davg_words", cfg.davg_words);
  echo.set_int("bootstrap_resamples", cfg.bootstrap_resamples);
  set_seed(echo, "seed", cfg.seed);
  return cfg;
}

Lexicon analysis_lexicon(const AnalysisOpts& o, const KvConfig& file, KvConfig& echo,
                         const Inventory& inv) {
  const int top_n = opt_i(o.o_top, o.top_n, file, "top_n", 10000);
  echo.set("dict", o.dict);
  echo.set("wordlist", o.wordlist);
  echo.set_int("top_n", top_n);
  return parse_lexicon_files(o.dict, o.wordlist, top_n, inv);
}

void write_offset_stats(std::ostream& os, const std::string& key_name,
                        const std::map<int, OffsetStats>& stats) {
  os << key_name << ",n,mean_pct,std_pct,q1,median,q3,p_value\n";
  for (const auto& [key, st] : stats)
    os << key << ',' << st.n << ',' << format_number(st.mean_pct) << ','
       << format_number(st.std_pct) << ',' << format_number(st.q1) << ','
       << format_number(st.median) << ',' << format_number(st.q3) << ','
       << format_number(st.p_value) << '\n';
}

int run_extent(const AnalysisOpts& o) {
  const KvConfig file = load_config(o.config);
  const Inventory& inv = Inventory::arpabet();

  KvConfig echo;
  echo.set("command", "extent");
  echo.set("pairs", o.pairs);
  const GeneratorBundle gen = make_generator(o, file, echo, inv);
  const AnalysisConfig cfg = resolve_analysis(o, file, echo);
  const Lexicon lex = analysis_lexicon(o, file, echo, inv);
  const std::vector<MinimalPair> pairs = read_pairs_file(o.pairs, inv);

  std::vector<std::string> skipped;
  const ExtentProfile prof = extent_profile(*gen.gen, pairs, lex, cfg, &skipped);

  StagedDir stage(o.out);
  {
    std::ofstream os(stage.file("extent_signed.csv"));
    require(os.good(), "cannot write extent_signed.csv");
    write_offset_stats(os, "offset", prof.signed_offsets);
  }
  {
    std::ofstream os(stage.file("extent_pooled.csv"));
    require(os.good(), "cannot write extent_pooled.csv");
    write_offset_stats(os, "abs_offset", prof.pooled);
  }
  {
    std::ofstream os(stage.file("baseline.csv"));
    require(os.good(), "cannot write baseline.csv");
    os << "normalized_pct\n";
    for (double v : prof.baseline) os << format_number(v) << '\n';
  }
  KvConfig summary;
  summary.set_double("d_avg", prof.d_avg);
  summary.set_int("n_pairs", static_cast<long long>(pairs.size()));
  summary.set_int("n_skipped", static_cast<long long>(skipped.size()));
  summary.write_file(stage.file("summary.txt"));
  echo_config(echo, stage);

  stage.commit();
  const auto it = prof.pooled.find(1);
  const std::string near = it == prof.pooled.end() ? "n/a" : format_number(it->second.mean_pct);
  fmt::print("extent: {} pairs, d_avg {}, mean at |1| = {}% -> {}\n", pairs.size(),
             format_number(prof.d_avg), near, o.out);
  return 0;
}

int run_resistance(const AnalysisOpts& o) {
  const KvConfig file = load_config(o.config);
  const Inventory& inv = Inventory::arpabet();

  KvConfig echo;
  echo.set("command", "resistance");
  echo.set("pairs", o.pairs);
  const GeneratorBundle gen = make_generator(o, file, echo, inv);
  const AnalysisConfig cfg = resolve_analysis(o, file, echo);
  const Lexicon lex = analysis_lexicon(o, file, echo, inv);
  const std::vector<MinimalPair> pairs = read_pairs_file(o.pairs, inv);

  std::vector<std::string> missing;
  const double d_avg = mean_interphoneme_distance(*gen.gen, lex, cfg, &missing);
  require(d_avg > 0, "degenerate scale: D_avg is zero for this generator");
  std::vector<std::string> skipped;
  const auto records = pair_records(*gen.gen, pairs, cfg, d_avg, &skipped);
  const auto table = resistance_by_place(records, cfg);

  StagedDir stage(o.out);
  {
    std::ofstream os(stage.file("resistance.csv"));
    require(os.good(), "cannot write resistance.csv");
    os << "place,n,mean_pct,ci_lo,ci_hi\n";
    for (const auto& st : table)
      os << to_string(st.place) << ',' << st.n << ',' << format_number(st.mean_pct) << ','
         << format_number(st.ci_lo) << ',' << format_number(st.ci_hi) << '\n';
  }
  KvConfig summary;
  summary.set_double("d_avg", d_avg);
  summary.set_int("n_pairs", static_cast<long long>(pairs.size()));
  summary.set_int("n_skipped", static_cast<long long>(skipped.size()));
  summary.write_file(stage.file("summary.txt"));
  echo_config(echo, stage);

  stage.commit();
  fmt::print("resistance: {} records -> {}\n", records.size(), o.out);
  return 0;
}

// ---------------------------------------------------------------------------
// demo-vcv: tract-variable traces for a near-minimal sequence pair.

struct VcvOpts {
  std::string config, weights, cache, speaker, out;
  std::string seq_a = "AA B AA", seq_b = "AA G AA";
};

void write_tv_csv(const std::string& path, const TractVariables& tv) {
  std::ofstream os(path);
  require(os.good(), "cannot write {}", path);
  os << "frame,la,lp,ttcl,tbcl\n";
  for (int j = 0; j < tv.la.size(); ++j)
    os << j << ',' << format_number(tv.la[j]) << ',' << format_number(tv.lp[j]) << ','
       << format_number(tv.ttcl[j]) << ',' << format_number(tv.tbcl[j]) << '\n';
}

int run_demo_vcv(const VcvOpts& o) {
  load_config(o.config);
  const Inventory& inv = Inventory::arpabet();
  const ChannelLayout layout = ChannelLayout::standard();
  const ModelParams model = load_params(o.weights);
  const PhonemeSequence sa = parse_sequence(o.seq_a, inv);
  const PhonemeSequence sb = parse_sequence(o.seq_b, inv);

  std::optional<PreparedDataset> prep;
  const SpeakerStats* stats = nullptr;
  if (!o.cache.empty()) {
    prep = load_prepared(o.cache, inv);
    const auto it = prep->stats.find(o.speaker);
    require(it != prep->stats.end(), "cache {} has no stats for speaker '{}'", o.cache, o.speaker);
    stats = &it->second;
  }

  const VcvResult res = demo_vcv(model, sa, sb, o.speaker, inv, layout, stats);

  StagedDir stage(o.out);
  write_tv_csv(stage.file("tv_a.csv"), res.tv_a);
  write_tv_csv(stage.file("tv_b.csv"), res.tv_b);
  KvConfig summary;
  summary.set_int("divergence_onset", res.divergence_onset);
  summary.set_int("frames_a", res.a.ema.frames());
  summary.set_int("frames_b", res.b.ema.frames());
  summary.write_file(stage.file("summary.txt"));

  KvConfig echo;
  echo.set("command", "demo-vcv");
  echo.set("weights", o.weights);
  echo.set("speaker", o.speaker);
  echo.set("seq_a", sa.str());
  echo.set("seq_b", sb.str());
  echo.set("denormalized", stats ? "true" : "false");
  echo_config(echo, stage);

  stage.commit();
  fmt::print("demo-vcv: divergence onset at frame {} of {} -> {}\n", res.divergence_onset,
             res.a.ema.frames(), o.out);
  return 0;
}

void add_common(CLI::App* cmd, std::string& config, std::string& out) {
  cmd->add_option("--config", config, "key = value settings file; flags override it");
  cmd->add_option("--out", out, "output directory (replaced atomically)")->required();
}

void add_generator_opts(CLI::App* c, AnalysisOpts& o) {
  c->add_flag("--oracle", o.use_oracle, "use the closed-form oracle generator");
  c->add_option("--weights", o.weights, "trained weight file");
  c->add_option("--speaker", o.speaker, "speaker head for model generation");
  o.o_half = c->add_option("--half-life", o.half_life, "oracle influence half-life");
  o.o_boost = c->add_option("--boost", o.boost, "oracle adjacent boost");
  o.o_frames = c->add_option("--frames-per-phoneme", o.frames, "oracle frames per phoneme");
  o.o_oseed = c->add_option("--oracle-seed", o.oracle_seed, "oracle target seed");
  o.o_res = c->add_option("--resistance", o.resistance,
                          "oracle place multipliers, e.g. velar=0.6,bilabial=1.4");
}

void add_analysis_opts(CLI::App* c, AnalysisOpts& o) {
  c->add_option("--pairs", o.pairs, "minimal-pairs TSV")->required();
  c->add_option("--dict", o.dict, "pronunciation dictionary")->required();
  c->add_option("--wordlist", o.wordlist, "rank-ordered word list")->required();
  o.o_top = c->add_option("--top-n", o.top_n, "vocabulary cut for the scale lexicon");
  o.o_tau = c->add_option("--tau", o.tau, "representation half-width in frames");
  o.o_max = c->add_option("--max-offset", o.max_offset, "largest |offset| measured");
  o.o_base = c->add_option("--baseline-samples", o.baseline_samples, "far-field sample count");
  o.o_davg = c->add_option("--davg-words", o.davg_words, "word sample for the scale");
  o.o_resamp = c->add_option("--resamples", o.resamples, "bootstrap resamples");
  o.o_seed = c->add_option("--seed", o.seed, "analysis seed");
}

}  // namespace
}  // namespace coart

int main(int argc, char** argv) {
  using namespace coart;
  CLI::App app{"coarticulation toolkit: train a phoneme-to-articulatory model and measure "
               "coarticulation magnitude, extent and resistance"};
  app.require_subcommand(1);

  auto oracle_opts = std::make_shared<OracleOpts>();
  {
    CLI::App* c = app.add_subcommand("oracle", "synthesize the closed-form oracle corpus");
    OracleOpts& o = *oracle_opts;
    add_common(c, o.config, o.out);
    o.o_speakers = c->add_option("--speakers", o.speakers, "speaker count");
    o.o_utts = c->add_option("--utterances", o.utterances, "utterances per speaker");
    o.o_min = c->add_option("--min-len", o.min_len, "shortest word in phonemes");
    o.o_max = c->add_option("--max-len", o.max_len, "longest word in phonemes");
    o.o_frames = c->add_option("--frames-per-phoneme", o.frames, "frames per phoneme (odd)");
    o.o_half = c->add_option("--half-life", o.half_life, "influence half-life in positions");
    o.o_boost = c->add_option("--boost", o.boost, "adjacent neighbour boost");
    o.o_noise = c->add_option("--noise", o.noise, "additive position noise");
    o.o_rate = c->add_option("--rate", o.rate, "frame rate in Hz");
    o.o_seed = c->add_option("--seed", o.seed, "corpus seed");
    o.o_res = c->add_option("--resistance", o.resistance, "place multipliers");
    c->callback([oracle_opts] { run_oracle(*oracle_opts); });
  }

  auto prepare_opts = std::make_shared<PrepareOpts>();
  {
    CLI::App* c = app.add_subcommand("prepare", "validate, derive velocities, normalize, split");
    PrepareOpts& o = *prepare_opts;
    add_common(c, o.config, o.out);
    c->add_option("--manifest", o.manifest, "dataset manifest CSV")->required();
    o.o_frac = c->add_option("--split-fraction", o.split_fraction, "train fraction per speaker");
    o.o_seed = c->add_option("--seed", o.seed, "split seed");
    c->callback([prepare_opts] { run_prepare(*prepare_opts); });
  }

  auto train_opts = std::make_shared<TrainOpts>();
  {
    CLI::App* c = app.add_subcommand("train", "fit the model on a prepared cache");
    TrainOpts& o = *train_opts;
    add_common(c, o.config, o.out);
    c->add_option("--cache", o.cache, "prepared dataset directory")->required();
    o.o_lr = c->add_option("--learning-rate", o.lr, "Adam learning rate");
    o.o_batch = c->add_option("--batch-size", o.batch, "utterances per step");
    o.o_gamma = c->add_option("--gamma", o.gamma, "soft-DTW temperature");
    o.o_clip = c->add_option("--clip-norm", o.clip, "global gradient norm cap");
    o.o_epochs = c->add_option("--epochs", o.epochs, "training epochs");
    o.o_lpw = c->add_option("--length-penalty", o.length_penalty,
                            "weight on (predicted - true length)^2");
    o.o_embed = c->add_option("--embed", o.embed, "embedding width");
    o.o_hidden = c->add_option("--hidden", o.hidden, "GRU hidden size per direction");
    o.o_layers = c->add_option("--layers", o.layers, "BiGRU layers per stack");
    o.o_seed = c->add_option("--seed", o.seed, "init + shuffle seed");
    c->callback([train_opts] { run_train(*train_opts); });
  }

  auto generate_opts = std::make_shared<GenerateOpts>();
  {
    CLI::App* c = app.add_subcommand("generate", "synthesize one word or phoneme string");
    GenerateOpts& o = *generate_opts;
    add_common(c, o.config, o.out);
    c->add_option("--weights", o.weights, "trained weight file")->required();
    c->add_option("--speaker", o.speaker, "speaker head")->required();
    c->add_option("--phonemes", o.phonemes, "space-separated symbols, e.g. \"P AE T\"");
    c->add_option("--word", o.word, "orthographic word to look up");
    c->add_option("--dict", o.dict, "pronunciation dictionary for --word");
    c->add_option("--cache", o.cache, "prepared cache; when given, output is denormalized");
    c->callback([generate_opts] { run_generate(*generate_opts); });
  }

  auto evaluate_opts = std::make_shared<EvaluateOpts>();
  {
    CLI::App* c = app.add_subcommand("evaluate", "fit metrics with bootstrap intervals");
    EvaluateOpts& o = *evaluate_opts;
    add_common(c, o.config, o.out);
    c->add_option("--weights", o.weights, "trained weight file");
    c->add_option("--cache", o.cache, "prepared dataset directory")->required();
    c->add_option("--split", o.split, "train or validation");
    c->add_flag("--use-truth", o.use_truth, "score the ground truth against itself");
    o.o_resamples = c->add_option("--resamples", o.resamples, "bootstrap resamples");
    o.o_seed = c->add_option("--seed", o.seed, "bootstrap seed");
    c->callback([evaluate_opts] { run_evaluate(*evaluate_opts); });
  }

  auto pairs_opts = std::make_shared<PairsOpts>();
  {
    CLI::App* c = app.add_subcommand("pairs", "enumerate minimal pairs from a dictionary");
    PairsOpts& o = *pairs_opts;
    add_common(c, o.config, o.out);
    c->add_option("--dict", o.dict, "pronunciation dictionary")->required();
    c->add_option("--wordlist", o.wordlist, "rank-ordered word list")->required();
    o.o_top = c->add_option("--top-n", o.top_n, "vocabulary cut");
    c->callback([pairs_opts] { run_pairs(*pairs_opts); });
  }

  auto extent_opts = std::make_shared<AnalysisOpts>();
  {
    CLI::App* c = app.add_subcommand("extent", "coarticulation distance by phonemic offset");
    AnalysisOpts& o = *extent_opts;
    add_common(c, o.config, o.out);
    add_analysis_opts(c, o);
    add_generator_opts(c, o);
    c->callback([extent_opts] { run_extent(*extent_opts); });
  }

  auto resistance_opts = std::make_shared<AnalysisOpts>();
  {
    CLI::App* c = app.add_subcommand("resistance", "adjacent-offset distance by place");
    AnalysisOpts& o = *resistance_opts;
    add_common(c, o.config, o.out);
    add_analysis_opts(c, o);
    add_generator_opts(c, o);
    c->callback([resistance_opts] { run_resistance(*resistance_opts); });
  }

  auto vcv_opts = std::make_shared<VcvOpts>();
  {
    CLI::App* c = app.add_subcommand("demo-vcv", "tract variables for a VCV pair");
    VcvOpts& o = *vcv_opts;
    add_common(c, o.config, o.out);
    c->add_option("--weights", o.weights, "trained weight file")->required();
    c->add_option("--speaker", o.speaker, "speaker head")->required();
    c->add_option("--seq-a", o.seq_a, "first sequence");
    c->add_option("--seq-b", o.seq_b, "second sequence");
    c->add_option("--cache", o.cache, "prepared cache for denormalized traces");
    c->callback([vcv_opts] { run_demo_vcv(*vcv_opts); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
