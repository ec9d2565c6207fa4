#include "coart/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "coart/adam.hpp"
#include "coart/alignment.hpp"
#include "coart/common.hpp"
#include "coart/kvconfig.hpp"

namespace coart {

namespace {

Matrix embed_rows(const ModelParams& model, const PhonemeSequence& seq, const Inventory& inv) {
  Matrix e(seq.size(), model.config.embed);
  for (int i = 0; i < seq.size(); ++i)
    e.row(i) = model.embedding.row(inv.index_of(seq.tokens[static_cast<std::size_t>(i)].symbol));
  return e;
}

const Linear& speaker_head(const ModelParams& model, const std::string& speaker) {
  auto it = model.speaker_heads.find(speaker);
  if (it == model.speaker_heads.end()) {
    std::string known;
    for (const auto& [id, head] : model.speaker_heads)
      known += (known.empty() ? "" : ", ") + id;
    fail("unknown speaker '{}'; model has heads for: {}", speaker, known);
  }
  return it->second;
}

}  // namespace

ModelParams init_model(const ModelConfig& cfg, const std::vector<std::string>& speakers,
                       std::uint64_t seed) {
  require(cfg.inventory >= 1 && cfg.embed >= 1 && cfg.hidden >= 1 && cfg.layers >= 1 &&
              cfg.channels >= 1,
          "model config: all dimensions must be >= 1");
  require(!speakers.empty(), "model needs at least one speaker head");
  Rng rng = Rng(seed).substream("init");
  ModelParams p;
  p.config = cfg;
  {
    const double bound = std::sqrt(1.0 / cfg.inventory);
    p.embedding.resize(cfg.inventory, cfg.embed);
    for (Eigen::Index i = 0; i < p.embedding.rows(); ++i)
      for (Eigen::Index j = 0; j < p.embedding.cols(); ++j)
        p.embedding(i, j) = rng.uniform(-bound, bound);
  }
  p.timing_rnn = make_gru_stack(cfg.inventory, cfg.hidden, cfg.layers, rng);
  p.timing_head = make_linear(2, 2 * cfg.hidden, rng);
  p.decoder_rnn = make_gru_stack(cfg.embed, cfg.hidden, cfg.layers, rng);
  p.decoder_head = make_linear(cfg.channels, 2 * cfg.hidden, rng);
  std::vector<std::string> sorted = speakers;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i)
    require(sorted[i] != sorted[i - 1], "duplicate speaker '{}'", sorted[i]);
  for (const auto& id : sorted)
    p.speaker_heads.emplace(id, make_linear(cfg.channels, cfg.channels, rng));
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z;
  z.config = p.config;
  z.embedding = Matrix::Zero(p.embedding.rows(), p.embedding.cols());
  z.timing_rnn = zeros_like(p.timing_rnn);
  z.timing_head = zeros_like(p.timing_head);
  z.decoder_rnn = zeros_like(p.decoder_rnn);
  z.decoder_head = zeros_like(p.decoder_head);
  for (const auto& [id, head] : p.speaker_heads) z.speaker_heads.emplace(id, zeros_like(head));
  return z;
}

std::vector<ParamView> param_views(ModelParams& p) {
  std::vector<ParamView> out;
  out.push_back({"embedding", p.embedding.data(), static_cast<std::size_t>(p.embedding.size())});
  append_views(p.timing_rnn, "timing_rnn", out);
  append_views(p.timing_head, "timing_head", out);
  append_views(p.decoder_rnn, "decoder_rnn", out);
  append_views(p.decoder_head, "decoder_head", out);
  for (auto& [id, head] : p.speaker_heads) append_views(head, "speaker:" + id, out);
  return out;
}

TimingParams predict_timing(const ModelParams& model, const PhonemeSequence& seq,
                            const Inventory& inv) {
  require(inv.size() == model.config.inventory, "inventory size {} != model's {}", inv.size(),
          model.config.inventory);
  const Matrix onehot = one_hot_rows(seq, inv);
  const Matrix enc = gru_stack_forward(model.timing_rnn, onehot, nullptr);
  const Matrix raw = linear_forward(model.timing_head, enc);
  return timing_from_raw(raw);
}

GenerationResult generate(const ModelParams& model, const PhonemeSequence& seq,
                          const std::string& speaker, const Inventory& inv) {
  const Linear& head = speaker_head(model, speaker);
  GenerationResult res;
  res.speaker = speaker;
  res.timing = predict_timing(model, seq, inv);
  const InfluenceMatrix infl = gaussian_expand(res.timing, res.timing.total_frames);
  const Matrix mixed = infl.values * embed_rows(model, seq, inv);
  const Matrix dec = gru_stack_forward(model.decoder_rnn, mixed, nullptr);
  const Matrix base = linear_forward(model.decoder_head, dec);
  res.ema.values = linear_forward(head, base);
  res.ema.normalized = true;
  res.ema.has_velocities = true;
  const double peak = res.ema.values.cwiseAbs().maxCoeff();
  require(peak < 50.0, "generated trajectory exploded (|value| = {} in normalized space)", peak);
  return res;
}

double utterance_loss_grad(const ModelParams& model, const Utterance& utt, double gamma,
                           double length_penalty_weight, const Inventory& inv, ModelParams* grad) {
  const PhonemeSequence& seq = utt.phonemes;
  const Linear& head = speaker_head(model, utt.speaker);
  require(utt.ema.channels() == model.config.channels, "utterance '{}': {} channels, model has {}",
          utt.id, utt.ema.channels(), model.config.channels);

  const Matrix onehot = one_hot_rows(seq, inv);
  GruStackCache tcache;
  const Matrix enc = gru_stack_forward(model.timing_rnn, onehot, grad ? &tcache : nullptr);
  const Matrix raw = linear_forward(model.timing_head, enc);
  const TimingParams tp = timing_from_raw(raw);

  const InfluenceMatrix infl = gaussian_expand(tp, tp.total_frames);
  const Matrix eseq = embed_rows(model, seq, inv);
  const Matrix mixed = infl.values * eseq;
  GruStackCache dcache;
  const Matrix dec = gru_stack_forward(model.decoder_rnn, mixed, grad ? &dcache : nullptr);
  const Matrix base = linear_forward(model.decoder_head, dec);
  const Matrix pred = linear_forward(head, base);

  const double t_truth = static_cast<double>(utt.ema.frames());
  const double len_gap = tp.sum_durations - t_truth;
  double loss;
  if (!grad) {
    loss = sdtw(pred, utt.ema.values, gamma);
    return loss + length_penalty_weight * len_gap * len_gap;
  }

  const Matrix dpred = sdtw_grad(pred, utt.ema.values, gamma, &loss);
  loss += length_penalty_weight * len_gap * len_gap;

  const Matrix dbase = linear_backward(head, base, dpred, grad->speaker_heads.at(utt.speaker));
  const Matrix ddec = linear_backward(model.decoder_head, dec, dbase, grad->decoder_head);
  const Matrix dmixed = gru_stack_backward(model.decoder_rnn, dcache, ddec, grad->decoder_rnn);

  const Matrix dinfl = dmixed * eseq.transpose();         // t x n
  const Matrix deseq = infl.values.transpose() * dmixed;  // n x embed
  for (int i = 0; i < seq.size(); ++i)
    grad->embedding.row(inv.index_of(seq.tokens[static_cast<std::size_t>(i)].symbol)) +=
        deseq.row(i);

  Vector dmu = Vector::Zero(tp.n());
  Vector dsigma = Vector::Zero(tp.n());
  gaussian_expand_backward(tp, infl, dinfl, dmu, dsigma);
  const double dsum = length_penalty_weight * 2.0 * len_gap;
  Matrix draw = Matrix::Zero(tp.n(), 2);
  timing_from_raw_backward(raw, tp, dmu, dsigma, dsum, draw);

  const Matrix denc = linear_backward(model.timing_head, enc, draw, grad->timing_head);
  gru_stack_backward(model.timing_rnn, tcache, denc, grad->timing_rnn);
  return loss;
}

std::vector<EpochStats> train(ModelParams& model, const PreparedDataset& data,
                              const TrainConfig& cfg, const Inventory& inv) {
  require(!data.split.train.empty(), "train: empty training split");
  require(cfg.batch_size >= 1 && cfg.epochs >= 1 && cfg.gamma > 0.0 && cfg.learning_rate > 0.0,
          "train: bad config");

  auto pviews = param_views(model);
  ModelParams grad = zeros_like(model);
  auto gviews = param_views(grad);
  Adam adam({cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.clip_norm});
  const Rng root = Rng(cfg.seed).substream("train");

  std::vector<EpochStats> history;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::string> order = data.split.train;  // sorted in the split
    Rng erng = root.substream(fmt::format("epoch:{}", epoch));
    erng.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (auto& v : gviews) std::fill(v.data, v.data + v.size, 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k)
        batch_loss += utterance_loss_grad(model, data.by_id(order[k]), cfg.gamma,
                                          cfg.length_penalty_weight, inv, &grad);
      const double scale = 1.0 / static_cast<double>(end - start);
      batch_loss *= scale;
      require(std::isfinite(batch_loss), "non-finite loss at epoch {}, batch starting at {}",
              epoch, start);
      for (auto& v : gviews)
        for (std::size_t i = 0; i < v.size; ++i) v.data[i] *= scale;
      adam.step(pviews, gviews);
      epoch_loss += batch_loss * static_cast<double>(end - start);
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = epoch_loss / static_cast<double>(order.size());
    if (!data.split.validation.empty()) {
      double val = 0.0;
      for (const auto& id : data.split.validation)
        val += utterance_loss_grad(model, data.by_id(id), cfg.gamma, cfg.length_penalty_weight,
                                   inv, nullptr);
      st.val_loss = val / static_cast<double>(data.split.validation.size());
    } else {
      st.val_loss = st.train_loss;
    }
    history.push_back(st);
  }
  return history;
}

// --- weight file -----------------------------------------------------------
//
// "P2AW" magic, u32 version, u64 config-block length, config block
// (key = value text), then every parameter in param_views order as
// u32 name length, name, u64 count, count little-endian f64.

namespace {

constexpr char kMagic[4] = {'P', '2', 'A', 'W'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  require(is.good(), "{}: truncated weight file", path);
  return v;
}

}  // namespace

void save_params(const ModelParams& p, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open '{}' for writing", path);
  os.write(kMagic, 4);
  write_pod(os, kVersion);

  KvConfig cfg;
  cfg.set_int("channels", p.config.channels);
  cfg.set_int("embed", p.config.embed);
  cfg.set_int("hidden", p.config.hidden);
  cfg.set_int("inventory", p.config.inventory);
  cfg.set_int("layers", p.config.layers);
  std::string speakers;
  for (const auto& [id, head] : p.speaker_heads)
    speakers += (speakers.empty() ? "" : ",") + id;
  cfg.set("speakers", speakers);
  std::ostringstream block;
  cfg.write(block);
  const std::string text = block.str();
  write_pod(os, static_cast<std::uint64_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));

  auto views = param_views(const_cast<ModelParams&>(p));
  for (const auto& v : views) {
    write_pod(os, static_cast<std::uint32_t>(v.name.size()));
    os.write(v.name.data(), static_cast<std::streamsize>(v.name.size()));
    write_pod(os, static_cast<std::uint64_t>(v.size));
    os.write(reinterpret_cast<const char*>(v.data),
             static_cast<std::streamsize>(v.size * sizeof(double)));
  }
  require(os.good(), "write failed for '{}'", path);
}

ModelParams load_params(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open weight file '{}'", path);
  char magic[4];
  is.read(magic, 4);
  require(is.good() && std::equal(magic, magic + 4, kMagic), "'{}' is not a weight file", path);
  const auto version = read_pod<std::uint32_t>(is, path);
  require(version == kVersion, "'{}': weight file version mismatch: expected {}, found {}", path,
          kVersion, version);

  const auto cfg_len = read_pod<std::uint64_t>(is, path);
  std::string text(cfg_len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(cfg_len));
  require(is.good(), "{}: truncated weight file", path);
  std::istringstream block(text);
  const KvConfig cfg = KvConfig::parse(block);

  ModelConfig mc;
  mc.channels = cfg.get_int("channels");
  mc.embed = cfg.get_int("embed");
  mc.hidden = cfg.get_int("hidden");
  mc.inventory = cfg.get_int("inventory");
  mc.layers = cfg.get_int("layers");
  std::vector<std::string> speakers;
  {
    std::istringstream ss(cfg.get("speakers"));
    std::string id;
    while (std::getline(ss, id, ',')) speakers.push_back(id);
  }
  ModelParams p = init_model(mc, speakers, 0);

  for (auto& v : param_views(p)) {
    const auto name_len = read_pod<std::uint32_t>(is, path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    require(is.good() && name == v.name, "{}: expected parameter '{}', found '{}'", path, v.name,
            name);
    const auto count = read_pod<std::uint64_t>(is, path);
    require(count == v.size, "{}: parameter '{}' has {} values, expected {}", path, v.name, count,
            v.size);
    is.read(reinterpret_cast<char*>(v.data),
            static_cast<std::streamsize>(v.size * sizeof(double)));
    require(is.good(), "{}: truncated weight file", path);
  }
  is.peek();
  require(is.eof(), "{}: trailing bytes after the last parameter", path);
  return p;
}

}  // namespace coart
