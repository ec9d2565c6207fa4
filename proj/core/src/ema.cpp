#include "coart/ema.hpp"

#include <algorithm>
#include <cmath>

#include "coart/common.hpp"

namespace coart {

ChannelLayout ChannelLayout::standard() {
  return ChannelLayout{{"TT", "TB", "TD", "UL", "LL", "LI"}};
}

int ChannelLayout::sensor_index(const std::string& name) const {
  for (int i = 0; i < sensor_count(); ++i)
    if (sensors[static_cast<std::size_t>(i)] == name) return i;
  fail("layout has no sensor '{}'", name);
}

std::vector<std::string> ChannelLayout::position_names() const {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(position_channels()));
  for (const auto& s : sensors) {
    names.push_back(s + "_x");
    names.push_back(s + "_y");
  }
  return names;
}

void validate(const Utterance& utt) {
  require(utt.ema.frames() >= 1, "utterance '{}': empty trajectory", utt.id);
  require(all_finite(utt.ema.values), "utterance '{}': non-finite trajectory value", utt.id);
  require(utt.phonemes.size() >= 1, "utterance '{}': empty phoneme sequence", utt.id);
  if (!utt.alignment) return;
  const auto& spans = *utt.alignment;
  require(static_cast<int>(spans.size()) == utt.phonemes.size(),
          "utterance '{}': {} alignment spans for {} phonemes", utt.id, spans.size(),
          utt.phonemes.size());
  int prev_end = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& sp = spans[i];
    require(sp.start_frame >= prev_end && sp.end_frame > sp.start_frame &&
                sp.end_frame <= utt.ema.frames(),
            "utterance '{}': bad alignment span {} ([{}, {}), t = {})", utt.id, i, sp.start_frame,
            sp.end_frame, utt.ema.frames());
    prev_end = sp.end_frame;
  }
}

Matrix compute_velocities(const Matrix& positions, double rate) {
  const auto t = positions.rows();
  require(t >= 2, "compute_velocities: need at least 2 frames, got {}", t);
  Matrix vel(t, positions.cols());
  vel.row(0) = (positions.row(1) - positions.row(0)) * rate;
  for (Eigen::Index j = 1; j + 1 < t; ++j)
    vel.row(j) = (positions.row(j + 1) - positions.row(j - 1)) * (rate / 2.0);
  vel.row(t - 1) = (positions.row(t - 1) - positions.row(t - 2)) * rate;
  return vel;
}

EmaTrajectory add_velocities(const EmaTrajectory& traj) {
  require(!traj.normalized, "velocities must be computed before normalization");
  require(!traj.has_velocities, "trajectory already has velocity channels");
  EmaTrajectory out;
  out.rate = traj.rate;
  out.has_velocities = true;
  const Matrix vel = compute_velocities(traj.values, traj.rate);
  out.values.resize(traj.values.rows(), 2 * traj.values.cols());
  out.values << traj.values, vel;
  return out;
}

std::map<std::string, SpeakerStats> fit_stats(const std::vector<Utterance>& train) {
  require(!train.empty(), "fit_stats: no training utterances");
  const int channels = train.front().ema.channels();

  struct Acc {
    long frames = 0;
    Vector sum, sumsq;
  };
  std::map<std::string, Acc> acc;
  for (const auto& utt : train) {
    require(utt.ema.channels() == channels, "utterance '{}': {} channels, expected {}", utt.id,
            utt.ema.channels(), channels);
    auto& a = acc[utt.speaker];
    if (a.frames == 0) {
      a.sum = Vector::Zero(channels);
      a.sumsq = Vector::Zero(channels);
    }
    for (int j = 0; j < utt.ema.frames(); ++j) {
      const auto row = utt.ema.values.row(j).transpose();
      a.sum += row;
      a.sumsq += row.cwiseProduct(row);
    }
    a.frames += utt.ema.frames();
  }

  std::map<std::string, SpeakerStats> stats;
  for (const auto& [speaker, a] : acc) {
    require(a.frames > 0, "speaker '{}' has no training frames", speaker);
    SpeakerStats st;
    st.speaker = speaker;
    const double n = static_cast<double>(a.frames);
    st.mean = a.sum / n;
    Vector var = a.sumsq / n - st.mean.cwiseProduct(st.mean);
    st.std = var.cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-6);
    stats.emplace(speaker, std::move(st));
  }
  return stats;
}

EmaTrajectory normalize(const EmaTrajectory& traj, const SpeakerStats& stats) {
  require(stats.mean.size() == traj.channels(),
          "normalize: stats have {} channels, trajectory has {}", stats.mean.size(),
          traj.channels());
  require(!traj.normalized, "trajectory is already normalized");
  EmaTrajectory out = traj;
  out.values = (traj.values.rowwise() - stats.mean.transpose()).array().rowwise() /
               stats.std.transpose().array();
  out.normalized = true;
  return out;
}

EmaTrajectory denormalize(const EmaTrajectory& traj, const SpeakerStats& stats) {
  require(stats.mean.size() == traj.channels(),
          "denormalize: stats have {} channels, trajectory has {}", stats.mean.size(),
          traj.channels());
  EmaTrajectory out = traj;
  out.values = (traj.values.array().rowwise() * stats.std.transpose().array()).rowwise() +
               stats.mean.transpose().array();
  out.normalized = false;
  return out;
}

DatasetSplit make_split(const std::vector<Utterance>& utts, double fraction, Rng rng) {
  require(fraction > 0.0 && fraction <= 1.0, "split fraction {} outside (0, 1]", fraction);
  require(!utts.empty(), "make_split: empty dataset");

  std::map<std::string, std::vector<std::string>> by_speaker;
  for (const auto& utt : utts) by_speaker[utt.speaker].push_back(utt.id);

  DatasetSplit split;
  split.split_fraction = fraction;
  for (auto& [speaker, ids] : by_speaker) {
    std::sort(ids.begin(), ids.end());
    Rng sub = rng.substream(speaker);
    sub.shuffle(ids);
    const auto n = ids.size();
    auto n_train = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n);
    for (std::size_t i = 0; i < n; ++i)
      (i < n_train ? split.train : split.validation).push_back(ids[i]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

}  // namespace coart
