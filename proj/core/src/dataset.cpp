#include "coart/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "coart/common.hpp"
#include "coart/csv.hpp"

namespace fs = std::filesystem;

namespace coart {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  require(os.good(), "cannot open '{}' for writing", path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "cannot open '{}'", path);
  return is;
}

std::string chomp(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::vector<std::string> full_channel_names(const ChannelLayout& layout) {
  std::vector<std::string> names = layout.position_names();
  for (const auto& s : layout.sensors) {
    names.push_back(s + "_vx");
    names.push_back(s + "_vy");
  }
  return names;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  auto is = open_in(path);
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), "{}: empty manifest", path);
  require(chomp(line) == "id,speaker,trajectory,alignment,phonemes,split",
          "{}:1: bad manifest header", path);
  std::vector<ManifestEntry> entries;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty()) continue;
    auto f = split(line, ',');
    require(f.size() == 6, "{}:{}: expected 6 fields, got {}", path, lineno, f.size());
    require(!f[0].empty() && !f[1].empty() && !f[2].empty(), "{}:{}: missing id/speaker/trajectory",
            path, lineno);
    require(f[5].empty() || f[5] == "train" || f[5] == "validation",
            "{}:{}: split must be train, validation, or empty", path, lineno);
    entries.push_back({f[0], f[1], f[2], f[3], f[4], f[5]});
  }
  require(!entries.empty(), "{}: manifest lists no utterances", path);
  return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  auto os = open_out(path);
  os << "id,speaker,trajectory,alignment,phonemes,split\n";
  for (const auto& e : entries)
    os << e.id << ',' << e.speaker << ',' << e.trajectory_path << ',' << e.alignment_path << ','
       << e.phonemes << ',' << e.split << '\n';
  require(os.good(), "write failed for '{}'", path);
}

void write_ema_csv(const std::string& path, const EmaTrajectory& traj,
                   const std::vector<std::string>& channel_names) {
  require(static_cast<int>(channel_names.size()) == traj.channels(),
          "'{}': {} channel names for {} channels", path, channel_names.size(), traj.channels());
  auto os = open_out(path);
  os << "time_s";
  for (const auto& n : channel_names) os << ',' << n;
  os << '\n';
  for (int j = 0; j < traj.frames(); ++j) {
    os << format_number(j / traj.rate);
    for (int c = 0; c < traj.channels(); ++c) os << ',' << format_number(traj.values(j, c));
    os << '\n';
  }
  require(os.good(), "write failed for '{}'", path);
}

EmaTrajectory read_ema_csv(const std::string& path, int expected_channels) {
  auto is = open_in(path);
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), "{}: empty trajectory file", path);
  const auto header = split(chomp(line), ',');
  require(static_cast<int>(header.size()) == expected_channels + 1 && header[0] == "time_s",
          "{}:1: expected header 'time_s' plus {} channels, got {} columns", path,
          expected_channels, header.size());

  std::vector<double> times;
  std::vector<double> flat;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    require(static_cast<int>(f.size()) == expected_channels + 1,
            "{}:{}: expected {} fields, got {}", path, lineno, expected_channels + 1, f.size());
    const std::string where = fmt::format("{}:{}", path, lineno);
    times.push_back(parse_double(f[0], where));
    for (int c = 1; c <= expected_channels; ++c)
      flat.push_back(parse_double(f[static_cast<std::size_t>(c)], where));
  }
  const int t = static_cast<int>(times.size());
  require(t >= 1, "{}: no frames", path);

  EmaTrajectory traj;
  traj.rate = 100.0;
  if (t >= 2) {
    require(times.back() > times.front(), "{}: time column is not increasing", path);
    traj.rate = std::lround((t - 1) / (times.back() - times.front()));
    require(traj.rate >= 1, "{}: implausible frame rate", path);
  }
  for (int j = 0; j < t; ++j)
    require(std::abs(times[static_cast<std::size_t>(j)] - j / traj.rate) < 1e-6,
            "{}: frame {} timestamp {} off the {}-Hz grid", path, j,
            times[static_cast<std::size_t>(j)], traj.rate);

  traj.values = Eigen::Map<Matrix>(flat.data(), t, expected_channels);
  require(all_finite(traj.values), "{}: non-finite value", path);
  return traj;
}

void write_alignment_csv(const std::string& path, const std::vector<AlignSpan>& spans,
                         const PhonemeSequence& seq, double rate) {
  require(static_cast<int>(spans.size()) == seq.size(), "'{}': {} spans for {} phonemes", path,
          spans.size(), seq.size());
  auto os = open_out(path);
  os << "start_s,end_s,phoneme\n";
  for (std::size_t i = 0; i < spans.size(); ++i)
    os << format_number(spans[i].start_frame / rate) << ',' << format_number(spans[i].end_frame / rate)
       << ',' << seq.tokens[i].symbol << '\n';
  require(os.good(), "write failed for '{}'", path);
}

std::vector<AlignSpan> read_alignment_csv(const std::string& path, const PhonemeSequence& seq,
                                          double rate) {
  auto is = open_in(path);
  std::string line;
  require(static_cast<bool>(std::getline(is, line)) && chomp(line) == "start_s,end_s,phoneme",
          "{}:1: bad alignment header", path);
  std::vector<AlignSpan> spans;
  int lineno = 1;
  std::size_t i = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    require(f.size() == 3, "{}:{}: expected 3 fields", path, lineno);
    const std::string where = fmt::format("{}:{}", path, lineno);
    AlignSpan sp;
    sp.start_frame = static_cast<int>(std::lround(parse_double(f[0], where) * rate));
    sp.end_frame = static_cast<int>(std::lround(parse_double(f[1], where) * rate));
    require(i < seq.tokens.size() && f[2] == seq.tokens[i].symbol,
            "{}:{}: phoneme '{}' does not match the utterance sequence", path, lineno, f[2]);
    spans.push_back(sp);
    ++i;
  }
  require(i == seq.tokens.size(), "{}: {} spans for {} phonemes", path, i, seq.tokens.size());
  return spans;
}

Dataset load_dataset(const std::string& manifest_path, const Inventory& inv) {
  const auto entries = read_manifest(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();

  Dataset ds;
  ds.layout = ChannelLayout::standard();
  for (const auto& e : entries) {
    Utterance utt;
    utt.id = e.id;
    utt.speaker = e.speaker;
    utt.phonemes = parse_sequence(e.phonemes, inv);
    utt.phonemes.source_word = e.id;
    utt.ema = read_ema_csv((base / e.trajectory_path).string(), ds.layout.position_channels());
    if (!e.alignment_path.empty())
      utt.alignment =
          read_alignment_csv((base / e.alignment_path).string(), utt.phonemes, utt.ema.rate);
    validate(utt);
    if (!e.split.empty()) ds.requested_split[e.id] = e.split;
    ds.utterances.push_back(std::move(utt));
  }
  require(ds.requested_split.empty() || ds.requested_split.size() == ds.utterances.size(),
          "{}: split column must be set on every row or on none", manifest_path);
  std::sort(ds.utterances.begin(), ds.utterances.end(),
            [](const Utterance& a, const Utterance& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < ds.utterances.size(); ++i)
    require(ds.utterances[i].id != ds.utterances[i - 1].id, "{}: duplicate utterance id '{}'",
            manifest_path, ds.utterances[i].id);
  return ds;
}

void write_dataset(const std::string& dir, const std::vector<Utterance>& utts,
                   const ChannelLayout& layout) {
  fs::create_directories(fs::path(dir) / "ema");
  fs::create_directories(fs::path(dir) / "align");
  std::vector<const Utterance*> sorted;
  sorted.reserve(utts.size());
  for (const auto& u : utts) sorted.push_back(&u);
  std::sort(sorted.begin(), sorted.end(),
            [](const Utterance* a, const Utterance* b) { return a->id < b->id; });

  std::vector<ManifestEntry> entries;
  for (const Utterance* u : sorted) {
    ManifestEntry e;
    e.id = u->id;
    e.speaker = u->speaker;
    e.trajectory_path = "ema/" + u->id + ".csv";
    e.phonemes = u->phonemes.str();
    write_ema_csv((fs::path(dir) / e.trajectory_path).string(), u->ema, layout.position_names());
    if (u->alignment) {
      e.alignment_path = "align/" + u->id + ".csv";
      write_alignment_csv((fs::path(dir) / e.alignment_path).string(), *u->alignment, u->phonemes,
                          u->ema.rate);
    }
    entries.push_back(std::move(e));
  }
  write_manifest((fs::path(dir) / "manifest.csv").string(), entries);
}

const Utterance& PreparedDataset::by_id(const std::string& id) const {
  auto it = std::lower_bound(utterances.begin(), utterances.end(), id,
                             [](const Utterance& u, const std::string& key) { return u.id < key; });
  if (it == utterances.end() || it->id != id) fail("unknown utterance id '{}'", id);
  return *it;
}

std::vector<const Utterance*> PreparedDataset::train() const {
  std::vector<const Utterance*> out;
  out.reserve(split.train.size());
  for (const auto& id : split.train) out.push_back(&by_id(id));
  return out;
}

std::vector<const Utterance*> PreparedDataset::validation() const {
  std::vector<const Utterance*> out;
  out.reserve(split.validation.size());
  for (const auto& id : split.validation) out.push_back(&by_id(id));
  return out;
}

PreparedDataset prepare_dataset(const Dataset& ds, double split_fraction, std::uint64_t seed) {
  require(!ds.utterances.empty(), "prepare: empty dataset");
  PreparedDataset prep;
  prep.layout = ds.layout;
  prep.rate = ds.utterances.front().ema.rate;

  std::vector<Utterance> widened;
  widened.reserve(ds.utterances.size());
  for (const auto& utt : ds.utterances) {
    require(utt.ema.channels() == ds.layout.position_channels(),
            "utterance '{}': expected {} position channels, got {}", utt.id,
            ds.layout.position_channels(), utt.ema.channels());
    require(utt.ema.rate == prep.rate, "utterance '{}': frame rate {} differs from {}", utt.id,
            utt.ema.rate, prep.rate);
    Utterance w = utt;
    w.ema = add_velocities(utt.ema);
    widened.push_back(std::move(w));
  }

  if (!ds.requested_split.empty()) {
    prep.split.split_fraction = split_fraction;
    for (const auto& [id, part] : ds.requested_split)
      (part == "train" ? prep.split.train : prep.split.validation).push_back(id);
  } else {
    prep.split = make_split(widened, split_fraction, Rng(seed).substream("split"));
  }

  std::map<std::string, std::vector<Utterance>> train_by_speaker;
  {
    std::vector<Utterance> train_utts;
    std::map<std::string, bool> speaker_covered;
    for (const auto& utt : widened) speaker_covered[utt.speaker] = false;
    for (const auto& id : prep.split.train) {
      auto it = std::find_if(widened.begin(), widened.end(),
                             [&](const Utterance& u) { return u.id == id; });
      require(it != widened.end(), "split names unknown utterance '{}'", id);
      speaker_covered[it->speaker] = true;
      train_utts.push_back(*it);
    }
    for (const auto& [speaker, covered] : speaker_covered)
      require(covered, "speaker '{}' has no training utterance; cannot fit stats", speaker);
    prep.stats = fit_stats(train_utts);
  }

  for (auto& utt : widened) utt.ema = normalize(utt.ema, prep.stats.at(utt.speaker));
  prep.utterances = std::move(widened);
  return prep;
}

void write_prepared(const std::string& dir, const PreparedDataset& prep) {
  fs::create_directories(fs::path(dir) / "utterances");
  const auto names = full_channel_names(prep.layout);

  {
    auto os = open_out((fs::path(dir) / "prepared.cfg").string());
    std::string sensors;
    for (const auto& s : prep.layout.sensors) sensors += (sensors.empty() ? "" : ",") + s;
    os << "channels = " << prep.layout.total_channels() << '\n'
       << "normalized = 1\n"
       << "rate = " << format_number(prep.rate) << '\n'
       << "sensors = " << sensors << '\n'
       << "split_fraction = " << format_number(prep.split.split_fraction) << '\n';
    require(os.good(), "write failed for prepared.cfg");
  }
  {
    auto os = open_out((fs::path(dir) / "stats.csv").string());
    os << "speaker,channel,mean,std\n";
    for (const auto& [speaker, st] : prep.stats)
      for (int c = 0; c < static_cast<int>(names.size()); ++c)
        os << speaker << ',' << names[static_cast<std::size_t>(c)] << ','
           << format_number(st.mean[c]) << ',' << format_number(st.std[c]) << '\n';
    require(os.good(), "write failed for stats.csv");
  }
  {
    auto os = open_out((fs::path(dir) / "split.csv").string());
    os << "id,split\n";
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& id : prep.split.train) rows.emplace_back(id, "train");
    for (const auto& id : prep.split.validation) rows.emplace_back(id, "validation");
    std::sort(rows.begin(), rows.end());
    for (const auto& [id, part] : rows) os << id << ',' << part << '\n';
    require(os.good(), "write failed for split.csv");
  }
  {
    auto os = open_out((fs::path(dir) / "index.csv").string());
    os << "id,speaker,phonemes,has_alignment\n";
    for (const auto& utt : prep.utterances) {
      os << utt.id << ',' << utt.speaker << ',' << utt.phonemes.str() << ','
         << (utt.alignment ? 1 : 0) << '\n';
      write_ema_csv((fs::path(dir) / "utterances" / (utt.id + ".csv")).string(), utt.ema, names);
      if (utt.alignment)
        write_alignment_csv((fs::path(dir) / "utterances" / (utt.id + ".align.csv")).string(),
                            *utt.alignment, utt.phonemes, utt.ema.rate);
    }
    require(os.good(), "write failed for index.csv");
  }
}

PreparedDataset load_prepared(const std::string& dir, const Inventory& inv) {
  require(fs::exists(fs::path(dir) / "prepared.cfg"),
          "'{}' is not a prepared dataset cache (run the prepare command first)", dir);
  PreparedDataset prep;
  {
    auto is = open_in((fs::path(dir) / "prepared.cfg").string());
    std::string line;
    std::map<std::string, std::string> kv;
    while (std::getline(is, line)) {
      line = chomp(line);
      if (line.empty()) continue;
      const auto eq = line.find(" = ");
      require(eq != std::string::npos, "prepared.cfg: bad line '{}'", line);
      kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    prep.layout.sensors = split(kv.at("sensors"), ',');
    prep.rate = parse_double(kv.at("rate"), "prepared.cfg rate");
    prep.split.split_fraction =
        parse_double(kv.at("split_fraction"), "prepared.cfg split_fraction");
    require(parse_int(kv.at("channels"), "prepared.cfg channels") == prep.layout.total_channels(),
            "prepared.cfg: channel count mismatch");
  }
  const auto names = full_channel_names(prep.layout);
  {
    auto is = open_in((fs::path(dir) / "stats.csv").string());
    std::string line;
    std::getline(is, line);
    require(chomp(line) == "speaker,channel,mean,std", "stats.csv: bad header");
    int lineno = 1;
    while (std::getline(is, line)) {
      ++lineno;
      line = chomp(line);
      if (line.empty()) continue;
      const auto f = split(line, ',');
      require(f.size() == 4, "stats.csv:{}: expected 4 fields", lineno);
      auto& st = prep.stats[f[0]];
      if (st.mean.size() == 0) {
        st.speaker = f[0];
        st.mean = Vector::Zero(static_cast<Eigen::Index>(names.size()));
        st.std = Vector::Ones(static_cast<Eigen::Index>(names.size()));
      }
      const auto it = std::find(names.begin(), names.end(), f[1]);
      require(it != names.end(), "stats.csv:{}: unknown channel '{}'", lineno, f[1]);
      const auto c = it - names.begin();
      st.mean[c] = parse_double(f[2], "stats.csv mean");
      st.std[c] = parse_double(f[3], "stats.csv std");
    }
  }
  {
    auto is = open_in((fs::path(dir) / "split.csv").string());
    std::string line;
    std::getline(is, line);
    require(chomp(line) == "id,split", "split.csv: bad header");
    while (std::getline(is, line)) {
      line = chomp(line);
      if (line.empty()) continue;
      const auto f = split(line, ',');
      require(f.size() == 2 && (f[1] == "train" || f[1] == "validation"), "split.csv: bad row '{}'",
              line);
      (f[1] == "train" ? prep.split.train : prep.split.validation).push_back(f[0]);
    }
  }
  {
    auto is = open_in((fs::path(dir) / "index.csv").string());
    std::string line;
    std::getline(is, line);
    require(chomp(line) == "id,speaker,phonemes,has_alignment", "index.csv: bad header");
    int lineno = 1;
    while (std::getline(is, line)) {
      ++lineno;
      line = chomp(line);
      if (line.empty()) continue;
      const auto f = split(line, ',');
      require(f.size() == 4, "index.csv:{}: expected 4 fields", lineno);
      Utterance utt;
      utt.id = f[0];
      utt.speaker = f[1];
      utt.phonemes = parse_sequence(f[2], inv);
      utt.phonemes.source_word = utt.id;
      utt.ema = read_ema_csv((fs::path(dir) / "utterances" / (utt.id + ".csv")).string(),
                             prep.layout.total_channels());
      utt.ema.has_velocities = true;
      utt.ema.normalized = true;
      if (f[3] == "1")
        utt.alignment = read_alignment_csv(
            (fs::path(dir) / "utterances" / (utt.id + ".align.csv")).string(), utt.phonemes,
            utt.ema.rate);
      validate(utt);
      prep.utterances.push_back(std::move(utt));
    }
  }
  return prep;
}

}  // namespace coart
