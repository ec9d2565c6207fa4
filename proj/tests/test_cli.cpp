#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("coart_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct RunResult {
  int code = -1;
  std::string out, err;
};

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

RunResult run(const TempDir& tmp, const std::string& args) {
  const std::string out_path = tmp / "cmd_stdout.txt";
  const std::string err_path = tmp / "cmd_stderr.txt";
  const std::string cmd =
      std::string(COART_BIN) + " " + args + " >" + out_path + " 2>" + err_path;
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
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
    if (slurp((a / rel).string()) != slurp((b / rel).string())) return false;
  return true;
}

std::string fixture(const std::string& name) {
  return std::string(COART_TEST_DATA_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("the full pipeline runs end to end and stays deterministic") {
  TempDir tmp;
  const std::string ds = tmp / "ds";
  const std::string cache = tmp / "cache";

  auto r = run(tmp, "oracle --out " + ds + " --speakers 2 --utterances 5 --min-len 4 --max-len 6 --seed 5");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(ds + "/manifest.csv"));
  CHECK(fs::exists(ds + "/run_config.txt"));

  r = run(tmp, "prepare --manifest " + ds + "/manifest.csv --out " + cache +
                   " --split-fraction 0.8 --seed 7");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("prepare: 10 utterances") != std::string::npos);

  // Identical rerun, byte for byte.
  const std::string cache2 = tmp / "cache2";
  r = run(tmp, "prepare --manifest " + ds + "/manifest.csv --out " + cache2 +
                   " --split-fraction 0.8 --seed 7");
  REQUIRE(r.code == 0);
  CHECK(same_tree(cache, cache2));

  const std::string runA = tmp / "runA";
  const std::string train_args = " --cache " + cache +
                                 " --epochs 2 --hidden 6 --embed 6 --layers 1 --batch-size 4 "
                                 "--learning-rate 0.003 --seed 3";
  r = run(tmp, "train --out " + runA + train_args);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(runA + "/weights.bin"));
  CHECK(fs::exists(runA + "/loss_history.csv"));
  CHECK(r.out.find("learning_rate = 0.003") != std::string::npos);

  const std::string runB = tmp / "runB";
  r = run(tmp, "train --out " + runB + train_args);
  REQUIRE(r.code == 0);
  CHECK(slurp(runA + "/weights.bin") == slurp(runB + "/weights.bin"));
  CHECK(same_tree(runA, runB));

  const std::string gen = tmp / "gen";
  r = run(tmp, "generate --weights " + runA + "/weights.bin --speaker spk0 --phonemes \"P AE T\" --out " +
                   gen + " --cache " + cache);
  REQUIRE(r.code == 0);
  const std::string timing = slurp(gen + "/timing.csv");
  CHECK(timing.find("phoneme,duration_frames") != std::string::npos);
  CHECK(std::count(timing.begin(), timing.end(), '\n') == 4);  // header + 3 phonemes

  const std::string ev = tmp / "ev";
  r = run(tmp, "evaluate --cache " + cache + " --use-truth --out " + ev + " --seed 11");
  REQUIRE(r.code == 0);
  const std::string summary = slurp(ev + "/summary.csv");
  CHECK(summary.find("pcc,2,1,1,1") != std::string::npos);
  CHECK(summary.find("rmse,2,0,0,0") != std::string::npos);

  const std::string ev2 = tmp / "ev2";
  r = run(tmp, "evaluate --cache " + cache + " --weights " + runA + "/weights.bin --out " + ev2 +
                   " --seed 11 --resamples 200");
  REQUIRE(r.code == 0);
  CHECK(slurp(ev2 + "/per_utterance.csv").find("spk") != std::string::npos);

  const std::string vcv = tmp / "vcv";
  r = run(tmp, "demo-vcv --weights " + runA + "/weights.bin --speaker spk0 --out " + vcv);
  REQUIRE(r.code == 0);
  CHECK(slurp(vcv + "/summary.txt").find("divergence_onset") != std::string::npos);
  CHECK(fs::exists(vcv + "/tv_a.csv"));
  CHECK(fs::exists(vcv + "/tv_b.csv"));
}

TEST_CASE("a default train run echoes the stock hyperparameters") {
  TempDir tmp;
  const std::string ds = tmp / "ds";
  const std::string cache = tmp / "cache";
  REQUIRE(run(tmp, "oracle --out " + ds +
                       " --speakers 2 --utterances 3 --min-len 4 --max-len 4 --seed 2")
              .code == 0);
  REQUIRE(run(tmp, "prepare --manifest " + ds + "/manifest.csv --out " + cache + " --seed 1").code ==
          0);

  const std::string out = tmp / "run";
  const auto r = run(tmp, "train --cache " + cache + " --out " + out + " --epochs 1");
  REQUIRE(r.code == 0);
  const std::string echo = slurp(out + "/run_config.txt");
  for (const char* line : {"learning_rate = 0.0004", "batch_size = 64", "gamma = 1",
                           "clip_norm = 10", "hidden = 128", "layers = 2"}) {
    CHECK(r.out.find(line) != std::string::npos);
    CHECK(echo.find(line) != std::string::npos);
  }
}

TEST_CASE("config file values apply and command-line flags win") {
  TempDir tmp;
  const std::string ds = tmp / "ds";
  const std::string cache = tmp / "cache";
  REQUIRE(run(tmp, "oracle --out " + ds +
                       " --speakers 2 --utterances 3 --min-len 4 --max-len 4 --seed 2")
              .code == 0);
  REQUIRE(run(tmp, "prepare --manifest " + ds + "/manifest.csv --out " + cache + " --seed 1").code ==
          0);

  const std::string cfg = tmp / "train.cfg";
  std::ofstream(cfg) << "epochs = 5\nhidden = 4\nembed = 4\nlayers = 1\nbatch_size = 2\n"
                        "learning_rate = 0.002\n";
  const std::string out = tmp / "run";
  const auto r = run(tmp, "train --cache " + cache + " --out " + out + " --config " + cfg +
                              " --epochs 1");
  REQUIRE(r.code == 0);
  const std::string echo = slurp(out + "/run_config.txt");
  CHECK(echo.find("epochs = 1") != std::string::npos);  // flag beats file
  CHECK(echo.find("hidden = 4") != std::string::npos);  // file beats default
  CHECK(echo.find("learning_rate = 0.002") != std::string::npos);
  CHECK(echo.find("batch_size = 2") != std::string::npos);
}

TEST_CASE("a corrupt trajectory row fails fast with path and line") {
  TempDir tmp;
  const std::string ds = tmp / "ds";
  REQUIRE(run(tmp, "oracle --out " + ds +
                       " --speakers 1 --utterances 2 --min-len 4 --max-len 4 --seed 4")
              .code == 0);

  // Break the numeric cell in row 3 of one trajectory file.
  std::string victim;
  for (const auto& e : fs::directory_iterator(ds + "/ema")) {
    victim = e.path().string();
    break;
  }
  REQUIRE(!victim.empty());
  std::string text = slurp(victim);
  const auto nl1 = text.find('\n');
  const auto nl2 = text.find('\n', nl1 + 1);
  const auto comma = text.find(',', nl2 + 1);
  text.replace(nl2 + 1, comma - nl2 - 1, "oops");
  std::ofstream(victim, std::ios::binary) << text;

  const std::string cache = tmp / "cache";
  const auto r = run(tmp, "prepare --manifest " + ds + "/manifest.csv --out " + cache);
  CHECK(r.code != 0);
  CHECK(r.err.find(victim) != std::string::npos);
  CHECK(r.err.find(":3:") != std::string::npos);
  CHECK(!fs::exists(cache));  // no partial outputs
}

TEST_CASE("a missing cache points at the prepare step") {
  TempDir tmp;
  const auto r = run(tmp, "train --cache " + (tmp / "nowhere") + " --out " + (tmp / "run"));
  CHECK(r.code != 0);
  CHECK(r.err.find("prepare") != std::string::npos);
}

TEST_CASE("pair enumeration matches the brute-force fixture byte for byte") {
  TempDir tmp;
  const std::string out = tmp / "pairs";
  const auto r = run(tmp, "pairs --dict " + fixture("fixture_dict.txt") + " --wordlist " +
                              fixture("fixture_words.txt") + " --top-n 100 --out " + out);
  REQUIRE(r.code == 0);
  CHECK(slurp(out + "/pairs.tsv") == slurp(fixture("fixture_pairs_expected.tsv")));
  CHECK(slurp(out + "/summary.txt").find("n_pairs = 10") != std::string::npos);

  // An empty lexicon is an error, not an empty output.
  const std::string empty_list = tmp / "none.txt";
  std::ofstream(empty_list) << "zzzz\n";
  const auto bad = run(tmp, "pairs --dict " + fixture("fixture_dict.txt") + " --wordlist " +
                                empty_list + " --top-n 100 --out " + (tmp / "bad"));
  CHECK(bad.code != 0);
  CHECK(!fs::exists(tmp / "bad"));
}

TEST_CASE("generate looks a word up in the dictionary") {
  TempDir tmp;
  const std::string ds = tmp / "ds";
  const std::string cache = tmp / "cache";
  REQUIRE(run(tmp, "oracle --out " + ds +
                       " --speakers 1 --utterances 3 --min-len 4 --max-len 4 --seed 6")
              .code == 0);
  REQUIRE(run(tmp, "prepare --manifest " + ds + "/manifest.csv --out " + cache).code == 0);
  const std::string runvar = tmp / "run";
  REQUIRE(run(tmp, "train --cache " + cache + " --out " + runvar +
                       " --epochs 1 --hidden 4 --embed 4 --layers 1 --batch-size 2")
              .code == 0);

  const std::string gen = tmp / "gen";
  auto r = run(tmp, "generate --weights " + runvar + "/weights.bin --speaker spk0 --word pat "
                        "--dict " + fixture("fixture_dict.txt") + " --out " + gen);
  REQUIRE(r.code == 0);
  const std::string timing = slurp(gen + "/timing.csv");
  CHECK(std::count(timing.begin(), timing.end(), '\n') == 4);  // header + P AE T
  CHECK(timing.find("P,") != std::string::npos);

  r = run(tmp, "generate --weights " + runvar + "/weights.bin --speaker spk0 --word xyzzy "
                   "--dict " + fixture("fixture_dict.txt") + " --out " + (tmp / "g2"));
  CHECK(r.code != 0);
  CHECK(r.err.find("xyzzy") != std::string::npos);
}

TEST_CASE("extent and resistance pipelines rerun byte-identically") {
  TempDir tmp;
  const std::string pr = tmp / "pr";
  REQUIRE(run(tmp, "pairs --dict " + fixture("fixture_dict.txt") + " --wordlist " +
                       fixture("fixture_words.txt") + " --top-n 100 --out " + pr)
              .code == 0);

  const std::string shared = " --pairs " + pr + "/pairs.tsv --dict " + pr + "/lexicon.txt" +
                             " --wordlist " + pr + "/wordlist.txt --oracle --max-offset 3 " +
                             "--baseline-samples 80 --resamples 400 --seed 13";
  const std::string e1 = tmp / "e1";
  const std::string e2 = tmp / "e2";
  auto r = run(tmp, "extent --out " + e1 + shared);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(e1 + "/extent_signed.csv"));
  CHECK(fs::exists(e1 + "/extent_pooled.csv"));
  CHECK(fs::exists(e1 + "/baseline.csv"));
  REQUIRE(run(tmp, "extent --out " + e2 + shared).code == 0);
  CHECK(same_tree(e1, e2));

  const std::string r1 = tmp / "r1";
  const std::string r2 = tmp / "r2";
  r = run(tmp, "resistance --out " + r1 + shared);
  REQUIRE(r.code == 0);
  const std::string table = slurp(r1 + "/resistance.csv");
  CHECK(table.find("place,n,mean_pct") != std::string::npos);
  REQUIRE(run(tmp, "resistance --out " + r2 + shared).code == 0);
  CHECK(same_tree(r1, r2));

  // Missing weights (no --oracle) is an error before any output exists.
  const auto bad = run(tmp, "extent --out " + (tmp / "bad") + " --pairs " + pr +
                                "/pairs.tsv --dict " + pr + "/lexicon.txt --wordlist " + pr +
                                "/wordlist.txt");
  CHECK(bad.code != 0);
  CHECK(!fs::exists(tmp / "bad"));
}
