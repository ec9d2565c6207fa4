// Microbenchmarks for the hot paths: the alignment kernels that dominate
// training, the recurrent layers, the timing expansion, the full
// per-utterance loss/grad step, and pair enumeration on the snapshot.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "coart/alignment.hpp"
#include "coart/analysis.hpp"
#include "coart/lexicon.hpp"
#include "coart/model.hpp"
#include "coart/nn.hpp"
#include "coart/oracle.hpp"
#include "coart/rng.hpp"
#include "coart/timing.hpp"

namespace {

using namespace coart;

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

void BM_sdtw(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0));
  Rng rng(1);
  const Matrix a = random_matrix(t, 12, rng);
  const Matrix b = random_matrix(t + t / 10, 12, rng);
  for (auto _ : state) benchmark::DoNotOptimize(sdtw(a, b, 1.0));
  state.SetItemsProcessed(state.iterations() * t * (t + t / 10));
}
BENCHMARK(BM_sdtw)->Arg(50)->Arg(100)->Arg(200);

void BM_sdtw_grad(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0));
  Rng rng(2);
  const Matrix a = random_matrix(t, 12, rng);
  const Matrix b = random_matrix(t + t / 10, 12, rng);
  for (auto _ : state) benchmark::DoNotOptimize(sdtw_grad(a, b, 1.0));
  state.SetItemsProcessed(state.iterations() * t * (t + t / 10));
}
BENCHMARK(BM_sdtw_grad)->Arg(50)->Arg(100)->Arg(200);

void BM_dtw_align(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0));
  Rng rng(3);
  const Matrix a = random_matrix(t, 12, rng);
  const Matrix b = random_matrix(t + t / 10, 12, rng);
  for (auto _ : state) benchmark::DoNotOptimize(dtw_align(a, b));
}
BENCHMARK(BM_dtw_align)->Arg(100)->Arg(400);

void BM_bigru_forward(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  Rng rng(4);
  const BiGruParams p = make_bigru(hidden, hidden, rng);
  const Matrix x = random_matrix(100, hidden, rng);
  for (auto _ : state) benchmark::DoNotOptimize(bigru_forward(p, x, nullptr));
}
BENCHMARK(BM_bigru_forward)->Arg(32)->Arg(128);

void BM_gru_stack_backward(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  Rng rng(5);
  const GruStackParams p = make_gru_stack(hidden, hidden, 2, rng);
  const Matrix x = random_matrix(100, hidden, rng);
  const Matrix dout = random_matrix(100, 2 * hidden, rng);
  GruStackParams grad = zeros_like(p);
  for (auto _ : state) {
    GruStackCache cache;
    gru_stack_forward(p, x, &cache);
    benchmark::DoNotOptimize(gru_stack_backward(p, cache, dout, grad));
  }
}
BENCHMARK(BM_gru_stack_backward)->Arg(32)->Arg(128);

void BM_gaussian_expand(benchmark::State& state) {
  TimingParams tp;
  const int n = 10;
  tp.mu = Vector(n);
  tp.sigma = Vector::Constant(n, 2.0);
  tp.durations = Vector::Constant(n, 9.0);
  for (int i = 0; i < n; ++i) tp.mu[i] = 9.0 * i + 4.0;
  tp.sum_durations = 9.0 * n;
  tp.total_frames = 9 * n;
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_expand(tp, 9 * n));
}
BENCHMARK(BM_gaussian_expand);

void BM_utterance_loss_grad(benchmark::State& state) {
  const Inventory& inv = Inventory::arpabet();
  OracleConfig ocfg;
  ocfg.speakers = 1;
  ocfg.utterances_per_speaker = 1;
  ocfg.min_len = ocfg.max_len = 8;
  const OracleDataset ods = synth_oracle(ocfg, inv);
  Dataset ds;
  ds.layout = ods.oracle.layout;
  ds.utterances = ods.utterances;
  const PreparedDataset prep = prepare_dataset(ds, 1.0, 0);

  ModelConfig mcfg;
  mcfg.inventory = inv.size();
  mcfg.embed = 32;
  mcfg.hidden = 32;
  mcfg.layers = 2;
  mcfg.channels = prep.layout.total_channels();
  ModelParams model = init_model(mcfg, {prep.utterances[0].speaker}, 0);
  ModelParams grad = zeros_like(model);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        utterance_loss_grad(model, prep.utterances[0], 1.0, 0.05, inv, &grad));
}
BENCHMARK(BM_utterance_loss_grad);

void BM_generate(benchmark::State& state) {
  const Inventory& inv = Inventory::arpabet();
  ModelConfig mcfg;
  mcfg.inventory = inv.size();
  mcfg.embed = 32;
  mcfg.hidden = 32;
  mcfg.layers = 2;
  mcfg.channels = 24;
  const ModelParams model = init_model(mcfg, {"spk"}, 0);
  const PhonemeSequence seq = parse_sequence("P AE T AH K IY N OW", inv);
  for (auto _ : state) benchmark::DoNotOptimize(generate(model, seq, "spk", inv));
}
BENCHMARK(BM_generate);

void BM_enumerate_pairs(benchmark::State& state) {
  static const Lexicon lex = parse_lexicon_files(std::string(COART_DATA_DIR) + "/cmudict.dict",
                                                 std::string(COART_DATA_DIR) + "/wordlist.txt",
                                                 10000, Inventory::arpabet());
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_minimal_pairs(lex));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(lex.size()));
}
BENCHMARK(BM_enumerate_pairs);

void BM_oracle_word(benchmark::State& state) {
  const Inventory& inv = Inventory::arpabet();
  OracleConfig ocfg;
  const Oracle oracle = make_oracle(ocfg, inv);
  OracleWordGenerator gen(oracle);
  const PhonemeSequence seq = parse_sequence("P AE T AH K IY N OW", inv);
  for (auto _ : state) benchmark::DoNotOptimize(gen.generate_word(seq));
}
BENCHMARK(BM_oracle_word);

}  // namespace

BENCHMARK_MAIN();
