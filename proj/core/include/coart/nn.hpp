#pragma once

#include <string>
#include <vector>

#include "coart/rng.hpp"
#include "coart/tensor.hpp"

namespace coart {

/// All forward passes are sequence-wise: X is T x in, outputs are T x out.
/// Backward passes take dLoss/dOutput, accumulate parameter gradients
/// into a same-shaped grad struct, and return dLoss/dInput, so layers
/// chain by hand in reverse order.

struct Linear {
  Matrix W;  // out x in
  Vector b;
};

Linear make_linear(int out, int in, Rng& rng);
Linear zeros_like(const Linear& p);
Matrix linear_forward(const Linear& p, const Matrix& X);
Matrix linear_backward(const Linear& p, const Matrix& X, const Matrix& dY, Linear& grad);

/// One GRU direction. Gates: z = sigm(Wz x + Uz h + bz),
/// r = sigm(Wr x + Ur h + br), n = tanh(Wn x + Un (r .* h) + bn),
/// h' = (1 - z) .* n + z .* h, from zero initial state.
struct GruDirParams {
  Matrix Wz, Wr, Wn;  // hidden x in
  Matrix Uz, Ur, Un;  // hidden x hidden
  Vector bz, br, bn;
};

struct GruDirCache {
  Matrix X;              // input as seen by this direction
  Matrix Hprev, Z, R, N, RH;  // per-step internals, T x hidden
};

GruDirParams make_gru_dir(int in, int hidden, Rng& rng);
GruDirParams zeros_like(const GruDirParams& p);
Matrix gru_dir_forward(const GruDirParams& p, const Matrix& X, GruDirCache* cache);
Matrix gru_dir_backward(const GruDirParams& p, const GruDirCache& cache, const Matrix& dH,
                        GruDirParams& grad);

/// Bidirectional layer: forward direction reads X in order, backward
/// direction reads it reversed; output is the T x 2*hidden concatenation.
struct BiGruParams {
  GruDirParams fwd, bwd;
};

struct BiGruCache {
  GruDirCache fwd, bwd;
};

BiGruParams make_bigru(int in, int hidden, Rng& rng);
BiGruParams zeros_like(const BiGruParams& p);
Matrix bigru_forward(const BiGruParams& p, const Matrix& X, BiGruCache* cache);
Matrix bigru_backward(const BiGruParams& p, const BiGruCache& cache, const Matrix& dOut,
                      BiGruParams& grad);

struct GruStackParams {
  std::vector<BiGruParams> layers;
  int input = 0;
  int hidden = 0;
  int output_width() const { return 2 * hidden; }
};

struct GruStackCache {
  std::vector<BiGruCache> layers;
};

GruStackParams make_gru_stack(int input, int hidden, int n_layers, Rng& rng);
GruStackParams zeros_like(const GruStackParams& p);
Matrix gru_stack_forward(const GruStackParams& p, const Matrix& X, GruStackCache* cache);
Matrix gru_stack_backward(const GruStackParams& p, const GruStackCache& cache, const Matrix& dOut,
                          GruStackParams& grad);

/// Flat, named view of a parameter (or gradient) block. Enumeration
/// order is fixed by construction and shared by the optimizer, the
/// weight file, and the finite-difference tests.
struct ParamView {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
};

void append_views(Linear& p, const std::string& prefix, std::vector<ParamView>& out);
void append_views(GruDirParams& p, const std::string& prefix, std::vector<ParamView>& out);
void append_views(GruStackParams& p, const std::string& prefix, std::vector<ParamView>& out);

Matrix reverse_rows(const Matrix& m);

}  // namespace coart
