#include "coart/nn.hpp"

#include <cmath>

#include "coart/common.hpp"

namespace coart {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix uniform_matrix(int rows, int cols, int fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / fan_in);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  return m;
}

void view(const std::string& name, Matrix& m, std::vector<ParamView>& out) {
  out.push_back({name, m.data(), static_cast<std::size_t>(m.size())});
}

void view(const std::string& name, Vector& v, std::vector<ParamView>& out) {
  out.push_back({name, v.data(), static_cast<std::size_t>(v.size())});
}

}  // namespace

Matrix reverse_rows(const Matrix& m) { return m.colwise().reverse(); }

Linear make_linear(int out, int in, Rng& rng) {
  return {uniform_matrix(out, in, in, rng), Vector::Zero(out)};
}

Linear zeros_like(const Linear& p) {
  return {Matrix::Zero(p.W.rows(), p.W.cols()), Vector::Zero(p.b.size())};
}

Matrix linear_forward(const Linear& p, const Matrix& X) {
  require(X.cols() == p.W.cols(), "linear: input width {} != expected {}", X.cols(), p.W.cols());
  return (X * p.W.transpose()).rowwise() + p.b.transpose();
}

Matrix linear_backward(const Linear& p, const Matrix& X, const Matrix& dY, Linear& grad) {
  grad.W.noalias() += dY.transpose() * X;
  grad.b += dY.colwise().sum().transpose();
  return dY * p.W;
}

GruDirParams make_gru_dir(int in, int hidden, Rng& rng) {
  GruDirParams p;
  p.Wz = uniform_matrix(hidden, in, in, rng);
  p.Wr = uniform_matrix(hidden, in, in, rng);
  p.Wn = uniform_matrix(hidden, in, in, rng);
  p.Uz = uniform_matrix(hidden, hidden, hidden, rng);
  p.Ur = uniform_matrix(hidden, hidden, hidden, rng);
  p.Un = uniform_matrix(hidden, hidden, hidden, rng);
  p.bz = Vector::Zero(hidden);
  p.br = Vector::Zero(hidden);
  p.bn = Vector::Zero(hidden);
  return p;
}

GruDirParams zeros_like(const GruDirParams& p) {
  GruDirParams z;
  z.Wz = Matrix::Zero(p.Wz.rows(), p.Wz.cols());
  z.Wr = Matrix::Zero(p.Wr.rows(), p.Wr.cols());
  z.Wn = Matrix::Zero(p.Wn.rows(), p.Wn.cols());
  z.Uz = Matrix::Zero(p.Uz.rows(), p.Uz.cols());
  z.Ur = Matrix::Zero(p.Ur.rows(), p.Ur.cols());
  z.Un = Matrix::Zero(p.Un.rows(), p.Un.cols());
  z.bz = Vector::Zero(p.bz.size());
  z.br = Vector::Zero(p.br.size());
  z.bn = Vector::Zero(p.bn.size());
  return z;
}

Matrix gru_dir_forward(const GruDirParams& p, const Matrix& X, GruDirCache* cache) {
  require(X.cols() == p.Wz.cols(), "gru: input width {} != expected {}", X.cols(), p.Wz.cols());
  require(X.rows() >= 1, "gru: empty sequence");
  const auto T = X.rows();
  const auto H = p.Wz.rows();

  // Input contributions for the whole sequence in three gemms.
  const Matrix XZ = X * p.Wz.transpose();
  const Matrix XR = X * p.Wr.transpose();
  const Matrix XN = X * p.Wn.transpose();

  Matrix out(T, H);
  if (cache) {
    cache->X = X;
    cache->Hprev.resize(T, H);
    cache->Z.resize(T, H);
    cache->R.resize(T, H);
    cache->N.resize(T, H);
    cache->RH.resize(T, H);
  }

  Vector h = Vector::Zero(H);
  Vector z(H), r(H), n(H), rh(H);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Vector zpre = XZ.row(t).transpose() + p.Uz * h + p.bz;
    const Vector rpre = XR.row(t).transpose() + p.Ur * h + p.br;
    z = zpre.unaryExpr([](double v) { return sigmoid(v); });
    r = rpre.unaryExpr([](double v) { return sigmoid(v); });
    rh = r.cwiseProduct(h);
    const Vector npre = XN.row(t).transpose() + p.Un * rh + p.bn;
    n = npre.array().tanh();
    if (cache) {
      cache->Hprev.row(t) = h.transpose();
      cache->Z.row(t) = z.transpose();
      cache->R.row(t) = r.transpose();
      cache->N.row(t) = n.transpose();
      cache->RH.row(t) = rh.transpose();
    }
    h = (Vector::Ones(H) - z).cwiseProduct(n) + z.cwiseProduct(h);
    out.row(t) = h.transpose();
  }
  return out;
}

Matrix gru_dir_backward(const GruDirParams& p, const GruDirCache& cache, const Matrix& dH,
                        GruDirParams& grad) {
  const auto T = cache.X.rows();
  const auto H = p.Wz.rows();
  Matrix dZpre(T, H), dRpre(T, H), dNpre(T, H);

  Vector carry = Vector::Zero(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const Vector dh = dH.row(t).transpose() + carry;
    const Vector z = cache.Z.row(t).transpose();
    const Vector r = cache.R.row(t).transpose();
    const Vector n = cache.N.row(t).transpose();
    const Vector hprev = cache.Hprev.row(t).transpose();

    const Vector dz = dh.cwiseProduct(hprev - n);
    const Vector dn = dh.cwiseProduct(Vector::Ones(H) - z);
    Vector dhprev = dh.cwiseProduct(z);

    const Vector dnpre = dn.cwiseProduct(Vector::Ones(H) - n.cwiseProduct(n));
    const Vector drh = p.Un.transpose() * dnpre;
    const Vector dr = drh.cwiseProduct(hprev);
    dhprev += drh.cwiseProduct(r);

    const Vector dzpre = dz.cwiseProduct(z.cwiseProduct(Vector::Ones(H) - z));
    const Vector drpre = dr.cwiseProduct(r.cwiseProduct(Vector::Ones(H) - r));
    dhprev.noalias() += p.Uz.transpose() * dzpre;
    dhprev.noalias() += p.Ur.transpose() * drpre;

    dZpre.row(t) = dzpre.transpose();
    dRpre.row(t) = drpre.transpose();
    dNpre.row(t) = dnpre.transpose();
    carry = dhprev;
  }

  grad.Wz.noalias() += dZpre.transpose() * cache.X;
  grad.Wr.noalias() += dRpre.transpose() * cache.X;
  grad.Wn.noalias() += dNpre.transpose() * cache.X;
  grad.Uz.noalias() += dZpre.transpose() * cache.Hprev;
  grad.Ur.noalias() += dRpre.transpose() * cache.Hprev;
  grad.Un.noalias() += dNpre.transpose() * cache.RH;
  grad.bz += dZpre.colwise().sum().transpose();
  grad.br += dRpre.colwise().sum().transpose();
  grad.bn += dNpre.colwise().sum().transpose();

  return dZpre * p.Wz + dRpre * p.Wr + dNpre * p.Wn;
}

BiGruParams make_bigru(int in, int hidden, Rng& rng) {
  BiGruParams p;
  p.fwd = make_gru_dir(in, hidden, rng);
  p.bwd = make_gru_dir(in, hidden, rng);
  return p;
}

BiGruParams zeros_like(const BiGruParams& p) { return {zeros_like(p.fwd), zeros_like(p.bwd)}; }

Matrix bigru_forward(const BiGruParams& p, const Matrix& X, BiGruCache* cache) {
  const auto H = p.fwd.Wz.rows();
  Matrix out(X.rows(), 2 * H);
  out.leftCols(H) = gru_dir_forward(p.fwd, X, cache ? &cache->fwd : nullptr);
  const Matrix Xrev = reverse_rows(X);
  out.rightCols(H) =
      reverse_rows(gru_dir_forward(p.bwd, Xrev, cache ? &cache->bwd : nullptr));
  return out;
}

Matrix bigru_backward(const BiGruParams& p, const BiGruCache& cache, const Matrix& dOut,
                      BiGruParams& grad) {
  const auto H = p.fwd.Wz.rows();
  Matrix dX = gru_dir_backward(p.fwd, cache.fwd, dOut.leftCols(H), grad.fwd);
  const Matrix dHb = reverse_rows(dOut.rightCols(H));
  dX += reverse_rows(gru_dir_backward(p.bwd, cache.bwd, dHb, grad.bwd));
  return dX;
}

GruStackParams make_gru_stack(int input, int hidden, int n_layers, Rng& rng) {
  require(n_layers >= 1 && hidden >= 1 && input >= 1, "gru stack: bad shape");
  GruStackParams p;
  p.input = input;
  p.hidden = hidden;
  p.layers.push_back(make_bigru(input, hidden, rng));
  for (int l = 1; l < n_layers; ++l) p.layers.push_back(make_bigru(2 * hidden, hidden, rng));
  return p;
}

GruStackParams zeros_like(const GruStackParams& p) {
  GruStackParams z;
  z.input = p.input;
  z.hidden = p.hidden;
  z.layers.reserve(p.layers.size());
  for (const auto& l : p.layers) z.layers.push_back(zeros_like(l));
  return z;
}

Matrix gru_stack_forward(const GruStackParams& p, const Matrix& X, GruStackCache* cache) {
  if (cache) cache->layers.resize(p.layers.size());
  Matrix cur = X;
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    cur = bigru_forward(p.layers[l], cur, cache ? &cache->layers[l] : nullptr);
  return cur;
}

Matrix gru_stack_backward(const GruStackParams& p, const GruStackCache& cache, const Matrix& dOut,
                          GruStackParams& grad) {
  Matrix cur = dOut;
  for (std::size_t l = p.layers.size(); l-- > 0;)
    cur = bigru_backward(p.layers[l], cache.layers[l], cur, grad.layers[l]);
  return cur;
}

void append_views(Linear& p, const std::string& prefix, std::vector<ParamView>& out) {
  view(prefix + ".W", p.W, out);
  view(prefix + ".b", p.b, out);
}

void append_views(GruDirParams& p, const std::string& prefix, std::vector<ParamView>& out) {
  view(prefix + ".Wz", p.Wz, out);
  view(prefix + ".Wr", p.Wr, out);
  view(prefix + ".Wn", p.Wn, out);
  view(prefix + ".Uz", p.Uz, out);
  view(prefix + ".Ur", p.Ur, out);
  view(prefix + ".Un", p.Un, out);
  view(prefix + ".bz", p.bz, out);
  view(prefix + ".br", p.br, out);
  view(prefix + ".bn", p.bn, out);
}

void append_views(GruStackParams& p, const std::string& prefix, std::vector<ParamView>& out) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    append_views(p.layers[l].fwd, fmt::format("{}.l{}.fwd", prefix, l), out);
    append_views(p.layers[l].bwd, fmt::format("{}.l{}.bwd", prefix, l), out);
  }
}

}  // namespace coart
