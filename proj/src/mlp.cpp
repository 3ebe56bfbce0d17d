#include "mvc/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace mvc {

std::size_t EncoderParams::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.data.size() + l.bias.size();
  return n + head.weight.data.size() + head.bias.size();
}

template <typename Params, typename Fn>
static void visit_params(Params& p, Fn&& fn) {
  for (auto& l : p.layers) {
    for (auto& w : l.weight.data) fn(w);
    for (auto& b : l.bias) fn(b);
  }
  for (auto& w : p.head.weight.data) fn(w);
  for (auto& b : p.head.bias) fn(b);
}

void EncoderParams::for_each(const std::function<void(double&)>& fn) {
  visit_params(*this, fn);
}
void EncoderParams::for_each(const std::function<void(double)>& fn) const {
  visit_params(*this, fn);
}
void ParamGrads::for_each(const std::function<void(double)>& fn) const {
  visit_params(*this, fn);
}

std::vector<double> EncoderParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for_each([&](double v) { flat.push_back(v); });
  return flat;
}

std::vector<double> ParamGrads::flatten() const {
  std::vector<double> flat;
  for_each([&](double v) { flat.push_back(v); });
  return flat;
}

void EncoderParams::unflatten(std::span<const double> flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("unflatten: size mismatch");
  std::size_t idx = 0;
  for_each([&](double& v) { v = flat[idx++]; });
}

ParamGrads ParamGrads::zeros_like(const EncoderParams& p) {
  ParamGrads g;
  g.layers.reserve(p.layers.size());
  for (const auto& l : p.layers) {
    EncoderParams::Layer zl;
    zl.weight = Matrix(l.weight.rows, l.weight.cols);
    zl.bias.assign(l.bias.size(), 0.0);
    g.layers.push_back(std::move(zl));
  }
  g.head.weight = Matrix(p.head.weight.rows, p.head.weight.cols);
  g.head.bias.assign(p.head.bias.size(), 0.0);
  return g;
}

void ParamGrads::add(const ParamGrads& other) {
  if (layers.size() != other.layers.size())
    throw std::invalid_argument("ParamGrads::add: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& a = layers[l];
    const auto& b = other.layers[l];
    for (std::size_t i = 0; i < a.weight.data.size(); ++i)
      a.weight.data[i] += b.weight.data[i];
    for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += b.bias[i];
  }
  for (std::size_t i = 0; i < head.weight.data.size(); ++i)
    head.weight.data[i] += other.head.weight.data[i];
  for (std::size_t i = 0; i < head.bias.size(); ++i)
    head.bias[i] += other.head.bias[i];
}

EncoderParams init_encoder(std::size_t input_dim,
                           const std::vector<std::size_t>& hidden_dims,
                           std::size_t embed_dim, Rng& rng) {
  if (input_dim == 0 || embed_dim == 0)
    throw std::invalid_argument("init_encoder: zero dimension");
  EncoderParams p;
  p.embed_dim = embed_dim;
  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  for (auto h : hidden_dims) dims.push_back(h);
  dims.push_back(embed_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    EncoderParams::Layer layer;
    layer.weight = Matrix(dims[l], dims[l + 1]);
    layer.bias.assign(dims[l + 1], 0.0);
    const bool last = (l + 2 == dims.size());
    const double scale = last ? std::sqrt(1.0 / static_cast<double>(dims[l]))
                              : std::sqrt(2.0 / static_cast<double>(dims[l]));
    for (auto& w : layer.weight.data) w = rng.normal() * scale;
    if (last) {
      // Small nonzero bias keeps a fully ReLU-dead input away from the
      // zero embedding, which the normalizer rejects as degenerate.
      for (auto& b : layer.bias) b = rng.normal() * 0.01;
    }
    p.layers.push_back(std::move(layer));
  }
  p.head.weight = Matrix(embed_dim, 1);
  p.head.bias.assign(1, 0.0);
  return p;
}

std::pair<Matrix, ForwardCache> mlp_forward(const EncoderParams& params,
                                            const Matrix& inputs) {
  if (params.layers.empty())
    throw std::invalid_argument("mlp_forward: empty encoder");
  if (inputs.cols != params.input_dim())
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  ForwardCache cache;
  cache.input = inputs;
  Matrix act = inputs;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Matrix pre = matmul(act, params.layers[l].weight);
    add_row_vector(pre, params.layers[l].bias);
    cache.pre_act.push_back(pre);
    const bool last = (l + 1 == params.layers.size());
    if (!last) {
      for (auto& x : pre.data) x = x > 0.0 ? x : 0.0;
    }
    cache.post_act.push_back(pre);
    act = std::move(pre);
  }
  return {act, std::move(cache)};
}

BackwardResult mlp_backward(const EncoderParams& params,
                            const ForwardCache& cache,
                            const Matrix& grad_embeddings) {
  const std::size_t L = params.layers.size();
  if (cache.pre_act.size() != L)
    throw std::invalid_argument("mlp_backward: cache/params mismatch");
  if (grad_embeddings.rows != cache.input.rows ||
      grad_embeddings.cols != params.embed_dim)
    throw std::invalid_argument("mlp_backward: upstream gradient shape");
  BackwardResult res;
  res.grads = ParamGrads::zeros_like(params);
  Matrix delta = grad_embeddings;  // gradient w.r.t. layer output
  for (std::size_t l = L; l-- > 0;) {
    const bool last = (l + 1 == L);
    if (!last) {
      // ReLU gate on the stored pre-activation.
      const Matrix& pre = cache.pre_act[l];
      for (std::size_t i = 0; i < delta.data.size(); ++i)
        if (pre.data[i] <= 0.0) delta.data[i] = 0.0;
    }
    const Matrix& in = (l == 0) ? cache.input : cache.post_act[l - 1];
    res.grads.layers[l].weight = matmul_trans_a(in, delta);
    auto& bgrad = res.grads.layers[l].bias;
    for (std::size_t i = 0; i < delta.rows; ++i)
      for (std::size_t j = 0; j < delta.cols; ++j)
        bgrad[j] += delta.at(i, j);
    delta = matmul_trans_b(delta, params.layers[l].weight);
  }
  res.grad_inputs = std::move(delta);
  return res;
}

std::vector<double> head_forward(const EncoderParams& params,
                                 const Matrix& embeddings) {
  if (embeddings.cols != params.head.weight.rows)
    throw std::invalid_argument("head_forward: embedding dimension mismatch");
  std::vector<double> logits(embeddings.rows, params.head.bias[0]);
  for (std::size_t i = 0; i < embeddings.rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < embeddings.cols; ++j)
      acc += embeddings.at(i, j) * params.head.weight.at(j, 0);
    logits[i] += acc;
  }
  return logits;
}

namespace {

void append_layer(std::string& blob, const EncoderParams::Layer& l) {
  io::append_u32_le(blob, static_cast<std::uint32_t>(l.weight.rows));
  io::append_u32_le(blob, static_cast<std::uint32_t>(l.weight.cols));
  for (double w : l.weight.data) io::append_f64_le(blob, w);
  for (double b : l.bias) io::append_f64_le(blob, b);
}

EncoderParams::Layer read_layer(const unsigned char* p, std::size_t size,
                                std::size_t& off) {
  if (off + 8 > size) throw std::runtime_error("load_encoder: truncated file");
  EncoderParams::Layer l;
  const std::uint32_t rows = io::read_u32_le(p + off);
  const std::uint32_t cols = io::read_u32_le(p + off + 4);
  off += 8;
  const std::size_t need = 8ULL * (static_cast<std::size_t>(rows) * cols + cols);
  if (off + need > size) throw std::runtime_error("load_encoder: truncated file");
  l.weight = Matrix(rows, cols);
  for (auto& w : l.weight.data) {
    w = io::read_f64_le(p + off);
    off += 8;
  }
  l.bias.resize(cols);
  for (auto& b : l.bias) {
    b = io::read_f64_le(p + off);
    off += 8;
  }
  return l;
}

}  // namespace

void save_encoder(const EncoderParams& params,
                  const std::filesystem::path& path) {
  std::string blob = "MVCP";
  io::append_u32_le(blob, static_cast<std::uint32_t>(params.layers.size()));
  io::append_u32_le(blob, static_cast<std::uint32_t>(params.embed_dim));
  for (const auto& l : params.layers) append_layer(blob, l);
  append_layer(blob, params.head);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("save_encoder: cannot write " + path.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

EncoderParams load_encoder(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("load_encoder: cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "MVCP", 4) != 0)
    throw std::runtime_error("load_encoder: not an encoder file: " +
                             path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t n_layers = io::read_u32_le(p + 4);
  EncoderParams params;
  params.embed_dim = io::read_u32_le(p + 8);
  std::size_t off = 12;
  for (std::uint32_t l = 0; l < n_layers; ++l)
    params.layers.push_back(read_layer(p, bytes.size(), off));
  params.head = read_layer(p, bytes.size(), off);
  if (off != bytes.size())
    throw std::runtime_error("load_encoder: trailing bytes in " +
                             path.string());
  return params;
}

Matrix head_backward(const EncoderParams& params, const Matrix& embeddings,
                     const std::vector<double>& grad_logits,
                     ParamGrads& grads) {
  if (grad_logits.size() != embeddings.rows)
    throw std::invalid_argument("head_backward: gradient length mismatch");
  Matrix grad_emb(embeddings.rows, embeddings.cols);
  for (std::size_t i = 0; i < embeddings.rows; ++i) {
    const double g = grad_logits[i];
    for (std::size_t j = 0; j < embeddings.cols; ++j) {
      grads.head.weight.at(j, 0) += embeddings.at(i, j) * g;
      grad_emb.at(i, j) = g * params.head.weight.at(j, 0);
    }
    grads.head.bias[0] += g;
  }
  return grad_emb;
}

}  // namespace mvc
