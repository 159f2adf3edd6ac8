/* Copyright 2026 The nvtx Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "nvtx/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "nvtx/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "NVTX encoding assumes a little-endian host");

namespace nvtx {

namespace {

constexpr char kMagic[4] = {'N', 'V', 'T', 'X'};

// Visits every tensor with a stable name. Vectors are rank 1, matrices rank 2.
template <class W, class F>
void visit_tensors(W& w, F&& f) {
  auto ln = [&](const std::string& name, auto& p) {
    f(name + ".gamma", p.gamma);
    f(name + ".beta", p.beta);
  };
  auto attn = [&](const std::string& name, auto& b) {
    f(name + ".wq", b.attn.wq);
    f(name + ".wk", b.attn.wk);
    f(name + ".wv", b.attn.wv);
    f(name + ".bq", b.attn.bq);
    f(name + ".bk", b.attn.bk);
    f(name + ".bv", b.attn.bv);
    f(name + ".wo", b.wo);
    f(name + ".bo", b.bo);
  };
  auto ffn = [&](const std::string& name, auto& p) {
    f(name + ".w1", p.w1);
    f(name + ".b1", p.b1);
    f(name + ".w2", p.w2);
    f(name + ".b2", p.b2);
  };
  f(std::string("tok_emb"), w.tok_emb);
  f(std::string("pos_enc"), w.pos_enc);
  for (std::size_t l = 0; l < w.enc.size(); ++l) {
    const std::string p = "enc." + std::to_string(l);
    ln(p + ".ln_attn", w.enc[l].ln_attn);
    attn(p + ".self_attn", w.enc[l].self_attn);
    ln(p + ".ln_ffn", w.enc[l].ln_ffn);
    ffn(p + ".ffn", w.enc[l].ffn);
  }
  ln("enc_final", w.enc_final);
  for (std::size_t l = 0; l < w.dec.size(); ++l) {
    const std::string p = "dec." + std::to_string(l);
    ln(p + ".ln_self", w.dec[l].ln_self);
    attn(p + ".self_attn", w.dec[l].self_attn);
    ln(p + ".ln_cross", w.dec[l].ln_cross);
    attn(p + ".cross_attn", w.dec[l].cross_attn);
    ln(p + ".ln_ffn", w.dec[l].ln_ffn);
    ffn(p + ".ffn", w.dec[l].ffn);
  }
  ln("dec_final", w.dec_final);
  f(std::string("out_w"), w.out_w);
  f(std::string("out_b"), w.out_b);
}

// Allocates every tensor of a model with `config` at its expected shape.
ModelWeights shaped_weights(const ModelConfig& c) {
  const std::size_t d = c.d;
  auto ln = [&] { return LayerNormParams{Vector(d), Vector(d)}; };
  auto attn = [&] {
    AttentionBlock b;
    b.attn.wq = b.attn.wk = b.attn.wv = b.wo = Matrix(d, d);
    b.attn.bq = b.attn.bk = b.attn.bv = b.bo = Vector(d);
    b.attn.heads = c.h;
    return b;
  };
  auto ffn = [&] {
    return FeedForward{Matrix(d, c.ffn_dim), Vector(c.ffn_dim), Matrix(c.ffn_dim, d), Vector(d)};
  };
  ModelWeights w;
  w.config = c;
  w.tok_emb = Matrix(c.vocab, d);
  w.pos_enc = Matrix(c.max_len, d);
  for (std::uint32_t l = 0; l < c.layers_enc; ++l) w.enc.push_back({ln(), attn(), ln(), ffn()});
  w.enc_final = ln();
  for (std::uint32_t l = 0; l < c.layers_dec; ++l) {
    w.dec.push_back({ln(), attn(), ln(), attn(), ln(), ffn()});
  }
  w.dec_final = ln();
  w.out_w = Matrix(d, c.vocab);
  w.out_b = Vector(c.vocab);
  return w;
}

class Writer {
 public:
  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void bytes(const std::string& s) { out_ += s; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw FormatError("NVTX data is truncated");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

void write_tensor(Writer& out, const std::string& name, const Vector& v) {
  out.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  out.bytes(name);
  out.put<std::uint32_t>(1);
  out.put<std::uint64_t>(v.size());
  for (double x : v) out.put(x);
}

void write_tensor(Writer& out, const std::string& name, const Matrix& m) {
  out.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  out.bytes(name);
  out.put<std::uint32_t>(2);
  out.put<std::uint64_t>(m.rows());
  out.put<std::uint64_t>(m.cols());
  for (double x : m.data()) out.put(x);
}

struct RawTensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

nlohmann::json prior_to_json(const EmpiricalPrior& p) {
  return {{"group", std::string(to_string(p.layer_group))},
          {"layer", p.layer_id},
          {"mu_p", p.mu_p},
          {"sigma_p", p.sigma_p},
          {"log_alpha0_p", p.log_alpha0_p},
          {"epsilon_alpha", p.epsilon_alpha}};
}

EmpiricalPrior prior_from_json(const nlohmann::json& j, std::size_t d) {
  EmpiricalPrior p;
  p.layer_group = parse_layer_group(j.at("group").get<std::string>());
  p.layer_id = j.at("layer").get<std::size_t>();
  p.mu_p = j.at("mu_p").get<Vector>();
  p.sigma_p = j.at("sigma_p").get<Vector>();
  p.log_alpha0_p = j.at("log_alpha0_p").get<double>();
  p.epsilon_alpha = j.at("epsilon_alpha").get<double>();
  if (p.mu_p.size() != d || p.sigma_p.size() != d) {
    throw FormatError("prior dimension does not match the model");
  }
  return p;
}

}  // namespace

std::string encode_nvtx(const ModelConfig& config, const ModelWeights* weights,
                        const std::vector<EmpiricalPrior>& priors,
                        const TauConfig* taus) {
  Writer out;
  out.bytes(std::string(kMagic, 4));
  out.put(kFormatVersion);
  for (std::uint32_t v : {config.vocab, config.d, config.h, config.layers_enc,
                          config.layers_dec, config.ffn_dim, config.max_len}) {
    out.put(v);
  }
  if (weights) {
    std::uint32_t count = 0;
    visit_tensors(*weights, [&](const std::string&, const auto&) { ++count; });
    out.put(count);
    visit_tensors(*weights, [&](const std::string& name, const auto& t) {
      write_tensor(out, name, t);
    });
  } else {
    out.put<std::uint32_t>(0);
  }
  nlohmann::json trailer = nlohmann::json::object();
  if (!priors.empty()) {
    trailer["priors"] = nlohmann::json::array();
    for (const auto& p : priors) trailer["priors"].push_back(prior_to_json(p));
  }
  if (taus) {
    trailer["taus"] = {{"tau_alpha_e", taus->tau_alpha_e}, {"tau_alpha_c", taus->tau_alpha_c},
                       {"tau_alpha_d", taus->tau_alpha_d}, {"tau_sigma_e", taus->tau_sigma_e},
                       {"tau_sigma_c", taus->tau_sigma_c}, {"tau_sigma_d", taus->tau_sigma_d}};
  }
  const std::string text = trailer.dump();
  out.put<std::uint64_t>(text.size());
  out.bytes(text);
  return out.take();
}

NvtxContents decode_nvtx(const std::string& bytes) {
  Reader in(bytes);
  if (bytes.size() < 4 || in.bytes(4) != std::string(kMagic, 4)) {
    throw FormatError("not an NVTX file (bad magic)");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw FormatError("unsupported NVTX version " + std::to_string(version));
  }
  NvtxContents c;
  c.config.vocab = in.get<std::uint32_t>();
  c.config.d = in.get<std::uint32_t>();
  c.config.h = in.get<std::uint32_t>();
  c.config.layers_enc = in.get<std::uint32_t>();
  c.config.layers_dec = in.get<std::uint32_t>();
  c.config.ffn_dim = in.get<std::uint32_t>();
  c.config.max_len = in.get<std::uint32_t>();
  try {
    c.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid config block: ") + e.what());
  }

  const auto count = in.get<std::uint32_t>();
  if (count > 0) {
    std::map<std::string, RawTensor> raw;
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto name_len = in.get<std::uint32_t>();
      std::string name = in.bytes(name_len);
      const auto rank = in.get<std::uint32_t>();
      if (rank < 1 || rank > 2) throw FormatError("tensor '" + name + "' has bad rank");
      RawTensor t;
      std::uint64_t elems = 1;
      for (std::uint32_t r = 0; r < rank; ++r) {
        t.dims.push_back(in.get<std::uint64_t>());
        elems *= t.dims.back();
      }
      if (elems > bytes.size() / sizeof(double)) throw FormatError("tensor '" + name + "' is truncated");
      t.data.resize(elems);
      for (auto& v : t.data) v = in.get<double>();
      raw.emplace(std::move(name), std::move(t));
    }
    ModelWeights w = shaped_weights(c.config);
    std::size_t used = 0;
    visit_tensors(w, [&](const std::string& name, auto& t) {
      const auto it = raw.find(name);
      if (it == raw.end()) throw FormatError("missing tensor '" + name + "'");
      const RawTensor& r = it->second;
      using T = std::decay_t<decltype(t)>;
      if constexpr (std::is_same_v<T, Matrix>) {
        if (r.dims.size() != 2 || r.dims[0] != t.rows() || r.dims[1] != t.cols()) {
          throw FormatError("shape mismatch for tensor '" + name + "'");
        }
        t = Matrix(t.rows(), t.cols(), r.data);
      } else {
        if (r.dims.size() != 1 || r.dims[0] != t.size()) {
          throw FormatError("shape mismatch for tensor '" + name + "'");
        }
        t = r.data;
      }
      ++used;
    });
    if (used != raw.size()) throw FormatError("unexpected extra tensors");
    c.weights = std::move(w);
  }

  const auto trailer_len = in.get<std::uint64_t>();
  const std::string text = in.bytes(trailer_len);
  if (!in.done()) throw FormatError("trailing bytes after JSON block");
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.contains("priors")) {
      for (const auto& p : j.at("priors")) c.priors.push_back(prior_from_json(p, c.config.d));
    }
    if (j.contains("taus")) {
      const auto& t = j.at("taus");
      c.taus = TauConfig{t.at("tau_alpha_e").get<double>(), t.at("tau_alpha_c").get<double>(),
                         t.at("tau_alpha_d").get<double>(), t.at("tau_sigma_e").get<double>(),
                         t.at("tau_sigma_c").get<double>(), t.at("tau_sigma_d").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad JSON block: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bad JSON block: ") + e.what());
  }
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

void save_weights(const ModelWeights& w, const std::string& path) {
  write_file(path, encode_nvtx(w.config, &w, {}, nullptr));
}

ModelWeights load_weights(const std::string& path) {
  NvtxContents c = decode_nvtx(read_file(path));
  if (!c.weights) throw FormatError("'" + path + "' holds no model weights");
  return std::move(*c.weights);
}

void save_priors(const ModelConfig& config, const std::vector<EmpiricalPrior>& priors,
                 const std::string& path) {
  write_file(path, encode_nvtx(config, nullptr, priors, nullptr));
}

std::vector<EmpiricalPrior> load_priors(const std::string& path) {
  NvtxContents c = decode_nvtx(read_file(path));
  if (c.priors.empty()) throw FormatError("'" + path + "' holds no priors");
  return std::move(c.priors);
}

void save_nv_model(const NvModel& m, const std::string& path) {
  if (!m.base) throw ConfigError("NV model has no base weights");
  write_file(path, encode_nvtx(m.base->config, m.base.get(), m.priors, &m.taus));
}

NvModel load_nv_model(const std::string& path) {
  NvtxContents c = decode_nvtx(read_file(path));
  if (!c.weights) throw FormatError("'" + path + "' holds no model weights");
  if (!c.taus) throw FormatError("'" + path + "' holds no tau configuration");
  return reinterpret(std::make_shared<const ModelWeights>(std::move(*c.weights)),
                     std::move(c.priors), *c.taus);
}

}  // namespace nvtx
