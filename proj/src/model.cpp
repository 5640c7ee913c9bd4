// SPDX-License-Identifier: Apache-2.0
#include "ainet/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>

#include "ainet/errors.hpp"
#include "ainet/losses.hpp"
#include "ainet/rng.hpp"

namespace ainet {

namespace fs = std::filesystem;

Variant parse_variant(std::string_view name) {
  if (name == "baseline") return Variant::Baseline;
  if (name == "dam") return Variant::Dam;
  if (name == "dam-mha") return Variant::DamMha;
  if (name == "dam-acf") return Variant::DamAcf;
  if (name == "full") return Variant::Full;
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected baseline, dam, dam-mha, dam-acf or full)");
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::Dam: return "dam";
    case Variant::DamMha: return "dam-mha";
    case Variant::DamAcf: return "dam-acf";
    case Variant::Full: return "full";
  }
  return "full";
}

void validate(const TrainConfig& cfg) {
  const auto& o = cfg.optim;
  if (!(o.lr >= 0.0) || !(o.weight_decay >= 0.0) || !(o.eps > 0.0)) {
    throw ConfigError("lr and weight_decay must be >= 0 and eps > 0");
  }
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0) || !(o.beta2 >= 0.0 && o.beta2 < 1.0)) {
    throw ConfigError("betas must lie in [0, 1)");
  }
  if (cfg.regions < 1) throw ConfigError("regions must be >= 1");
  if (!(cfg.k_percent >= 0.0 && cfg.k_percent <= 100.0)) throw ConfigError("k_percent must lie in [0, 100]");
  if (!(cfg.mask_ratio >= 0.0 && cfg.mask_ratio < 1.0)) throw ConfigError("mask_ratio must lie in [0, 1)");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (cfg.heads < 1) throw ConfigError("heads must be >= 1");
  if (cfg.hidden < 1) throw ConfigError("hidden must be >= 1");
  if (cfg.classes < 2) throw ConfigError("classes must be >= 2");
}

// ---- parameters ------------------------------------------------------------

std::vector<ModelParams::Named> ModelParams::named() {
  return {
      {"dam.w1", &dam.w1, true},           {"dam.b1", &dam.b1, false},
      {"dam.w2", &dam.w2, true},           {"dam.b2", &dam.b2, false},
      {"arc.wq", &arc.wq, true},           {"arc.wk", &arc.wk, true},
      {"arc.wv", &arc.wv, true},           {"pred.attn_v", &pred.attn_v, true},
      {"pred.attn_u", &pred.attn_u, true}, {"pred.attn_w", &pred.attn_w, true},
      {"pred.classifier", &pred.classifier, true}, {"pred.bias", &pred.bias, false},
  };
}

std::vector<ParamRef> ModelParams::trainable() {
  std::vector<ParamRef> out;
  for (auto& n : named()) out.push_back({n.tensor, n.decay});
  return out;
}

void ModelParams::zero_grad() {
  for (auto& n : named()) n.tensor->zero_grad();
}

namespace {

Tensor glorot(CounterRng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<Real> v(fan_in * fan_out);
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-bound, bound));
  return Tensor::matrix(fan_in, fan_out, std::move(v), true);
}

void apply_hyper(ModelParams& p, const TrainConfig& cfg) {
  p.dam.alpha = cfg.alpha;
  p.arc.mask_ratio = cfg.mask_ratio;
  p.arc.neighbor = cfg.neighbor;
}

}  // namespace

ModelParams init_model(std::size_t dim, const TrainConfig& cfg) {
  validate(cfg);
  if (dim < 1) throw ConfigError("feature dim must be >= 1");
  const std::size_t c = static_cast<std::size_t>(cfg.classes);
  CounterRng rng(substream_key(cfg.seed, "init"));
  ModelParams p;
  p.dam.w1 = glorot(rng, dim, dim);
  p.dam.b1 = Tensor::zeros({dim}, true);
  p.dam.w2 = glorot(rng, dim, dim);
  p.dam.b2 = Tensor::zeros({dim}, true);
  p.arc.wq = glorot(rng, dim, dim);
  p.arc.wk = glorot(rng, dim, dim);
  p.arc.wv = glorot(rng, dim, dim);
  p.pred.attn_v = glorot(rng, dim, cfg.hidden);
  p.pred.attn_u = glorot(rng, dim, cfg.hidden);
  p.pred.attn_w = glorot(rng, cfg.hidden, 1);
  p.pred.classifier = glorot(rng, dim, c);
  p.pred.bias = Tensor::zeros({c}, true);
  apply_hyper(p, cfg);
  return p;
}

ModelParams clone(const ModelParams& params) {
  ModelParams out = params;
  auto src = const_cast<ModelParams&>(params).named();
  auto dst = out.named();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Tensor& s = *src[i].tensor;
    *dst[i].tensor = Tensor(s.shape(), {s.values().begin(), s.values().end()}, true);
  }
  return out;
}

// ---- forward ---------------------------------------------------------------

ForwardPass forward(const ModelParams& params, const Bag& bag, const RegionPartition& part,
                    const TrainConfig& cfg) {
  if (part.total() != bag.size()) {
    throw DimensionError("forward: partition covers " + std::to_string(part.total()) + " of " +
                         std::to_string(bag.size()) + " instances");
  }
  ForwardPass fp;
  if (cfg.variant == Variant::Baseline) {
    for (const auto& region : part.regions) fp.predictor_inputs.push_back(gather_rows(bag.features, region));
    fp.prediction = predict(fp.predictor_inputs, params.pred);
    fp.loss_mse = Tensor::scalar(0);
  } else {
    fp.latent = project(bag.features, params.dam);
    std::vector<Real> scores;
    {
      NoGradGuard no_grad;
      const Tensor frozen = fp.latent.detach();
      const Embeddings emb = embeddings(frozen, part);
      scores = selector_scores(cfg.selector, frozen, part, emb, cfg.alpha, params.pred);
    }
    fp.anchors = select_anchors(fp.latent, scores, cfg.k_percent);
    fp.fused.reserve(part.count());
    for (const auto& region : part.regions) {
      fp.fused.push_back(fuse_anchors(gather_rows(fp.latent, region), fp.anchors));
    }
    ArcParams arc = params.arc;
    arc.mask_ratio = cfg.mask_ratio;
    arc.neighbor = cfg.neighbor;
    switch (cfg.variant) {
      case Variant::Dam:
        fp.predictor_inputs = fp.fused;
        break;
      case Variant::DamMha:
        fp.predictor_inputs = mha_fuse(fp.fused, arc, cfg.heads);
        break;
      case Variant::DamAcf:
      case Variant::Full: {
        const auto attended = cfg.variant == Variant::Full ? cross_attend(fp.fused, arc) : acf_attend(fp.fused, arc);
        for (const auto& a : attended) {
          fp.corrected.push_back(mask_low_attention(a, fp.anchors.size(), params.pred, cfg.mask_ratio));
          fp.predictor_inputs.push_back(fp.corrected.back().kept);
        }
        break;
      }
      case Variant::Baseline:
        break;
    }
    fp.prediction = predict(fp.predictor_inputs, params.pred);
    fp.loss_mse = loss_mse(bag.features, fp.latent);
  }
  fp.loss_region = loss_region(fp.prediction.region_probs, bag.label);
  fp.loss_bag = loss_bag(fp.prediction.bag_probs, bag.label);
  fp.loss_total = loss_total(fp.loss_mse, fp.loss_region, fp.loss_bag);
  return fp;
}

std::vector<double> predict_bag(const ModelParams& params, const Bag& bag, const RegionPartition& part,
                                const TrainConfig& cfg) {
  NoGradGuard no_grad;
  const auto fp = forward(params, bag, part, cfg);
  const auto probs = fp.prediction.bag_probs.values();
  return {probs.begin(), probs.end()};
}

// ---- .aipm -----------------------------------------------------------------

namespace {

constexpr char kModelMagic[4] = {'A', 'I', 'P', 'M'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::uint64_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(FormatError::Kind::Truncated, std::string("model file truncated while reading ") + what);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string text(std::uint32_t n) {
    need(n, "name");
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_tensors(const std::vector<NamedTensor>& tensors) {
  std::vector<std::uint8_t> out(std::begin(kModelMagic), std::end(kModelMagic));
  put_u32(out, kModelFileVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    std::uint64_t n = 1;
    for (auto d : t.dims) n *= d;
    if (n != t.values.size()) {
      throw DimensionError("tensor '" + t.name + "' dims do not match its " + std::to_string(t.values.size()) +
                           " values");
    }
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(out, d);
    for (double v : t.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

std::vector<NamedTensor> decode_tensors(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw FormatError(FormatError::Kind::Truncated, "model file shorter than its magic");
  if (!std::equal(std::begin(kModelMagic), std::end(kModelMagic), bytes.begin())) {
    throw FormatError(FormatError::Kind::BadMagic, "model file has bad magic (expected AIPM)");
  }
  ByteReader in(bytes);
  in.u32("magic");
  const std::uint32_t version = in.u32("version");
  if (version != kModelFileVersion) {
    throw FormatError(FormatError::Kind::BadVersion, "model file version " + std::to_string(version) +
                                                         " is not supported");
  }
  const std::uint32_t count = in.u32("tensor count");
  std::vector<NamedTensor> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    t.name = in.text(in.u32("name length"));
    const std::uint32_t rank = in.u32("rank");
    in.need(std::uint64_t{rank} * 4, "dims");
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const std::uint32_t d = in.u32("dim");
      if (d != 0 && n > UINT64_MAX / d) {
        throw FormatError(FormatError::Kind::BadField, "tensor '" + t.name + "' dims overflow");
      }
      t.dims.push_back(d);
      n *= d;
    }
    if (n > in.remaining() / 8) {
      throw FormatError(FormatError::Kind::Truncated, "model file truncated while reading values of '" + t.name + "'");
    }
    t.values.resize(n);
    for (auto& v : t.values) v = std::bit_cast<double>(in.u64("value"));
    out.push_back(std::move(t));
  }
  if (in.remaining() != 0) throw FormatError(FormatError::Kind::TrailingData, "model file has trailing bytes");
  return out;
}

namespace {

NamedTensor meta(std::string name, double value) { return {"meta." + std::move(name), {}, {value}}; }

}  // namespace

std::vector<NamedTensor> model_to_tensors(const ModelParams& params, const TrainConfig& cfg) {
  std::vector<NamedTensor> out;
  for (auto& n : const_cast<ModelParams&>(params).named()) {
    NamedTensor t;
    t.name = n.name;
    for (auto d : n.tensor->shape()) t.dims.push_back(static_cast<std::uint32_t>(d));
    t.values.assign(n.tensor->values().begin(), n.tensor->values().end());
    out.push_back(std::move(t));
  }
  out.push_back(meta("regions", static_cast<double>(cfg.regions)));
  out.push_back(meta("k_percent", cfg.k_percent));
  out.push_back(meta("mask_ratio", cfg.mask_ratio));
  out.push_back(meta("alpha", cfg.alpha));
  out.push_back(meta("variant", static_cast<double>(cfg.variant)));
  out.push_back(meta("selector", static_cast<double>(cfg.selector)));
  out.push_back(meta("neighbor", static_cast<double>(cfg.neighbor)));
  out.push_back(meta("heads", static_cast<double>(cfg.heads)));
  out.push_back(meta("classes", static_cast<double>(cfg.classes)));
  out.push_back(meta("seed_lo", static_cast<double>(cfg.seed & 0xffffffffULL)));
  out.push_back(meta("seed_hi", static_cast<double>(cfg.seed >> 32)));
  return out;
}

ModelParams model_from_tensors(const std::vector<NamedTensor>& tensors, TrainConfig& cfg) {
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : tensors) {
    if (!by_name.emplace(t.name, &t).second) {
      throw FormatError(FormatError::Kind::BadField, "model file repeats tensor '" + t.name + "'");
    }
  }
  auto get = [&](const std::string& name) -> const NamedTensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError(FormatError::Kind::BadField, "model file lacks '" + name + "'");
    return *it->second;
  };
  auto scalar = [&](const std::string& name) {
    const auto& t = get("meta." + name);
    if (t.values.size() != 1) throw FormatError(FormatError::Kind::BadField, "meta." + name + " is not a scalar");
    return t.values[0];
  };
  cfg.regions = static_cast<std::size_t>(scalar("regions"));
  cfg.k_percent = scalar("k_percent");
  cfg.mask_ratio = scalar("mask_ratio");
  cfg.alpha = scalar("alpha");
  auto enum_field = [&](const std::string& name, int last) {
    const double v = scalar(name);
    if (!(v >= 0.0 && v <= last) || v != std::floor(v)) {
      throw FormatError(FormatError::Kind::BadField, "meta." + name + " is out of range");
    }
    return static_cast<int>(v);
  };
  cfg.variant = static_cast<Variant>(enum_field("variant", static_cast<int>(Variant::Full)));
  cfg.selector = static_cast<Selector>(enum_field("selector", static_cast<int>(Selector::Region)));
  cfg.neighbor = static_cast<NeighborMode>(enum_field("neighbor", static_cast<int>(NeighborMode::SelfLast)));
  cfg.heads = static_cast<std::size_t>(scalar("heads"));
  cfg.classes = static_cast<int>(scalar("classes"));
  cfg.seed = (static_cast<std::uint64_t>(scalar("seed_hi")) << 32) | static_cast<std::uint64_t>(scalar("seed_lo"));

  ModelParams p;
  for (auto& n : p.named()) {
    const auto& t = get(n.name);
    Shape shape(t.dims.begin(), t.dims.end());
    std::vector<Real> values(t.values.begin(), t.values.end());
    *n.tensor = Tensor(std::move(shape), std::move(values), true);
  }
  cfg.hidden = p.pred.attn_v.cols();
  const std::size_t d = p.dam.w1.rows();
  if (p.dam.w1.cols() != d || p.arc.wq.rows() != d || p.pred.classifier.rows() != d ||
      p.pred.classifier.cols() != static_cast<std::size_t>(cfg.classes)) {
    throw FormatError(FormatError::Kind::BadField, "model file tensors have inconsistent shapes");
  }
  validate(cfg);
  p.dam.alpha = cfg.alpha;
  p.arc.mask_ratio = cfg.mask_ratio;
  p.arc.neighbor = cfg.neighbor;
  return p;
}

void write_model(const fs::path& path, const ModelParams& params, const TrainConfig& cfg) {
  const auto bytes = encode_tensors(model_to_tensors(params, cfg));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::Io, "failed writing '" + path.string() + "'");
}

ModelParams read_model(const fs::path& path, TrainConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open model file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return model_from_tensors(decode_tensors(bytes), cfg);
}

}  // namespace ainet
