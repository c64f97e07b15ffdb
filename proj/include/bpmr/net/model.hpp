#pragma once

// Learnable components for one skeletal structure: joint embedding,
// masked body-part attention, per-part temporal convolutions, skeleton
// encoder, motion decoder, and motion discriminator.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "bpmr/core/ops.hpp"
#include "bpmr/core/quat_ops.hpp"
#include "bpmr/parts/partition.hpp"

namespace bpmr {

struct ModelConfig {
  int d = 64;          // token/joint embedding dim
  int h_embed = 256;   // joint-embedding MLP hidden units
  int h_conv = 32;     // per-part conv hidden units
  int h_skel = 64;     // skeleton-encoder MLP hidden units
  int h_dec = 256;     // decoder hidden channels
  int conv_width = 15;
  int attn_layers = 2;
  bool pan_stage2 = true;
  bool token_self_only = true;
  int disc_c1 = 256;   // D
  int disc_c2 = 128;   // D/2
  int disc_width = 15;
  int disc_stride = 2;
  double pe_basis = 10000.0;
  double token_init_std = 0.02;
};

// Named parameter registry; iteration order is stable (sorted by name).
class ParamStore {
 public:
  ad::Tensor add(const std::string& name, ad::Shape shape, std::mt19937_64& rng,
                 double uniform_bound) {
    std::vector<double> data(static_cast<size_t>(ad::numel(shape)));
    if (uniform_bound > 0.0) {
      std::uniform_real_distribution<double> dist(-uniform_bound, uniform_bound);
      for (double& v : data) v = dist(rng);
    }
    ad::Tensor t = ad::Tensor::from(std::move(shape), std::move(data), /*requires_grad=*/true);
    params_[name] = t;
    return t;
  }

  ad::Tensor add_normal(const std::string& name, ad::Shape shape, std::mt19937_64& rng,
                        double std) {
    std::vector<double> data(static_cast<size_t>(ad::numel(shape)));
    std::normal_distribution<double> dist(0.0, std);
    for (double& v : data) v = dist(rng);
    ad::Tensor t = ad::Tensor::from(std::move(shape), std::move(data), /*requires_grad=*/true);
    params_[name] = t;
    return t;
  }

  ad::Tensor get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("unknown parameter: " + name);
    return it->second;
  }

  bool has(const std::string& name) const { return params_.count(name) > 0; }

  const std::map<std::string, ad::Tensor>& items() const { return params_; }
  std::map<std::string, ad::Tensor>& items() { return params_; }

  void zero_grad() {
    for (auto& [name, t] : params_) std::fill(t.grad().begin(), t.grad().end(), 0.0);
  }

 private:
  std::map<std::string, ad::Tensor> params_;
};

namespace net_detail {
inline double fan_in_bound(int fan_in) { return std::sqrt(1.0 / fan_in); }
}  // namespace net_detail

// All learnable state for one structure plus the constants derived from its
// partition (mask matrix, positional-encoding table).
class StructureModel {
 public:
  StructureModel() = default;

  StructureModel(std::string structure_id, int joint_count, BodyPartition partition,
                 ModelConfig config, std::uint64_t seed)
      : structure_id_(std::move(structure_id)),
        J_(joint_count),
        partition_(std::move(partition)),
        cfg_(config) {
    std::mt19937_64 rng(seed);
    init_params(rng);
    build_constants();
  }

  const std::string& structure_id() const { return structure_id_; }
  int joint_count() const { return J_; }
  const BodyPartition& partition() const { return partition_; }
  const ModelConfig& config() const { return cfg_; }
  ParamStore& generator_params() { return gen_; }
  ParamStore& discriminator_params() { return disc_; }
  const ParamStore& generator_params() const { return gen_; }
  const ParamStore& discriminator_params() const { return disc_; }

  // ---- joint embedding -----------------------------------------------------

  // rows: (R, 4) normalized joint features -> (R, d), before positional shift.
  ad::Tensor embed_mlp(const ad::Tensor& rows) const {
    using namespace ad;
    Tensor h0 = relu(linear(rows, gen_.get("embed.W0"), gen_.get("embed.b0")));
    Tensor h1 = relu(linear(h0, gen_.get("embed.W1"), gen_.get("embed.b1")));
    return linear(h1, gen_.get("embed.W2"), gen_.get("embed.b2"));
  }

  // M: (T, J+1, 4) -> X: (T*(J+1), d) with per-joint positional encodings added.
  ad::Tensor joint_embed(const ad::Tensor& motion) const {
    using namespace ad;
    if (motion.shape().size() != 3 || motion.dim(1) != J_ + 1 || motion.dim(2) != 4)
      throw ShapeMismatch("joint_embed: need (T, J+1, 4), got " + shape_str(motion.shape()));
    const int T = motion.dim(0);
    Tensor flat = reshape(motion, {T * (J_ + 1), 4});
    Tensor x = embed_mlp(flat);
    // tile the PE table across frames
    std::vector<double> pe_rep;
    pe_rep.reserve(static_cast<size_t>(T * (J_ + 1) * cfg_.d));
    for (int t = 0; t < T; ++t)
      pe_rep.insert(pe_rep.end(), pe_table_.begin(), pe_table_.end());
    return add(x, Tensor::from({T * (J_ + 1), cfg_.d}, std::move(pe_rep)));
  }

  // ---- pose-aware attention ------------------------------------------------

  struct AttentionOut {
    ad::Tensor tokens;        // (T, N, d) token outputs after the last layer
    ad::Tensor first_softmax; // (T*(N+J+1), N+J+1) first-layer weights (diagnostics)
  };

  // X: (T*(J+1), d) joint embeddings. Runs cfg_.attn_layers masked attention
  // layers per frame over [tokens; joints] and keeps the token rows.
  AttentionOut pan_forward(const ad::Tensor& X, int T) const {
    using namespace ad;
    const int N = partition_.part_count();
    const int D = N + J_ + 1;
    Tensor U = mask_tensor_;
    Tensor Y = gen_.get("tokens.Y");
    std::vector<Tensor> token_frames;
    std::vector<Tensor> softmax_frames;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg_.d));
    for (int t = 0; t < T; ++t) {
      Tensor Xt = slice_rows(X, t * (J_ + 1), J_ + 1);
      Tensor Z = concat_rows({Y, Xt});
      for (int l = 0; l < cfg_.attn_layers; ++l) {
        const std::string p = "attn" + std::to_string(l) + ".";
        Tensor Q = linear(Z, gen_.get(p + "WQ"), gen_.get(p + "bQ"));
        Tensor K = linear(Z, gen_.get(p + "WK"), gen_.get(p + "bK"));
        Tensor V = linear(Z, gen_.get(p + "WV"), gen_.get(p + "bV"));
        Tensor logits = add(scale(matmul(Q, transpose2d(K)), inv_sqrt_d), U);
        Tensor weights = softmax_rows(logits);
        if (l == 0) softmax_frames.push_back(weights);
        Z = matmul(weights, V);
      }
      token_frames.push_back(slice_rows(Z, 0, N));
    }
    AttentionOut out;
    out.tokens = reshape(concat_rows(token_frames), {T, N, cfg_.d});
    out.first_softmax = concat_rows(softmax_frames);
    (void)D;
    return out;
  }

  // ---- motion encoder ------------------------------------------------------

  // clip: (T, J+1, 4) normalized -> H_M: (T/4, N, d).
  ad::Tensor encode_motion(const ad::Tensor& clip) const {
    return encode_motion_full(clip).code;
  }

  struct EncodeOut {
    ad::Tensor code;          // (T/4, N, d)
    ad::Tensor first_softmax; // first PAN layer weights
  };

  EncodeOut encode_motion_full(const ad::Tensor& clip) const {
    using namespace ad;
    const int T = clip.dim(0);
    if (T % 4 != 0)
      throw ShapeMismatch("encode_motion: clip length " + std::to_string(T) +
                          " not divisible by 4");
    const int N = partition_.part_count();
    Tensor X = joint_embed(clip);
    AttentionOut attn = pan_forward(X, T);

    // Stage 1 conv per part: (d, T) -> (h_conv, T/2)
    const int pad = (cfg_.conv_width - 1) / 2;
    std::vector<Tensor> part_feats(static_cast<size_t>(N));
    for (int k = 0; k < N; ++k) {
      Tensor ok = transpose2d(slice_mid(attn.tokens, k));  // (d, T)
      const std::string p = "conv1.part" + std::to_string(k) + ".";
      part_feats[static_cast<size_t>(k)] =
          relu(conv1d(ok, gen_.get(p + "W"), gen_.get(p + "b"), /*stride=*/2, pad));
    }

    // Optional second attention over the N part features per frame.
    if (cfg_.pan_stage2) {
      const int T2 = part_feats[0].dim(1);
      Tensor stacked;  // (T2, N, h_conv)
      {
        std::vector<Tensor> cols;
        for (int k = 0; k < N; ++k)
          for (int c = 0; c < cfg_.h_conv; ++c)
            cols.push_back(slice_col(transpose2d(part_feats[static_cast<size_t>(k)]), c));
        stacked = reshape(stack_cols(cols), {T2, N, cfg_.h_conv});
      }
      Tensor Y2 = gen_.get("stage2.tokens");
      const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg_.h_conv));
      std::vector<Tensor> frames;
      for (int t = 0; t < T2; ++t) {
        Tensor Ft = slice_rows(reshape(stacked, {T2 * N, cfg_.h_conv}), t * N, N);
        Tensor Z = concat_rows({Y2, Ft});
        Tensor Q = linear(Z, gen_.get("stage2.WQ"), gen_.get("stage2.bQ"));
        Tensor K = linear(Z, gen_.get("stage2.WK"), gen_.get("stage2.bK"));
        Tensor V = linear(Z, gen_.get("stage2.WV"), gen_.get("stage2.bV"));
        Tensor weights = softmax_rows(scale(matmul(Q, transpose2d(K)), inv_sqrt));
        frames.push_back(slice_rows(matmul(weights, V), 0, N));
      }
      Tensor out = reshape(concat_rows(frames), {T2, N, cfg_.h_conv});
      for (int k = 0; k < N; ++k)
        part_feats[static_cast<size_t>(k)] = transpose2d(slice_mid(out, k));
    }

    // Stage 2 conv per part: (h_conv, T/2) -> (d, T/4)
    std::vector<Tensor> codes(static_cast<size_t>(N));
    for (int k = 0; k < N; ++k) {
      const std::string p = "conv2.part" + std::to_string(k) + ".";
      codes[static_cast<size_t>(k)] = relu(conv1d(part_feats[static_cast<size_t>(k)],
                                                  gen_.get(p + "W"), gen_.get(p + "b"),
                                                  /*stride=*/2, pad));
    }

    // assemble (T/4, N, d)
    const int T4 = codes[0].dim(1);
    std::vector<Tensor> cols;
    for (int k = 0; k < N; ++k)
      for (int c = 0; c < cfg_.d; ++c)
        cols.push_back(slice_col(transpose2d(codes[static_cast<size_t>(k)]), c));
    EncodeOut out;
    out.code = reshape(stack_cols(cols), {T4, N, cfg_.d});
    out.first_softmax = attn.first_softmax;
    return out;
  }

  // ---- skeleton encoder ----------------------------------------------------

  // Per-part offset MLP -> (N, d). Offsets come from this structure's skeleton.
  ad::Tensor encode_skeleton(const SkeletonDef& skel) const {
    using namespace ad;
    if (skel.joint_count() != J_)
      throw ShapeMismatch("encode_skeleton: skeleton has " + std::to_string(skel.joint_count()) +
                          " joints, model expects " + std::to_string(J_));
    const int N = partition_.part_count();
    std::vector<Tensor> rows;
    for (int k = 0; k < N; ++k) {
      const auto joints = partition_.offsets_joints(k);
      std::vector<double> flat;
      for (int j : joints) {
        const Vec3& o = skel.offsets[static_cast<size_t>(j)];
        flat.push_back(o.x);
        flat.push_back(o.y);
        flat.push_back(o.z);
      }
      const int width = static_cast<int>(flat.size());
      Tensor s = Tensor::from({1, width}, std::move(flat));
      const std::string p = "skel.part" + std::to_string(k) + ".";
      Tensor h0 = relu(linear(s, gen_.get(p + "W0"), gen_.get(p + "b0")));
      Tensor h1 = relu(linear(h0, gen_.get(p + "W1"), gen_.get(p + "b1")));
      rows.push_back(linear(h1, gen_.get(p + "W2"), gen_.get(p + "b2")));
    }
    return concat_rows(rows);  // (N, d)
  }

  // ---- motion decoder ------------------------------------------------------

  // H_M: (T/4, N, d), H_S: (N, d) -> motion (T, J+1, 4) in normalized space.
  ad::Tensor decode_motion(const ad::Tensor& h_motion, const ad::Tensor& h_skel) const {
    using namespace ad;
    const int T4 = h_motion.dim(0);
    const int N = partition_.part_count();
    if (h_motion.dim(1) != N || h_motion.dim(2) != cfg_.d)
      throw ShapeMismatch("decode_motion: H_M shape " + shape_str(h_motion.shape()));
    if (h_skel.dim(0) != N || h_skel.dim(1) != cfg_.d)
      throw ShapeMismatch("decode_motion: H_S shape " + shape_str(h_skel.shape()));

    // repeat the skeleton code along time and fuse additively
    Tensor hm2 = reshape(h_motion, {T4, N * cfg_.d});
    Tensor hs_row = reshape(h_skel, {1, N * cfg_.d});
    std::vector<Tensor> reps(static_cast<size_t>(T4), hs_row);
    Tensor fused = add(hm2, concat_rows(reps));  // (T4, N*d)

    const int pad = (cfg_.conv_width - 1) / 2;
    Tensor h = transpose2d(fused);  // (N*d, T4)
    h = relu(conv1d(upsample_linear(h, 2), gen_.get("dec.conv1.W"), gen_.get("dec.conv1.b"),
                    /*stride=*/1, pad));
    h = conv1d(upsample_linear(h, 2), gen_.get("dec.conv2.W"), gen_.get("dec.conv2.b"),
               /*stride=*/1, pad);  // no activation on the last layer
    const int T = h.dim(1);
    return reshape(transpose2d(h), {T, J_ + 1, 4});
  }

  // ---- discriminator -------------------------------------------------------

  // motion: (T, L+1, 4) -> naturalness score in (0, 1), averaged over time.
  ad::Tensor discriminate(const ad::Tensor& motion) const {
    using namespace ad;
    const int T = motion.dim(0);
    const int C = (J_ + 1) * 4;
    const int pad = (cfg_.disc_width - 1) / 2;
    Tensor h = transpose2d(reshape(motion, {T, C}));  // (4(L+1), T)
    h = relu(conv1d(h, disc_.get("disc.conv1.W"), disc_.get("disc.conv1.b"), cfg_.disc_stride, pad));
    h = relu(conv1d(h, disc_.get("disc.conv2.W"), disc_.get("disc.conv2.b"), cfg_.disc_stride, pad));
    h = conv1d(h, disc_.get("disc.conv3.W"), disc_.get("disc.conv3.b"), cfg_.disc_stride, pad);
    return mean(sigmoid(h));
  }

  // Constant tensors derived from the partition.
  const ad::Tensor& mask_tensor() const { return mask_tensor_; }
  const MaskMatrix& mask() const { return mask_matrix_; }

  // Rebuild constants after loading parameters from a checkpoint.
  void rebuild(const std::string& structure_id, int joint_count, BodyPartition partition,
               ModelConfig config) {
    structure_id_ = structure_id;
    J_ = joint_count;
    partition_ = std::move(partition);
    cfg_ = config;
    build_constants();
  }

 private:
  void init_params(std::mt19937_64& rng) {
    using net_detail::fan_in_bound;
    const int d = cfg_.d, h = cfg_.h_embed, hc = cfg_.h_conv, hs = cfg_.h_skel;
    const int N = partition_.part_count();
    const int w = cfg_.conv_width;

    // Weights and biases both draw from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    // Randomized biases keep ReLU preactivations off exact zero: normalized
    // motion contains exactly-zero rows (e.g. the frame-0 velocity pseudo-
    // joint), and zero biases would pin those rows precisely on the kink,
    // making the objective non-differentiable at the initial point.
    gen_.add("embed.W0", {4, h}, rng, fan_in_bound(4));
    gen_.add("embed.b0", {h}, rng, fan_in_bound(4));
    gen_.add("embed.W1", {h, h}, rng, fan_in_bound(h));
    gen_.add("embed.b1", {h}, rng, fan_in_bound(h));
    gen_.add("embed.W2", {h, d}, rng, fan_in_bound(h));
    gen_.add("embed.b2", {d}, rng, fan_in_bound(h));

    gen_.add_normal("tokens.Y", {N, d}, rng, cfg_.token_init_std);
    for (int l = 0; l < cfg_.attn_layers; ++l) {
      const std::string p = "attn" + std::to_string(l) + ".";
      for (const char* m : {"WQ", "WK", "WV"}) gen_.add(p + m, {d, d}, rng, fan_in_bound(d));
      for (const char* b : {"bQ", "bK", "bV"}) gen_.add(p + b, {d}, rng, fan_in_bound(d));
    }
    if (cfg_.pan_stage2) {
      gen_.add_normal("stage2.tokens", {N, hc}, rng, cfg_.token_init_std);
      for (const char* m : {"WQ", "WK", "WV"})
        gen_.add(std::string("stage2.") + m, {hc, hc}, rng, fan_in_bound(hc));
      for (const char* b : {"bQ", "bK", "bV"})
        gen_.add(std::string("stage2.") + b, {hc}, rng, fan_in_bound(hc));
    }
    for (int k = 0; k < N; ++k) {
      gen_.add("conv1.part" + std::to_string(k) + ".W", {hc, d, w}, rng, fan_in_bound(d * w));
      gen_.add("conv1.part" + std::to_string(k) + ".b", {hc}, rng, fan_in_bound(d * w));
      gen_.add("conv2.part" + std::to_string(k) + ".W", {d, hc, w}, rng, fan_in_bound(hc * w));
      gen_.add("conv2.part" + std::to_string(k) + ".b", {d}, rng, fan_in_bound(hc * w));
      const int lk = static_cast<int>(partition_.offsets_joints(k).size());
      gen_.add("skel.part" + std::to_string(k) + ".W0", {3 * lk, hs}, rng, fan_in_bound(3 * lk));
      gen_.add("skel.part" + std::to_string(k) + ".b0", {hs}, rng, fan_in_bound(3 * lk));
      gen_.add("skel.part" + std::to_string(k) + ".W1", {hs, hs}, rng, fan_in_bound(hs));
      gen_.add("skel.part" + std::to_string(k) + ".b1", {hs}, rng, fan_in_bound(hs));
      gen_.add("skel.part" + std::to_string(k) + ".W2", {hs, d}, rng, fan_in_bound(hs));
      gen_.add("skel.part" + std::to_string(k) + ".b2", {d}, rng, fan_in_bound(hs));
    }
    gen_.add("dec.conv1.W", {cfg_.h_dec, N * d, w}, rng, fan_in_bound(N * d * w));
    gen_.add("dec.conv1.b", {cfg_.h_dec}, rng, fan_in_bound(N * d * w));
    gen_.add("dec.conv2.W", {(J_ + 1) * 4, cfg_.h_dec, w}, rng, fan_in_bound(cfg_.h_dec * w));
    gen_.add("dec.conv2.b", {(J_ + 1) * 4}, rng, fan_in_bound(cfg_.h_dec * w));

    const int dc = (J_ + 1) * 4, dw = cfg_.disc_width;
    disc_.add("disc.conv1.W", {cfg_.disc_c1, dc, dw}, rng, fan_in_bound(dc * dw));
    disc_.add("disc.conv1.b", {cfg_.disc_c1}, rng, fan_in_bound(dc * dw));
    disc_.add("disc.conv2.W", {cfg_.disc_c2, cfg_.disc_c1, dw}, rng, fan_in_bound(cfg_.disc_c1 * dw));
    disc_.add("disc.conv2.b", {cfg_.disc_c2}, rng, fan_in_bound(cfg_.disc_c1 * dw));
    disc_.add("disc.conv3.W", {1, cfg_.disc_c2, dw}, rng, fan_in_bound(cfg_.disc_c2 * dw));
    disc_.add("disc.conv3.b", {1}, rng, fan_in_bound(cfg_.disc_c2 * dw));
  }

  void build_constants() {
    mask_matrix_ = build_mask(partition_, cfg_.token_self_only);
    mask_tensor_ = ad::Tensor::from({mask_matrix_.dim(), mask_matrix_.dim()}, mask_matrix_.U);
    pe_table_.clear();
    for (int j = 0; j <= J_; ++j) {
      const auto pe = positional_encoding(j, cfg_.d, cfg_.pe_basis);
      pe_table_.insert(pe_table_.end(), pe.begin(), pe.end());
    }
  }

  std::string structure_id_;
  int J_ = 0;
  BodyPartition partition_;
  ModelConfig cfg_;
  ParamStore gen_;
  ParamStore disc_;
  MaskMatrix mask_matrix_;
  ad::Tensor mask_tensor_;
  std::vector<double> pe_table_;  // (J+1) x d row-major
};

}  // namespace bpmr
