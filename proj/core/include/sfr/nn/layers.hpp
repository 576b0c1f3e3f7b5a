#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sfr/nn/tensor.hpp"
#include "sfr/rng.hpp"

namespace sfr::nn {

/// Glorot-uniform draw in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng);

struct NamedParameter {
    std::string name;
    Tensor tensor;
};

/// Owns every trainable tensor under a unique, stable name. Registration
/// order defines the checkpoint and optimizer layout.
class ParameterStore {
public:
    Tensor add(const std::string& name, Matrix init, int rank = 2);
    const std::vector<NamedParameter>& entries() const { return entries_; }
    std::vector<NamedParameter>& entries() { return entries_; }
    Tensor find(const std::string& name) const;
    std::size_t scalar_count() const;
    void zero_grad();

private:
    std::vector<NamedParameter> entries_;
};

struct Dense {
    Tensor weight;  // in x out
    Tensor bias;    // 1 x out

    static Dense create(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng);
    Tensor operator()(const Tensor& x) const { return add(matmul(x, weight), bias); }
    Eigen::Index in_dim() const { return weight.rows(); }
    Eigen::Index out_dim() const { return weight.cols(); }
};

struct SdpaResult {
    Tensor output;   // m x d_v
    Tensor weights;  // m x n, rows sum to one
};

SdpaResult sdpa(const Tensor& queries, const Tensor& keys, const Tensor& values);

/// Per-head projections are stored as column blocks of one matrix per role.
struct AttentionParams {
    int heads = 1;
    Eigen::Index key_dim = 0;    // total over heads
    Eigen::Index value_dim = 0;  // total over heads
    Tensor w_query;              // d_q_in x key_dim
    Tensor w_key;                // d_k_in x key_dim
    Tensor w_value;              // d_v_in x value_dim
    Tensor w_out;                // value_dim x d_out

    static AttentionParams create(ParameterStore& store, const std::string& name, int heads, Eigen::Index query_in,
                                  Eigen::Index key_in, Eigen::Index value_in, Eigen::Index key_dim,
                                  Eigen::Index value_dim, Eigen::Index out_dim, Rng& rng);
    void validate() const;
};

struct AttentionResult {
    Tensor output;
    std::vector<Tensor> head_weights;  // one m x n map per head
};

AttentionResult multihead_attention(const AttentionParams& params, const Tensor& queries, const Tensor& keys,
                                    const Tensor& values);
inline Tensor multihead_cross_attention(const AttentionParams& params, const Tensor& queries, const Tensor& keys,
                                        const Tensor& values) {
    return multihead_attention(params, queries, keys, values).output;
}

/// Multi-head self-attention + residual, then a two-layer GELU feed-forward
/// + residual. No normalization layers.
struct SelfAttentionBlock {
    AttentionParams attention;
    Dense ffn_in;
    Dense ffn_out;

    static SelfAttentionBlock create(ParameterStore& store, const std::string& name, Eigen::Index dim, int heads,
                                     Eigen::Index ffn_dim, Rng& rng);
    Tensor operator()(const Tensor& x) const;
};

inline Tensor self_attention_block(const SelfAttentionBlock& block, const Tensor& inputs) { return block(inputs); }

}  // namespace sfr::nn
