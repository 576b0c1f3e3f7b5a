#include "sfr/nn/layers.hpp"

#include <cmath>

#include "sfr/errors.hpp"

namespace sfr::nn {

Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(fan_in, fan_out);
    // Fill row by row so the draw order does not depend on storage order.
    for (Eigen::Index i = 0; i < fan_in; ++i)
        for (Eigen::Index j = 0; j < fan_out; ++j) m(i, j) = rng.uniform(-limit, limit);
    return m;
}

Tensor ParameterStore::add(const std::string& name, Matrix init, int rank) {
    for (const auto& e : entries_)
        if (e.name == name) throw InvalidInput("duplicate parameter name '" + name + "'");
    if (!init.allFinite()) throw NonFinite("initial value of '" + name + "' is not finite");
    Tensor t = Tensor::parameter(std::move(init), rank);
    entries_.push_back({name, t});
    return t;
}

Tensor ParameterStore::find(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e.tensor;
    throw InvalidInput("unknown parameter '" + name + "'");
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += static_cast<std::size_t>(e.tensor.value().size());
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& e : entries_) e.tensor.zero_grad();
}

Dense Dense::create(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng) {
    Dense d;
    d.weight = store.add(name + "/weight", glorot_uniform(in, out, rng));
    d.bias = store.add(name + "/bias", Matrix::Zero(1, out), 1);
    return d;
}

SdpaResult sdpa(const Tensor& queries, const Tensor& keys, const Tensor& values) {
    if (queries.cols() != keys.cols())
        throw ShapeMismatch("sdpa: query width " + std::to_string(queries.cols()) + " != key width " +
                            std::to_string(keys.cols()));
    if (keys.rows() != values.rows())
        throw ShapeMismatch("sdpa: " + std::to_string(keys.rows()) + " keys but " + std::to_string(values.rows()) +
                            " values");
    const double s = 1.0 / std::sqrt(static_cast<double>(queries.cols()));
    Tensor weights = softmax_rows(scale(matmul_nt(queries, keys), s));
    return {matmul(weights, values), weights};
}

AttentionParams AttentionParams::create(ParameterStore& store, const std::string& name, int heads,
                                        Eigen::Index query_in, Eigen::Index key_in, Eigen::Index value_in,
                                        Eigen::Index key_dim, Eigen::Index value_dim, Eigen::Index out_dim,
                                        Rng& rng) {
    AttentionParams p;
    p.heads = heads;
    p.key_dim = key_dim;
    p.value_dim = value_dim;
    if (heads < 1 || key_dim % heads != 0 || value_dim % heads != 0)
        throw InvalidInput(name + ": key_dim and value_dim must be divisible by the head count");
    p.w_query = store.add(name + "/w_query", glorot_uniform(query_in, key_dim, rng));
    p.w_key = store.add(name + "/w_key", glorot_uniform(key_in, key_dim, rng));
    p.w_value = store.add(name + "/w_value", glorot_uniform(value_in, value_dim, rng));
    p.w_out = store.add(name + "/w_out", glorot_uniform(value_dim, out_dim, rng));
    return p;
}

void AttentionParams::validate() const {
    if (heads < 1) throw InvalidInput("attention: heads must be >= 1");
    if (key_dim % heads != 0) throw InvalidInput("attention: key_dim not divisible by heads");
    if (value_dim % heads != 0) throw InvalidInput("attention: value_dim not divisible by heads");
    if (w_query.cols() != key_dim || w_key.cols() != key_dim)
        throw ShapeMismatch("attention: query/key projections must have key_dim columns");
    if (w_value.cols() != value_dim || w_out.rows() != value_dim)
        throw ShapeMismatch("attention: value/output projections disagree on value_dim");
    for (const Tensor* t : {&w_query, &w_key, &w_value, &w_out})
        if (!t->value().allFinite()) throw NonFinite("attention: projection weights are not finite");
}

AttentionResult multihead_attention(const AttentionParams& params, const Tensor& queries, const Tensor& keys,
                                    const Tensor& values) {
    params.validate();
    if (queries.cols() != params.w_query.rows() || keys.cols() != params.w_key.rows() ||
        values.cols() != params.w_value.rows())
        throw ShapeMismatch("multihead_attention: input widths do not match the projections");
    if (keys.rows() != values.rows()) throw ShapeMismatch("multihead_attention: key and value counts differ");

    const Tensor q = matmul(queries, params.w_query);
    const Tensor k = matmul(keys, params.w_key);
    const Tensor v = matmul(values, params.w_value);
    const Eigen::Index dk = params.key_dim / params.heads;
    const Eigen::Index dv = params.value_dim / params.heads;

    AttentionResult result;
    std::vector<Tensor> outputs;
    for (int h = 0; h < params.heads; ++h) {
        SdpaResult head = sdpa(slice_cols(q, h * dk, dk), slice_cols(k, h * dk, dk), slice_cols(v, h * dv, dv));
        outputs.push_back(head.output);
        result.head_weights.push_back(head.weights);
    }
    const Tensor joined = params.heads == 1 ? outputs.front() : concat_cols(outputs);
    result.output = matmul(joined, params.w_out);
    return result;
}

SelfAttentionBlock SelfAttentionBlock::create(ParameterStore& store, const std::string& name, Eigen::Index dim,
                                              int heads, Eigen::Index ffn_dim, Rng& rng) {
    SelfAttentionBlock b;
    b.attention = AttentionParams::create(store, name + "/attention", heads, dim, dim, dim, dim, dim, dim, rng);
    b.ffn_in = Dense::create(store, name + "/ffn_in", dim, ffn_dim, rng);
    b.ffn_out = Dense::create(store, name + "/ffn_out", ffn_dim, dim, rng);
    return b;
}

Tensor SelfAttentionBlock::operator()(const Tensor& x) const {
    const Tensor h = add(x, multihead_attention(attention, x, x, x).output);
    return add(h, ffn_out(gelu(ffn_in(h))));
}

}  // namespace sfr::nn
