#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "sfr/geometry.hpp"
#include "sfr/nn/checkpoint.hpp"
#include "sfr/nn/layers.hpp"
#include "sfr/sim/field.hpp"

namespace sfr::np {

using nn::Matrix;
using nn::Tensor;
using sim::Grid;
using sim::ObservationSet;

/// Observed pairs with locations already normalized to [0,1]^2.
struct ContextSet {
    std::vector<Vec2> locations;
    std::vector<double> values;  // standardized magnitudes
    double freq_hz = 0.0;        // only read when the model uses frequency as a feature

    std::size_t size() const { return values.size(); }
    void validate() const;
    /// Permutation that sorts pairs lexicographically by (x, y, value).
    std::vector<std::size_t> canonical_order() const;
    ContextSet permuted(const std::vector<std::size_t>& order) const;
};

/// Normalizes observation locations by the grid extent.
ContextSet make_context(const ObservationSet& obs, const Grid& grid, double freq_hz = 0.0);
/// Normalized cell-center locations of every grid point (flat index order).
std::vector<Vec2> normalized_grid(const Grid& grid);

struct NpConfig {
    Eigen::Index embed_dim = 336;
    Eigen::Index latent_dim = 128;
    int heads = 8;
    int sa_blocks = 2;
    Eigen::Index decoder_width = 672;
    int decoder_layers = 3;
    int ffn_multiplier = 2;
    bool freq_as_feature = false;

    void validate() const;
    /// Compact description used for the checkpoint metadata entry.
    std::vector<double> encode() const;
    static NpConfig decode(const std::vector<double>& v);
};

/// Small configuration used for desk-scale runs and tests.
NpConfig desk_config();

struct GaussianLatent {
    Tensor mu;     // 1 x latent
    Tensor sigma;  // 1 x latent, > 0
};

struct AttentionMap {
    Matrix weights;  // targets x contexts, columns in caller's context order
};

struct DeterministicResult {
    Tensor representation;  // targets x embed
    Tensor query_embedding;  // targets x embed, location embedding of the targets
    AttentionMap map;
};

struct DecoderOutput {
    Tensor mean;      // targets x 1
    Tensor variance;  // targets x 1
};

/// Reparameterized draw mu + sigma * eps with eps from `seed`.
Tensor sample_latent(const GaussianLatent& latent, std::uint64_t seed);

/// Sum over dimensions of KL(N(mu_q, sigma_q^2) || N(mu_p, sigma_p^2)).
Tensor kl_divergence(const GaussianLatent& q, const GaussianLatent& p);

struct TargetSet {
    std::vector<Vec2> locations;  // normalized
    std::vector<double> values;   // standardized magnitudes
};

struct ElboResult {
    Tensor loss;
    double l_d = 0.0;
    double kl = 0.0;
};

/// Combines a decoded mean with the two latents; exposed so the
/// reconstruction term can be driven directly.
ElboResult elbo_from_parts(const Tensor& mean, const std::vector<double>& targets, const GaussianLatent& posterior,
                           const GaussianLatent& prior);

class NeuralProcess {
public:
    NeuralProcess(const NpConfig& config, std::uint64_t init_seed);
    // Copies would alias the parameter tensors.
    NeuralProcess(const NeuralProcess&) = delete;
    NeuralProcess& operator=(const NeuralProcess&) = delete;
    NeuralProcess(NeuralProcess&&) = default;
    NeuralProcess& operator=(NeuralProcess&&) = default;

    const NpConfig& config() const { return config_; }
    nn::ParameterStore& parameters() { return store_; }
    const nn::ParameterStore& parameters() const { return store_; }
    std::size_t parameter_count() const { return store_.scalar_count(); }

    GaussianLatent encode_latent(const ContextSet& ctx) const;
    DeterministicResult encode_deterministic(const ContextSet& ctx, const std::vector<Vec2>& targets) const;
    DecoderOutput decode(const Tensor& z, const Tensor& representation, const std::vector<Vec2>& targets,
                         double freq_hz = 0.0) const;
    /// Same, reusing the target location embedding from encode_deterministic.
    DecoderOutput decode_embedded(const Tensor& z, const Tensor& representation, const Tensor& target_embedding) const;

    /// L_D + KL(q(z | ctx u targets) || q(z | ctx)); z drawn from the
    /// posterior `latent_samples` times and L_D averaged.
    ElboResult elbo_loss(const ContextSet& ctx, const TargetSet& targets, std::uint64_t seed,
                         int latent_samples = 1) const;

    nn::Checkpoint checkpoint(const nn::OptimizerState* optimizer) const;
    static NeuralProcess from_checkpoint(const nn::Checkpoint& ckpt, nn::OptimizerState* optimizer = nullptr);
    static NeuralProcess load(const std::filesystem::path& path);

    Tensor location_embedding(const std::vector<Vec2>& locations, double freq_hz) const;
    Tensor value_embedding(const std::vector<double>& values) const;

private:
    NpConfig config_;
    nn::ParameterStore store_;
    // Latent path
    nn::Dense pair_in_, pair_out_;
    std::vector<nn::SelfAttentionBlock> blocks_;
    nn::Dense latent_hidden_, latent_out_;
    // Deterministic path
    nn::Dense loc_in_, loc_out_;
    nn::Dense value_in_, value_out_;
    nn::AttentionParams cross_;
    // Decoder
    std::vector<nn::Dense> decoder_;
};

struct FieldPrediction {
    std::vector<double> magnitudes;  // de-standardized when stats are given
    std::vector<double> variance;    // standardized units
    AttentionMap attention;
};

struct Standardization {
    double mean = 0.0;
    double std = 1.0;
};

/// Deterministic prediction at every grid point using z = mu_z.
FieldPrediction predict_field(const NeuralProcess& model, const ContextSet& ctx, const Grid& grid,
                              std::optional<Standardization> stats = std::nullopt);

}  // namespace sfr::np
