#include "sfr/np/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "sfr/errors.hpp"
#include "sfr/rng.hpp"

namespace sfr::np {

namespace {

constexpr double kSigmaFloor = 1e-6;
constexpr double kFreqScale = 1.0 / 1000.0;

Tensor positive(const Tensor& raw) { return nn::add_scalar(nn::softplus(raw), kSigmaFloor); }

// Canonical union of context and target pairs (exact duplicates removed).
ContextSet merge(const ContextSet& ctx, const TargetSet& targets) {
    ContextSet all = ctx;
    all.locations.insert(all.locations.end(), targets.locations.begin(), targets.locations.end());
    all.values.insert(all.values.end(), targets.values.begin(), targets.values.end());
    ContextSet sorted = all.permuted(all.canonical_order());
    ContextSet out;
    out.freq_hz = ctx.freq_hz;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i > 0 && sorted.locations[i] == sorted.locations[i - 1] && sorted.values[i] == sorted.values[i - 1])
            continue;
        out.locations.push_back(sorted.locations[i]);
        out.values.push_back(sorted.values[i]);
    }
    return out;
}

}  // namespace

void ContextSet::validate() const {
    if (values.empty()) throw InvalidInput("context set is empty");
    if (locations.size() != values.size()) throw ShapeMismatch("context locations and values differ in length");
    for (std::size_t i = 0; i < size(); ++i) {
        const Vec2 r = locations[i];
        if (!(r.x >= 0.0 && r.x <= 1.0 && r.y >= 0.0 && r.y <= 1.0))
            throw InvalidInput("context location " + std::to_string(i) + " is outside [0,1]^2");
        if (!std::isfinite(values[i])) throw InvalidInput("context value " + std::to_string(i) + " is not finite");
    }
}

std::vector<std::size_t> ContextSet::canonical_order() const {
    std::vector<std::size_t> order(size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
        return std::tie(locations[a].x, locations[a].y, values[a]) <
               std::tie(locations[b].x, locations[b].y, values[b]);
    });
    return order;
}

ContextSet ContextSet::permuted(const std::vector<std::size_t>& order) const {
    ContextSet out;
    out.freq_hz = freq_hz;
    for (auto i : order) {
        out.locations.push_back(locations.at(i));
        out.values.push_back(values.at(i));
    }
    return out;
}

ContextSet make_context(const ObservationSet& obs, const Grid& grid, double freq_hz) {
    ContextSet ctx;
    ctx.freq_hz = freq_hz;
    for (const auto& o : obs.entries) {
        ctx.locations.push_back({o.location.x / grid.lx, o.location.y / grid.ly});
        ctx.values.push_back(o.magnitude);
    }
    return ctx;
}

std::vector<Vec2> normalized_grid(const Grid& grid) {
    std::vector<Vec2> out;
    out.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Vec2 p = grid.point(k);
        out.push_back({p.x / grid.lx, p.y / grid.ly});
    }
    return out;
}

void NpConfig::validate() const {
    if (embed_dim < 1 || latent_dim < 1 || decoder_width < 1) throw InvalidInput("model dimensions must be positive");
    if (heads < 1 || embed_dim % heads != 0) throw InvalidInput("embed_dim must be divisible by heads");
    if (sa_blocks < 0 || decoder_layers < 1 || ffn_multiplier < 1) throw InvalidInput("invalid layer counts");
}

std::vector<double> NpConfig::encode() const {
    return {static_cast<double>(embed_dim),      static_cast<double>(latent_dim), static_cast<double>(heads),
            static_cast<double>(sa_blocks),      static_cast<double>(decoder_width),
            static_cast<double>(decoder_layers), static_cast<double>(ffn_multiplier),
            freq_as_feature ? 1.0 : 0.0};
}

NpConfig NpConfig::decode(const std::vector<double>& v) {
    if (v.size() != 8) throw FormatError("checkpoint: architecture entry has " + std::to_string(v.size()) + " values");
    NpConfig c;
    c.embed_dim = static_cast<Eigen::Index>(v[0]);
    c.latent_dim = static_cast<Eigen::Index>(v[1]);
    c.heads = static_cast<int>(v[2]);
    c.sa_blocks = static_cast<int>(v[3]);
    c.decoder_width = static_cast<Eigen::Index>(v[4]);
    c.decoder_layers = static_cast<int>(v[5]);
    c.ffn_multiplier = static_cast<int>(v[6]);
    c.freq_as_feature = v[7] != 0.0;
    c.validate();
    return c;
}

NpConfig desk_config() {
    NpConfig c;
    c.embed_dim = 64;
    c.latent_dim = 64;
    c.heads = 4;
    c.sa_blocks = 2;
    c.decoder_width = 128;
    return c;
}

Tensor sample_latent(const GaussianLatent& latent, std::uint64_t seed) {
    Rng rng(seed);
    Matrix eps(1, latent.mu.cols());
    for (Eigen::Index j = 0; j < eps.cols(); ++j) eps(0, j) = rng.normal();
    return nn::add(latent.mu, nn::mul(latent.sigma, Tensor::constant(eps, 1)));
}

Tensor kl_divergence(const GaussianLatent& q, const GaussianLatent& p) {
    const Tensor sq = nn::square(q.sigma);
    const Tensor sp = nn::square(p.sigma);
    const Tensor quad = nn::div(nn::add(sq, nn::square(nn::sub(q.mu, p.mu))), nn::scale(sp, 2.0));
    const Tensor log_ratio = nn::sub(nn::log(p.sigma), nn::log(q.sigma));
    return nn::sum(nn::add_scalar(nn::add(log_ratio, quad), -0.5));
}

ElboResult elbo_from_parts(const Tensor& mean, const std::vector<double>& targets, const GaussianLatent& posterior,
                           const GaussianLatent& prior) {
    if (mean.rows() != static_cast<Eigen::Index>(targets.size()) || mean.cols() != 1)
        throw ShapeMismatch("elbo: decoded mean does not match the target count");
    if (targets.empty()) throw InvalidInput("elbo: no targets");
    const Tensor truth = Tensor::constant(Eigen::Map<const Eigen::VectorXd>(targets.data(), targets.size()));
    const Tensor l_d = nn::mean(nn::square(nn::sub(mean, truth)));
    const Tensor kl = kl_divergence(posterior, prior);
    ElboResult r{nn::add(l_d, kl), l_d.item(), kl.item()};
    if (!std::isfinite(r.l_d)) throw NonFinite("elbo: reconstruction term L_D is not finite");
    if (!std::isfinite(r.kl)) throw NonFinite("elbo: KL term is not finite");
    return r;
}

NeuralProcess::NeuralProcess(const NpConfig& config, std::uint64_t init_seed) : config_(config) {
    config_.validate();
    Rng rng(init_seed);
    const Eigen::Index d = config_.embed_dim;
    const Eigen::Index extra = config_.freq_as_feature ? 1 : 0;
    pair_in_ = nn::Dense::create(store_, "latent/pair_in", 3 + extra, d, rng);
    pair_out_ = nn::Dense::create(store_, "latent/pair_out", d, d, rng);
    for (int b = 0; b < config_.sa_blocks; ++b)
        blocks_.push_back(nn::SelfAttentionBlock::create(store_, "latent/sa" + std::to_string(b), d, config_.heads,
                                                         config_.ffn_multiplier * d, rng));
    latent_hidden_ = nn::Dense::create(store_, "latent/hidden", d, d, rng);
    latent_out_ = nn::Dense::create(store_, "latent/out", d, 2 * config_.latent_dim, rng);

    loc_in_ = nn::Dense::create(store_, "det/loc_in", 2 + extra, d, rng);
    loc_out_ = nn::Dense::create(store_, "det/loc_out", d, d, rng);
    value_in_ = nn::Dense::create(store_, "det/value_in", 1, d, rng);
    value_out_ = nn::Dense::create(store_, "det/value_out", d, d, rng);
    cross_ = nn::AttentionParams::create(store_, "det/cross", config_.heads, d, d, d, d, d, d, rng);

    Eigen::Index in = d + config_.latent_dim + d;
    for (int l = 0; l < config_.decoder_layers; ++l) {
        decoder_.push_back(nn::Dense::create(store_, "decoder/hidden" + std::to_string(l), in, config_.decoder_width, rng));
        in = config_.decoder_width;
    }
    decoder_.push_back(nn::Dense::create(store_, "decoder/out", in, 2, rng));
}

Tensor NeuralProcess::location_embedding(const std::vector<Vec2>& locations, double freq_hz) const {
    const Eigen::Index extra = config_.freq_as_feature ? 1 : 0;
    Matrix x(static_cast<Eigen::Index>(locations.size()), 2 + extra);
    for (std::size_t i = 0; i < locations.size(); ++i) {
        x(i, 0) = locations[i].x;
        x(i, 1) = locations[i].y;
        if (extra) x(i, 2) = freq_hz * kFreqScale;
    }
    return loc_out_(nn::gelu(loc_in_(Tensor::constant(x))));
}

Tensor NeuralProcess::value_embedding(const std::vector<double>& values) const {
    Matrix x(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) x(i, 0) = values[i];
    return value_out_(nn::gelu(value_in_(Tensor::constant(x))));
}

GaussianLatent NeuralProcess::encode_latent(const ContextSet& input) const {
    input.validate();
    const ContextSet ctx = input.permuted(input.canonical_order());
    const Eigen::Index extra = config_.freq_as_feature ? 1 : 0;
    Matrix x(static_cast<Eigen::Index>(ctx.size()), 3 + extra);
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        x(i, 0) = ctx.locations[i].x;
        x(i, 1) = ctx.locations[i].y;
        x(i, 2) = ctx.values[i];
        if (extra) x(i, 3) = ctx.freq_hz * kFreqScale;
    }
    Tensor h = pair_out_(nn::gelu(pair_in_(Tensor::constant(x))));
    for (const auto& block : blocks_) h = block(h);
    const Tensor s = nn::mean_rows(h);
    const Tensor out = latent_out_(nn::gelu(latent_hidden_(s)));
    const Eigen::Index L = config_.latent_dim;
    return {nn::slice_cols(out, 0, L), positive(nn::slice_cols(out, L, L))};
}

DeterministicResult NeuralProcess::encode_deterministic(const ContextSet& input,
                                                        const std::vector<Vec2>& targets) const {
    input.validate();
    if (targets.empty()) throw InvalidInput("no target locations");
    const std::vector<std::size_t> order = input.canonical_order();
    const ContextSet ctx = input.permuted(order);
    const Tensor keys = location_embedding(ctx.locations, ctx.freq_hz);
    const Tensor queries = location_embedding(targets, ctx.freq_hz);
    const Tensor values = value_embedding(ctx.values);
    nn::AttentionResult att = nn::multihead_attention(cross_, queries, keys, values);

    DeterministicResult r;
    r.representation = att.output;
    r.query_embedding = queries;
    Matrix avg = Matrix::Zero(queries.rows(), keys.rows());
    for (const auto& w : att.head_weights) avg += w.value();
    avg /= static_cast<double>(att.head_weights.size());
    r.map.weights.resize(avg.rows(), avg.cols());
    for (std::size_t c = 0; c < order.size(); ++c) r.map.weights.col(static_cast<Eigen::Index>(order[c])) = avg.col(c);
    return r;
}

DecoderOutput NeuralProcess::decode(const Tensor& z, const Tensor& representation, const std::vector<Vec2>& targets,
                                    double freq_hz) const {
    if (representation.rows() != static_cast<Eigen::Index>(targets.size()))
        throw ShapeMismatch("decode: representation rows != target count");
    return decode_embedded(z, representation, location_embedding(targets, freq_hz));
}

DecoderOutput NeuralProcess::decode_embedded(const Tensor& z, const Tensor& representation,
                                             const Tensor& target_embedding) const {
    const Eigen::Index m = target_embedding.rows();
    if (representation.rows() != m) throw ShapeMismatch("decode: representation rows != target count");
    if (z.rows() != 1 || z.cols() != config_.latent_dim) throw ShapeMismatch("decode: latent has the wrong width");
    const std::vector<Tensor> parts{target_embedding, nn::broadcast_rows(z, m), representation};
    Tensor h = nn::concat_cols(parts);
    for (std::size_t l = 0; l + 1 < decoder_.size(); ++l) h = nn::gelu(decoder_[l](h));
    const Tensor out = decoder_.back()(h);
    return {nn::slice_cols(out, 0, 1), positive(nn::slice_cols(out, 1, 1))};
}

ElboResult NeuralProcess::elbo_loss(const ContextSet& ctx, const TargetSet& targets, std::uint64_t seed,
                                    int latent_samples) const {
    if (targets.values.empty() || targets.values.size() != targets.locations.size())
        throw InvalidInput("elbo: targets must be non-empty with matching locations and values");
    if (latent_samples < 1) throw InvalidInput("elbo: latent_samples must be >= 1");
    const GaussianLatent prior = encode_latent(ctx);
    const GaussianLatent posterior = encode_latent(merge(ctx, targets));
    const DeterministicResult det = encode_deterministic(ctx, targets.locations);
    Tensor mean_sum;
    for (int s = 0; s < latent_samples; ++s) {
        const Tensor z = sample_latent(posterior, derive_seed(seed, static_cast<std::uint64_t>(s)));
        const Tensor mean = decode_embedded(z, det.representation, det.query_embedding).mean;
        if (latent_samples == 1) {
            return elbo_from_parts(mean, targets.values, posterior, prior);
        }
        const Tensor truth = Tensor::constant(
            Eigen::Map<const Eigen::VectorXd>(targets.values.data(), static_cast<Eigen::Index>(targets.values.size())));
        const Tensor err = nn::mean(nn::square(nn::sub(mean, truth)));
        mean_sum = mean_sum.defined() ? nn::add(mean_sum, err) : err;
    }
    const Tensor l_d = nn::scale(mean_sum, 1.0 / latent_samples);
    const Tensor kl = kl_divergence(posterior, prior);
    ElboResult r{nn::add(l_d, kl), l_d.item(), kl.item()};
    if (!std::isfinite(r.l_d)) throw NonFinite("elbo: reconstruction term L_D is not finite");
    if (!std::isfinite(r.kl)) throw NonFinite("elbo: KL term is not finite");
    return r;
}

nn::Checkpoint NeuralProcess::checkpoint(const nn::OptimizerState* optimizer) const {
    nn::Checkpoint c = nn::snapshot(store_, optimizer);
    const auto arch = config_.encode();
    nn::NamedArray meta;
    meta.name = "meta/architecture";
    meta.dims = {static_cast<std::uint32_t>(arch.size())};
    meta.data = arch;
    c.params.insert(c.params.begin(), meta);
    return c;
}

NeuralProcess NeuralProcess::from_checkpoint(const nn::Checkpoint& ckpt, nn::OptimizerState* optimizer) {
    const nn::NamedArray* meta = ckpt.find("meta/architecture");
    if (!meta) throw FormatError("checkpoint: missing meta/architecture entry");
    NeuralProcess model(NpConfig::decode(meta->data), 0);
    nn::restore(ckpt, model.store_, optimizer);
    return model;
}

NeuralProcess NeuralProcess::load(const std::filesystem::path& path) {
    return from_checkpoint(nn::read_checkpoint(path));
}

FieldPrediction predict_field(const NeuralProcess& model, const ContextSet& ctx, const Grid& grid,
                              std::optional<Standardization> stats) {
    nn::NoGradGuard no_grad;
    const std::vector<Vec2> targets = normalized_grid(grid);
    const GaussianLatent latent = model.encode_latent(ctx);
    DeterministicResult det = model.encode_deterministic(ctx, targets);
    const DecoderOutput out = model.decode_embedded(latent.mu, det.representation, det.query_embedding);
    FieldPrediction p;
    p.magnitudes.resize(targets.size());
    p.variance.resize(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double m = out.mean.value()(static_cast<Eigen::Index>(i), 0);
        p.magnitudes[i] = stats ? m * stats->std + stats->mean : m;
        p.variance[i] = out.variance.value()(static_cast<Eigen::Index>(i), 0);
    }
    p.attention = std::move(det.map);
    return p;
}

}  // namespace sfr::np
