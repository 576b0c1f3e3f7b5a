#include "sfr/np/train.hpp"

#include <chrono>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "sfr/errors.hpp"
#include "sfr/rng.hpp"
#include "sfr/sim/generators.hpp"

namespace sfr::np {

namespace {

struct Task {
    ContextSet context;
    TargetSet targets;
};

Task draw_task(const sim::Dataset& ds, std::size_t field_index, const TrainConfig& cfg, Rng& rng) {
    const auto& f = ds.fields[field_index];
    const std::size_t fi = rng.below(f.freqs.size());
    const Grid grid = ds.grid(field_index);
    const sim::StandardizedField sf = sim::standardize(ds.field(field_index, fi));
    const std::size_t n = grid.size();

    const std::size_t n_ctx = cfg.fixed_ctx > 0 ? static_cast<std::size_t>(cfg.fixed_ctx)
                                                : static_cast<std::size_t>(rng.uniform_int(cfg.ctx_min, cfg.ctx_max));
    const std::size_t n_extra = static_cast<std::size_t>(rng.uniform_int(cfg.extra_min, cfg.extra_max));
    const std::size_t total = std::min(n, n_ctx + n_extra);
    if (n_ctx > n) throw InvalidInput("training: more contexts than grid points");
    // Partial Fisher-Yates: the first n_ctx picks are contexts, the rest extra targets.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < total; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);

    Task t;
    t.context.freq_hz = f.freqs[fi];
    for (std::size_t i = 0; i < total; ++i) {
        const Vec2 p = grid.point(idx[i]);
        const Vec2 r{p.x / grid.lx, p.y / grid.ly};
        if (i < n_ctx) {
            t.context.locations.push_back(r);
            t.context.values.push_back(sf.magnitudes[idx[i]]);
        }
        t.targets.locations.push_back(r);
        t.targets.values.push_back(sf.magnitudes[idx[i]]);
    }
    return t;
}

void save(const TrainResult& r, const TrainConfig& cfg) {
    if (!cfg.checkpoint_path.empty()) nn::write_checkpoint(r.model.checkpoint(&r.optimizer), cfg.checkpoint_path);
}

}  // namespace

void TrainConfig::validate() const {
    model.validate();
    schedule.validate();
    if (epochs < 0) throw InvalidInput("epochs must be >= 0");
    if (fixed_ctx < 0) throw InvalidInput("fixed_ctx must be >= 0");
    if (fixed_ctx == 0 && (ctx_min < 1 || ctx_max < ctx_min)) throw InvalidInput("invalid context range");
    if (extra_min < 0 || extra_max < extra_min) throw InvalidInput("invalid extra-target range");
    if (tasks_per_step < 1 || latent_samples < 1) throw InvalidInput("tasks_per_step and latent_samples must be >= 1");
    if (checkpoint_every < 0) throw InvalidInput("checkpoint_every must be >= 0");
}

std::string format_log_record(const EpochRecord& r) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["step"] = r.step;
    j["l_d"] = r.l_d;
    j["kl"] = r.kl;
    j["lr"] = r.lr;
    j["wall_ms"] = r.wall_ms;
    return j.dump();
}

TrainResult train(const sim::Dataset& dataset, const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (dataset.fields.empty()) throw InvalidInput("training dataset is empty");
    TrainResult result{NeuralProcess(config.model, derive_seed(config.seed, 0)), {}, {}};
    result.optimizer = nn::OptimizerState::for_store(result.model.parameters(), config.schedule);

    std::ofstream log;
    if (!config.log_path.empty()) {
        log.open(config.log_path, std::ios::trunc);
        if (!log) throw IoError("cannot open training log '" + config.log_path.string() + "'");
    }

    Rng rng(derive_seed(config.seed, 1));
    std::vector<std::size_t> order(dataset.fields.size());
    std::iota(order.begin(), order.end(), 0);
    const auto start = std::chrono::steady_clock::now();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        double sum_ld = 0.0, sum_kl = 0.0;
        std::size_t tasks = 0;
        double lr = config.schedule(epoch);
        for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(config.tasks_per_step)) {
            const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(config.tasks_per_step));
            result.model.parameters().zero_grad();
            for (std::size_t k = pos; k < end; ++k) {
                const Task task = draw_task(dataset, order[k], config, rng);
                try {
                    ElboResult e = result.model.elbo_loss(task.context, task.targets, rng.next(), config.latent_samples);
                    nn::scale(e.loss, 1.0 / static_cast<double>(end - pos)).backward();
                    sum_ld += e.l_d;
                    sum_kl += e.kl;
                } catch (const NonFinite& err) {
                    throw NonFinite(std::string(err.what()) + " (epoch " + std::to_string(epoch) + ", step " +
                                    std::to_string(result.optimizer.step) + ")");
                }
                ++tasks;
            }
            try {
                lr = nn::adam_step(result.optimizer, result.model.parameters(), epoch);
            } catch (const NonFinite& err) {
                throw NonFinite(std::string(err.what()) + " (epoch " + std::to_string(epoch) + ", step " +
                                std::to_string(result.optimizer.step) + ")");
            }
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.step = result.optimizer.step;
        rec.l_d = sum_ld / static_cast<double>(tasks);
        rec.kl = sum_kl / static_cast<double>(tasks);
        rec.lr = lr;
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        result.log.push_back(rec);
        if (log.is_open()) {
            log << format_log_record(rec) << '\n';
            log.flush();
        }
        if (on_epoch) on_epoch(rec);
        if (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) save(result, config);
    }
    save(result, config);
    return result;
}

}  // namespace sfr::np
