#include "sfr/eval/benchmark.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <thread>

#include "sfr/errors.hpp"
#include "sfr/rng.hpp"
#include "sfr/sim/generators.hpp"

namespace sfr::eval {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::optional<gp::KernelFamily> gp_family(Method m) {
    switch (m) {
        case Method::GpBessel: return gp::KernelFamily::Bessel;
        case Method::GpHier: return gp::KernelFamily::Hierarchical;
        case Method::GpRbfIso: return gp::KernelFamily::RbfIso;
        case Method::GpRbfAniso: return gp::KernelFamily::RbfAniso;
        case Method::GpRbfPer: return gp::KernelFamily::RbfPeriodic;
        default: return std::nullopt;
    }
}

std::vector<double> predict(Method method, const sim::StandardizedField& sf, const sim::ObservationSet& obs,
                            const BenchmarkConfig& cfg, const np::NeuralProcess* model, std::uint64_t fit_seed) {
    const sim::Grid& grid = sf.source.grid;
    if (method == Method::MeanBaseline) {
        double m = 0.0;
        for (const auto& o : obs.entries) m += std::abs(o.value);
        return std::vector<double>(grid.size(), m / static_cast<double>(obs.size()));
    }
    if (method == Method::Np) {
        if (!model) throw InvalidInput("benchmark: method np needs a checkpoint");
        const np::ContextSet ctx = np::make_context(obs, grid, sf.source.freq_hz);
        return np::predict_field(*model, ctx, grid, np::Standardization{sf.mean, sf.std}).magnitudes;
    }
    const auto family = gp_family(method);
    std::vector<Vec2> locs = obs.locations();
    std::vector<sim::Complex> values = obs.values();
    double scale = 1.0;
    if (cfg.gp_unit_scale) {
        double ss = 0.0;
        for (const auto& v : values) ss += std::norm(v);
        scale = std::sqrt(ss / static_cast<double>(values.size()));
        if (!(scale > 0.0)) throw DegenerateField("benchmark: observations are all zero");
        for (auto& v : values) v /= scale;
    }
    const double k = wavenumber(sf.source.freq_hz);
    const gp::GpFit fit = gp::fit_map(locs, values, *family, k, cfg.priors, cfg.gp_restarts, fit_seed);
    const std::vector<Vec2> targets = grid.points();
    gp::Prediction p = gp::posterior_mean(locs, values, targets, fit);
    for (auto& m : p.magnitudes) m *= scale;
    return p.magnitudes;
}

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

std::string_view method_name(Method m) {
    switch (m) {
        case Method::Np: return "np";
        case Method::GpBessel: return "gp-bessel";
        case Method::GpHier: return "gp-hier";
        case Method::GpRbfIso: return "gp-rbf-iso";
        case Method::GpRbfAniso: return "gp-rbf-aniso";
        case Method::GpRbfPer: return "gp-rbf-per";
        case Method::MeanBaseline: return "mean-baseline";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (Method m : all_methods())
        if (method_name(m) == name) return m;
    throw InvalidInput("unknown method '" + std::string(name) + "'");
}

std::vector<Method> all_methods() {
    return {Method::Np,         Method::GpBessel, Method::GpHier,      Method::GpRbfIso,
            Method::GpRbfAniso, Method::GpRbfPer, Method::MeanBaseline};
}

std::uint64_t observation_seed(std::uint64_t seed, std::size_t field_id, int n_obs) {
    return derive_seed(derive_seed(seed, field_id), static_cast<std::uint64_t>(n_obs));
}

std::vector<SummaryRow> MetricReport::summary() const {
    std::vector<SummaryRow> out;
    for (const auto& r : rows) {
        SummaryRow* cell = nullptr;
        for (auto& s : out)
            if (s.method == r.method && s.freq_hz == r.freq_hz && s.n_obs == r.n_obs && s.family == r.family)
                cell = &s;
        if (!cell) {
            out.push_back({r.method, r.family, r.freq_hz, r.n_obs, 0.0, 0.0, 0, 0});
            cell = &out.back();
        }
        ++cell->n_fields;
        if (r.failed) {
            ++cell->n_failed;
        } else {
            cell->nmse_db += r.nmse_db;
            cell->mac += r.mac;
        }
    }
    for (auto& s : out) {
        const std::size_t ok = s.n_fields - s.n_failed;
        s.nmse_db = ok ? s.nmse_db / static_cast<double>(ok) : kNaN;
        s.mac = ok ? s.mac / static_cast<double>(ok) : kNaN;
    }
    return out;
}

double MetricReport::mean_nmse_db(Method m, double freq_hz, int n_obs) const {
    for (const auto& s : summary())
        if (s.method == m && s.freq_hz == freq_hz && s.n_obs == n_obs) return s.nmse_db;
    return kNaN;
}

MetricReport benchmark(const sim::Dataset& dataset, const BenchmarkConfig& cfg, const np::NeuralProcess* model) {
    if (cfg.methods.empty()) throw InvalidInput("benchmark: no methods");
    if (cfg.obs_counts.empty()) throw InvalidInput("benchmark: no observation counts");
    for (Method m : cfg.methods)
        if (m == Method::Np && !model) throw InvalidInput("benchmark: method np needs a checkpoint");
    const std::size_t n_fields =
        cfg.max_fields > 0 ? std::min(cfg.max_fields, dataset.fields.size()) : dataset.fields.size();

    std::vector<std::vector<BenchmarkRow>> per_field(n_fields);
    auto run_field = [&](std::size_t f) {
        std::vector<std::size_t> freq_idx;
        if (cfg.freqs.empty()) {
            for (std::size_t i = 0; i < dataset.fields[f].freqs.size(); ++i) freq_idx.push_back(i);
        } else {
            for (double hz : cfg.freqs) {
                const int i = dataset.find_frequency(f, hz);
                if (i < 0) throw InvalidInput("benchmark: frequency " + fmt_double(hz) + " Hz not in dataset");
                freq_idx.push_back(static_cast<std::size_t>(i));
            }
        }
        auto& rows = per_field[f];
        for (std::size_t fi : freq_idx) {
            const sim::Field field = dataset.field(f, fi);
            const std::vector<double> truth = field.magnitudes();
            std::optional<sim::StandardizedField> sf;
            std::string field_error;
            try {
                sf = sim::standardize(field);
            } catch (const Error& e) {
                field_error = e.what();
            }
            for (int n_obs : cfg.obs_counts) {
                std::optional<sim::ObservationSet> obs;
                if (sf) {
                    try {
                        obs = sim::sample_observations(*sf, static_cast<std::size_t>(n_obs),
                                                       observation_seed(cfg.seed, f, n_obs));
                    } catch (const Error& e) {
                        field_error = e.what();
                    }
                }
                for (Method m : cfg.methods) {
                    BenchmarkRow row{m, dataset.family, field.freq_hz, n_obs, f, kNaN, kNaN, true, field_error};
                    if (obs) {
                        try {
                            const auto pred =
                                predict(m, *sf, *obs, cfg, model, derive_seed(observation_seed(cfg.seed, f, n_obs), fi));
                            row.nmse_db = nmse(truth, pred, cfg.variant).db;
                            row.mac = mac(truth, pred);
                            row.failed = false;
                            row.error.clear();
                        } catch (const Error& e) {
                            row.error = e.what();
                        }
                    }
                    rows.push_back(std::move(row));
                }
            }
        }
    };

    const int threads = std::max(1, cfg.threads);
    if (threads == 1) {
        for (std::size_t f = 0; f < n_fields; ++f) run_field(f);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        {
            std::vector<std::jthread> pool;
            for (int t = 0; t < threads; ++t)
                pool.emplace_back([&] {
                    for (std::size_t f = next++; f < n_fields; f = next++) {
                        try {
                            run_field(f);
                        } catch (...) {
                            std::lock_guard lock(failure_mutex);
                            if (!failure) failure = std::current_exception();
                        }
                    }
                });
        }
        if (failure) std::rethrow_exception(failure);
    }

    MetricReport report;
    for (auto& rows : per_field)
        for (auto& r : rows) report.rows.push_back(std::move(r));
    return report;
}

void write_rows_csv(std::ostream& os, const MetricReport& report) {
    os << "method,family,freq_hz,n_obs,field_id,nmse_db,mac\n";
    for (const auto& r : report.rows)
        os << method_name(r.method) << ',' << sim::family_name(r.family) << ',' << fmt_double(r.freq_hz) << ','
           << r.n_obs << ',' << r.field_id << ',' << fmt_double(r.nmse_db) << ',' << fmt_double(r.mac) << '\n';
}

void write_summary_csv(std::ostream& os, const MetricReport& report) {
    os << "method,family,freq_hz,n_obs,nmse_db,mac,n_fields,n_failed\n";
    for (const auto& s : report.summary())
        os << method_name(s.method) << ',' << sim::family_name(s.family) << ',' << fmt_double(s.freq_hz) << ','
           << s.n_obs << ',' << fmt_double(s.nmse_db) << ',' << fmt_double(s.mac) << ',' << s.n_fields << ','
           << s.n_failed << '\n';
}

}  // namespace sfr::eval
