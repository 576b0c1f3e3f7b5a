#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sfr/eval/metrics.hpp"
#include "sfr/gp/regression.hpp"
#include "sfr/np/model.hpp"
#include "sfr/sim/dataset.hpp"

namespace sfr::eval {

enum class Method { Np, GpBessel, GpHier, GpRbfIso, GpRbfAniso, GpRbfPer, MeanBaseline };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
std::vector<Method> all_methods();

struct BenchmarkConfig {
    std::vector<Method> methods = all_methods();
    std::vector<int> obs_counts{10};
    /// Frequencies to evaluate; empty means every frequency in the dataset.
    std::vector<double> freqs;
    std::uint64_t seed = 0;
    NmseVariant variant = NmseVariant::PerPoint;
    gp::PriorConfig priors;
    int gp_restarts = 8;
    /// Scale GP observations to unit RMS before fitting (undone afterwards).
    bool gp_unit_scale = true;
    /// Evaluate at most this many fields (0 = all).
    std::size_t max_fields = 0;
    int threads = 1;
};

struct BenchmarkRow {
    Method method = Method::MeanBaseline;
    sim::Family family = sim::Family::Diffuse;
    double freq_hz = 0.0;
    int n_obs = 0;
    std::size_t field_id = 0;
    double nmse_db = 0.0;  // NaN on failure
    double mac = 0.0;      // NaN on failure
    bool failed = false;
    std::string error;
};

struct SummaryRow {
    Method method = Method::MeanBaseline;
    sim::Family family = sim::Family::Diffuse;
    double freq_hz = 0.0;
    int n_obs = 0;
    double nmse_db = 0.0;  // mean over successful fields
    double mac = 0.0;
    std::size_t n_fields = 0;
    std::size_t n_failed = 0;
};

struct MetricReport {
    std::vector<BenchmarkRow> rows;

    /// Aggregated by (method, frequency, observation count) in first-seen order.
    std::vector<SummaryRow> summary() const;
    /// Mean NMSE(dB) of one cell; NaN when absent.
    double mean_nmse_db(Method m, double freq_hz, int n_obs) const;
};

/// Observation draw shared by all methods for one (field, count) pair.
std::uint64_t observation_seed(std::uint64_t seed, std::size_t field_id, int n_obs);

/// Per-field failures become rows with failed = true. `model` is required
/// only when Method::Np is requested.
MetricReport benchmark(const sim::Dataset& dataset, const BenchmarkConfig& config,
                       const np::NeuralProcess* model = nullptr);

void write_rows_csv(std::ostream& os, const MetricReport& report);
void write_summary_csv(std::ostream& os, const MetricReport& report);

}  // namespace sfr::eval
