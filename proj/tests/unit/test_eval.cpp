#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "sfr/errors.hpp"
#include "sfr/eval/benchmark.hpp"
#include "sfr/eval/metrics.hpp"
#include "sfr/np/model.hpp"
#include "sfr/rng.hpp"

using namespace sfr;
using namespace sfr::eval;

namespace {

std::vector<double> random_vec(Rng& rng, int n, double lo = 0.1, double hi = 3.0) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST(Metrics, NmseExamples) {
    const std::vector<double> t{0.5, 1.0, 2.0, 3.5};
    const Nmse same = nmse(t, t);
    EXPECT_EQ(same.linear, 0.0);
    EXPECT_EQ(same.db, kDbSentinel);
    const Nmse zero = nmse(t, std::vector<double>(4, 0.0));
    EXPECT_EQ(zero.linear, 1.0);
    EXPECT_EQ(zero.db, 0.0);
    std::vector<double> twice(t);
    for (auto& x : twice) x *= 2.0;
    const Nmse dbl = nmse(t, twice);
    EXPECT_EQ(dbl.linear, 1.0);
    EXPECT_EQ(dbl.db, 0.0);
    for (auto v : {NmseVariant::PerPoint, NmseVariant::Vector}) {
        EXPECT_EQ(nmse(t, t, v).linear, 0.0);
        EXPECT_EQ(nmse(t, twice, v).linear, 1.0);
    }
    EXPECT_EQ(to_db(0.1), -10.0);
}

TEST(Metrics, NmseVariantsDiffer) {
    const std::vector<double> t{1.0, 10.0};
    const std::vector<double> p{2.0, 10.0};
    EXPECT_DOUBLE_EQ(nmse(t, p, NmseVariant::PerPoint).linear, 0.5);
    EXPECT_DOUBLE_EQ(nmse(t, p, NmseVariant::Vector).linear, 1.0 / 101.0);
    EXPECT_EQ(parse_variant("vector"), NmseVariant::Vector);
    EXPECT_EQ(variant_name(NmseVariant::PerPoint), "point");
    EXPECT_THROW(parse_variant("db"), InvalidInput);
}

TEST(Metrics, NmseErrors) {
    EXPECT_THROW(nmse(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 1.0}), DomainError);
    EXPECT_THROW(nmse(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 1.0}, NmseVariant::Vector),
                 DomainError);
    EXPECT_NO_THROW(nmse(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 1.0}, NmseVariant::Vector));
    EXPECT_THROW(nmse(std::vector<double>{1.0}, std::vector<double>{1.0, 1.0}), ShapeMismatch);
}

TEST(Metrics, NmseShrinksWithPerturbation) {
    Rng rng(3);
    const auto t = random_vec(rng, 50);
    const auto u = random_vec(rng, 50, -1.0, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps = 1.0; eps > 1e-9; eps /= 10.0) {
        std::vector<double> p(t);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += eps * u[i];
        const double v = nmse(t, p).linear;
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_LT(prev, 1e-15);
}

TEST(Metrics, MacExamples) {
    Rng rng(5);
    const auto t = random_vec(rng, 40, -2.0, 2.0);
    for (double c : {-3.0, 0.5, 7.0}) {
        std::vector<double> p(t);
        for (auto& x : p) x *= c;
        EXPECT_NEAR(mac(t, p), 1.0, 1e-12);
    }
    EXPECT_NEAR(mac(std::vector<double>{1.0, 0.0, 2.0}, std::vector<double>{0.0, 5.0, 0.0}), 0.0, 1e-12);
    EXPECT_NEAR(mac(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, -1.0}), 0.0, 1e-12);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_vec(rng, 1 + trial % 30, -2.0, 2.0);
        const auto b = random_vec(rng, 1 + trial % 30, -2.0, 2.0);
        const double m = mac(a, b);
        EXPECT_NEAR(m, oracle::mac_cos2(a, b), 1e-12);
        EXPECT_GE(m, 0.0);
        EXPECT_LE(m, 1.0 + 1e-12);
    }
    EXPECT_THROW(mac(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 2.0}), DomainError);
    EXPECT_THROW(mac(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), ShapeMismatch);
}

TEST(Metrics, MacScaleInvarianceIsExactForPowersOfTwo) {
    Rng rng(9);
    const auto t = random_vec(rng, 32, -2.0, 2.0);
    const auto p = random_vec(rng, 32, -2.0, 2.0);
    std::vector<double> scaled(p);
    for (auto& x : scaled) x *= -4.0;
    EXPECT_EQ(mac(t, scaled), mac(t, p));
}

TEST(Benchmark, MethodNames) {
    for (Method m : all_methods()) EXPECT_EQ(parse_method(method_name(m)), m);
    EXPECT_EQ(all_methods().size(), 7u);
    EXPECT_THROW(parse_method("unet"), InvalidInput);
}

TEST(Benchmark, DeterministicCsvAndFailureRows) {
    sim::DatasetConfig dc;
    dc.count = 3;
    dc.freqs = {150.0, 300.0};
    dc.seed = 12;
    const sim::Dataset ds = sim::generate_dataset(dc);

    BenchmarkConfig cfg;
    cfg.methods = {Method::MeanBaseline, Method::GpBessel, Method::Np};
    cfg.obs_counts = {5, 10};
    cfg.freqs = {150.0};
    cfg.gp_restarts = 2;
    cfg.seed = 4;
    np::NpConfig tiny;
    tiny.embed_dim = 8;
    tiny.latent_dim = 4;
    tiny.heads = 2;
    tiny.sa_blocks = 1;
    tiny.decoder_width = 8;
    tiny.decoder_layers = 2;
    const np::NeuralProcess model(tiny, 1);

    auto csv = [&](int threads) {
        BenchmarkConfig c = cfg;
        c.threads = threads;
        const MetricReport r = benchmark(ds, c, &model);
        std::ostringstream rows, summary;
        write_rows_csv(rows, r);
        write_summary_csv(summary, r);
        return std::pair{rows.str(), summary.str()};
    };
    const auto a = csv(1);
    EXPECT_EQ(a, csv(1));
    EXPECT_EQ(a, csv(3));
    EXPECT_EQ(a.first.substr(0, a.first.find('\n')), "method,family,freq_hz,n_obs,field_id,nmse_db,mac");
    EXPECT_EQ(a.second.substr(0, a.second.find('\n')), "method,family,freq_hz,n_obs,nmse_db,mac,n_fields,n_failed");
    // 3 methods x 2 counts x 3 fields
    EXPECT_EQ(std::count(a.first.begin(), a.first.end(), '\n'), 1 + 18);
    EXPECT_EQ(std::count(a.second.begin(), a.second.end(), '\n'), 1 + 6);

    // NP requested without a model violates the precondition up front.
    BenchmarkConfig np_only = cfg;
    np_only.methods = {Method::Np};
    EXPECT_THROW(benchmark(ds, np_only, nullptr), InvalidInput);
}

TEST(Benchmark, SummaryAveragesRows) {
    MetricReport r;
    for (int f = 0; f < 4; ++f) {
        BenchmarkRow row;
        row.method = Method::GpBessel;
        row.freq_hz = 150.0;
        row.n_obs = 10;
        row.field_id = static_cast<std::size_t>(f);
        row.nmse_db = -10.0 - f;
        row.mac = 0.5 + 0.1 * f;
        r.rows.push_back(row);
    }
    const auto s = r.summary();
    ASSERT_EQ(s.size(), 1u);
    EXPECT_DOUBLE_EQ(s[0].nmse_db, -11.5);
    EXPECT_DOUBLE_EQ(s[0].mac, 0.65);
    EXPECT_EQ(s[0].n_fields, 4u);
    EXPECT_DOUBLE_EQ(r.mean_nmse_db(Method::GpBessel, 150.0, 10), -11.5);
    EXPECT_TRUE(std::isnan(r.mean_nmse_db(Method::GpHier, 150.0, 10)));

    // A failed field is kept as a row, excluded from the means and counted.
    BenchmarkRow bad = r.rows[0];
    bad.field_id = 4;
    bad.failed = true;
    bad.error = "singular";
    bad.nmse_db = std::numeric_limits<double>::quiet_NaN();
    bad.mac = std::numeric_limits<double>::quiet_NaN();
    r.rows.push_back(bad);
    const auto s2 = r.summary();
    EXPECT_DOUBLE_EQ(s2[0].nmse_db, -11.5);
    EXPECT_EQ(s2[0].n_fields, 5u);
    EXPECT_EQ(s2[0].n_failed, 1u);
    std::ostringstream os;
    write_rows_csv(os, r);
    EXPECT_NE(os.str().find(",4,nan,nan"), std::string::npos) << os.str();
}

TEST(Benchmark, MeanBaselinePredictsObservedMean) {
    sim::DatasetConfig dc;
    dc.count = 1;
    dc.freqs = {200.0};
    const sim::Dataset ds = sim::generate_dataset(dc);
    BenchmarkConfig cfg;
    cfg.methods = {Method::MeanBaseline};
    cfg.obs_counts = {1024};
    const MetricReport r = benchmark(ds, cfg);
    ASSERT_EQ(r.rows.size(), 1u);
    // Observing every point makes the prediction the field mean, so MAC is
    // the squared cosine between the field and a constant vector.
    const auto& f = ds.field(0, 0);
    std::vector<double> mag, ones(1024, 1.0);
    for (const auto& v : f.values) mag.push_back(std::abs(v));
    EXPECT_NEAR(r.rows[0].mac, oracle::mac_cos2(mag, ones), 1e-12);
}
