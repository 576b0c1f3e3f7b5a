// sfr: dataset generation, NP training, reconstruction and benchmarking.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sfr/errors.hpp"
#include "sfr/eval/benchmark.hpp"
#include "sfr/gp/regression.hpp"
#include "sfr/io/pgm.hpp"
#include "sfr/np/model.hpp"
#include "sfr/np/train.hpp"
#include "sfr/sim/dataset.hpp"

namespace fs = std::filesystem;
using namespace sfr;

namespace {

// "150,307,500" or "lo:hi:step" (inclusive).
std::vector<double> parse_freqs(const std::string& text) {
    if (text.empty()) return sim::default_frequency_lattice();
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double lo = 0, hi = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::istringstream is(text);
        if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0) || hi < lo)
            throw InvalidInput("--freqs: expected lo:hi:step, got '" + text + "'");
        const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (int i = 0; i < n; ++i) out.push_back(lo + i * step);
        return out;
    }
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw InvalidInput("--freqs: '" + item + "' is not a number");
        }
    }
    if (out.empty()) throw InvalidInput("--freqs: empty list");
    return out;
}

void write_config(const CLI::App* cmd, const fs::path& out) {
    const fs::path path = fs::path(out).concat(".config.toml");
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write '" + path.string() + "'");
    os << "# sfr " << cmd->get_name() << "\n" << cmd->config_to_str(true, false);
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

bool given(const std::vector<std::string>& args, const std::string& name) {
    const std::string flag = "--" + name;
    for (const auto& a : args)
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
}

// CLI11 only reads config files at the top level, so `sfr <cmd> --config f`
// is expanded here into ordinary flags; explicit flags win over the file.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    auto it = std::find_if(args.begin(), args.end(),
                           [](const std::string& a) { return a == "--config" || a.rfind("--config=", 0) == 0; });
    if (it == args.end()) return args;
    std::string path;
    if (*it == "--config") {
        if (it + 1 == args.end()) throw CLI::ArgumentMismatch("--config needs a file");
        path = *(it + 1);
        args.erase(it, it + 2);
    } else {
        path = it->substr(9);
        args.erase(it);
    }
    const std::vector<CLI::ConfigItem> items = CLI::ConfigTOML().from_file(path);
    std::vector<std::string> extra;
    for (const auto& item : items) {
        if (!item.parents.empty() || item.name == "config" || given(args, item.name)) continue;
        if (item.inputs.empty() || (item.inputs.size() == 1 && item.inputs.front().empty())) continue;
        if (item.inputs.size() == 1) {
            extra.push_back("--" + item.name + "=" + item.inputs.front());
        } else {
            extra.push_back("--" + item.name);
            extra.insert(extra.end(), item.inputs.begin(), item.inputs.end());
        }
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

struct GenArgs {
    std::string family = "diffuse";
    std::uint32_t count = 1;
    std::string freqs;
    std::uint64_t seed = 0;
    std::string out;
    int nx = 32, ny = 32;
    double region_lx = 2.0, region_ly = 2.0;
    int ism_max_order = 3;
    double mt_max_eig = 600.0;
    double t60 = 0.4;
};

struct TrainArgs {
    std::string data, out, log;
    std::string preset = "paper";
    int epochs = 300;
    double lr = 1e-4;
    double decayed_lr = 1e-5;
    int decay_epoch = 200;
    int warmup = 20;
    std::uint64_t seed = 0;
    long embed_dim = 0, latent_dim = 0, decoder_width = 0;
    int heads = 0, sa_blocks = -1;
    bool freq_as_feature = false;
    int ctx_min = 3, ctx_max = 50, fixed_ctx = 0, extra_min = 32, extra_max = 256;
    int tasks_per_step = 1, latent_samples = 1, checkpoint_every = 0;
};

struct ReconArgs {
    std::string data, kernel, checkpoint, out_dir;
    std::size_t field = 0;
    double freq = 150.0;
    int n_obs = 10;
    std::uint64_t seed = 0;
    int restarts = 8;
    std::vector<std::size_t> attention_targets;
};

struct BenchArgs {
    std::string data, checkpoint, out, summary;
    std::vector<std::string> methods;
    std::vector<int> obs{10};
    std::string freqs;
    std::uint64_t seed = 0;
    std::string variant = "point";
    int restarts = 8;
    std::size_t max_fields = 0;
};

int cmd_gen(const GenArgs& a, unsigned threads, const CLI::App* cmd) {
    sim::DatasetConfig cfg;
    cfg.family = sim::parse_family(a.family);
    if (a.count < 1) throw InvalidInput("--count must be >= 1");
    cfg.count = a.count;
    cfg.freqs = parse_freqs(a.freqs);
    cfg.seed = a.seed;
    cfg.nx = a.nx;
    cfg.ny = a.ny;
    cfg.region_lx = a.region_lx;
    cfg.region_ly = a.region_ly;
    cfg.ism_max_order = a.ism_max_order;
    cfg.mt_max_eig_hz = a.mt_max_eig;
    cfg.rooms.t60 = a.t60;
    cfg.threads = threads;
    ensure_parent(a.out);
    const sim::Dataset ds = sim::generate_dataset(cfg);
    sim::write_dataset(ds, a.out);
    write_config(cmd, a.out);
    std::cout << "wrote " << ds.fields.size() << " " << sim::family_name(ds.family) << " fields x "
              << cfg.freqs.size() << " frequencies to " << a.out << "\n";
    return 0;
}

np::NpConfig model_config(const TrainArgs& a) {
    np::NpConfig m;
    if (a.preset == "desk")
        m = np::desk_config();
    else if (a.preset != "paper")
        throw InvalidInput("--model must be paper or desk");
    if (a.embed_dim > 0) m.embed_dim = a.embed_dim;
    if (a.latent_dim > 0) m.latent_dim = a.latent_dim;
    if (a.decoder_width > 0) m.decoder_width = a.decoder_width;
    if (a.heads > 0) m.heads = a.heads;
    if (a.sa_blocks >= 0) m.sa_blocks = a.sa_blocks;
    m.freq_as_feature = a.freq_as_feature;
    m.validate();
    return m;
}

int cmd_train(const TrainArgs& a, const CLI::App* cmd) {
    np::TrainConfig cfg;
    cfg.model = model_config(a);
    cfg.schedule = {a.lr, a.warmup, a.decay_epoch, a.decayed_lr};
    cfg.epochs = a.epochs;
    cfg.seed = a.seed;
    cfg.ctx_min = a.ctx_min;
    cfg.ctx_max = a.ctx_max;
    cfg.fixed_ctx = a.fixed_ctx;
    cfg.extra_min = a.extra_min;
    cfg.extra_max = a.extra_max;
    cfg.tasks_per_step = a.tasks_per_step;
    cfg.latent_samples = a.latent_samples;
    cfg.checkpoint_every = a.checkpoint_every;
    cfg.checkpoint_path = a.out;
    cfg.log_path = a.log.empty() ? fs::path(a.out).concat(".log.jsonl") : fs::path(a.log);
    cfg.validate();
    const sim::Dataset ds = sim::read_dataset(a.data);
    ensure_parent(a.out);
    ensure_parent(cfg.log_path);
    write_config(cmd, a.out);
    {
        const np::NeuralProcess probe(cfg.model, 0);
        std::cout << "model parameters: " << probe.parameter_count() << "\n";
    }
    np::train(ds, cfg, [](const np::EpochRecord& r) {
        std::printf("epoch %d  step %lld  L_D %.6f  KL %.6f  lr %.3g\n", r.epoch, static_cast<long long>(r.step), r.l_d,
                    r.kl, r.lr);
        std::fflush(stdout);
    });
    std::cout << "checkpoint: " << a.out << "\nlog: " << cfg.log_path.string() << "\n";
    return 0;
}

void write_field_csv(const fs::path& path, const sim::Grid& grid, const std::vector<double>& truth,
                     const std::vector<double>& pred) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write '" + path.string() + "'");
    os << "i,j,x,y,truth,prediction\n";
    char buf[160];
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Vec2 p = grid.point(k);
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.10g,%.10g,%.10g,%.10g\n", k % grid.nx, k / grid.nx, p.x, p.y,
                      truth[k], pred[k]);
        os << buf;
    }
}

int cmd_reconstruct(const ReconArgs& a, const CLI::App* cmd) {
    if (a.kernel.empty() == a.checkpoint.empty()) throw InvalidInput("give exactly one of --kernel or --checkpoint");
    const sim::Dataset ds = sim::read_dataset(a.data);
    if (a.field >= ds.fields.size()) throw InvalidInput("--field out of range");
    const int fi = ds.find_frequency(a.field, a.freq);
    if (fi < 0) throw InvalidInput("--freq " + std::to_string(a.freq) + " Hz is not in the dataset");
    const sim::Field field = ds.field(a.field, static_cast<std::size_t>(fi));
    const sim::Grid& grid = field.grid;
    const sim::StandardizedField sf = sim::standardize(field);
    const std::uint64_t obs_seed = eval::observation_seed(a.seed, a.field, a.n_obs);
    const sim::ObservationSet obs = sim::sample_observations(sf, static_cast<std::size_t>(a.n_obs), obs_seed);
    const std::vector<double> truth = field.magnitudes();
    const std::vector<std::size_t> marks = obs.indices();

    fs::create_directories(a.out_dir);
    std::vector<double> pred;
    if (!a.kernel.empty()) {
        eval::BenchmarkConfig bc;
        bc.methods = {eval::parse_method("gp-" + a.kernel)};
        bc.gp_restarts = a.restarts;
        const auto locs = obs.locations();
        auto values = obs.values();
        double ss = 0.0;
        for (const auto& v : values) ss += std::norm(v);
        const double scale = std::sqrt(ss / static_cast<double>(values.size()));
        for (auto& v : values) v /= scale;
        const gp::GpFit fit = gp::fit_map(locs, values, gp::parse_kernel(a.kernel), wavenumber(field.freq_hz),
                                          bc.priors, a.restarts, derive_seed(obs_seed, static_cast<std::uint64_t>(fi)));
        pred = gp::posterior_mean(locs, values, grid.points(), fit).magnitudes;
        for (auto& m : pred) m *= scale;
    } else {
        const np::NeuralProcess model = np::NeuralProcess::load(a.checkpoint);
        const np::ContextSet ctx = np::make_context(obs, grid, field.freq_hz);
        const np::FieldPrediction p = np::predict_field(model, ctx, grid, np::Standardization{sf.mean, sf.std});
        pred = p.magnitudes;
        const fs::path att_dir = fs::path(a.out_dir) / "attention";
        fs::create_directories(att_dir);
        std::ofstream csv(att_dir / "attention.csv", std::ios::trunc);
        csv << "target,context,context_index,weight\n";
        std::vector<std::size_t> targets = a.attention_targets;
        if (targets.empty()) targets = {grid.index(grid.nx / 4, grid.ny / 4), grid.index(grid.nx / 2, grid.ny / 2),
                                        grid.index(3 * grid.nx / 4, 3 * grid.ny / 4)};
        for (std::size_t t : targets) {
            if (t >= grid.size()) throw InvalidInput("--attention-targets index out of range");
            std::vector<double> cells(grid.size(), 0.0);
            for (std::size_t c = 0; c < obs.size(); ++c) {
                const double w = p.attention.weights(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
                cells[marks[c]] = w;
                char buf[96];
                std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.10g\n", t, c, marks[c], w);
                csv << buf;
            }
            const std::size_t target_mark[] = {t};
            io::write_pgm(io::render_heatmap(cells, grid.nx, grid.ny, target_mark),
                          att_dir / ("target_" + std::to_string(t) + ".pgm"));
        }
    }
    std::vector<double> mask(grid.size(), 0.0);
    for (auto m : marks) mask[m] = 1.0;
    io::write_pgm(io::render_heatmap(truth, grid.nx, grid.ny), fs::path(a.out_dir) / "truth.pgm");
    io::write_pgm(io::render_heatmap(mask, grid.nx, grid.ny), fs::path(a.out_dir) / "observed.pgm");
    io::write_pgm(io::render_heatmap(pred, grid.nx, grid.ny, marks), fs::path(a.out_dir) / "prediction.pgm");
    write_field_csv(fs::path(a.out_dir) / "field.csv", grid, truth, pred);
    write_config(cmd, fs::path(a.out_dir) / "reconstruct");
    const auto n = eval::nmse(truth, pred);
    std::printf("nmse %.4f dB  mac %.4f\n", n.db, eval::mac(truth, pred));
    return 0;
}

int cmd_bench(const BenchArgs& a, unsigned threads, const CLI::App* cmd) {
    eval::BenchmarkConfig cfg;
    cfg.methods.clear();
    if (a.methods.empty())
        cfg.methods = eval::all_methods();
    else
        for (const auto& m : a.methods) cfg.methods.push_back(eval::parse_method(m));
    cfg.obs_counts = a.obs;
    for (int n : cfg.obs_counts)
        if (n < 1) throw InvalidInput("--obs counts must be >= 1");
    if (!a.freqs.empty()) cfg.freqs = parse_freqs(a.freqs);
    cfg.seed = a.seed;
    cfg.variant = eval::parse_variant(a.variant);
    cfg.gp_restarts = a.restarts;
    cfg.max_fields = a.max_fields;
    cfg.threads = static_cast<int>(threads);
    std::optional<np::NeuralProcess> model;
    bool wants_np = false;
    for (auto m : cfg.methods) wants_np = wants_np || m == eval::Method::Np;
    if (wants_np) {
        if (a.checkpoint.empty()) throw InvalidInput("method np needs --checkpoint");
        model.emplace(np::NeuralProcess::load(a.checkpoint));
    }
    const sim::Dataset ds = sim::read_dataset(a.data);
    const eval::MetricReport report = eval::benchmark(ds, cfg, model ? &*model : nullptr);
    ensure_parent(a.out);
    {
        std::ofstream os(a.out, std::ios::trunc);
        if (!os) throw IoError("cannot write '" + a.out + "'");
        eval::write_rows_csv(os, report);
    }
    const std::string summary = a.summary.empty() ? fs::path(a.out).replace_extension(".summary.csv").string() : a.summary;
    {
        std::ofstream os(summary, std::ios::trunc);
        if (!os) throw IoError("cannot write '" + summary + "'");
        eval::write_summary_csv(os, report);
    }
    write_config(cmd, a.out);
    eval::write_summary_csv(std::cout, report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sound-field reconstruction toolkit"};
    app.require_subcommand(1);
    unsigned threads = 1;

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a simulated dataset (SFD1)");
    g->add_option("--family", gen.family, "diffuse, nearfield, ism or mt")
        ->check(CLI::IsMember({"diffuse", "nearfield", "ism", "mt"}))
        ->capture_default_str();
    g->add_option("--count", gen.count, "Number of fields")->capture_default_str();
    g->add_option("--freqs", gen.freqs, "Comma list or lo:hi:step in Hz (default 30:500:10)");
    g->add_option("--seed", gen.seed)->capture_default_str();
    g->add_option("--out", gen.out, "Output dataset path")->required();
    g->add_option("--nx", gen.nx)->capture_default_str();
    g->add_option("--ny", gen.ny)->capture_default_str();
    g->add_option("--region-lx", gen.region_lx, "Region width for free-field families (m)")->capture_default_str();
    g->add_option("--region-ly", gen.region_ly, "Region height for free-field families (m)")->capture_default_str();
    g->add_option("--ism-max-order", gen.ism_max_order)->capture_default_str();
    g->add_option("--mt-max-eig", gen.mt_max_eig, "Highest mode frequency kept (Hz)")->capture_default_str();
    g->add_option("--t60", gen.t60, "Reverberation time (s)")->capture_default_str();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train the neural process");
    t->add_option("--data", tr.data, "Training dataset (SFD1)")->required();
    t->add_option("--out", tr.out, "Checkpoint path (NPC1)")->required();
    t->add_option("--log", tr.log, "Training log (default <out>.log.jsonl)");
    t->add_option("--model", tr.preset, "Dimension preset: paper or desk")->capture_default_str();
    t->add_option("--epochs", tr.epochs)->capture_default_str();
    t->add_option("--lr", tr.lr, "Base learning rate")->capture_default_str();
    t->add_option("--decayed-lr", tr.decayed_lr)->capture_default_str();
    t->add_option("--decay-epoch", tr.decay_epoch)->capture_default_str();
    t->add_option("--warmup", tr.warmup, "Warm-up epochs")->capture_default_str();
    t->add_option("--seed", tr.seed)->capture_default_str();
    t->add_option("--embed-dim", tr.embed_dim, "Override the preset (0 = keep)")->capture_default_str();
    t->add_option("--latent-dim", tr.latent_dim)->capture_default_str();
    t->add_option("--decoder-width", tr.decoder_width)->capture_default_str();
    t->add_option("--heads", tr.heads)->capture_default_str();
    t->add_option("--sa-blocks", tr.sa_blocks, "Override the preset (-1 = keep)")->capture_default_str();
    t->add_flag("--freq-as-feature", tr.freq_as_feature)->capture_default_str();
    t->add_option("--ctx-min", tr.ctx_min)->capture_default_str();
    t->add_option("--ctx-max", tr.ctx_max)->capture_default_str();
    t->add_option("--fixed-ctx", tr.fixed_ctx, "Train with a fixed context count (0 = variable)")->capture_default_str();
    t->add_option("--extra-min", tr.extra_min)->capture_default_str();
    t->add_option("--extra-max", tr.extra_max)->capture_default_str();
    t->add_option("--tasks-per-step", tr.tasks_per_step)->capture_default_str();
    t->add_option("--latent-samples", tr.latent_samples)->capture_default_str();
    t->add_option("--checkpoint-every", tr.checkpoint_every)->capture_default_str();

    ReconArgs rc;
    auto* r = app.add_subcommand("reconstruct", "Reconstruct one field and export heatmaps");
    r->add_option("--data", rc.data)->required();
    r->add_option("--field", rc.field)->capture_default_str();
    r->add_option("--freq", rc.freq, "Frequency (Hz)")->capture_default_str();
    r->add_option("--n-obs", rc.n_obs)->capture_default_str();
    r->add_option("--seed", rc.seed, "Observation seed")->capture_default_str();
    r->add_option("--kernel", rc.kernel, "GP kernel: bessel, hier, rbf-iso, rbf-aniso, rbf-per");
    r->add_option("--checkpoint", rc.checkpoint, "NP checkpoint (NPC1)");
    r->add_option("--restarts", rc.restarts)->capture_default_str();
    r->add_option("--attention-targets", rc.attention_targets, "Flat grid indices for attention maps")
        ->delimiter(',');
    r->add_option("--out-dir", rc.out_dir)->required();

    BenchArgs bn;
    auto* b = app.add_subcommand("bench", "Benchmark methods on a dataset (CSV)");
    b->add_option("--data", bn.data)->required();
    b->add_option("--methods", bn.methods, "Subset of np, gp-bessel, gp-hier, gp-rbf-iso, gp-rbf-aniso, gp-rbf-per, mean-baseline")
        ->delimiter(',');
    b->add_option("--obs", bn.obs, "Observation counts")->delimiter(',')->capture_default_str();
    b->add_option("--freqs", bn.freqs, "Comma list or lo:hi:step (default: all)");
    b->add_option("--seed", bn.seed)->capture_default_str();
    b->add_option("--checkpoint", bn.checkpoint, "NP checkpoint for method np");
    b->add_option("--nmse-variant", bn.variant, "point or vector")
        ->check(CLI::IsMember({"point", "vector"}))
        ->capture_default_str();
    b->add_option("--restarts", bn.restarts)->capture_default_str();
    b->add_option("--max-fields", bn.max_fields, "0 = all")->capture_default_str();
    b->add_option("--out", bn.out, "Per-field CSV")->required();
    b->add_option("--summary", bn.summary, "Summary CSV (default: --out with its extension replaced by .summary.csv)");

    for (auto* sub : {g, t, r, b})
        sub->add_option("--threads", threads, "Worker cap (env SF_THREADS)")->envname("SF_THREADS")->capture_default_str();

    for (auto* sub : {g, t, r, b})
        sub->add_option("--config", "Re-run from the resolved <out>.config.toml of an earlier run");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (threads < 1) threads = 1;

    try {
        if (g->parsed()) return cmd_gen(gen, threads, g);
        if (t->parsed()) return cmd_train(tr, t);
        if (r->parsed()) return cmd_reconstruct(rc, r);
        if (b->parsed()) return cmd_bench(bn, threads, b);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
