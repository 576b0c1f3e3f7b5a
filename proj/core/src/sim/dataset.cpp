#include "sfr/sim/dataset.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "sfr/errors.hpp"
#include "sfr/io/binary.hpp"

namespace sfr::sim {

namespace {

constexpr char kMagic[] = "SFD1";

}  // namespace

std::vector<double> default_frequency_lattice() {
    std::vector<double> f;
    for (int hz = 30; hz <= 500; hz += 10) f.push_back(hz);
    return f;
}

Field Dataset::field(std::size_t index, std::size_t freq_index) const {
    const auto& df = fields.at(index);
    return Field{grid(index), df.freqs.at(freq_index), df.values.at(freq_index), family, df.seed};
}

int Dataset::find_frequency(std::size_t index, double freq_hz) const {
    const auto& freqs = fields.at(index).freqs;
    for (std::size_t i = 0; i < freqs.size(); ++i)
        if (std::abs(freqs[i] - freq_hz) < 1e-9) return static_cast<int>(i);
    return -1;
}

DatasetField generate_dataset_field(const DatasetConfig& cfg, std::uint32_t index) {
    DatasetField out;
    out.seed = derive_seed(cfg.seed, index);
    out.freqs = cfg.freqs;
    Rng rng(out.seed);

    RoomSpec room;
    if (cfg.family == Family::IsmRtf || cfg.family == Family::MtRtf) {
        room = sample_room(rng, cfg.rooms);
        out.lx = room.lx;
        out.ly = room.ly;
    } else {
        out.lx = cfg.region_lx;
        out.ly = cfg.region_ly;
    }
    const Grid grid{cfg.nx, cfg.ny, out.lx, out.ly};

    for (std::size_t fi = 0; fi < cfg.freqs.size(); ++fi) {
        const double f = cfg.freqs[fi];
        switch (cfg.family) {
            case Family::Diffuse:
                out.values.push_back(gen_diffuse(out.seed, f, grid).values);
                break;
            case Family::NearField: {
                Rng scene_rng(derive_seed(out.seed, fi));
                for (int attempt = 0;; ++attempt) {
                    try {
                        const auto scene = sample_nearfield_scene(scene_rng, f, grid.center());
                        out.values.push_back(gen_nearfield(scene, f, grid, out.seed).values);
                        break;
                    } catch (const InvalidInput&) {
                        // a source landed on a grid point; redraw the scene
                        if (attempt > 100) throw;
                    }
                }
                break;
            }
            case Family::IsmRtf:
                out.values.push_back(gen_ism_rtf(room, f, grid, cfg.ism_max_order).values);
                break;
            case Family::MtRtf:
                out.values.push_back(gen_mt_rtf(room, f, grid, cfg.mt_max_eig_hz).values);
                break;
        }
    }
    return out;
}

Dataset generate_dataset(const DatasetConfig& cfg) {
    if (cfg.freqs.empty()) throw InvalidInput("dataset: frequency list is empty");
    for (double f : cfg.freqs)
        if (!(f > 0.0)) throw InvalidInput("dataset: frequencies must be positive");
    Dataset ds;
    ds.family = cfg.family;
    ds.nx = cfg.nx;
    ds.ny = cfg.ny;
    ds.fields.resize(cfg.count);

    const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, cfg.count));
    std::atomic<std::uint32_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::uint32_t i = next++; i < cfg.count; i = next++) {
            try {
                ds.fields[i] = generate_dataset_field(cfg, i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    const std::size_t freq_count = ds.fields.empty() ? 0 : ds.fields.front().freqs.size();
    io::LeWriter w(os);
    w.put_bytes({kMagic, 4});
    w.put<std::uint32_t>(kDatasetVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(ds.family));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.fields.size()));
    w.put<std::uint16_t>(static_cast<std::uint16_t>(ds.nx));
    w.put<std::uint16_t>(static_cast<std::uint16_t>(ds.ny));
    w.put<std::uint16_t>(static_cast<std::uint16_t>(freq_count));
    const std::size_t n = static_cast<std::size_t>(ds.nx) * ds.ny;
    for (const auto& f : ds.fields) {
        if (f.freqs.size() != freq_count || f.values.size() != freq_count)
            throw InvalidInput("dataset: every field must carry the same frequency count");
        w.put<std::uint64_t>(f.seed);
        w.put_f64(f.lx);
        w.put_f64(f.ly);
        for (std::size_t fi = 0; fi < freq_count; ++fi) {
            w.put_f64(f.freqs[fi]);
            if (f.values[fi].size() != n) throw InvalidInput("dataset: field value count mismatch");
            for (const auto& v : f.values[fi]) {
                w.put_f64(v.real());
                w.put_f64(v.imag());
            }
        }
    }
    os.flush();
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
    io::LeReader r(is, path.string());
    if (r.get_bytes(4) != std::string_view(kMagic, 4)) throw FormatError(path.string() + ": bad magic (expected SFD1)");
    const auto version = r.get<std::uint32_t>();
    if (version != kDatasetVersion)
        throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
    Dataset ds;
    const auto family = r.get<std::uint8_t>();
    if (family > 3) throw FormatError(path.string() + ": unknown family tag");
    ds.family = static_cast<Family>(family);
    const auto count = r.get<std::uint32_t>();
    ds.nx = r.get<std::uint16_t>();
    ds.ny = r.get<std::uint16_t>();
    const auto freq_count = r.get<std::uint16_t>();
    const std::size_t n = static_cast<std::size_t>(ds.nx) * ds.ny;
    ds.fields.resize(count);
    for (auto& f : ds.fields) {
        f.seed = r.get<std::uint64_t>();
        f.lx = r.get_f64();
        f.ly = r.get_f64();
        f.freqs.resize(freq_count);
        f.values.assign(freq_count, std::vector<Complex>(n));
        for (std::size_t fi = 0; fi < freq_count; ++fi) {
            f.freqs[fi] = r.get_f64();
            for (auto& v : f.values[fi]) {
                const double re = r.get_f64();
                const double im = r.get_f64();
                v = {re, im};
            }
        }
    }
    return ds;
}

}  // namespace sfr::sim
