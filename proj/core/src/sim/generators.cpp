#include "sfr/sim/generators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sfr/errors.hpp"

namespace sfr::sim {

namespace {

void check_frequency(double freq_hz) {
    if (!(freq_hz > 0.0) || !std::isfinite(freq_hz))
        throw InvalidInput("frequency must be positive and finite, got " + std::to_string(freq_hz));
}

void scale_to_unit_mean_magnitude(std::vector<Complex>& values) {
    double sum = 0.0;
    for (const auto& v : values) sum += std::abs(v);
    const double mean = sum / static_cast<double>(values.size());
    if (!(mean > 0.0)) throw DegenerateField("diffuse field has zero mean magnitude");
    for (auto& v : values) v /= mean;
}

// Sums free-field monopoles; throws on a source sitting on a grid point.
std::vector<Complex> monopole_sum(std::span<const Vec2> positions, std::span<const double> gains,
                                  double k, const Grid& grid) {
    std::vector<Complex> values(grid.size());
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const Vec2 r = grid.point(idx);
        Complex acc{0.0, 0.0};
        for (std::size_t s = 0; s < positions.size(); ++s) {
            const double d = norm(r - positions[s]);
            if (d < 1e-12)
                throw InvalidInput("point source " + std::to_string(s) + " coincides with grid point " +
                                   std::to_string(idx));
            acc += gains[s] * free_field_green(k, d);
        }
        values[idx] = acc;
    }
    return values;
}

}  // namespace

Field gen_diffuse(std::uint64_t seed, double freq_hz, const Grid& grid, const DiffuseOptions& opts) {
    check_frequency(freq_hz);
    grid.validate();
    Rng rng(seed);
    const int m = opts.wave_count ? *opts.wave_count : static_cast<int>(rng.uniform_int(1001, 2999));
    if (m < 1) throw InvalidInput("diffuse field needs at least one plane wave");
    const double k = wavenumber(freq_hz);

    // e^{-j k.r} separates over the grid axes, so the sum is a small GEMM.
    Eigen::MatrixXcd along_x(m, grid.nx);
    Eigen::MatrixXcd along_y(m, grid.ny);
    for (int l = 0; l < m; ++l) {
        const double phase = rng.uniform(0.0, 2.0 * kPi);
        const double theta = rng.uniform(0.0, 2.0 * kPi);
        const double kx = k * std::cos(theta);
        const double ky = k * std::sin(theta);
        for (int i = 0; i < grid.nx; ++i) along_x(l, i) = std::polar(1.0, phase - kx * grid.point(i, 0).x);
        for (int j = 0; j < grid.ny; ++j) along_y(l, j) = std::polar(1.0, -ky * grid.point(0, j).y);
    }
    const Eigen::MatrixXcd summed = along_y.transpose() * along_x;  // ny x nx

    Field f{grid, freq_hz, std::vector<Complex>(grid.size()), Family::Diffuse, seed};
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) f.values[grid.index(i, j)] = summed(j, i);
    if (opts.normalize) scale_to_unit_mean_magnitude(f.values);
    return f;
}

Complex free_field_green(double k, double distance) {
    return std::polar(1.0 / (4.0 * kPi * distance), -k * distance);
}

Field gen_nearfield(const NearFieldScene& scene, double freq_hz, const Grid& grid, std::uint64_t seed) {
    check_frequency(freq_hz);
    grid.validate();
    const std::size_t count = scene.sources.size();
    if (count < 1 || count > 6) throw InvalidInput("near-field scene needs 1..6 sources");
    const double lambda = kSpeedOfSound / freq_hz;
    if (std::abs(scene.wavelength - lambda) > 1e-9 * lambda)
        throw InvalidInput("near-field scene wavelength does not match the frequency");
    const Vec2 c = grid.center();
    for (std::size_t s = 0; s < count; ++s) {
        const double d = norm(scene.sources[s] - c);
        if (d < lambda * (1.0 - 1e-12) || d > 3.0 * lambda * (1.0 + 1e-12))
            throw InvalidInput("near-field source " + std::to_string(s) +
                               " is outside [lambda, 3 lambda] from the region center");
    }
    const std::vector<double> gains(count, 1.0);
    return Field{grid, freq_hz, monopole_sum(scene.sources, gains, wavenumber(freq_hz), grid),
                 Family::NearField, seed};
}

NearFieldScene sample_nearfield_scene(Rng& rng, double freq_hz, Vec2 center) {
    check_frequency(freq_hz);
    NearFieldScene scene;
    scene.wavelength = kSpeedOfSound / freq_hz;
    const auto count = rng.uniform_int(1, 6);
    for (std::int64_t s = 0; s < count; ++s) {
        const double d = rng.uniform(scene.wavelength, 3.0 * scene.wavelength);
        const double theta = rng.uniform(0.0, 2.0 * kPi);
        scene.sources.push_back({center.x + d * std::cos(theta), center.y + d * std::sin(theta)});
    }
    return scene;
}

double wall_reflection_coefficient(const RoomSpec& room) {
    room.validate();
    const double volume_over_surface = room.lx * room.ly / (2.0 * (room.lx + room.ly));
    const double absorption = 0.1611 * volume_over_surface / room.t60;
    if (!(absorption < 1.0))
        throw InvalidInput("room: T60 too short for the room size (Sabine absorption >= 1)");
    return std::sqrt(1.0 - absorption);
}

std::vector<ImageSource> image_sources(const RoomSpec& room, int max_order) {
    room.validate();
    if (max_order < 0) throw InvalidInput("image source order must be >= 0");
    std::vector<ImageSource> out;
    // Lattice walk: image = ((1-2q) x0 + 2 mx lx, (1-2p) y0 + 2 my ly) with
    // |mx - q| + |mx| + |my - p| + |my| wall reflections.
    const int reach = max_order + 1;
    for (int mx = -reach; mx <= reach; ++mx) {
        for (int q = 0; q <= 1; ++q) {
            const int rx = std::abs(mx - q) + std::abs(mx);
            if (rx > max_order) continue;
            for (int my = -reach; my <= reach; ++my) {
                for (int p = 0; p <= 1; ++p) {
                    const int ry = std::abs(my - p) + std::abs(my);
                    if (rx + ry > max_order) continue;
                    out.push_back({{(1 - 2 * q) * room.source.x + 2.0 * mx * room.lx,
                                    (1 - 2 * p) * room.source.y + 2.0 * my * room.ly},
                                   rx + ry});
                }
            }
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ImageSource& a, const ImageSource& b) { return a.reflections < b.reflections; });
    return out;
}

Field gen_ism_rtf(const RoomSpec& room, double freq_hz, const Grid& grid, int max_order, const IsmOptions& opts) {
    check_frequency(freq_hz);
    grid.validate();
    const double beta = opts.beta ? *opts.beta : wall_reflection_coefficient(room);
    const auto images = image_sources(room, max_order);
    std::vector<Vec2> positions;
    std::vector<double> gains;
    for (const auto& img : images) {
        positions.push_back(img.position);
        gains.push_back(std::pow(beta, img.reflections));
    }
    return Field{grid, freq_hz, monopole_sum(positions, gains, wavenumber(freq_hz), grid), Family::IsmRtf, 0};
}

std::vector<RoomMode> room_modes(double lx, double ly, double max_eig_hz) {
    if (!(lx > 0.0) || !(ly > 0.0)) throw InvalidInput("room: dimensions must be positive");
    std::vector<RoomMode> modes;
    if (!(max_eig_hz >= 0.0)) return modes;
    const int max_nx = static_cast<int>(std::floor(2.0 * max_eig_hz * lx / kSpeedOfSound));
    const int max_ny = static_cast<int>(std::floor(2.0 * max_eig_hz * ly / kSpeedOfSound));
    for (int nx = 0; nx <= max_nx; ++nx) {
        for (int ny = 0; ny <= max_ny; ++ny) {
            const double f = 0.5 * kSpeedOfSound * std::hypot(nx / lx, ny / ly);
            if (f <= max_eig_hz) modes.push_back({nx, ny, f});
        }
    }
    return modes;
}

double mode_shape(const RoomMode& mode, double lx, double ly, Vec2 r) {
    const double eps = (mode.nx == 0 ? 1.0 : 2.0) * (mode.ny == 0 ? 1.0 : 2.0);
    return std::sqrt(eps) * std::cos(mode.nx * kPi * r.x / lx) * std::cos(mode.ny * kPi * r.y / ly);
}

double modal_time_constant(double t60) { return t60 / (3.0 * std::log(10.0)); }

Complex mt_transfer(const RoomSpec& room, double freq_hz, Vec2 receiver, Vec2 source,
                    const std::vector<RoomMode>& modes) {
    const double omega = 2.0 * kPi * freq_hz;
    const double k2 = (omega / kSpeedOfSound) * (omega / kSpeedOfSound);
    const double tau = modal_time_constant(room.t60);
    const double damping = omega / (kSpeedOfSound * kSpeedOfSound * tau);
    const double area = room.lx * room.ly;
    Complex acc{0.0, 0.0};
    for (const auto& mode : modes) {
        const double kn = 2.0 * kPi * mode.freq_hz / kSpeedOfSound;
        const double shapes = mode_shape(mode, room.lx, room.ly, receiver) * mode_shape(mode, room.lx, room.ly, source);
        acc += shapes / Complex(k2 - kn * kn, -damping);
    }
    return -acc / area;
}

Field gen_mt_rtf(const RoomSpec& room, double freq_hz, const Grid& grid, double max_eig_hz, const MtOptions& opts) {
    check_frequency(freq_hz);
    grid.validate();
    room.validate();
    if (!opts.modes && max_eig_hz < freq_hz)
        throw InvalidInput("modal cutoff must be >= the evaluated frequency");
    const std::vector<RoomMode> modes = opts.modes ? *opts.modes : room_modes(room.lx, room.ly, max_eig_hz);
    if (modes.empty()) throw InvalidInput("no room mode below the eigenfrequency cutoff");
    Field f{grid, freq_hz, std::vector<Complex>(grid.size()), Family::MtRtf, 0};
    for (std::size_t idx = 0; idx < grid.size(); ++idx)
        f.values[idx] = mt_transfer(room, freq_hz, grid.point(idx), room.source, modes);
    return f;
}

RoomSpec sample_room(Rng& rng, const RoomSampling& cfg) {
    const double area = rng.uniform(cfg.area_min, cfg.area_max);
    const double aspect = rng.uniform(cfg.aspect_min, cfg.aspect_max);
    RoomSpec room;
    room.ly = std::sqrt(area / aspect);
    room.lx = aspect * room.ly;
    room.t60 = cfg.t60;
    room.source = {rng.uniform(cfg.wall_margin, 1.0 - cfg.wall_margin) * room.lx,
                   rng.uniform(cfg.wall_margin, 1.0 - cfg.wall_margin) * room.ly};
    return room;
}

StandardizedField standardize(const Field& field) {
    if (field.values.empty()) throw InvalidInput("standardize: empty field");
    StandardizedField out;
    out.magnitudes = field.magnitudes();
    const double n = static_cast<double>(out.magnitudes.size());
    const double mean = std::accumulate(out.magnitudes.begin(), out.magnitudes.end(), 0.0) / n;
    double var = 0.0;
    for (double m : out.magnitudes) var += (m - mean) * (m - mean);
    const double std = std::sqrt(var / n);
    if (!(std >= 1e-12)) throw DegenerateField("standardize: magnitude standard deviation below 1e-12");
    for (double& m : out.magnitudes) m = (m - mean) / std;
    out.mean = mean;
    out.std = std;
    out.source = field;
    return out;
}

std::vector<std::size_t> sample_indices(std::size_t grid_size, std::size_t n, std::uint64_t seed) {
    if (n < 1 || n > grid_size)
        throw InvalidInput("observation count " + std::to_string(n) + " must be in [1, " +
                           std::to_string(grid_size) + "]");
    std::vector<std::size_t> perm(grid_size);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t t = 0; t < n; ++t) std::swap(perm[t], perm[t + rng.below(grid_size - t)]);
    perm.resize(n);
    return perm;
}

ObservationSet sample_observations(const StandardizedField& field, std::size_t n, std::uint64_t seed) {
    const Grid& grid = field.source.grid;
    ObservationSet set;
    set.seed = seed;
    for (std::size_t idx : sample_indices(grid.size(), n, seed))
        set.entries.push_back({idx, grid.point(idx), field.magnitudes[idx], field.source.values[idx]});
    return set;
}

}  // namespace sfr::sim
