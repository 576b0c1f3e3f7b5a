#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sfr/rng.hpp"
#include "sfr/sim/field.hpp"

namespace sfr::sim {

struct DiffuseOptions {
    std::optional<int> wave_count;  // overrides the U{1001..2999} draw
    bool normalize = true;          // scale to mean magnitude 1 Pa
};

/// Sum of m unit-magnitude plane waves with random phase and direction.
Field gen_diffuse(std::uint64_t seed, double freq_hz, const Grid& grid, const DiffuseOptions& opts = {});

/// Free-field monopole Green's function e^{-jkd} / (4 pi d).
Complex free_field_green(double k, double distance);

/// Superposition of free-field point sources. Throws InvalidInput when a
/// source coincides with a grid point (index reported) or scene invariants fail.
Field gen_nearfield(const NearFieldScene& scene, double freq_hz, const Grid& grid, std::uint64_t seed);

/// Draws j ~ U{1..6} sources at radius d ~ U(lambda, 3 lambda) around `center`.
NearFieldScene sample_nearfield_scene(Rng& rng, double freq_hz, Vec2 center);

/// Uniform wall pressure reflection coefficient sqrt(1 - alpha) where alpha
/// follows Sabine with V/S = lx ly / (2 (lx + ly)) (room height cancels).
double wall_reflection_coefficient(const RoomSpec& room);

struct IsmOptions {
    std::optional<double> beta;  // overrides the T60-derived coefficient
};

struct ImageSource {
    Vec2 position;
    int reflections = 0;
};

/// All 2-D image sources with at most `max_order` wall reflections.
std::vector<ImageSource> image_sources(const RoomSpec& room, int max_order);

Field gen_ism_rtf(const RoomSpec& room, double freq_hz, const Grid& grid, int max_order,
                  const IsmOptions& opts = {});

struct RoomMode {
    int nx = 0;
    int ny = 0;
    double freq_hz = 0.0;
};

/// Rigid-wall 2-D modes with eigenfrequency <= max_eig_hz, ordered by (nx, ny).
std::vector<RoomMode> room_modes(double lx, double ly, double max_eig_hz);

/// sqrt(eps_nx eps_ny) cos(nx pi x / lx) cos(ny pi y / ly).
double mode_shape(const RoomMode& mode, double lx, double ly, Vec2 r);

/// Mode-independent decay time constant T60 / (3 ln 10).
double modal_time_constant(double t60);

struct MtOptions {
    std::optional<std::vector<RoomMode>> modes;  // replaces the eigenfrequency cutoff
};

/// Modal-sum transfer function between `receiver` and `source` in `room`.
Complex mt_transfer(const RoomSpec& room, double freq_hz, Vec2 receiver, Vec2 source,
                    const std::vector<RoomMode>& modes);

Field gen_mt_rtf(const RoomSpec& room, double freq_hz, const Grid& grid, double max_eig_hz,
                 const MtOptions& opts = {});

struct RoomSampling {
    double area_min = 12.0;
    double area_max = 20.0;
    double aspect_min = 0.6;
    double aspect_max = 1.67;
    double t60 = 0.4;
    double wall_margin = 0.05;  // fraction of each side kept clear of the source
};

RoomSpec sample_room(Rng& rng, const RoomSampling& cfg = {});

/// Throws DegenerateField when the magnitude standard deviation is < 1e-12.
StandardizedField standardize(const Field& field);

/// n distinct grid points drawn uniformly without replacement.
ObservationSet sample_observations(const StandardizedField& field, std::size_t n, std::uint64_t seed);

/// Same draw as sample_observations, returning flat grid indices only.
std::vector<std::size_t> sample_indices(std::size_t grid_size, std::size_t n, std::uint64_t seed);

}  // namespace sfr::sim
