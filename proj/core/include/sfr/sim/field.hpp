#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sfr/geometry.hpp"

namespace sfr::sim {

using Complex = std::complex<double>;

/// Regular nx-by-ny grid over [0, lx] x [0, ly]. Point (i, j) sits at the cell
/// center; flat index is j * nx + i (x varies fastest).
struct Grid {
    int nx = 32;
    int ny = 32;
    double lx = 1.0;
    double ly = 1.0;

    std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    double dx() const { return lx / nx; }
    double dy() const { return ly / ny; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
    Vec2 point(int i, int j) const { return {(i + 0.5) * lx / nx, (j + 0.5) * ly / ny}; }
    Vec2 point(std::size_t idx) const {
        return point(static_cast<int>(idx % nx), static_cast<int>(idx / nx));
    }
    Vec2 center() const { return {0.5 * lx, 0.5 * ly}; }
    std::vector<Vec2> points() const;

    /// Throws InvalidInput for non-positive counts or extents.
    void validate() const;
};

enum class Family : std::uint8_t { Diffuse = 0, NearField = 1, IsmRtf = 2, MtRtf = 3 };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

struct Field {
    Grid grid;
    double freq_hz = 0.0;
    std::vector<Complex> values;
    Family family = Family::Diffuse;
    std::uint64_t seed = 0;

    std::vector<double> magnitudes() const;
};

/// Zero-mean, unit (population) standard deviation magnitudes of a field.
struct StandardizedField {
    std::vector<double> magnitudes;
    double mean = 0.0;
    double std = 1.0;
    Field source;

    double destandardize(double v) const { return v * std + mean; }
    std::vector<double> destandardize(std::span<const double> v) const;
};

struct Observation {
    std::size_t index = 0;  // flat grid index in the parent field
    Vec2 location;
    double magnitude = 0.0;  // standardized units
    Complex value;           // raw complex pressure (Pa) at the same point
};

struct ObservationSet {
    std::vector<Observation> entries;
    std::uint64_t seed = 0;

    std::size_t size() const { return entries.size(); }
    std::vector<Vec2> locations() const;
    std::vector<Complex> values() const;
    std::vector<std::size_t> indices() const;
};

struct RoomSpec {
    double lx = 4.0;
    double ly = 4.0;
    double t60 = 0.4;
    Vec2 source;

    void validate() const;
};

struct NearFieldScene {
    std::vector<Vec2> sources;
    double wavelength = 1.0;
};

}  // namespace sfr::sim
