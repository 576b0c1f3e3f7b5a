#include "sfr/sim/field.hpp"

#include <cmath>
#include <string>

#include "sfr/errors.hpp"

namespace sfr::sim {

std::vector<Vec2> Grid::points() const {
    std::vector<Vec2> out;
    out.reserve(size());
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) out.push_back(point(i, j));
    return out;
}

void Grid::validate() const {
    if (nx < 1 || ny < 1) throw InvalidInput("grid: nx and ny must be >= 1");
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
        throw InvalidInput("grid: extents must be positive and finite");
}

std::string_view family_name(Family f) {
    switch (f) {
        case Family::Diffuse: return "diffuse";
        case Family::NearField: return "nearfield";
        case Family::IsmRtf: return "ism";
        case Family::MtRtf: return "mt";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    if (name == "diffuse") return Family::Diffuse;
    if (name == "nearfield") return Family::NearField;
    if (name == "ism") return Family::IsmRtf;
    if (name == "mt") return Family::MtRtf;
    throw InvalidInput("unknown field family '" + std::string(name) + "'");
}

std::vector<double> Field::magnitudes() const {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::abs(values[i]);
    return out;
}

std::vector<double> StandardizedField::destandardize(std::span<const double> v) const {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = destandardize(v[i]);
    return out;
}

std::vector<Vec2> ObservationSet::locations() const {
    std::vector<Vec2> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.location);
    return out;
}

std::vector<Complex> ObservationSet::values() const {
    std::vector<Complex> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.value);
    return out;
}

std::vector<std::size_t> ObservationSet::indices() const {
    std::vector<std::size_t> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.index);
    return out;
}

void RoomSpec::validate() const {
    if (!(lx > 0.0) || !(ly > 0.0)) throw InvalidInput("room: dimensions must be positive");
    if (!(t60 > 0.0)) throw InvalidInput("room: t60 must be positive");
    if (!(source.x > 0.0 && source.x < lx && source.y > 0.0 && source.y < ly))
        throw InvalidInput("room: source must lie strictly inside the room");
}

}  // namespace sfr::sim
