#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sfr/sim/field.hpp"
#include "sfr/sim/generators.hpp"

namespace sfr::sim {

/// 48 frequencies 30, 40, ..., 500 Hz.
std::vector<double> default_frequency_lattice();

struct DatasetConfig {
    Family family = Family::Diffuse;
    std::uint32_t count = 1;
    std::vector<double> freqs = default_frequency_lattice();
    std::uint64_t seed = 0;
    int nx = 32;
    int ny = 32;
    // Reconstruction region for the free-field families (diffuse, near-field).
    double region_lx = 2.0;
    double region_ly = 2.0;
    RoomSampling rooms;
    int ism_max_order = 3;
    double mt_max_eig_hz = 600.0;
    unsigned threads = 1;
};

struct DatasetField {
    std::uint64_t seed = 0;
    double lx = 0.0;
    double ly = 0.0;
    std::vector<double> freqs;
    std::vector<std::vector<Complex>> values;  // one grid of values per frequency
};

struct Dataset {
    Family family = Family::Diffuse;
    int nx = 32;
    int ny = 32;
    std::vector<DatasetField> fields;

    Grid grid(std::size_t field) const { return {nx, ny, fields[field].lx, fields[field].ly}; }
    Field field(std::size_t field, std::size_t freq_index) const;
    /// Index of `freq_hz` in the field's frequency list, or -1.
    int find_frequency(std::size_t field, double freq_hz) const;
};

/// Generates one dataset field; a pure function of (config, index).
DatasetField generate_dataset_field(const DatasetConfig& cfg, std::uint32_t index);

/// Fields are generated on up to cfg.threads workers; output is independent
/// of the worker count.
Dataset generate_dataset(const DatasetConfig& cfg);

inline constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace sfr::sim
