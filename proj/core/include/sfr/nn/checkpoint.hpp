#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sfr/nn/adam.hpp"

namespace sfr::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// One serialized tensor; data is row-major.
struct NamedArray {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<double> data;

    static NamedArray from_tensor(const std::string& name, const Tensor& t);
    static NamedArray from_matrix(const std::string& name, const Matrix& m, int rank);
    Matrix to_matrix() const;
};

/// NPC1 contents. Entries prefixed "meta/" in `params` carry model metadata
/// and are not parameters; `moments` holds optimizer state.
struct Checkpoint {
    std::vector<NamedArray> params;
    std::vector<NamedArray> moments;

    const NamedArray* find(const std::string& name) const;
};

Checkpoint snapshot(const ParameterStore& store, const OptimizerState* optimizer);
/// Copies values into an already-built store (names and shapes must match);
/// restores optimizer moments when both sides have them.
void restore(const Checkpoint& ckpt, ParameterStore& store, OptimizerState* optimizer);

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace sfr::nn
