#pragma once

#include <filesystem>

#include "advreg/critic.hpp"
#include "advreg/model.hpp"

// Binary weight checkpoints, little-endian:
//   "ARWT" u32 version=1 u32 kind (0 generator, 1 critic) u32 activation
//   u32 depth f64 extra (lambda_gp for critics, 0 otherwise)
//   per layer: u64 rows, u64 cols
//   per layer: rows*cols f64 row-major
//   generator only: U0 as rows*cols f64 (shape of layer 0)
namespace advreg::checkpoint {

inline constexpr std::uint32_t kVersion = 1;

void save(const std::filesystem::path& path, const model::ModelParams& p);
void save(const std::filesystem::path& path, const CriticParams& c);
model::ModelParams load_model(const std::filesystem::path& path);
CriticParams load_critic(const std::filesystem::path& path);

}  // namespace advreg::checkpoint
