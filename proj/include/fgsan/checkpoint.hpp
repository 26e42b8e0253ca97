#ifndef FGSAN_CHECKPOINT_HPP
#define FGSAN_CHECKPOINT_HPP

#include "fgsan/model.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace fgsan {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

/// Shape of one parameter group as stored in the checkpoint header.
struct GroupShape {
    std::string name;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
};

/// Shapes in registry order.
std::vector<GroupShape> parameter_shapes(const FgsanParams& params);

struct Checkpoint {
    ModelConfig config;
    Eigen::Index feature_dim = 0;
    std::size_t regions = 0;
    FgsanParams params;
};

/// "<path>.json" next to the binary file.
std::filesystem::path manifest_path(const std::filesystem::path& path);

/// Binary layout (little-endian): magic "FGSANCK\0", u32 version, u32 group
/// count, then per group u32 name length, name bytes, u32 rows, u32 cols;
/// then every group's float64 values in the same order. The manifest holds
/// the model hyperparameters and input dimensions.
void save_checkpoint(const std::filesystem::path& path, const FgsanParams& params, const ModelConfig& config);

/// Rebuilds the parameters and checks the header against the manifest.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fgsan

#endif  // FGSAN_CHECKPOINT_HPP
