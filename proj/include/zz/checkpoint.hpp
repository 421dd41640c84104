#pragma once

#include "zz/networks.hpp"
#include "zz/training.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace zz {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// SHA-256 of catalog_signature(); pins the parameter layout.
std::array<std::uint8_t, 32> catalog_hash();

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Layout (little endian):
///   "ZZNET" | u32 version | u64 n + config text | 32-byte catalog hash |
///   u64 n + n doubles | u8 has_state [ i64 next_epoch | u64 adam step | n doubles m | n doubles v ]
/// Written to a temporary file and renamed into place.
void save_checkpoint(const Model& model, const std::string& path, const TrainState* state = nullptr);

struct LoadedCheckpoint {
    Model model;
    std::optional<TrainState> state;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace zz
