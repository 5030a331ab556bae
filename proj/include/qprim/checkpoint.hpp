#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "qprim/training.hpp"

namespace qprim {

inline constexpr int kCheckpointFormatVersion = 1;

/// Checkpoint JSON for a trained model. Doubles are written in shortest
/// round-trip form, so a reloaded model predicts bitwise identically.
std::string checkpoint_json(const TrainedModel& model);
TrainedModel parse_checkpoint(const std::string& text);

/// Throws IoError on unreadable files or malformed content (with the byte
/// offset for JSON syntax errors) and UnsupportedVersionError for an unknown
/// format_version.
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace qprim
