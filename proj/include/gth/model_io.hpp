#pragma once

#include "gth/baselines.hpp"
#include "gth/gth.hpp"

#include <string>

namespace gth {

enum class ModelFileKind { gth, baseline };

/// Reads the magic of a model file without loading the body.
ModelFileKind peek_model_kind(const std::string& path);

/// Binary container, little-endian: magic "GTHM", u16 version, u32 d, u32 r,
/// u8 variant, both projections and means as raw f64 row-major, a
/// length-prefixed key=value config block, then the per-iteration
/// (objective, max_dw) history. Round-trips bit-exactly.
void save_model(const std::string& path, const GthModel& model);
GthModel load_model(const std::string& path);

/// Same container with magic "BASE", u8 kind, one projection and one mean,
/// and an empty history block.
void save_baseline(const std::string& path, const BaselineModel& model);
BaselineModel load_baseline(const std::string& path);

} // namespace gth
