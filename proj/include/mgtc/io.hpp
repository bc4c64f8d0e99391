#pragma once

#include "mgtc/degradation.hpp"
#include "mgtc/pipeline.hpp"
#include "mgtc/tensor.hpp"

#include <cstdint>
#include <string>

namespace mgtc {

// Tensor container: magic "MGT1", u8 order, order x u32 little-endian dims,
// then the values as little-endian f64 in linear order (mode 0 fastest).
void save_tensor(const std::string& path, const DenseTensor& t);
DenseTensor load_tensor(const std::string& path);

// Mask container: magic "MGM1", same dims header, one byte per entry (0 or 1).
void save_mask(const std::string& path, const ObservationMask& m);
ObservationMask load_mask(const std::string& path);

// Binary 8-bit PGM of one band, scaled by the cube-wide min/max.
void export_band(const std::string& path, const DenseTensor& t, std::int64_t band);

// Flat "key = value" text config; '#' starts a comment. Unknown keys are
// errors. Keys and defaults come from PipelineConfig.
PipelineConfig load_config(const std::string& path);
void save_config(const std::string& path, const PipelineConfig& config);

}  // namespace mgtc
