#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "fetcpm/threshold_table.hpp"

namespace fetcpm {

/// Published threshold sequences shipped with the library, so detection
/// works without running a calibration first. Rows cover t = 20..30, every
/// 10 up to 100, every 100 up to 1000, and 2000.
std::span<const std::uint64_t> bundled_arl0_values() noexcept;
std::span<const double> bundled_lambda_values() noexcept;

/// Throws std::invalid_argument for combinations that are not bundled.
std::shared_ptr<const ThresholdTable> bundled_threshold_table(std::uint64_t arl0, double lambda);

/// File name under data/thresholds/, e.g. "arl500_lambda0.1.csv".
std::string bundled_table_filename(std::uint64_t arl0, double lambda);

}  // namespace fetcpm
