#pragma once

namespace fetcpm {

enum class DetectorState { monitoring, changed };

}  // namespace fetcpm
