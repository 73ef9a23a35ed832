#pragma once

namespace gapkit {

/// Applies the GAPKIT_THREADS cap (if set) to OpenMP. Returns the active thread count.
int configure_threads();

}  // namespace gapkit
