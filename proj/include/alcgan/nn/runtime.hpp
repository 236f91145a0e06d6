#pragma once

namespace alcgan::nn {

/// Keeps freed activation buffers in the heap instead of returning them to the
/// OS. Activations are tens of megabytes and reallocated every step; without
/// this each one is page-faulted in again. No-op outside glibc.
void configure_allocator();

} // namespace alcgan::nn
