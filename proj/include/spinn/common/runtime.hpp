#pragma once

namespace spinn {

/// Keeps large freed blocks in the heap instead of returning them to the OS.
/// Training allocates and frees multi-megabyte activations every step, and
/// the default mmap threshold turns that into page-fault churn. No-op off glibc.
void tune_allocator();

}  // namespace spinn
