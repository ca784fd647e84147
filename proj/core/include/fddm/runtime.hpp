#pragma once

namespace fddm {

/// Keeps freed tensor memory in the process heap instead of returning it
/// to the kernel after every large free (glibc only; a no-op elsewhere).
/// Call once at startup of long-running programs.
void retain_heap_memory();

}  // namespace fddm
