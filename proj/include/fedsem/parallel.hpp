#pragma once

namespace fedsem::parallel {

// Worker cap: min(hardware threads, FEDSEM_THREADS if set and > 0).
int worker_count();

// True when compiled with OpenMP and worker_count() > 1.
bool enabled();

} // namespace fedsem::parallel
