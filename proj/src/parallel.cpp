#include "fedsem/parallel.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace fedsem::parallel {

int worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    int n = hw == 0 ? 1 : static_cast<int>(hw);
    if (const char* env = std::getenv("FEDSEM_THREADS")) {
        try {
            int cap = std::stoi(env);
            if (cap > 0 && cap < n) n = cap;
        } catch (...) {
            // Unparseable value: ignore, keep hardware default.
        }
    }
    return n;
}

bool enabled() {
#ifdef _OPENMP
    return worker_count() > 1;
#else
    return false;
#endif
}

} // namespace fedsem::parallel
