#include "chromaforge/batch.hpp"

#include <atomic>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "chromaforge/rng.hpp"

namespace chromaforge {

std::vector<AttackResult> run_batch(const std::vector<LabeledImage>& images,
                                    uint64_t global_seed, int jobs,
                                    const BatchAttackFn& fn) {
    std::vector<AttackResult> results(images.size());
    std::exception_ptr first_error = nullptr;
    std::atomic<bool> failed{false};

    const auto count = static_cast<ptrdiff_t>(images.size());
#ifdef _OPENMP
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#else
    const int threads = 1;
    (void)jobs;
#endif
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (ptrdiff_t i = 0; i < count; ++i) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            results[static_cast<size_t>(i)] =
                fn(images[static_cast<size_t>(i)],
                   derive_seed(global_seed, static_cast<uint64_t>(i)));
        } catch (...) {
#pragma omp critical(batch_error)
            {
                if (!first_error) first_error = std::current_exception();
            }
            failed.store(true, std::memory_order_relaxed);
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

} // namespace chromaforge
