// Compares the collapsed-marginal map scan against the serial pushforward
// reference, and the scan against itself with threading disabled. Run with
// OMP_NUM_THREADS to vary the thread count.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mvinfo/datagen.hpp"
#include "mvinfo/repr_search.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

int main(int argc, char** argv) {
    const int tables = argc > 1 ? std::atoi(argv[1]) : 20;
    const int x_size = argc > 2 ? std::atoi(argv[2]) : 5;

#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: not enabled\n");
#endif
    std::printf("tables: %d, |X| = |Z| = %d (%llu maps each)\n", tables, x_size,
                static_cast<unsigned long long>(
                    mvinfo::repr::map_space_size(x_size, x_size)));

    double kernel_total = 0.0, reference_total = 0.0;
    double checksum_kernel = 0.0, checksum_reference = 0.0;
    for (int i = 0; i < tables; ++i) {
        const auto dt = mvinfo::datagen::random_discrete(
            {3, x_size, 4}, 89, static_cast<std::uint64_t>(i) + 1);

        auto start = Clock::now();
        const auto fast = mvinfo::repr::scan_maps(dt.table, x_size);
        kernel_total += seconds_since(start);

        start = Clock::now();
        const auto ref = mvinfo::repr::scan_maps_reference(dt.table, x_size);
        reference_total += seconds_since(start);

        double worst = 0.0;
        for (std::size_t r = 0; r < fast.size(); ++r) {
            worst = std::max(worst, std::abs(fast[r].i_zt - ref[r].i_zt));
            worst = std::max(worst, std::abs(fast[r].i_zs - ref[r].i_zs));
            worst = std::max(worst, std::abs(fast[r].pe - ref[r].pe));
            checksum_kernel += fast[r].i_zt;
            checksum_reference += ref[r].i_zt;
        }
        if (worst > 1e-10) {
            std::printf("MISMATCH on table %d: max deviation %.3e\n", i, worst);
            return 1;
        }
    }

    std::printf("kernel:    %.3f s total, %.3f ms/table\n", kernel_total,
                1e3 * kernel_total / tables);
    std::printf("reference: %.3f s total, %.3f ms/table\n", reference_total,
                1e3 * reference_total / tables);
    std::printf("speedup:   %.1fx (checksums %.12f / %.12f)\n",
                reference_total / kernel_total, checksum_kernel, checksum_reference);
    return 0;
}
