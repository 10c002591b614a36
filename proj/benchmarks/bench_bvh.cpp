#include <benchmark/benchmark.h>

#include "texir/rng.hpp"
#include "../tests/support.hpp"

using namespace texir;

static void BM_BvhIntersect(benchmark::State& state) {
    auto bs = test::make_bright_wall_box(2.0, 0.2);
    const Bvh& bvh = *bs.scene.bvh;
    Rng rng(7, 0);
    std::vector<Ray> rays(4096);
    for (auto& r : rays) {
        r.origin = {0.2 + 2.6 * rng.next_double(), 0.2 + 2.1 * rng.next_double(),
                    0.2 + 2.6 * rng.next_double()};
        double z = 2.0 * rng.next_double() - 1.0;
        double phi = 6.283185307179586 * rng.next_double();
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        r.direction = {s * std::cos(phi), s * std::sin(phi), z};
    }
    size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(bvh.intersect(rays[i++ & 4095]));
    }
}
BENCHMARK(BM_BvhIntersect);

static void BM_BvhBuild(benchmark::State& state) {
    auto bs = test::make_bright_wall_box(2.0, 0.2);
    for (auto _ : state) {
        Bvh bvh(*bs.scene.mesh);
        benchmark::DoNotOptimize(bvh);
    }
}
BENCHMARK(BM_BvhBuild);

BENCHMARK_MAIN();
