#include "grassdm/grassdm.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace grassdm;

namespace {

std::vector<Matrix> fields(Index count) {
    RandomFieldOptions rf;
    rf.l_choices = std::vector<int>{1, 2, 3, 4, 5};
    return gen_random_field(count, 40, 40, 5, 3, rf).samples;
}

std::vector<GrassmannPoint> left_points(Index count) {
    std::vector<GrassmannPoint> out;
    for (const auto& t : project_all(fields(count), 5)) out.push_back(t.left);
    return out;
}

template <bool Parallel>
void project(benchmark::State& state) {
    const auto data = fields(state.range(0));
    for (auto _ : state) {
        auto r = Parallel ? project_all(data, 5) : project_all_serial(data, 5);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void kernel_matrix(benchmark::State& state) {
    const auto points = left_points(state.range(0));
    for (auto _ : state) {
        auto k = Parallel ? build_kernel_matrix(points, KernelKind::Projection)
                          : build_kernel_matrix_serial(points, KernelKind::Projection);
        benchmark::DoNotOptimize(k.entries.data());
    }
}

template <bool Parallel>
void gaussian_matrix(benchmark::State& state) {
    const auto data = fields(state.range(0));
    const double eps = median_bandwidth(data);
    for (auto _ : state) {
        auto k = Parallel ? build_gaussian_kernel_matrix(data, eps) : build_gaussian_kernel_matrix_serial(data, eps);
        benchmark::DoNotOptimize(k.entries.data());
    }
}

template <bool Parallel>
void monte_carlo(benchmark::State& state) {
    for (auto _ : state) {
        auto s = Parallel ? monte_carlo_offdiag_mean(KernelKind::BinetCauchy, 20, 10, state.range(0), 1)
                          : monte_carlo_offdiag_mean_serial(KernelKind::BinetCauchy, 20, 10, state.range(0), 1);
        benchmark::DoNotOptimize(s.mean_offdiag);
    }
}

template <bool Parallel>
void lloyd(benchmark::State& state) {
    const Matrix coords = Matrix::Random(state.range(0), 3);
    for (auto _ : state) {
        auto c = Parallel ? kmeans(coords, 15, 1) : kmeans_serial(coords, 15, 1);
        benchmark::DoNotOptimize(c.inertia);
    }
}

}  // namespace

BENCHMARK(project<false>)->Name("project_all/serial")->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(project<true>)->Name("project_all/openmp")->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(kernel_matrix<false>)->Name("projection_kernel/serial")->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(kernel_matrix<true>)->Name("projection_kernel/openmp")->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(gaussian_matrix<false>)->Name("gaussian_kernel/serial")->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(gaussian_matrix<true>)->Name("gaussian_kernel/openmp")->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(monte_carlo<false>)->Name("monte_carlo/serial")->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK(monte_carlo<true>)->Name("monte_carlo/openmp")->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK(lloyd<false>)->Name("kmeans/serial")->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK(lloyd<true>)->Name("kmeans/openmp")->Arg(3000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
