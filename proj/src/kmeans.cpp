#include "grassdm/kmeans.hpp"

#include "grassdm/error.hpp"
#include "grassdm/parallel.hpp"
#include "grassdm/rng.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <string>

namespace grassdm {

namespace {

Index distinct_rows(const Matrix& x) {
    std::set<std::vector<double>> seen;
    for (Index i = 0; i < x.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(x.cols()));
        for (Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
        seen.insert(std::move(row));
    }
    return static_cast<Index>(seen.size());
}

double nearest(const Matrix& x, Index i, const Matrix& centroids, Index used, Index& arg) {
    double best = std::numeric_limits<double>::infinity();
    arg = 0;
    for (Index c = 0; c < used; ++c) {
        const double d = (x.row(i) - centroids.row(c)).squaredNorm();
        if (d < best) {
            best = d;
            arg = c;
        }
    }
    return best;
}

Matrix seed_plus_plus(const Matrix& x, Index k, std::mt19937_64& engine) {
    const Index count = x.rows();
    Matrix centroids(k, x.cols());
    centroids.row(0) = x.row(uniform_int(0, count - 1, engine));
    Vector dist(count);
    for (Index i = 0; i < count; ++i) dist(i) = (x.row(i) - centroids.row(0)).squaredNorm();

    for (Index c = 1; c < k; ++c) {
        const double total = dist.sum();
        Index pick = 0;
        if (total > 0.0) {
            const double u = uniform01(engine) * total;
            double acc = 0.0;
            pick = -1;
            for (Index i = 0; i < count; ++i) {
                acc += dist(i);
                if (u < acc && dist(i) > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) dist.maxCoeff(&pick);
        }
        centroids.row(c) = x.row(pick);
        for (Index i = 0; i < count; ++i) dist(i) = std::min(dist(i), (x.row(i) - centroids.row(c)).squaredNorm());
    }
    return centroids;
}

template <bool Parallel>
double assign(const Matrix& x, const Matrix& centroids, std::vector<Index>& labels, Vector& dist) {
    const Index count = x.rows();
    auto body = [&](Index i) {
        Index arg = 0;
        dist(i) = nearest(x, i, centroids, centroids.rows(), arg);
        labels[static_cast<std::size_t>(i)] = arg;
    };
    if constexpr (Parallel)
        parallel_for(count, body);
    else
        for (Index i = 0; i < count; ++i) body(i);
    return dist.sum();
}

// Returns true if some cluster had to be reseeded.
bool update(const Matrix& x, Matrix& centroids, std::vector<Index>& labels, Vector& dist) {
    const Index k = centroids.rows();
    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < x.rows(); ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
        ++sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    bool reseeded = false;
    for (Index c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) continue;
        Index far = -1;
        for (Index i = 0; i < x.rows(); ++i) {
            if (sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] < 2) continue;
            if (far < 0 || dist(i) > dist(far)) far = i;
        }
        if (far < 0) throw DegenerateData("kmeans: cannot repopulate an empty cluster");
        --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
        sums.row(labels[static_cast<std::size_t>(far)]) -= x.row(far);
        labels[static_cast<std::size_t>(far)] = c;
        sums.row(c) = x.row(far);
        sizes[static_cast<std::size_t>(c)] = 1;
        dist(far) = 0.0;
        reseeded = true;
    }
    for (Index c = 0; c < k; ++c) centroids.row(c) = sums.row(c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    return reseeded;
}

template <bool Parallel>
ClusterAssignment lloyd(const Matrix& x, Index k, std::mt19937_64& engine, int max_iter) {
    ClusterAssignment out;
    out.centroids = seed_plus_plus(x, k, engine);
    out.labels.assign(static_cast<std::size_t>(x.rows()), 0);
    Vector dist(x.rows());
    std::vector<Index> previous;

    out.inertia = assign<Parallel>(x, out.centroids, out.labels, dist);
    out.inertia_history.push_back(out.inertia);
    for (int it = 1; it <= max_iter; ++it) {
        out.iterations = it;
        previous = out.labels;
        update(x, out.centroids, out.labels, dist);
        out.inertia = assign<Parallel>(x, out.centroids, out.labels, dist);
        out.inertia_history.push_back(out.inertia);
        if (out.labels == previous) break;
    }
    // make the centroids consistent with the final labels
    update(x, out.centroids, out.labels, dist);
    out.inertia = 0.0;
    for (Index i = 0; i < x.rows(); ++i)
        out.inertia += (x.row(i) - out.centroids.row(out.labels[static_cast<std::size_t>(i)])).squaredNorm();
    return out;
}

template <bool Parallel>
ClusterAssignment kmeans_impl(const Matrix& coords, Index k, Seed seed, const KMeansOptions& options) {
    if (coords.rows() == 0 || coords.cols() == 0) throw EmptyDataset("kmeans: empty coordinate matrix");
    if (k < 1 || k > coords.rows())
        throw InvalidArgument("kmeans: need 1 <= k <= N, got k = " + std::to_string(k));
    if (options.max_iter < 1 || options.n_init < 1)
        throw InvalidArgument("kmeans: max_iter and n_init must be positive");
    if (!coords.allFinite()) throw DegenerateData("kmeans: coordinates contain non-finite values");
    if (distinct_rows(coords) < k)
        throw DegenerateData("kmeans: fewer than k = " + std::to_string(k) + " distinct points");

    ClusterAssignment best;
    for (int r = 0; r < options.n_init; ++r) {
        auto engine = stream_engine(seed, static_cast<std::uint64_t>(r));
        ClusterAssignment run = lloyd<Parallel>(coords, k, engine, options.max_iter);
        if (r == 0 || run.inertia < best.inertia) best = std::move(run);
    }
    return best;
}

}  // namespace

ClusterAssignment kmeans(const Matrix& coords, Index k, Seed seed, const KMeansOptions& options) {
    return kmeans_impl<true>(coords, k, seed, options);
}

ClusterAssignment kmeans_serial(const Matrix& coords, Index k, Seed seed, const KMeansOptions& options) {
    return kmeans_impl<false>(coords, k, seed, options);
}

double adjusted_rand_index(std::span<const Index> a, std::span<const Index> b) {
    if (a.size() != b.size()) throw ShapeMismatch("adjusted_rand_index: labelings differ in length");
    if (a.empty()) throw EmptyDataset("adjusted_rand_index: empty labelings");
    auto pairs = [](double n) { return 0.5 * n * (n - 1.0); };

    std::map<std::pair<Index, Index>, double> table;
    std::map<Index, double> rows;
    std::map<Index, double> cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    double index = 0.0;
    for (const auto& [key, n] : table) index += pairs(n);
    double sum_a = 0.0;
    for (const auto& [key, n] : rows) sum_a += pairs(n);
    double sum_b = 0.0;
    for (const auto& [key, n] : cols) sum_b += pairs(n);

    const double total = pairs(static_cast<double>(a.size()));
    const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
    const double maximum = 0.5 * (sum_a + sum_b);
    if (maximum == expected) return 1.0;
    return (index - expected) / (maximum - expected);
}

}  // namespace grassdm
