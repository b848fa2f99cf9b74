#pragma once

#include "grassdm/types.hpp"

#include <span>
#include <vector>

namespace grassdm {

struct ClusterAssignment {
    std::vector<Index> labels;  // length N, values in [0, k)
    Matrix centroids;           // k x d
    double inertia = 0.0;
    int iterations = 0;
    std::vector<double> inertia_history;  // after every assignment step of the kept run
};

struct KMeansOptions {
    int max_iter = 300;
    int n_init = 10;
};

/// Lloyd's algorithm from k-means++ seeding. Each restart r draws from stream
/// (seed, r); the run with the lowest inertia is kept, earliest on ties.
/// Ties in the assignment step go to the lowest centroid index. An emptied
/// cluster is reseeded with the point farthest from its centroid.
/// Throws DegenerateData if `coords` has fewer than k distinct rows.
ClusterAssignment kmeans(const Matrix& coords, Index k, Seed seed, const KMeansOptions& options = {});
/// Same algorithm with a serial assignment step.
ClusterAssignment kmeans_serial(const Matrix& coords, Index k, Seed seed, const KMeansOptions& options = {});

/// Chance-corrected agreement between two labelings (1 = identical
/// partitions, about 0 for independent ones).
double adjusted_rand_index(std::span<const Index> a, std::span<const Index> b);

}  // namespace grassdm
