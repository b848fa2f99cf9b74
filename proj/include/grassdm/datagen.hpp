#pragma once

#include "grassdm/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace grassdm {

/// Points on two cones through the north pole: sin(phi) = cos^2(theta),
/// phi the elevation above the equator, radius uniform on [0, 2].
struct SphereConesDataset {
    Matrix points;      // N x 3
    Vector magnitudes;  // N
    Vector theta;       // azimuth, [0, 2 pi)
    Vector phi;         // elevation, asin(cos^2 theta)
};

SphereConesDataset gen_sphere_cones(Index count, Seed seed);

/// Each sample as a 3 x 1 matrix, the form the embedding pipeline expects.
std::vector<Matrix> sphere_samples(const SphereConesDataset& data);

/// Low-rank symmetric fields X = U A U^T.
struct RandomFieldDataset {
    std::vector<Matrix> samples;  // n x n each
    std::vector<int> t_values;
    std::vector<int> l_values;
    Matrix a_diagonals;  // N x p
};

/// Discrete cosine basis u_ij = sqrt(2/n) cos(2 pi (j + L)(i - T) / n),
/// i = 0..n-1, j = 0..p-1.
Matrix random_field_basis(Index n, Index p, int t_shift, int l_shift);

/// U diag(a) U^T for the basis above.
Matrix random_field_sample(Index n, const Vector& a, int t_shift, int l_shift);

struct RandomFieldOptions {
    /// When set, L is drawn uniformly from this list instead of
    /// [1, floor(n/2) + 1 - p].
    std::optional<std::vector<int>> l_choices;
};

/// N samples with A ~ U(0, 1], T ~ U{0..n-1} and L as above, one (T, L)
/// draw per sample. Requires n == m and 1 <= p <= floor(n/2).
RandomFieldDataset gen_random_field(Index count, Index n, Index m, Index p, Seed seed,
                                    const RandomFieldOptions& options = {});

/// Largest admissible L for (n, p).
int max_l_shift(Index n, Index p);

}  // namespace grassdm
