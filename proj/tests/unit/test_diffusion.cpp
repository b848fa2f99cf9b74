#include "grassdm/datagen.hpp"
#include "grassdm/diffusion.hpp"
#include "grassdm/error.hpp"
#include "grassdm/parallel.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace grassdm;
using grassdm::testing::fix_column_signs;
using grassdm::testing::max_abs_diff;
using grassdm::testing::random_matrix;

namespace {

Matrix random_projection_kernel(Index count, Index n, Index p, Seed seed) {
    std::vector<GrassmannPoint> pts;
    for (Index i = 0; i < count; ++i) pts.push_back(sample_uniform(n, p, seed, static_cast<std::uint64_t>(i)));
    return build_kernel_matrix(pts, KernelKind::Projection).entries;
}

TransitionMatrix walk_from_kernel(const Matrix& k, int t) {
    return transition_matrix(normalize_kernel(k, degree_vector(k)), t);
}

struct DenseOracle {
    Vector eigenvalues;
    Matrix eigenvectors;
};

// Eigenpairs of the one-step walk from the general (non-symmetric) solver,
// normalized to unit length in the degree-weighted inner product.
DenseOracle dense_oracle(const Matrix& kappa, Index keep) {
    const Vector deg = kappa.rowwise().sum();
    const Matrix p = deg.cwiseInverse().asDiagonal() * kappa;
    Eigen::EigenSolver<Matrix> es(p);
    const Vector values = es.eigenvalues().real();
    const Matrix vectors = es.eigenvectors().real();
    std::vector<Index> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) > values(b); });
    DenseOracle out;
    out.eigenvalues.resize(keep);
    out.eigenvectors.resize(p.rows(), keep);
    for (Index k = 0; k < keep; ++k) {
        const Index src = order[static_cast<std::size_t>(k)];
        Vector psi = vectors.col(src);
        psi /= std::sqrt((deg.array() * psi.array().square()).sum());
        out.eigenvalues(k) = values(src);
        out.eigenvectors.col(k) = psi;
    }
    out.eigenvectors = fix_column_signs(out.eigenvectors);
    return out;
}

void expect_matches_oracle(const Matrix& kappa, const DiffusionEmbedding& emb, double tol) {
    const auto oracle = dense_oracle(kappa, emb.q + 1);
    EXPECT_LT((oracle.eigenvalues - emb.eigenvalues).cwiseAbs().maxCoeff(), tol);
    for (Index k = 1; k <= emb.q; ++k) {
        const Vector ref = std::pow(oracle.eigenvalues(k), emb.t) * oracle.eigenvectors.col(k);
        EXPECT_LT((ref - emb.coordinates.col(k - 1)).cwiseAbs().maxCoeff(), tol) << "coordinate " << k;
    }
}

std::vector<Matrix> random_dataset(Index count, Index rows, Index cols, Seed seed) {
    std::vector<Matrix> out;
    for (Index i = 0; i < count; ++i) out.push_back(random_matrix(rows, cols, seed * 1000 + static_cast<Seed>(i)));
    return out;
}

}  // namespace

TEST(DegreeVector, Examples) {
    EXPECT_TRUE(degree_vector(Matrix::Identity(2, 2)).values == Vector::Ones(2));
    EXPECT_TRUE(degree_vector((Matrix(2, 2) << 2, 1, 1, 2).finished()).values == Vector::Constant(2, 3.0));
    const Matrix k = random_projection_kernel(50, 8, 2, 3);
    const Vector d = degree_vector(k).values;
    for (Index i = 0; i < 50; ++i) {
        double s = 0;
        for (Index j = 0; j < 50; ++j) s += k(i, j);
        EXPECT_NEAR(d(i), s, 1e-12);
    }
}

TEST(DegreeVector, ZeroRowIsDisconnected) {
    Matrix k = Matrix::Identity(3, 3);
    k(2, 2) = 0.0;
    EXPECT_THROW(degree_vector(k), DisconnectedGraph);
}

TEST(StationaryDistribution, Examples) {
    const auto a = stationary_distribution(DegreeVector{Vector::Ones(2)}).probabilities;
    EXPECT_DOUBLE_EQ(a(0), 0.5);
    EXPECT_DOUBLE_EQ(a(1), 0.5);
    const auto b = stationary_distribution(DegreeVector{(Vector(2) << 3, 1).finished()}).probabilities;
    EXPECT_DOUBLE_EQ(b(0), 0.75);
    EXPECT_DOUBLE_EQ(b(1), 0.25);
}

TEST(StationaryDistribution, IsLeftEigenvectorOfWalk) {
    const auto walk = walk_from_kernel(random_projection_kernel(40, 7, 2, 4), 1);
    const Vector pi = stationary_distribution(walk.row_degree).probabilities;
    EXPECT_NEAR(pi.sum(), 1.0, 1e-12);
    EXPECT_LT((walk.entries.transpose() * pi - pi).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(NormalizeKernel, Examples) {
    const Matrix k = (Matrix(2, 2) << 2, 1, 1, 2).finished();
    const Matrix n = normalize_kernel(k, degree_vector(k));
    EXPECT_LT(max_abs_diff(n, (Matrix(2, 2) << 2.0 / 3, 1.0 / 3, 1.0 / 3, 2.0 / 3).finished()), 1e-15);
    const Matrix d = (Matrix(2, 2) << 4, 0, 0, 9).finished();
    EXPECT_LT(max_abs_diff(normalize_kernel(d, degree_vector(d)), Matrix::Identity(2, 2)), 1e-15);
    const Matrix r = random_projection_kernel(30, 6, 2, 5);
    const Matrix nr = normalize_kernel(r, degree_vector(r));
    EXPECT_LT(max_abs_diff(nr, nr.transpose()), 1e-12);
}

TEST(TransitionMatrix, TwoStateExamples) {
    const Matrix kappa = (Matrix(2, 2) << 2, 1, 1, 2).finished();
    const auto p1 = transition_matrix(kappa, 1);
    EXPECT_LT(max_abs_diff(p1.entries, (Matrix(2, 2) << 2.0 / 3, 1.0 / 3, 1.0 / 3, 2.0 / 3).finished()), 1e-15);
    const auto p2 = transition_matrix(kappa, 2);
    EXPECT_LT(max_abs_diff(p2.entries, (Matrix(2, 2) << 5.0 / 9, 4.0 / 9, 4.0 / 9, 5.0 / 9).finished()), 1e-15);
    EXPECT_EQ(p2.t, 2);
}

TEST(TransitionMatrix, RowsAreStochastic) {
    for (Seed s = 0; s < 10; ++s) {
        const auto walk = walk_from_kernel(random_projection_kernel(30, 6, 2, s), 1 + static_cast<int>(s % 3));
        EXPECT_LT((walk.entries.rowwise().sum() - Vector::Ones(30)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_GE(walk.entries.minCoeff(), 0.0);
    }
}

TEST(TransitionMatrix, Errors) {
    Matrix blocks = Matrix::Zero(4, 4);
    blocks.block(0, 0, 2, 2) = Matrix::Ones(2, 2);
    blocks.block(2, 2, 2, 2) = Matrix::Ones(2, 2);
    EXPECT_THROW(transition_matrix(blocks, 1), DisconnectedGraph);
    EXPECT_THROW(transition_matrix(Matrix::Ones(3, 3), 0), InvalidArgument);
    Matrix neg = Matrix::Ones(3, 3);
    neg(0, 1) = neg(1, 0) = -0.5;
    EXPECT_THROW(transition_matrix(neg, 1), InvalidArgument);
}

TEST(SpectralEmbedding, TwoStateAnalytic) {
    const auto walk = transition_matrix((Matrix(2, 2) << 2, 1, 1, 2).finished(), 1);
    const auto emb = spectral_embedding(walk, 1);
    EXPECT_NEAR(emb.eigenvalues(0), 1.0, 1e-15);
    EXPECT_NEAR(emb.eigenvalues(1), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(emb.eigenvectors(0, 1), -emb.eigenvectors(1, 1), 1e-15);
    EXPECT_NEAR(emb.eigenvectors(0, 0), emb.eigenvectors(1, 0), 1e-15);
    EXPECT_THROW(spectral_embedding(walk, 2), DimensionError);
    EXPECT_THROW(spectral_embedding(walk, 0), DimensionError);
}

TEST(SpectralEmbedding, MatchesDenseOracle) {
    const Matrix k = random_projection_kernel(50, 8, 2, 6);
    const Matrix kappa = normalize_kernel(k, degree_vector(k));
    for (int t : {1, 3}) {
        const auto emb = spectral_embedding(transition_matrix(kappa, t), 4);
        EXPECT_NEAR(emb.eigenvalues(0), 1.0, 1e-10);
        for (Index i = 1; i <= 4; ++i) EXPECT_LE(emb.eigenvalues(i), emb.eigenvalues(i - 1));
        expect_matches_oracle(kappa, emb, 1e-8);
    }
}

TEST(SpectralEmbedding, EigenvaluesMatchRawWalk) {
    const Matrix k = random_projection_kernel(40, 9, 3, 7);
    const auto walk = walk_from_kernel(k, 1);
    const auto emb = spectral_embedding(walk, 39);
    Eigen::EigenSolver<Matrix> es(walk.entries);
    Vector raw = es.eigenvalues().real();
    std::sort(raw.data(), raw.data() + raw.size(), std::greater<>());
    EXPECT_LT((raw - emb.eigenvalues).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(emb.eigenvalues.cwiseAbs().maxCoeff(), 1.0 + 1e-10);
}

TEST(DiffusionDistance, TwoStateHandValue) {
    const Matrix k = (Matrix(2, 2) << 2, 1, 1, 2).finished();
    const auto walk = walk_from_kernel(k, 1);
    const auto emb = spectral_embedding(walk, 1);
    // kappa = P here, whose rows sum to one, so the weights are all 1
    const double expected = std::sqrt(2.0 / 9.0);
    EXPECT_NEAR(diffusion_distance_direct(walk, 0, 1), expected, 1e-15);
    EXPECT_NEAR(diffusion_distance_spectral(emb, 0, 1), expected, 1e-10);
    EXPECT_DOUBLE_EQ(diffusion_distance_direct(walk, 1, 1), 0.0);
    EXPECT_DOUBLE_EQ(diffusion_distance_spectral(emb, 0, 0), 0.0);
    EXPECT_THROW(diffusion_distance_direct(walk, 0, 2), IndexError);
    EXPECT_THROW(diffusion_distance_spectral(emb, -1, 0), IndexError);
}

TEST(DiffusionDistance, DirectMatchesFullSpectrum) {
    for (Seed s = 0; s < 10; ++s) {
        const auto walk = walk_from_kernel(random_projection_kernel(30, 7, 2, 100 + s), 1 + static_cast<int>(s % 2));
        const auto emb = spectral_embedding(walk, 29);
        for (Index i = 0; i < 30; i += 3)
            for (Index j = i + 1; j < 30; j += 4)
                EXPECT_NEAR(diffusion_distance_direct(walk, i, j), diffusion_distance_spectral(emb, i, j), 1e-8);
    }
}

TEST(Gdm, IdenticalSamplesCollapse) {
    const Matrix x = random_matrix(6, 5, 1);
    const std::vector<Matrix> data(8, x);
    DiffusionEmbedding emb;
    ASSERT_NO_THROW(emb = grassmannian_diffusion_maps(data, GdmParams{2, 3, 1}));
    for (Index i = 1; i < 8; ++i) EXPECT_LT((emb.coordinates.row(i) - emb.coordinates.row(0)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_FALSE(emb.warnings.empty());
}

TEST(Gdm, ScaleInvariant) {
    const auto data = random_dataset(40, 6, 5, 2);
    auto scaled = data;
    auto engine = stream_engine(99, 0);
    for (auto& m : scaled) m *= 0.1 + 9.9 * uniform01(engine);
    const GdmParams params{2, 3, 1};
    const auto a = grassmannian_diffusion_maps(data, params);
    const auto b = grassmannian_diffusion_maps(scaled, params);
    EXPECT_LT(max_abs_diff(a.coordinates, b.coordinates), 1e-10);

    const auto ca = conventional_diffusion_maps(data, std::nullopt, 3, 1);
    const auto cb = conventional_diffusion_maps(scaled, std::nullopt, 3, 1);
    EXPECT_GT(max_abs_diff(ca.coordinates, cb.coordinates), 1e-3);
}

TEST(Gdm, PermutationEquivariant) {
    const auto data = random_dataset(30, 5, 5, 3);
    std::vector<std::size_t> perm(data.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::reverse(perm.begin(), perm.end());
    std::rotate(perm.begin(), perm.begin() + 7, perm.end());
    std::vector<Matrix> shuffled;
    for (auto i : perm) shuffled.push_back(data[i]);
    const GdmParams params{2, 3, 1};
    const auto a = grassmannian_diffusion_maps(data, params);
    const auto b = grassmannian_diffusion_maps(shuffled, params);
    for (std::size_t r = 0; r < perm.size(); ++r)
        EXPECT_LT((b.coordinates.row(static_cast<Index>(r)) - a.coordinates.row(static_cast<Index>(perm[r])))
                      .cwiseAbs()
                      .maxCoeff(),
                  1e-10);
}

TEST(Gdm, DeterministicAcrossThreadCounts) {
    const auto data = random_dataset(60, 8, 6, 4);
    const GdmParams params{3, 4, 2};
    const int saved = thread_count();
    set_thread_count(1);
    const auto a = grassmannian_diffusion_maps(data, params);
    set_thread_count(4);
    const auto b = grassmannian_diffusion_maps(data, params);
    set_thread_count(saved);
    EXPECT_TRUE(a.coordinates == b.coordinates);
    EXPECT_TRUE(a.eigenvalues == b.eigenvalues);
}

TEST(Gdm, RecordsMetadata) {
    const auto emb = grassmannian_diffusion_maps(random_dataset(20, 5, 4, 5), GdmParams{2, 3, 2});
    EXPECT_EQ(emb.size(), 20);
    EXPECT_EQ(emb.q, 3);
    EXPECT_EQ(emb.t, 2);
    EXPECT_EQ(emb.p, 2);
    EXPECT_EQ(emb.kernel, "projection");
    EXPECT_EQ(emb.composition, "sum");
    EXPECT_EQ(emb.coordinates.cols(), 3);
    EXPECT_EQ(emb.eigenvalues.size(), 4);
    EXPECT_FALSE(emb.epsilon.has_value());
}

TEST(Gdm, SphereMatchesOracleAndVariesContinuously) {
    const auto data = gen_sphere_cones(500, 1);
    const auto samples = sphere_samples(data);
    const GdmParams params{1, 3, 1};
    const auto emb = grassmannian_diffusion_maps(samples, params);

    const auto proj = project_all(samples, 1);
    const auto left = grassmannian_kernel(proj, KernelKind::Projection, CompositionRule::Sum);
    const Matrix kappa = normalize_kernel(left, degree_vector(left));
    expect_matches_oracle(kappa, emb, 1e-8);

    const Vector xi = emb.coordinates.col(0);
    const double range = xi.maxCoeff() - xi.minCoeff();
    ASSERT_GT(range, 0.0);
    int pairs = 0;
    for (Index i = 0; i < 500; ++i)
        for (Index j = i + 1; j < 500; ++j)
            if (std::abs(data.theta(i) - data.theta(j)) < 0.005) {
                ++pairs;
                EXPECT_LT(std::abs(xi(i) - xi(j)), 0.05 * range);
            }
    EXPECT_GT(pairs, 50);
}

TEST(Conventional, TwoClustersSplitBySign) {
    std::vector<Matrix> data;
    for (int i = 0; i < 10; ++i) data.push_back(Matrix::Zero(2, 1));
    for (int i = 0; i < 10; ++i) data.push_back(Matrix::Constant(2, 1, 3.0));
    const auto emb = conventional_diffusion_maps(data, 4.0, 1, 1);
    for (Index i = 1; i < 10; ++i) {
        EXPECT_GT(emb.coordinates(i, 0) * emb.coordinates(0, 0), 0.0);
        EXPECT_LT(emb.coordinates(i + 10, 0) * emb.coordinates(0, 0), 0.0);
    }
    ASSERT_TRUE(emb.epsilon);
    EXPECT_EQ(*emb.epsilon, 4.0);
    EXPECT_EQ(emb.kernel, "gaussian");
}

TEST(Conventional, MatchesDenseOracle) {
    const auto data = random_dataset(100, 3, 2, 6);
    const auto emb = conventional_diffusion_maps(data, std::nullopt, 3, 1);
    ASSERT_TRUE(emb.epsilon);
    EXPECT_NEAR(*emb.epsilon, median_bandwidth(data), 1e-15);
    const auto k = build_gaussian_kernel_matrix(data, *emb.epsilon);
    expect_matches_oracle(normalize_kernel(k, degree_vector(k)), emb, 1e-8);
}

TEST(ConditionNumber, TwoState) {
    const auto walk = transition_matrix((Matrix(2, 2) << 2, 1, 1, 2).finished(), 1);
    EXPECT_NEAR(condition_number(walk), 3.0, 1e-12);
}
