#include "grassdm/classify.hpp"

#include "grassdm/error.hpp"
#include "grassdm/manifold.hpp"
#include "grassdm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace grassdm {

std::string_view to_string(SolverKind kind) {
    return kind == SolverKind::Unconstrained ? "unconstrained" : "constrained";
}

std::string_view to_string(Criterion criterion) {
    return criterion == Criterion::MinResidual ? "min-residual" : "max-coefficient";
}

SolverKind parse_solver_kind(std::string_view name) {
    if (name == "unconstrained") return SolverKind::Unconstrained;
    if (name == "constrained") return SolverKind::Constrained;
    throw InvalidArgument("unknown solver '" + std::string(name) + "' (expected unconstrained|constrained)");
}

Criterion parse_criterion(std::string_view name) {
    if (name == "min-residual") return Criterion::MinResidual;
    if (name == "max-coefficient") return Criterion::MaxCoefficient;
    throw InvalidArgument("unknown criterion '" + std::string(name) +
                          "' (expected min-residual|max-coefficient)");
}

ClassificationResult classify_coordinates(const SparseDictionary& dict, const Vector& coordinate,
                                          const ClassifyParams& params) {
    const double norm = coordinate.norm();
    if (!(norm >= 1e-14)) throw ZeroColumn("classify: test sample has a zero coordinate vector");
    const Vector target = coordinate / norm;

    ClassificationResult out;
    out.criterion = params.criterion;
    out.solution = params.solver == SolverKind::Unconstrained
                       ? solve_l1_unconstrained(dict, target, params.beta, params.lasso)
                       : solve_l1_constrained(dict, target, params.epsilon, params.lasso);
    if (!out.solution.converged) out.warnings.push_back("NonConvergence: l1 solver stopped at its iteration cap");
    out.coefficients_nnz = (out.solution.coefficients.array() != 0.0).count();

    const std::vector<double> res = residuals_per_class(dict, out.solution.coefficients, target);
    std::size_t best = 0;
    for (std::size_t k = 0; k < res.size(); ++k) {
        out.residuals.emplace_back(dict.class_blocks[k].label, res[k]);
        if (res[k] < res[best]) best = k;
    }
    out.predicted = dict.class_blocks[best].label;

    if (params.criterion == Criterion::MaxCoefficient) {
        Index arg = 0;
        const double peak = out.solution.coefficients.cwiseAbs().maxCoeff(&arg);
        if (peak > 0.0)
            out.predicted = dict.label_of(arg);
        else
            out.warnings.push_back("all coefficients vanish; fell back to the minimum-residual class");
    }
    return out;
}

namespace {

void validate(std::span<const Matrix> train, std::span<const std::string> labels, std::span<const Matrix> tests,
              const ClassifyParams& params) {
    if (train.empty()) throw EmptyDataset("classify: empty training set");
    if (labels.size() != train.size())
        throw ShapeMismatch("classify: " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(train.size()) + " training samples");
    for (const auto& x : train)
        if (x.rows() != train[0].rows() || x.cols() != train[0].cols())
            throw HeterogeneousShapes("classify: training samples have mixed shapes");
    for (const auto& x : tests)
        if (x.rows() != train[0].rows() || x.cols() != train[0].cols())
            throw HeterogeneousShapes("classify: test sample shape differs from training shape");
    if (params.q < 1 || params.q >= static_cast<Index>(train.size()))
        throw DimensionError("classify: need 1 <= q < N");
}

Matrix augment(const Matrix& base, const Vector& cross, double self) {
    const Index count = base.rows();
    Matrix out(count + 1, count + 1);
    out.topLeftCorner(count, count) = base;
    out.block(0, count, count, 1) = cross;
    out.block(count, 0, 1, count) = cross.transpose();
    out(count, count) = self;
    return out;
}

DiffusionEmbedding embed_query(const std::vector<SvdTriplet>& train, const KernelMatrix& left,
                               const KernelMatrix& right, const SvdTriplet& query, const ClassifyParams& params) {
    const auto count = static_cast<Index>(train.size());
    Vector cross_left(count);
    Vector cross_right(count);
    for (Index i = 0; i < count; ++i) {
        cross_left(i) = kernel_value(params.kernel, train[static_cast<std::size_t>(i)].left, query.left);
        cross_right(i) = kernel_value(params.kernel, train[static_cast<std::size_t>(i)].right, query.right);
    }
    const KernelMatrix l{augment(left.entries, cross_left, kernel_value(params.kernel, query.left, query.left)),
                         left.provenance};
    const KernelMatrix r{
        augment(right.entries, cross_right, kernel_value(params.kernel, query.right, query.right)),
        right.provenance};
    return diffusion_from_kernel(compose_kernels(l, r, params.composition), params.q, params.t);
}

Matrix classifier_coordinates(const DiffusionEmbedding& emb, bool trivial) {
    if (!trivial) return emb.coordinates;
    Matrix out(emb.coordinates.rows(), emb.coordinates.cols() + 1);
    out.col(0) = std::pow(emb.eigenvalues(0), emb.t) * emb.eigenvectors.col(0);
    out.rightCols(emb.coordinates.cols()) = emb.coordinates;
    return out;
}

ClassificationResult finish(const DiffusionEmbedding& emb, std::span<const std::string> labels, Index query_row,
                            const ClassifyParams& params) {
    const auto count = static_cast<Index>(labels.size());
    const Matrix coords = classifier_coordinates(emb, params.trivial_coordinate);
    const SparseDictionary dict = build_dictionary(coords.topRows(count), labels);
    ClassificationResult out = classify_coordinates(dict, coords.row(query_row).transpose(), params);
    out.warnings.insert(out.warnings.begin(), emb.warnings.begin(), emb.warnings.end());
    out.warnings.insert(out.warnings.begin(), dict.warnings.begin(), dict.warnings.end());
    return out;
}

}  // namespace

ClassificationResult classify(std::span<const Matrix> train, std::span<const std::string> labels,
                              const Matrix& test, const ClassifyParams& params) {
    ClassifyParams single = params;
    single.batch = false;
    return classify_many(train, labels, std::span<const Matrix>(&test, 1), single).front();
}

std::vector<ClassificationResult> classify_many(std::span<const Matrix> train,
                                                std::span<const std::string> labels,
                                                std::span<const Matrix> tests, const ClassifyParams& params) {
    validate(train, labels, tests, params);
    if (tests.empty()) return {};
    const auto count = static_cast<Index>(train.size());

    if (params.batch) {
        std::vector<Matrix> all(train.begin(), train.end());
        all.insert(all.end(), tests.begin(), tests.end());
        const GdmParams gdm{params.p, params.q, params.t, params.kernel, params.composition};
        const DiffusionEmbedding emb = grassmannian_diffusion_maps(std::span<const Matrix>(all), gdm);
        std::vector<ClassificationResult> out(tests.size());
        parallel_for(static_cast<Index>(tests.size()), [&](Index j) {
            out[static_cast<std::size_t>(j)] = finish(emb, labels, count + j, params);
        });
        return out;
    }

    const std::vector<SvdTriplet> train_proj = project_all(train, params.p);
    const std::vector<SvdTriplet> test_proj = project_all(tests, params.p);
    std::vector<GrassmannPoint> lefts;
    std::vector<GrassmannPoint> rights;
    for (const auto& tri : train_proj) {
        lefts.push_back(tri.left);
        rights.push_back(tri.right);
    }
    const KernelMatrix left = build_kernel_matrix(lefts, params.kernel);
    const KernelMatrix right = build_kernel_matrix(rights, params.kernel);

    std::vector<ClassificationResult> out(tests.size());
    parallel_for(static_cast<Index>(tests.size()), [&](Index j) {
        const DiffusionEmbedding emb = embed_query(train_proj, left, right, test_proj[static_cast<std::size_t>(j)], params);
        out[static_cast<std::size_t>(j)] = finish(emb, labels, count, params);
    });
    return out;
}

}  // namespace grassdm
