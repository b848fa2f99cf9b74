#pragma once

#include "grassdm/diffusion.hpp"
#include "grassdm/kernels.hpp"
#include "grassdm/sparse.hpp"
#include "grassdm/types.hpp"

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace grassdm {

enum class SolverKind { Unconstrained, Constrained };
enum class Criterion { MinResidual, MaxCoefficient };

std::string_view to_string(SolverKind kind);
std::string_view to_string(Criterion criterion);
/// "unconstrained" / "constrained".
SolverKind parse_solver_kind(std::string_view name);
/// "min-residual" / "max-coefficient".
Criterion parse_criterion(std::string_view name);

struct ClassifyParams {
    Index p = 1;
    Index q = 3;
    int t = 1;
    KernelKind kernel = KernelKind::Projection;
    CompositionRule composition = CompositionRule::Sum;
    SolverKind solver = SolverKind::Unconstrained;
    Criterion criterion = Criterion::MinResidual;
    double beta = 1e-3;
    double epsilon = 1e-6;
    /// Embed all test samples together with the training set in one pass
    /// instead of one (N+1)-point embedding per query.
    bool batch = false;
    /// Prepend the stationary coordinate (lambda_0^t psi_0) to each
    /// dictionary column, so atoms carry q + 1 entries.
    bool trivial_coordinate = true;
    LassoOptions lasso;
};

struct ClassificationResult {
    std::string predicted;
    Criterion criterion = Criterion::MinResidual;
    std::vector<std::pair<std::string, double>> residuals;  // per class, label order
    SparseSolution solution;
    Index coefficients_nnz = 0;
    std::vector<std::string> warnings;
};

/// Classifies one normalized-or-not diffusion coordinate against a dictionary.
ClassificationResult classify_coordinates(const SparseDictionary& dict, const Vector& coordinate,
                                          const ClassifyParams& params);

/// Sparse-representation classification of one test matrix. The training set
/// and the test sample are embedded together, the training coordinates form
/// the dictionary and the test coordinate is recovered from it.
ClassificationResult classify(std::span<const Matrix> train, std::span<const std::string> labels,
                              const Matrix& test, const ClassifyParams& params);

/// Classifies several test matrices. Honors `params.batch`; otherwise each
/// query gets its own (N+1)-point embedding, sharing the training SVDs and
/// kernels between queries.
std::vector<ClassificationResult> classify_many(std::span<const Matrix> train,
                                                std::span<const std::string> labels,
                                                std::span<const Matrix> tests, const ClassifyParams& params);

}  // namespace grassdm
