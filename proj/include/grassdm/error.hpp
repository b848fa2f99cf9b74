#pragma once

#include <stdexcept>
#include <string>

namespace grassdm {

/// Broad failure class. The CLI maps these onto exit codes 2, 3 and 4.
enum class ErrorCategory { Config, Data, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string kind, const std::string& what)
        : std::runtime_error(what), category_(category), kind_(std::move(kind)) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }
    /// Short machine-readable name, e.g. "DimensionError".
    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

private:
    ErrorCategory category_;
    std::string kind_;
};

#define GRASSDM_DEFINE_ERROR(Name, Category)                                    \
    class Name : public Error {                                                 \
    public:                                                                     \
        explicit Name(const std::string& what)                                  \
            : Error(ErrorCategory::Category, #Name, what) {}                    \
    }

// caller supplied something inconsistent with the operation's preconditions
GRASSDM_DEFINE_ERROR(DimensionError, Config);
GRASSDM_DEFINE_ERROR(ShapeMismatch, Config);
GRASSDM_DEFINE_ERROR(InvalidArgument, Config);
GRASSDM_DEFINE_ERROR(InvalidBandwidth, Config);
GRASSDM_DEFINE_ERROR(IndexError, Config);

// input data is malformed or unusable
GRASSDM_DEFINE_ERROR(ParseError, Data);
GRASSDM_DEFINE_ERROR(RaggedRows, Data);
GRASSDM_DEFINE_ERROR(UnsupportedFormat, Data);
GRASSDM_DEFINE_ERROR(CorruptHeader, Data);
GRASSDM_DEFINE_ERROR(EmptyDataset, Data);
GRASSDM_DEFINE_ERROR(HeterogeneousShapes, Data);
GRASSDM_DEFINE_ERROR(EmptyClass, Data);
GRASSDM_DEFINE_ERROR(ZeroColumn, Data);
GRASSDM_DEFINE_ERROR(DegenerateData, Data);

// the numerics cannot proceed on otherwise well-formed input
GRASSDM_DEFINE_ERROR(RankDeficient, Numerical);
GRASSDM_DEFINE_ERROR(SingularProjection, Numerical);
GRASSDM_DEFINE_ERROR(DisconnectedGraph, Numerical);
GRASSDM_DEFINE_ERROR(ConvergenceFailure, Numerical);
GRASSDM_DEFINE_ERROR(Infeasible, Numerical);

#undef GRASSDM_DEFINE_ERROR

}  // namespace grassdm
