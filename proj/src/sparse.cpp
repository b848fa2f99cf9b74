#include "grassdm/sparse.hpp"

#include "grassdm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace grassdm {

const std::string& SparseDictionary::label_of(Index column) const {
    for (const auto& block : class_blocks)
        if (column >= block.begin && column < block.end) return block.label;
    throw IndexError("SparseDictionary::label_of: column " + std::to_string(column) + " out of range");
}

SparseDictionary build_dictionary(const Matrix& coords, std::span<const std::string> labels) {
    const Index count = coords.rows();
    if (count == 0) throw EmptyClass("build_dictionary: no training samples");
    if (static_cast<Index>(labels.size()) != count)
        throw ShapeMismatch("build_dictionary: " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(count) + " samples");

    std::map<std::string, std::vector<Index>> members;
    for (Index i = 0; i < count; ++i) {
        if (labels[static_cast<std::size_t>(i)].empty()) throw EmptyClass("build_dictionary: empty class label");
        members[labels[static_cast<std::size_t>(i)]].push_back(i);
    }

    SparseDictionary dict;
    dict.matrix.resize(coords.cols(), count);
    dict.column_norms.resize(count);
    Index col = 0;
    for (const auto& [label, rows] : members) {
        const Index begin = col;
        for (Index row : rows) {
            const double norm = coords.row(row).norm();
            if (!(norm >= 1e-14))
                throw ZeroColumn("build_dictionary: sample " + std::to_string(row) + " has a zero coordinate vector");
            dict.matrix.col(col) = coords.row(row).transpose() / norm;
            dict.column_norms(col) = norm;
            dict.source_index.push_back(row);
            ++col;
        }
        dict.class_blocks.push_back({label, begin, col});
    }
    if (count <= coords.cols())
        dict.warnings.push_back("dictionary is not underdetermined: N = " + std::to_string(count) +
                                " <= q = " + std::to_string(coords.cols()));
    return dict;
}

namespace {

double soft(double x, double threshold) {
    if (x > threshold) return x - threshold;
    if (x < -threshold) return x + threshold;
    return 0.0;
}

double objective(const Matrix& a, const Vector& c, const Vector& target, double beta) {
    return (a * c - target).squaredNorm() + beta * c.lpNorm<1>();
}

double spectral_norm_sq(const Matrix& a) {
    const Vector s = Eigen::JacobiSVD<Matrix>(a).singularValues();
    return s.size() == 0 ? 0.0 : s(0) * s(0);
}

// Solves the stationarity system on a fixed support and sign pattern. Returns
// nothing when the support is rank deficient or the signs do not survive.
std::optional<Vector> polish(const Matrix& a, const Vector& c, const Vector& target, double beta) {
    std::vector<Index> support;
    for (Index i = 0; i < c.size(); ++i)
        if (c(i) != 0.0) support.push_back(i);
    if (support.empty() || static_cast<Index>(support.size()) > a.rows()) return std::nullopt;

    const auto k = static_cast<Index>(support.size());
    Matrix sub(a.rows(), k);
    Vector sign(k);
    for (Index j = 0; j < k; ++j) {
        sub.col(j) = a.col(support[static_cast<std::size_t>(j)]);
        sign(j) = c(support[static_cast<std::size_t>(j)]) > 0.0 ? 1.0 : -1.0;
    }
    const Matrix gram = sub.transpose() * sub;
    Eigen::ColPivHouseholderQR<Matrix> qr(gram);
    if (qr.rank() < k) return std::nullopt;
    const Vector cs = qr.solve(sub.transpose() * target - 0.5 * beta * sign);
    for (Index j = 0; j < k; ++j)
        if (cs(j) * sign(j) <= 0.0) return std::nullopt;

    Vector out = Vector::Zero(c.size());
    for (Index j = 0; j < k; ++j) out(support[static_cast<std::size_t>(j)]) = cs(j);
    return out;
}

double kkt(const Matrix& a, const Vector& c, const Vector& target, double beta) {
    const Vector g = a.transpose() * (a * c - target);
    double worst = 0.0;
    for (Index i = 0; i < c.size(); ++i) {
        const double v = c(i) != 0.0 ? std::abs(g(i) + 0.5 * beta * (c(i) > 0.0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(g(i)) - 0.5 * beta);
        worst = std::max(worst, v);
    }
    return worst;
}

void check_target(const SparseDictionary& dict, const Vector& target, const char* op) {
    if (dict.atoms() == 0) throw EmptyClass(std::string(op) + ": empty dictionary");
    if (target.size() != dict.matrix.rows())
        throw ShapeMismatch(std::string(op) + ": target length " + std::to_string(target.size()) +
                            " does not match dictionary rows " + std::to_string(dict.matrix.rows()));
    if (!target.allFinite()) throw InvalidArgument(std::string(op) + ": target has non-finite entries");
}

}  // namespace

double kkt_violation(const SparseDictionary& dict, const Vector& coefficients, const Vector& target,
                     double beta) {
    check_target(dict, target, "kkt_violation");
    if (coefficients.size() != dict.atoms()) throw ShapeMismatch("kkt_violation: coefficient length mismatch");
    return kkt(dict.matrix, coefficients, target, beta);
}

namespace {

// FISTA with adaptive restart over the columns `cols`; `c` is the full-length
// iterate. Calls `checkpoint` every 10 iterations and stops when it returns true.
template <class Checkpoint>
int fista(const Matrix& a, const std::vector<Index>& cols, const Vector& target, double beta, Vector& c, int budget,
          Checkpoint&& checkpoint) {
    const auto width = static_cast<Index>(cols.size());
    Matrix sub(a.rows(), width);
    Vector x(width);
    for (Index j = 0; j < width; ++j) {
        sub.col(j) = a.col(cols[static_cast<std::size_t>(j)]);
        x(j) = c(cols[static_cast<std::size_t>(j)]);
    }
    auto scatter = [&] {
        c.setZero();
        for (Index j = 0; j < width; ++j) c(cols[static_cast<std::size_t>(j)]) = x(j);
    };
    const double step = 1.0 / (2.0 * spectral_norm_sq(sub));
    const double threshold = beta * step;

    Vector y = x;
    double momentum = 1.0;
    int it = 0;
    while (it < budget) {
        ++it;
        const Vector grad = 2.0 * (sub.transpose() * (sub * y - target));
        Vector next = y - step * grad;
        for (Index j = 0; j < width; ++j) next(j) = soft(next(j), threshold);

        // restart momentum when it points uphill
        if ((y - next).dot(next - x) > 0.0) {
            momentum = 1.0;
            y = next;
        } else {
            const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            y = next + ((momentum - 1.0) / m_next) * (next - x);
            momentum = m_next;
        }
        x = next;
        if (it % 10 == 0 || it == budget) {
            scatter();
            if (checkpoint(c)) break;
        }
    }
    scatter();
    return it;
}

// Feature-sign search: grows an active set from the largest gradient
// violator and solves exactly on it, line-searching through sign changes.
// A dependent active set is first reduced along a null direction of its
// columns.
Vector active_set(const Matrix& a, const Vector& target, double beta, double tol, int max_steps) {
    const Index count = a.cols();
    Vector x = Vector::Zero(count);
    bool stalled = false;
    for (int step = 0; step < max_steps; ++step) {
        const Vector g = a.transpose() * (a * x - target);
        bool optimal_on_support = true;
        for (Index i = 0; i < count; ++i)
            if (x(i) != 0.0 && std::abs(g(i) + 0.5 * beta * (x(i) > 0.0 ? 1.0 : -1.0)) > tol)
                optimal_on_support = false;
        Vector theta = x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
        if (optimal_on_support || stalled) {
            Index pick = -1;
            double worst = 0.5 * beta + tol;
            for (Index i = 0; i < count; ++i)
                if (x(i) == 0.0 && std::abs(g(i)) > worst) {
                    worst = std::abs(g(i));
                    pick = i;
                }
            if (pick < 0) break;
            theta(pick) = g(pick) > 0.0 ? -1.0 : 1.0;
        }

        std::vector<Index> support;
        for (Index i = 0; i < count; ++i)
            if (theta(i) != 0.0) support.push_back(i);
        const auto k = static_cast<Index>(support.size());
        Matrix sub(a.rows(), k);
        Vector sign(k);
        Vector cur(k);
        for (Index j = 0; j < k; ++j) {
            const Index i = support[static_cast<std::size_t>(j)];
            sub.col(j) = a.col(i);
            sign(j) = theta(i);
            cur(j) = x(i);
        }

        Eigen::JacobiSVD<Matrix> svd(sub, Eigen::ComputeFullV);
        const Vector& sv = svd.singularValues();
        const bool dependent = k > a.rows() || sv(sv.size() - 1) <= 1e-10 * sv(0);
        if (dependent) {
            Vector d = svd.matrixV().col(k - 1);
            double slope = sign.dot(d);
            if (slope > 0.0 || (slope == 0.0 && (d.array() * sign.array() * (cur.array() == 0.0).cast<double>()).sum() < 0.0))
                d = -d;
            double t = std::numeric_limits<double>::infinity();
            Index hit = -1;
            bool blocked = false;
            for (Index j = 0; j < k; ++j) {
                if (cur(j) == 0.0) {
                    if (d(j) * sign(j) < 0.0) blocked = true;
                } else if (cur(j) * d(j) < 0.0 && -cur(j) / d(j) < t) {
                    t = -cur(j) / d(j);
                    hit = j;
                }
            }
            if (blocked || hit < 0) break;
            Vector moved = cur + t * d;
            moved(hit) = 0.0;
            for (Index j = 0; j < k; ++j)
                if (moved(j) * sign(j) < 0.0) moved(j) = 0.0;
            x.setZero();
            for (Index j = 0; j < k; ++j) x(support[static_cast<std::size_t>(j)]) = moved(j);
            continue;
        }

        // (S^T S)^-1 (S^T y - beta/2 sign) through S = QR
        const Eigen::HouseholderQR<Matrix> qr(sub);
        const auto r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        const Vector qty = (qr.householderQ().transpose() * target).head(k);
        const Vector goal = r.solve(qty - 0.5 * beta * r.transpose().solve(sign));
        auto obj = [&](const Vector& v) { return (sub * v - target).squaredNorm() + beta * v.lpNorm<1>(); };
        Vector best = goal;
        double best_obj = obj(goal);
        for (Index j = 0; j < k; ++j) {
            if (cur(j) == 0.0 || cur(j) * goal(j) > 0.0) continue;
            const double t = cur(j) / (cur(j) - goal(j));
            Vector v = cur + t * (goal - cur);
            v(j) = 0.0;
            const double o = obj(v);
            if (o < best_obj) {
                best_obj = o;
                best = v;
            }
        }
        if (!(best_obj < obj(cur))) {
            if (stalled) break;
            stalled = true;
            continue;
        }
        stalled = false;
        x.setZero();
        for (Index j = 0; j < k; ++j) x(support[static_cast<std::size_t>(j)]) = best(j);
    }
    return x;
}

}  // namespace

SparseSolution solve_l1_unconstrained(const SparseDictionary& dict, const Vector& target, double beta,
                                      const LassoOptions& options, const std::optional<Vector>& warm_start) {
    check_target(dict, target, "solve_l1_unconstrained");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw InvalidArgument("solve_l1_unconstrained: beta must be positive");
    const Matrix& a = dict.matrix;
    const Index count = a.cols();

    Vector c = Vector::Zero(count);
    if (warm_start && warm_start->size() == count) c = *warm_start;

    SparseSolution best;
    best.beta = beta;
    best.coefficients = c;
    double best_kkt = kkt(a, c, target, beta);
    double best_obj = objective(a, c, target, beta);

    auto consider = [&](const Vector& cand) {
        const double v = kkt(a, cand, target, beta);
        const double o = objective(a, cand, target, beta);
        const bool certified = v <= options.tol;
        const bool have_certified = best_kkt <= options.tol;
        if ((certified && !have_certified) || (o < best_obj && (certified || !have_certified))) {
            best_obj = o;
            best_kkt = v;
            best.coefficients = cand;
        }
    };
    int calls = 0;
    auto checkpoint = [&](const Vector& cand) {
        consider(cand);
        if (auto p = polish(a, cand, target, beta)) consider(*p);
        if (best_kkt <= options.tol || ++calls % 5 != 0) return best_kkt <= options.tol;

        // polish on growing prefixes of the support, largest entries first
        std::vector<Index> order;
        for (Index i = 0; i < cand.size(); ++i)
            if (cand(i) != 0.0) order.push_back(i);
        std::sort(order.begin(), order.end(), [&](Index x, Index y) {
            return std::abs(cand(x)) > std::abs(cand(y)) || (std::abs(cand(x)) == std::abs(cand(y)) && x < y);
        });
        const auto limit = std::min<std::size_t>(order.size(), static_cast<std::size_t>(a.rows()));
        Vector truncated = Vector::Zero(cand.size());
        for (std::size_t k = 0; k < limit && best_kkt > options.tol; ++k) {
            truncated(order[k]) = cand(order[k]);
            if (auto p = polish(a, truncated, target, beta)) consider(*p);
        }
        return best_kkt <= options.tol;
    };

    std::vector<Index> all(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) all[static_cast<std::size_t>(i)] = i;

    // short pass over every atom, then working sets of support plus KKT violators
    int it = best_kkt <= options.tol ? 0 : fista(a, all, target, beta, c, std::min(options.max_iter, 200), checkpoint);
    if (best_kkt > options.tol) consider(active_set(a, target, beta, options.tol, static_cast<int>(4 * count + 50)));
    while (it < options.max_iter && best_kkt > options.tol) {
        const Vector g = a.transpose() * (a * c - target);
        std::vector<Index> working;
        for (Index i = 0; i < count; ++i)
            if (c(i) != 0.0 || std::abs(g(i)) > 0.5 * beta) working.push_back(i);
        if (working.empty()) working = all;
        it += fista(a, working, target, beta, c, std::min(options.max_iter - it, 1000), checkpoint);
    }
    consider(c);

    best.iterations = it;
    best.converged = best_kkt <= options.tol;
    best.residual_norm = (a * best.coefficients - target).norm();
    return best;
}

SparseSolution solve_l1_constrained(const SparseDictionary& dict, const Vector& target, double epsilon,
                                    const LassoOptions& options) {
    check_target(dict, target, "solve_l1_constrained");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw InvalidArgument("solve_l1_constrained: epsilon must be positive");
    const Matrix& a = dict.matrix;

    if (target.squaredNorm() <= epsilon) {
        SparseSolution zero;
        zero.coefficients = Vector::Zero(a.cols());
        zero.residual_norm = target.norm();
        zero.converged = true;
        zero.beta = 2.0 * (a.transpose() * target).cwiseAbs().maxCoeff();
        return zero;
    }

    const Vector ls = a.completeOrthogonalDecomposition().solve(target);
    const double ls_res = (a * ls - target).squaredNorm();
    if (ls_res > epsilon)
        throw Infeasible("solve_l1_constrained: least-squares residual^2 " + std::to_string(ls_res) +
                         " exceeds epsilon " + std::to_string(epsilon));

    const double beta_max = 2.0 * (a.transpose() * target).cwiseAbs().maxCoeff();
    auto res2 = [&](const SparseSolution& s) { return s.residual_norm * s.residual_norm; };

    // find a feasible lower end of the bracket
    double lo = beta_max * 1e-2;
    SparseSolution lo_sol = solve_l1_unconstrained(dict, target, lo, options);
    int total_iter = lo_sol.iterations;
    while (res2(lo_sol) > epsilon) {
        lo *= 1e-2;
        if (lo < beta_max * 1e-30) {
            SparseSolution fallback;
            fallback.coefficients = ls;
            fallback.residual_norm = std::sqrt(ls_res);
            fallback.iterations = total_iter;
            fallback.converged = false;
            fallback.beta = 0.0;
            return fallback;
        }
        lo_sol = solve_l1_unconstrained(dict, target, lo, options, lo_sol.coefficients);
        total_iter += lo_sol.iterations;
    }
    double hi = beta_max;
    bool in_band = res2(lo_sol) >= 0.99 * epsilon;

    for (int step = 0; step < 200 && !in_band; ++step) {
        const double mid = std::sqrt(lo * hi);
        if (!(mid > lo && mid < hi)) break;
        SparseSolution mid_sol = solve_l1_unconstrained(dict, target, mid, options, lo_sol.coefficients);
        total_iter += mid_sol.iterations;
        if (res2(mid_sol) <= epsilon) {
            lo = mid;
            lo_sol = std::move(mid_sol);
            in_band = res2(lo_sol) >= 0.99 * epsilon;
        } else {
            hi = mid;
        }
    }

    lo_sol.iterations = total_iter;
    lo_sol.converged = lo_sol.converged && in_band;
    return lo_sol;
}

std::vector<double> residuals_per_class(const SparseDictionary& dict, const Vector& coefficients,
                                        const Vector& target) {
    check_target(dict, target, "residuals_per_class");
    if (coefficients.size() != dict.atoms())
        throw ShapeMismatch("residuals_per_class: coefficient length mismatch");
    std::vector<double> out;
    out.reserve(dict.class_blocks.size());
    for (const auto& block : dict.class_blocks) {
        const Index width = block.end - block.begin;
        const Vector approx = dict.matrix.middleCols(block.begin, width) * coefficients.segment(block.begin, width);
        out.push_back((approx - target).norm());
    }
    return out;
}

}  // namespace grassdm
