#include "cli.hpp"
#include "grassdm/grassdm.hpp"
#include "support.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace grassdm;
using grassdm::testing::TempDir;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Verdict { Pass, Fail, Skip };

int failures = 0;

void report(int id, const std::string& name, Verdict v, const std::string& detail) {
    const char* tag = v == Verdict::Pass ? "PASS" : (v == Verdict::Fail ? "FAIL" : "SKIP");
    if (v == Verdict::Fail) ++failures;
    std::printf("[%s] %2d %s: %s\n", tag, id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

Verdict verdict(bool ok) { return ok ? Verdict::Pass : Verdict::Fail; }

std::string num(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int run_cli(const std::vector<std::string>& args, std::string* err_out = nullptr) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (err_out != nullptr) *err_out = err.str();
    return code;
}

json read_json(const fs::path& path) { return json::parse(read_file(path)); }

double max_angle(const GrassmannPoint& a, const GrassmannPoint& b) { return principal_angles(a, b).angles.maxCoeff(); }

void kernel_statistics() {
    TempDir dir("acc1");
    const auto start = std::chrono::steady_clock::now();
    std::string err;
    const int code = run_cli({"kernel-stats", "--kernel", "projection", "--n", "20", "--samples", "3000",
                              "--output-dir", dir.path().string()},
                             &err);
    const double elapsed = seconds_since(start);
    if (code != 0) {
        report(1, "projection kernel mean", Verdict::Fail, "kernel-stats exited with " + std::to_string(code) + ": " + err);
        return;
    }
    const json records = read_json(dir.path() / "kernel_stats.json");
    double worst_z = 0.0;
    double worst_rel = 0.0;
    bool ok = records.size() == 19;
    for (const auto& r : records) {
        const int p = r["p"].get<int>();
        const double mean = r["mean"].get<double>();
        const double se = r["std_error"].get<double>();
        const double expect = p * p / 20.0;
        const double z = std::abs(mean - expect) / se;
        worst_z = std::max(worst_z, z);
        ok = ok && z <= 3.0;
        if (p >= 3) {
            const double rel = std::abs(mean - expect) / expect;
            worst_rel = std::max(worst_rel, rel);
            ok = ok && rel <= 0.05;
        }
    }
    ok = ok && elapsed < 60.0;
    report(1, "projection kernel mean", verdict(ok),
           "n=20, 3000 samples, p=1..19: max |z| = " + num(worst_z) + " (<= 3), max rel err p>=3 = " + num(worst_rel) +
               " (<= 0.05), " + num(elapsed, 3) + " s");
}

void p1_moments() {
    bool ok = true;
    std::string detail;
    for (Index n : {3, 10, 20}) {
        const KernelStats s = monte_carlo_offdiag_mean(KernelKind::Projection, n, 1, 10000, 2024 + static_cast<Seed>(n));
        const double mean = 1.0 / static_cast<double>(n);
        const double var = 2.0 * static_cast<double>(n - 1) / static_cast<double>(n * n * (n + 2));
        const double z = std::abs(s.mean_offdiag - mean) / *s.std_error;
        const double rel = std::abs(s.variance - var) / var;
        ok = ok && z <= 3.0 && rel <= 0.10;
        detail += "n=" + std::to_string(n) + " |z|=" + num(z, 3) + " var rel=" + num(rel, 3) + "; ";
    }
    detail.resize(detail.size() - 2);
    report(2, "p=1 moments", verdict(ok), detail + " (limits 3 and 0.10)");
}

void binet_cauchy() {
    const Index n = 20;
    bool ok = true;
    Index argmin = 0;
    double min_mean = 1e300;
    double worst_margin = -1e300;
    for (Index p = 1; p < n; ++p) {
        const KernelStats s = monte_carlo_offdiag_mean(KernelKind::BinetCauchy, n, p, 3000, 77);
        const double margin = s.mean_offdiag - 3.0 * *s.std_error - binet_cauchy_bound(n, p);
        worst_margin = std::max(worst_margin, margin);
        ok = ok && margin <= 0.0;
        if (s.mean_offdiag < min_mean) {
            min_mean = s.mean_offdiag;
            argmin = p;
        }
    }
    ok = ok && std::abs(argmin - 10) <= 1;
    report(3, "Binet-Cauchy bound", verdict(ok),
           "n=20, 3000 samples: max (mean - 3SE - bound) = " + num(worst_margin) + " (<= 0), minimum mean at p = " +
               std::to_string(argmin) + " (10 +- 1)");
}

void zero_angles() {
    const auto start = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (auto [p, expect] : {std::pair<Index, Index>{7, 4}, {6, 2}}) {
        Index bad = 0;
        for (std::uint64_t i = 0; i < 100; ++i) {
            const auto a = sample_uniform(10, p, 31, 2 * i);
            const auto b = sample_uniform(10, p, 31, 2 * i + 1);
            const Vector theta = principal_angles(a, b).angles;
            if ((theta.array() < 1e-8).count() != expect) ++bad;
        }
        ok = ok && bad == 0;
        detail += "G(" + std::to_string(p) + ",10) " + std::to_string(100 - bad) + "/100 pairs with " +
                  std::to_string(expect) + " zeros; ";
    }
    const double elapsed = seconds_since(start);
    ok = ok && elapsed < 5.0;
    report(4, "zero-angle multiplicity", verdict(ok), detail + num(elapsed, 3) + " s");
}

void round_trips() {
    double worst_exp = 0.0;
    double worst_end = 0.0;
    double worst_arc = 0.0;
    int pairs = 0;
    for (std::uint64_t i = 0; pairs < 200; ++i) {
        const auto a = sample_uniform(6, 2, 55, 2 * i);
        const auto b = sample_uniform(6, 2, 55, 2 * i + 1);
        const double span = max_angle(a, b);
        if (span >= std::numbers::pi / 2 - 0.1) continue;
        ++pairs;
        worst_exp = std::max(worst_exp, max_angle(exp_map(a, log_map(a, b)), b));
        worst_end = std::max({worst_end, max_angle(geodesic(a, b, 0.0), a), max_angle(geodesic(a, b, 1.0), b)});
        const double total = distance(MetricKind::ArcLength, a, b);
        for (double t : {0.1, 0.25, 0.5, 0.75, 0.9})
            worst_arc = std::max(worst_arc, std::abs(distance(MetricKind::ArcLength, a, geodesic(a, b, t)) - t * total));
    }
    const bool ok = worst_exp < 1e-8 && worst_end < 1e-8 && worst_arc < 1e-8;
    report(5, "geometry round trips", verdict(ok),
           "200 pairs on G(2,6): exp(log) " + num(worst_exp) + ", endpoints " + num(worst_end) + ", arc length " +
               num(worst_arc) + " (each < 1e-8)");
}

void diffusion_identity() {
    double worst_dist = 0.0;
    double worst_row = 0.0;
    double worst_lambda = 0.0;
    for (Seed s = 0; s < 30; ++s) {
        std::vector<Matrix> data;
        for (Index i = 0; i < 30; ++i) data.push_back(grassdm::testing::random_matrix(6, 5, 1000 * s + i));
        const auto proj = project_all(data, 2);
        const KernelMatrix k = grassmannian_kernel(proj, KernelKind::Projection, CompositionRule::Sum);
        const int t = 1 + static_cast<int>(s % 3);
        const TransitionMatrix walk = transition_matrix(normalize_kernel(k, degree_vector(k)), t);
        const DiffusionEmbedding emb = spectral_embedding(walk, 29);
        worst_row = std::max(worst_row, (walk.entries.rowwise().sum().array() - 1.0).abs().maxCoeff());
        worst_lambda = std::max(worst_lambda, std::abs(emb.eigenvalues(0) - 1.0));
        for (Index i = 0; i < 30; ++i)
            for (Index j = i + 1; j < 30; ++j)
                worst_dist = std::max(worst_dist, std::abs(diffusion_distance_direct(walk, i, j) -
                                                           diffusion_distance_spectral(emb, i, j)));
    }
    const bool ok = worst_dist < 1e-8 && worst_row < 1e-10 && worst_lambda < 1e-10;
    report(6, "diffusion distance identity", verdict(ok),
           "30 instances, N=30: direct vs spectral " + num(worst_dist) + " (< 1e-8), row sums " + num(worst_row) +
               " (< 1e-10), |lambda0 - 1| " + num(worst_lambda) + " (< 1e-10)");
}

void scale_invariance() {
    RandomFieldOptions rf;
    rf.l_choices = std::vector<int>{1, 2, 3};
    const RandomFieldDataset field = gen_random_field(60, 20, 20, 3, 404, rf);
    std::vector<Matrix> scaled = field.samples;
    auto engine = stream_engine(405, 0);
    for (auto& x : scaled) x *= 0.1 + 9.9 * uniform01(engine);

    GdmParams params;
    params.p = 3;
    params.q = 3;
    const double gdm = (grassmannian_diffusion_maps(field.samples, params).coordinates -
                        grassmannian_diffusion_maps(scaled, params).coordinates)
                           .cwiseAbs()
                           .maxCoeff();
    const double conventional = (conventional_diffusion_maps(field.samples, std::nullopt, 3, 1).coordinates -
                                 conventional_diffusion_maps(scaled, std::nullopt, 3, 1).coordinates)
                                    .cwiseAbs()
                                    .maxCoeff();
    report(7, "scale invariance", verdict(gdm < 1e-10 && conventional > 1e-3),
           "60 random fields, c ~ U(0.1, 10): GDM max diff " + num(gdm) + " (< 1e-10), conventional " +
               num(conventional) + " (> 1e-3)");
}

void clustering() {
    TempDir dir("acc8");
    const auto start = std::chrono::steady_clock::now();
    std::string err;
    const int code = run_cli({"cluster", "--n-samples", "300", "--n", "40", "--p", "5", "--l-values", "1:15", "--k",
                              "15", "--q", "3", "--baseline", "--output-dir", dir.path().string()},
                             &err);
    if (code != 0) {
        report(8, "random-field clustering", Verdict::Fail, "cluster exited with " + std::to_string(code) + ": " + err);
        return;
    }
    const json res = read_json(dir.path() / "report.json")["results"];
    const double ari = res["ari"].get<double>();
    report(8, "random-field clustering", verdict(ari >= 0.90),
           "N=300, n=40, p=5, L=1..15, k=15, q=3: ARI " + num(ari) + " (>= 0.90), conventional ARI " +
               num(res["ari_conventional"].get<double>()) + ", " + num(seconds_since(start), 3) + " s");
}

struct SyntheticSplit {
    std::vector<Matrix> train, test;
    std::vector<std::string> train_labels, test_labels;
};

// ten classes, class c drawn with L = c + 1
SyntheticSplit synthetic_split(Seed seed) {
    SyntheticSplit s;
    for (int c = 0; c < 10; ++c) {
        RandomFieldOptions rf;
        rf.l_choices = std::vector<int>{c + 1};
        const RandomFieldDataset field = gen_random_field(10, 40, 40, 5, mix64(seed ^ static_cast<Seed>(c)), rf);
        const std::string label = "L" + std::to_string(c + 1);
        for (Index i = 0; i < 10; ++i) {
            (i < 9 ? s.train : s.test).push_back(field.samples[static_cast<std::size_t>(i)]);
            (i < 9 ? s.train_labels : s.test_labels).push_back(label);
        }
    }
    return s;
}

void sparse_classifier() {
    const int splits = 20;
    std::string detail;
    bool ok = true;
    for (SolverKind solver : {SolverKind::Unconstrained, SolverKind::Constrained}) {
        ClassifyParams params;
        params.p = 5;
        params.q = 3;
        params.solver = solver;
        int correct = 0;
        int total = 0;
        int worst = 10;
        for (Seed seed = 1; seed <= splits; ++seed) {
            const SyntheticSplit s = synthetic_split(seed);
            const auto results = classify_many(s.train, s.train_labels, s.test, params);
            int here = 0;
            for (std::size_t i = 0; i < results.size(); ++i) here += results[i].predicted == s.test_labels[i];
            correct += here;
            total += static_cast<int>(results.size());
            worst = std::min(worst, here);
        }
        const double acc = static_cast<double>(correct) / total;
        ok = ok && acc >= 0.90;
        detail += std::string(to_string(solver)) + " " + std::to_string(correct) + "/" + std::to_string(total) +
                  " (worst split " + std::to_string(worst) + "/10); ";
    }

    const SyntheticSplit s = synthetic_split(1);
    ClassifyParams params;
    params.p = 5;
    params.q = 3;
    params.beta = 1e-7;
    const auto dup = classify_many(s.train, s.train_labels, s.train, params);
    double worst_residual = 0.0;
    int right = 0;
    for (std::size_t i = 0; i < dup.size(); ++i) {
        right += dup[i].predicted == s.train_labels[i];
        for (const auto& [label, r] : dup[i].residuals)
            if (label == dup[i].predicted) worst_residual = std::max(worst_residual, r);
    }
    ok = ok && worst_residual < 1e-6 && right == static_cast<int>(dup.size());
    report(9, "sparse classifier", verdict(ok),
           "10 classes, 9+1 per class, p=5, q=3, " + std::to_string(splits) + " splits, min residual: " + detail +
               "duplicates " + std::to_string(right) + "/" + std::to_string(dup.size()) + " with residual <= " +
               num(worst_residual) + " (< 1e-6)");
}

void lasso_validation() {
    double worst_kkt = 0.0;
    for (Seed s = 0; s < 50; ++s) {
        const Matrix coords = grassdm::testing::random_matrix(30, 10, 7000 + s);
        std::vector<std::string> labels;
        for (int i = 0; i < 30; ++i) labels.push_back("c" + std::to_string(i % 3));
        const SparseDictionary d = build_dictionary(coords, labels);
        Vector xi = grassdm::testing::random_matrix(10, 1, 8000 + s).col(0);
        xi.normalize();
        const double beta = 0.01 + 0.02 * static_cast<double>(s % 5);
        worst_kkt = std::max(worst_kkt, kkt_violation(d, solve_l1_unconstrained(d, xi, beta).coefficients, xi, beta));
    }
    double worst_soft = 0.0;
    for (Seed s = 0; s < 20; ++s) {
        const Matrix q = grassdm::testing::random_orthogonal(10, 9000 + s);
        std::vector<std::string> labels;
        for (int i = 0; i < 10; ++i) labels.push_back("c" + std::to_string(i % 2));
        const SparseDictionary d = build_dictionary(q, labels);
        const Vector xi = grassdm::testing::random_matrix(10, 1, 9500 + s).col(0);
        const double beta = 0.05 + 0.1 * static_cast<double>(s % 4);
        const Vector proj = d.matrix.transpose() * xi;
        Vector expect(10);
        for (Index i = 0; i < 10; ++i)
            expect(i) = std::copysign(std::max(0.0, std::abs(proj(i)) - 0.5 * beta), proj(i));
        worst_soft = std::max(worst_soft, (solve_l1_unconstrained(d, xi, beta).coefficients - expect).cwiseAbs().maxCoeff());
    }
    report(10, "lasso solver", verdict(worst_kkt <= 1e-6 && worst_soft <= 1e-8),
           "50 random 10x30 instances: max KKT violation " + num(worst_kkt) + " (<= 1e-6); 20 orthonormal designs: "
           "max deviation from soft thresholding " + num(worst_soft) + " (<= 1e-8)");
}

void face_recognition() {
    const char* root = std::getenv("GRASSDM_ATT_DIR");
    if (root == nullptr || !fs::is_directory(root)) {
        report(11, "face recognition", Verdict::Skip, "set GRASSDM_ATT_DIR to a directory-per-subject PGM dataset");
        return;
    }
    // last file of each subject (lexicographic) is held out
    TempDir dir("acc11");
    const fs::path train = dir.path() / "train";
    const fs::path test = dir.path() / "test";
    std::vector<fs::path> subjects;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) subjects.push_back(e.path());
    std::sort(subjects.begin(), subjects.end());
    for (const auto& subject : subjects) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(subject))
            if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.size() < 2) continue;
        const std::string name = subject.filename().string();
        fs::create_directories(train / name);
        fs::create_directories(test / name);
        for (std::size_t i = 0; i < files.size(); ++i)
            fs::create_symlink(files[i], (i + 1 < files.size() ? train : test) / name / files[i].filename());
    }
    std::string err;
    const int code = run_cli({"classify", "--train", train.string(), "--test", test.string(), "--pattern", "*.pgm",
                              "--sweep-p", "10:16", "--q", "20", "--output-dir", (dir.path() / "out").string()},
                             &err);
    if (code != 0) {
        report(11, "face recognition", Verdict::Fail, "classify exited with " + std::to_string(code) + ": " + err);
        return;
    }
    double best = 0.0;
    int best_p = 0;
    std::string rates;
    const json report_json = read_json(dir.path() / "out" / "report.json");
    for (const auto& e : report_json["results"]["sweep"]) {
        const double acc = e["accuracy"].get<double>();
        rates += std::to_string(e["p"].get<int>()) + ":" + num(acc, 3) + " ";
        if (acc > best) {
            best = acc;
            best_p = e["p"].get<int>();
        }
    }
    report(11, "face recognition", verdict(best >= 0.90),
           "q=20, p=10..16 rates " + rates + "best " + num(best, 3) + " at p=" + std::to_string(best_p) + " (>= 0.90)");
}

void determinism() {
    TempDir dir("acc12");
    const std::vector<std::vector<std::string>> commands = {
        {"embed", "--demo", "sphere", "--n-samples", "300", "--p", "1", "--baseline"},
        {"embed", "--demo", "randomfield", "--n-samples", "60", "--p", "5", "--l-values", "1:4"},
        {"kernel-stats", "--kernel", "binet-cauchy", "--n", "8", "--samples", "200"},
        {"cluster", "--n-samples", "90", "--p", "5", "--l-values", "1:5", "--k", "5", "--baseline"},
        {"classify", "--demo", "randomfield", "--p", "5", "--classes", "5"},
        {"demo-sphere", "--n-samples", "200", "--p", "1"},
        {"demo-randomfield", "--n-samples", "20", "--p", "3"},
    };
    int stable = 0;
    std::string failed;
    for (std::size_t c = 0; c < commands.size(); ++c) {
        std::vector<json> manifests;
        for (int rep = 0; rep < 2; ++rep) {
            auto args = commands[c];
            const fs::path out = dir.path() / (std::to_string(c) + "_" + std::to_string(rep));
            args.insert(args.end(), {"--seed", "11", "--output-dir", out.string()});
            if (run_cli(args) != 0) break;
            manifests.push_back(read_json(out / "report.json")["outputs"]);
        }
        if (manifests.size() == 2 && manifests[0] == manifests[1] && !manifests[0].empty())
            ++stable;
        else
            failed += " " + commands[c][0];
    }
    report(12, "determinism", verdict(stable == static_cast<int>(commands.size())),
           std::to_string(stable) + "/" + std::to_string(commands.size()) +
               " commands reproduce identical output checksums" + (failed.empty() ? "" : ", differing:" + failed));
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    kernel_statistics();
    p1_moments();
    binet_cauchy();
    zero_angles();
    round_trips();
    diffusion_identity();
    scale_invariance();
    clustering();
    sparse_classifier();
    lasso_validation();
    face_recognition();
    determinism();
    std::printf("%d failed, %.1f s\n", failures, seconds_since(start));
    return failures == 0 ? 0 : 1;
}
