#include "cli.hpp"

#include "grassdm/grassdm.hpp"
#include "grassdm/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace grassdm::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

namespace {

enum class LogLevel { Error, Warn, Info, Debug };

LogLevel log_level_from_env() {
    const char* raw = std::getenv("GRASSDM_LOG");
    if (raw == nullptr) return LogLevel::Warn;
    const std::string v = raw;
    if (v == "error") return LogLevel::Error;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
}

struct Options {
    // common
    Seed seed = 1;
    std::string output_dir = "out";
    std::string config;
    int threads = 0;
    std::string kernel = "projection";
    std::string compose = "sum";
    Index p = 1;
    Index q = 3;
    int t = 1;
    double beta = 1e-3;
    std::optional<double> epsilon;

    // data sources
    std::string demo;
    std::string input;
    std::string pattern = "*";
    Index n_samples = 500;
    Index n = 40;
    Index rank = 0;
    std::string l_values;
    bool baseline = false;

    // kernel-stats
    Index samples = 3000;

    // cluster
    Index k = 15;
    int max_iter = 300;
    int n_init = 10;

    // classify
    std::string train;
    std::string test;
    std::vector<std::string> test_files;
    std::string solver = "unconstrained";
    std::string criterion = "min-residual";
    bool batch = false;
    bool trivial_coordinate = true;
    std::string sweep_p;
    Index classes = 10;
    Index train_per_class = 9;
    Index test_per_class = 1;
};

class Run {
public:
    Run(std::ostream& out, std::ostream& err) : out_(out), err_(err), level_(log_level_from_env()) {}

    template <class Fn>
    auto stage(const std::string& name, Fn&& fn) {
        log(LogLevel::Info, "stage " + name);
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            timings_.push_back({name, elapsed(start)});
        } else {
            auto result = fn();
            timings_.push_back({name, elapsed(start)});
            return result;
        }
    }

    void emit(const std::string& relative, std::string content) { files_.emplace_back(relative, std::move(content)); }
    void warn(const std::string& message) {
        if (std::find(warnings_.begin(), warnings_.end(), message) == warnings_.end()) warnings_.push_back(message);
        log(LogLevel::Warn, message);
    }
    void log(LogLevel level, const std::string& message) {
        if (level > level_) return;
        static const char* names[] = {"error", "warn", "info", "debug"};
        err_ << "[grassdm " << names[static_cast<int>(level)] << "] " << message << "\n";
    }

    json& results() { return results_; }
    std::ostream& out() { return out_; }

    void finish(const std::string& command, const json& config, const fs::path& dir) {
        const auto start = std::chrono::steady_clock::now();
        json manifest = json::array();
        for (const auto& [name, content] : files_) {
            write_file_atomic(dir / name, content);
            manifest.push_back({{"path", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
        }
        timings_.push_back({"write", elapsed(start)});

        json report;
        report["command"] = command;
        report["version"] = version();
        report["config"] = config;
        json stages = json::array();
        double total = 0.0;
        for (const auto& [name, seconds] : timings_) {
            stages.push_back({{"stage", name}, {"seconds", seconds}});
            total += seconds;
        }
        report["timings"] = stages;
        report["total_seconds"] = total;
        report["outputs"] = manifest;
        report["warnings"] = warnings_;
        report["results"] = results_;
        write_file_atomic(dir / "report.json", report.dump(2) + "\n");
        out_ << "wrote " << files_.size() << " file(s) and report.json to " << dir.string() << "\n";
    }

private:
    static double elapsed(std::chrono::steady_clock::time_point start) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    std::ostream& out_;
    std::ostream& err_;
    LogLevel level_;
    std::vector<std::pair<std::string, double>> timings_;
    std::vector<std::pair<std::string, std::string>> files_;
    std::vector<std::string> warnings_;
    json results_ = json::object();
};

std::string fmt(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return {buf, ptr};
}

json vector_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

std::vector<int> parse_int_list(const std::string& spec, const char* what) {
    std::vector<int> out;
    auto to_int = [&](const std::string& s) {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
            throw InvalidArgument(std::string(what) + ": cannot parse '" + s + "'");
        return v;
    };
    if (const auto colon = spec.find(':'); colon != std::string::npos) {
        const int lo = to_int(spec.substr(0, colon));
        const int hi = to_int(spec.substr(colon + 1));
        if (hi < lo) throw InvalidArgument(std::string(what) + ": empty range '" + spec + "'");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
        return out;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_int(item));
    if (out.empty()) throw InvalidArgument(std::string(what) + ": empty list");
    return out;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw InvalidArgument(message);
}

void validate_common(const Options& o) {
    require(o.threads >= 0, "--threads must be >= 0");
    require(o.p >= 1, "--p must be >= 1");
    require(o.q >= 1, "--q must be >= 1");
    require(o.t >= 1, "--t must be >= 1");
    require(o.beta > 0.0 && std::isfinite(o.beta), "--beta must be positive");
    if (o.epsilon) require(*o.epsilon > 0.0 && std::isfinite(*o.epsilon), "--epsilon must be positive");
    parse_kernel_kind(o.kernel);
    parse_composition_rule(o.compose);
}

GdmParams gdm_params(const Options& o) {
    return {o.p, o.q, o.t, parse_kernel_kind(o.kernel), parse_composition_rule(o.compose)};
}

std::string embedding_csv(const DiffusionEmbedding& emb) {
    std::vector<std::string> header;
    for (Index k = 1; k <= emb.q; ++k) header.push_back("xi_" + std::to_string(k) + "@lambda=" + fmt(emb.eigenvalues(k)));
    return format_csv_matrix(emb.coordinates, header);
}

json embedding_meta(const DiffusionEmbedding& emb) {
    json meta;
    meta["N"] = emb.size();
    meta["p"] = emb.p;
    meta["q"] = emb.q;
    meta["t"] = emb.t;
    meta["kernel"] = emb.kernel;
    meta["composition"] = emb.composition;
    if (emb.epsilon) meta["epsilon"] = *emb.epsilon;
    meta["eigenvalues"] = vector_json(emb.eigenvalues);
    meta["warnings"] = emb.warnings;
    return meta;
}

void record_embedding(Run& run, const std::string& prefix, const DiffusionEmbedding& emb) {
    run.emit(prefix + "_coordinates.csv", embedding_csv(emb));
    run.emit(prefix + "_embedding.json", embedding_meta(emb).dump(2) + "\n");
    for (const auto& w : emb.warnings) run.warn(prefix + ": " + w);
}

struct Dataset {
    std::vector<Matrix> samples;
    std::vector<std::string> labels;  // may be empty
    json source;
};

Dataset load_dataset(Run& run, const Options& o) {
    Dataset d;
    if (!o.input.empty()) {
        const LabeledMatrixDataset loaded = run.stage("load", [&] { return load_labeled_directory(o.input, o.pattern); });
        d.samples = loaded.samples;
        d.labels = loaded.labels;
        d.source = {{"root", o.input}, {"classes", loaded.classes}, {"counts", loaded.counts},
                    {"shape", {loaded.samples.front().rows(), loaded.samples.front().cols()}}};
        return d;
    }
    if (o.demo == "sphere") {
        const SphereConesDataset sphere = run.stage("generate", [&] { return gen_sphere_cones(o.n_samples, o.seed); });
        d.samples = sphere_samples(sphere);
        d.source = {{"generator", "sphere"}, {"N", o.n_samples}, {"seed", o.seed}};
        return d;
    }
    if (o.demo == "randomfield") {
        RandomFieldOptions rf;
        if (!o.l_values.empty()) rf.l_choices = parse_int_list(o.l_values, "--l-values");
        const Index rank = o.rank > 0 ? o.rank : o.p;
        const RandomFieldDataset field =
            run.stage("generate", [&] { return gen_random_field(o.n_samples, o.n, o.n, rank, o.seed, rf); });
        d.samples = field.samples;
        for (int l : field.l_values) d.labels.push_back("L" + std::to_string(l));
        d.source = {{"generator", "randomfield"}, {"N", o.n_samples}, {"n", o.n}, {"rank", rank}, {"seed", o.seed}};
        return d;
    }
    throw InvalidArgument("choose a data source: --input DIR or --demo sphere|randomfield");
}

void check_shapes(const Dataset& d, const Options& o) {
    const Index rows = d.samples.front().rows();
    const Index cols = d.samples.front().cols();
    if (o.p > std::min(rows, cols))
        throw DimensionError("--p " + std::to_string(o.p) + " exceeds min(n, m) = " + std::to_string(std::min(rows, cols)));
    if (o.q >= static_cast<Index>(d.samples.size()))
        throw DimensionError("--q must be smaller than the number of samples (" + std::to_string(d.samples.size()) + ")");
}

void validate_source(const Options& o) {
    if (!o.input.empty()) return;
    require(o.demo == "sphere" || o.demo == "randomfield", "--demo must be sphere or randomfield");
    require(o.n_samples >= 1, "--n-samples must be >= 1");
    if (o.demo == "sphere") require(o.p == 1, "the sphere demo lives on G(1,3); use --p 1");
    if (o.demo == "randomfield") {
        const Index rank = o.rank > 0 ? o.rank : o.p;
        require(rank >= 1 && rank <= o.n / 2, "--rank must lie in [1, n/2]");
        if (!o.l_values.empty())
            for (int l : parse_int_list(o.l_values, "--l-values"))
                require(l >= 1 && l <= max_l_shift(o.n, rank), "--l-values entries must lie in [1, n/2 + 1 - rank]");
    }
}

// ---------------------------------------------------------------- commands

void cmd_embed(Run& run, const Options& o) {
    validate_common(o);
    validate_source(o);
    const Dataset d = load_dataset(run, o);
    check_shapes(d, o);

    const GdmParams params = gdm_params(o);
    const auto projections = run.stage("project", [&] { return project_all(d.samples, o.p); });
    const DiffusionEmbedding gdm = run.stage("gdm", [&] {
        return grassmannian_diffusion_maps(std::span<const SvdTriplet>(projections), params);
    });
    record_embedding(run, "gdm", gdm);
    run.results()["source"] = d.source;
    run.results()["gdm"] = {{"eigenvalues", vector_json(gdm.eigenvalues)}};

    if (o.baseline) {
        const DiffusionEmbedding dm =
            run.stage("conventional", [&] { return conventional_diffusion_maps(d.samples, o.epsilon, o.q, o.t); });
        record_embedding(run, "conventional", dm);
        run.results()["conventional"] = {{"eigenvalues", vector_json(dm.eigenvalues)}, {"epsilon", *dm.epsilon}};
    }
    run.out() << "embedded " << d.samples.size() << " samples into " << o.q << " diffusion coordinates\n";
}

void cmd_kernel_stats(Run& run, const Options& o) {
    validate_common(o);
    require(o.n >= 2, "--n must be >= 2");
    require(o.samples >= 1, "--samples must be >= 1");
    const KernelKind kind = parse_kernel_kind(o.kernel);
    if (o.samples == 1) run.warn("low confidence: a single sample gives no standard error");

    std::vector<KernelStats> rows = run.stage("monte-carlo", [&] {
        std::vector<KernelStats> out;
        for (Index p = 1; p < o.n; ++p) out.push_back(monte_carlo_offdiag_mean(kind, o.n, p, o.samples, o.seed));
        return out;
    });

    std::string csv = "p,mean,predicted,bound,std_error,within_3se,low_confidence\n";
    json records = json::array();
    for (const auto& s : rows) {
        const double reference = s.predicted ? *s.predicted : *s.bound;
        bool ok = false;
        if (s.std_error) {
            ok = s.predicted ? std::abs(s.mean_offdiag - reference) <= 3.0 * *s.std_error
                             : s.mean_offdiag - 3.0 * *s.std_error <= reference;
        }
        csv += std::to_string(s.p) + "," + fmt(s.mean_offdiag) + "," + (s.predicted ? fmt(*s.predicted) : "") + "," +
               (s.bound ? fmt(*s.bound) : "") + "," + (s.std_error ? fmt(*s.std_error) : "") + "," +
               (s.std_error ? (ok ? "1" : "0") : "") + "," + (s.std_error ? "0" : "1") + "\n";
        json r = {{"kernel", std::string(to_string(s.kernel))}, {"n", s.n}, {"p", s.p}, {"samples", s.num_samples},
                  {"mean", s.mean_offdiag}};
        r["predicted"] = s.predicted ? json(*s.predicted) : json(nullptr);
        r["bound"] = s.bound ? json(*s.bound) : json(nullptr);
        r["std_error"] = s.std_error ? json(*s.std_error) : json(nullptr);
        records.push_back(r);
    }
    run.emit("kernel_stats.csv", csv);
    run.emit("kernel_stats.json", records.dump(2) + "\n");
    run.results()["rows"] = rows.size();
    run.out() << "kernel statistics for p = 1.." << o.n - 1 << " at n = " << o.n << "\n";
}

std::vector<Index> label_ids(const std::vector<std::string>& labels) {
    std::map<std::string, Index> ids;
    for (const auto& l : labels) ids.emplace(l, 0);
    Index next = 0;
    for (auto& [name, id] : ids) id = next++;
    std::vector<Index> out;
    for (const auto& l : labels) out.push_back(ids.at(l));
    return out;
}

void cmd_cluster(Run& run, const Options& o) {
    validate_common(o);
    require(o.k >= 1, "--k must be >= 1");
    require(o.max_iter >= 1 && o.n_init >= 1, "--max-iter and --n-init must be >= 1");
    Options eff = o;
    if (eff.input.empty() && eff.demo.empty()) eff.demo = "randomfield";
    require(eff.demo != "sphere", "cluster works on a labeled directory or the randomfield generator");
    validate_source(eff);
    require(eff.k <= eff.n_samples || !eff.input.empty(), "--k must not exceed --n-samples");

    std::vector<int> t_values;
    Dataset d;
    if (eff.input.empty()) {
        RandomFieldOptions rf;
        rf.l_choices = parse_int_list(eff.l_values.empty() ? "1:15" : eff.l_values, "--l-values");
        const Index rank = eff.rank > 0 ? eff.rank : eff.p;
        const RandomFieldDataset field =
            run.stage("generate", [&] { return gen_random_field(eff.n_samples, eff.n, eff.n, rank, eff.seed, rf); });
        d.samples = field.samples;
        t_values = field.t_values;
        for (int l : field.l_values) d.labels.push_back(std::to_string(l));
        d.source = {{"generator", "randomfield"}, {"N", eff.n_samples}, {"n", eff.n}, {"rank", rank},
                    {"l_values", *rf.l_choices}, {"seed", eff.seed}};
    } else {
        d = load_dataset(run, eff);
    }
    check_shapes(d, eff);
    if (eff.k > static_cast<Index>(d.samples.size())) throw DimensionError("--k exceeds the number of samples");

    const DiffusionEmbedding gdm = run.stage("gdm", [&] { return grassmannian_diffusion_maps(d.samples, gdm_params(eff)); });
    record_embedding(run, "gdm", gdm);
    const KMeansOptions km{eff.max_iter, eff.n_init};
    const ClusterAssignment clusters = run.stage("kmeans", [&] { return kmeans(gdm.coordinates, eff.k, eff.seed, km); });
    const std::vector<Index> truth = label_ids(d.labels);

    std::optional<ClusterAssignment> base;
    if (eff.baseline) {
        const DiffusionEmbedding dm = run.stage("conventional", [&] {
            return conventional_diffusion_maps(d.samples, eff.epsilon, eff.q, eff.t);
        });
        record_embedding(run, "conventional", dm);
        base = run.stage("kmeans-conventional", [&] { return kmeans(dm.coordinates, eff.k, eff.seed, km); });
    }

    auto cluster_csv = [](const ClusterAssignment& c) {
        std::string csv = "sample_id,cluster\n";
        for (std::size_t i = 0; i < c.labels.size(); ++i) csv += std::to_string(i) + "," + std::to_string(c.labels[i]) + "\n";
        return csv;
    };
    run.emit("clusters.csv", cluster_csv(clusters));
    if (base) run.emit("clusters_conventional.csv", cluster_csv(*base));

    std::string mapping = t_values.empty() ? "sample_id,label,cluster" : "sample_id,T,L,cluster";
    mapping += base ? ",cluster_conventional\n" : "\n";
    for (std::size_t i = 0; i < clusters.labels.size(); ++i) {
        mapping += std::to_string(i) + ",";
        if (!t_values.empty()) mapping += std::to_string(t_values[i]) + ",";
        mapping += d.labels[i] + "," + std::to_string(clusters.labels[i]);
        if (base) mapping += "," + std::to_string(base->labels[i]);
        mapping += "\n";
    }
    run.emit(t_values.empty() ? "label_mapping.csv" : "tl_mapping.csv", mapping);

    const double ari = adjusted_rand_index(clusters.labels, truth);
    run.results()["source"] = d.source;
    run.results()["k"] = eff.k;
    run.results()["inertia"] = clusters.inertia;
    run.results()["ari"] = ari;
    run.out() << "GDM k-means ARI = " << fmt(ari) << "\n";
    if (base) {
        const double base_ari = adjusted_rand_index(base->labels, truth);
        run.results()["ari_conventional"] = base_ari;
        run.out() << "conventional k-means ARI = " << fmt(base_ari) << "\n";
    }
}

struct Split {
    std::vector<Matrix> train;
    std::vector<std::string> train_labels;
    std::vector<Matrix> test;
    std::vector<std::string> test_labels;  // empty string when unknown
    std::vector<std::string> test_names;
    json source;
};

Split load_split(Run& run, const Options& o) {
    Split s;
    if (o.demo == "randomfield") {
        const Index rank = o.rank > 0 ? o.rank : o.p;
        require(o.classes >= 2 && o.classes <= max_l_shift(o.n, rank), "--classes must lie in [2, n/2 + 1 - rank]");
        require(o.train_per_class >= 1 && o.test_per_class >= 1, "per-class counts must be >= 1");
        run.stage("generate", [&] {
            for (Index c = 0; c < o.classes; ++c) {
                const int l = static_cast<int>(c + 1);
                RandomFieldOptions rf;
                rf.l_choices = std::vector<int>{l};
                const RandomFieldDataset field = gen_random_field(o.train_per_class + o.test_per_class, o.n, o.n, rank,
                                                                  mix64(o.seed ^ static_cast<Seed>(c)), rf);
                const std::string label = "L" + std::string(l < 10 ? "0" : "") + std::to_string(l);
                for (Index i = 0; i < o.train_per_class + o.test_per_class; ++i) {
                    if (i < o.train_per_class) {
                        s.train.push_back(field.samples[static_cast<std::size_t>(i)]);
                        s.train_labels.push_back(label);
                    } else {
                        s.test.push_back(field.samples[static_cast<std::size_t>(i)]);
                        s.test_labels.push_back(label);
                        s.test_names.push_back(label + "/test" + std::to_string(i - o.train_per_class));
                    }
                }
            }
        });
        s.source = {{"generator", "randomfield"}, {"classes", o.classes}, {"train_per_class", o.train_per_class},
                    {"test_per_class", o.test_per_class}, {"n", o.n}, {"rank", rank}, {"seed", o.seed}};
        return s;
    }

    require(!o.train.empty(), "classify needs --train DIR or --demo randomfield");
    require(!o.test.empty() || !o.test_files.empty(), "classify needs --test DIR or --test-file FILE");
    run.stage("load", [&] {
        const LabeledMatrixDataset train = load_labeled_directory(o.train, o.pattern);
        s.train = train.samples;
        s.train_labels = train.labels;
        if (!o.test.empty()) {
            const LabeledMatrixDataset test = load_labeled_directory(o.test, o.pattern);
            s.test = test.samples;
            s.test_labels = test.labels;
            for (const auto& f : test.files) s.test_names.push_back(fs::relative(f, o.test).generic_string());
        }
        for (const auto& f : o.test_files) {
            s.test.push_back(load_matrix_file(f));
            s.test_labels.emplace_back();
            s.test_names.push_back(f);
        }
        s.source = {{"train", o.train}, {"test", o.test}, {"test_files", o.test_files}};
    });
    return s;
}

void cmd_classify(Run& run, const Options& o) {
    validate_common(o);
    const SolverKind solver = parse_solver_kind(o.solver);
    const Criterion criterion = parse_criterion(o.criterion);
    if (!o.demo.empty()) require(o.demo == "randomfield", "classify supports --demo randomfield only");
    std::vector<int> ps{static_cast<int>(o.p)};
    if (!o.sweep_p.empty()) ps = parse_int_list(o.sweep_p, "--sweep-p");
    for (int p : ps) require(p >= 1, "--sweep-p entries must be >= 1");

    const Split split = load_split(run, o);
    if (split.test.empty()) throw EmptyDataset("no test samples");
    const Index rows = split.train.front().rows();
    const Index cols = split.train.front().cols();
    for (int p : ps)
        if (p > std::min(rows, cols)) throw DimensionError("p = " + std::to_string(p) + " exceeds min(n, m)");
    if (o.q >= static_cast<Index>(split.train.size()))
        throw DimensionError("--q must be smaller than the training-set size");

    std::string lines;
    std::string rate_csv = "p,correct,total,accuracy\n";
    json sweep = json::array();
    for (int p : ps) {
        ClassifyParams params;
        params.p = p;
        params.q = o.q;
        params.t = o.t;
        params.kernel = parse_kernel_kind(o.kernel);
        params.composition = parse_composition_rule(o.compose);
        params.solver = solver;
        params.criterion = criterion;
        params.beta = o.beta;
        params.epsilon = o.epsilon.value_or(1e-6);
        params.batch = o.batch;
        params.trivial_coordinate = o.trivial_coordinate;
        const std::vector<ClassificationResult> results = run.stage("classify-p" + std::to_string(p), [&] {
            return classify_many(split.train, split.train_labels, split.test, params);
        });

        Index correct = 0;
        Index labeled = 0;
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            json line = {{"p", p}, {"test", split.test_names[i]}, {"predicted", r.predicted},
                         {"criterion", std::string(to_string(r.criterion))}};
            if (!split.test_labels[i].empty()) {
                line["truth"] = split.test_labels[i];
                ++labeled;
                if (r.predicted == split.test_labels[i]) ++correct;
            }
            json residuals = json::object();
            for (const auto& [label, value] : r.residuals) residuals[label] = value;
            line["residuals"] = residuals;
            line["coefficients_nnz"] = r.coefficients_nnz;
            line["residual_norm"] = r.solution.residual_norm;
            line["converged"] = r.solution.converged;
            lines += line.dump() + "\n";
            for (const auto& w : r.warnings) run.warn(w);
        }
        json entry = {{"p", p}, {"correct", correct}, {"total", labeled}};
        if (labeled > 0) {
            const double acc = static_cast<double>(correct) / static_cast<double>(labeled);
            entry["accuracy"] = acc;
            rate_csv += std::to_string(p) + "," + std::to_string(correct) + "," + std::to_string(labeled) + "," + fmt(acc) + "\n";
            run.out() << "p = " << p << ": " << correct << "/" << labeled << " correct (" << fmt(100.0 * acc) << "%)\n";
        } else {
            run.out() << "p = " << p << ": " << results.size() << " unlabeled test sample(s) classified\n";
        }
        sweep.push_back(entry);
    }
    run.emit("predictions.jsonl", lines);
    if (!o.sweep_p.empty()) run.emit("rate_vs_p.csv", rate_csv);
    run.results()["source"] = split.source;
    run.results()["solver"] = o.solver;
    run.results()["criterion"] = o.criterion;
    run.results()["batch"] = o.batch;
    run.results()["trivial_coordinate"] = o.trivial_coordinate;
    run.results()["sweep"] = sweep;
}

void cmd_demo_sphere(Run& run, const Options& o) {
    validate_common(o);
    require(o.n_samples >= 2, "--n-samples must be >= 2");
    require(o.p == 1, "the sphere demo lives on G(1,3); use --p 1");
    require(o.q < o.n_samples, "--q must be smaller than --n-samples");
    const SphereConesDataset sphere = run.stage("generate", [&] { return gen_sphere_cones(o.n_samples, o.seed); });
    Matrix table(o.n_samples, 6);
    table << sphere.points, sphere.magnitudes, sphere.theta, sphere.phi;
    run.emit("sphere_points.csv", format_csv_matrix(table, {"x", "y", "z", "r", "theta", "phi"}));

    const std::vector<Matrix> samples = sphere_samples(sphere);
    const DiffusionEmbedding gdm = run.stage("gdm", [&] { return grassmannian_diffusion_maps(samples, gdm_params(o)); });
    record_embedding(run, "gdm", gdm);
    const DiffusionEmbedding dm =
        run.stage("conventional", [&] { return conventional_diffusion_maps(samples, o.epsilon, o.q, o.t); });
    record_embedding(run, "conventional", dm);
    run.results()["gdm_eigenvalues"] = vector_json(gdm.eigenvalues);
    run.results()["conventional_eigenvalues"] = vector_json(dm.eigenvalues);
    run.out() << "sphere demo: " << o.n_samples << " points on two cones\n";
}

void cmd_demo_randomfield(Run& run, const Options& o) {
    validate_common(o);
    require(o.n_samples >= 1, "--n-samples must be >= 1");
    const Index rank = o.rank > 0 ? o.rank : o.p;
    require(rank >= 1 && rank <= o.n / 2, "--rank must lie in [1, n/2]");
    RandomFieldOptions rf;
    if (!o.l_values.empty()) rf.l_choices = parse_int_list(o.l_values, "--l-values");
    const RandomFieldDataset field = run.stage("generate", [&] { return gen_random_field(o.n_samples, o.n, o.n, rank, o.seed, rf); });

    std::string table = "sample_id,T,L";
    for (Index j = 1; j <= rank; ++j) table += ",a_" + std::to_string(j);
    table += "\n";
    std::map<std::string, Index> counts;
    const int width = std::max<int>(4, static_cast<int>(std::to_string(o.n_samples).size()));
    for (std::size_t i = 0; i < field.samples.size(); ++i) {
        table += std::to_string(i) + "," + std::to_string(field.t_values[i]) + "," + std::to_string(field.l_values[i]);
        for (Index j = 0; j < rank; ++j) table += "," + fmt(field.a_diagonals(static_cast<Index>(i), j));
        table += "\n";
        const int l = field.l_values[i];
        const std::string label = "L" + std::string(l < 10 ? "0" : "") + std::to_string(l);
        std::ostringstream name;
        name << "dataset/" << label << "/sample_" << std::setw(width) << std::setfill('0') << i << ".csv";
        run.emit(name.str(), format_csv_matrix(field.samples[i]));
        ++counts[label];
    }
    run.emit("fields.csv", table);
    json classes = json::array();
    json count_list = json::array();
    for (const auto& [label, c] : counts) {
        classes.push_back(label);
        count_list.push_back(c);
    }
    const json manifest = {{"root", "dataset"}, {"classes", classes}, {"counts", count_list}, {"shape", {o.n, o.n}}};
    run.emit("dataset/manifest.json", manifest.dump(2) + "\n");
    run.results()["classes"] = classes;
    run.out() << "wrote " << o.n_samples << " random fields into " << counts.size() << " class directories\n";
}

// ---------------------------------------------------------------- wiring

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--output-dir", o.output_dir, "Directory for outputs and report.json");
    sub->add_option("--config", o.config, "key=value file; flags on the command line take precedence");
    sub->add_option("--threads", o.threads, "Worker threads (0 = OpenMP default)");
    sub->add_option("--kernel", o.kernel, "projection | binet-cauchy");
    sub->add_option("--compose", o.compose, "left | right | sum | hadamard");
    sub->add_option("--p", o.p, "Subspace dimension");
    sub->add_option("--q", o.q, "Number of diffusion coordinates");
    sub->add_option("--t", o.t, "Markov time");
    sub->add_option("--beta", o.beta, "l1 penalty for the unconstrained solver");
    sub->add_option("--epsilon", o.epsilon,
                    "Gaussian bandwidth for the conventional baseline; residual bound for the constrained solver");
}

void add_source(CLI::App* sub, Options& o) {
    sub->add_option("--demo", o.demo, "sphere | randomfield");
    sub->add_option("--input", o.input, "Directory with one subdirectory per class");
    sub->add_option("--pattern", o.pattern, "Glob for files inside class directories");
    sub->add_option("--n-samples", o.n_samples, "Number of generated samples");
    sub->add_option("--n", o.n, "Random-field size (n = m)");
    sub->add_option("--rank", o.rank, "Random-field rank (default: --p)");
    sub->add_option("--l-values", o.l_values, "Random-field L values, lo:hi or comma list");
    sub->add_flag("--baseline", o.baseline, "Also run conventional diffusion maps");
}

// Flat key=value lines become --key=value arguments ahead of the user's flags.
std::vector<std::string> config_arguments(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read config file '" + path + "'");
    std::vector<std::string> args;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#' || line[first] == ';') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key=value");
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\"");
            const auto e = s.find_last_not_of(" \t\r\"");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = strip(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        if (key == "config") throw InvalidArgument("config files cannot include other config files");
        args.push_back("--" + key + "=" + strip(line.substr(eq + 1)));
    }
    return args;
}

json config_echo(const CLI::App* sub) {
    json echo = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name.empty()) continue;
        if (opt->count() > 0) {
            const auto& res = opt->results();
            if (opt->get_multi_option_policy() == CLI::MultiOptionPolicy::TakeAll)
                echo[name] = json(res);
            else
                echo[name] = res.back();
        } else {
            echo[name] = opt->get_default_str();
        }
    }
    return echo;
}

json error_json(const std::string& kind, const std::string& category, const std::string& message, int code) {
    return {{"error", {{"kind", kind}, {"category", category}, {"message", message}}}, {"exit_code", code}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Grassmannian diffusion maps: embeddings, kernel statistics, clustering and classification",
                 "grassdm"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version()));

    auto* embed = app.add_subcommand("embed", "Grassmannian diffusion maps of a dataset");
    add_common(embed, o);
    add_source(embed, o);

    auto* stats = app.add_subcommand("kernel-stats", "Monte Carlo mean of off-diagonal kernel entries, p = 1..n-1");
    add_common(stats, o);
    stats->add_option("--n", o.n, "Ambient dimension");
    stats->add_option("--samples", o.samples, "Monte Carlo samples per p");

    auto* cluster = app.add_subcommand("cluster", "Random fields -> GDM -> k-means, scored by adjusted Rand index");
    add_common(cluster, o);
    add_source(cluster, o);
    cluster->add_option("--k", o.k, "Number of clusters");
    cluster->add_option("--max-iter", o.max_iter, "Lloyd iterations per restart");
    cluster->add_option("--n-init", o.n_init, "k-means restarts");

    auto* classify_cmd = app.add_subcommand("classify", "Sparse-representation classification of test samples");
    add_common(classify_cmd, o);
    classify_cmd->add_option("--demo", o.demo, "randomfield: synthetic classes with distinct L");
    classify_cmd->add_option("--train", o.train, "Training directory, one subdirectory per class");
    classify_cmd->add_option("--test", o.test, "Test directory in the same layout");
    classify_cmd->add_option("--test-file", o.test_files, "Unlabeled test file(s)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    classify_cmd->add_option("--pattern", o.pattern, "Glob for files inside class directories");
    classify_cmd->add_option("--solver", o.solver, "unconstrained | constrained");
    classify_cmd->add_option("--criterion", o.criterion, "min-residual | max-coefficient");
    classify_cmd->add_flag("--batch", o.batch, "Embed all test samples in one augmented set");
    classify_cmd->add_option("--trivial-coordinate", o.trivial_coordinate,
                             "Keep the stationary coordinate in dictionary atoms (true|false)");
    classify_cmd->add_option("--sweep-p", o.sweep_p, "Sweep p over lo:hi or a comma list");
    classify_cmd->add_option("--classes", o.classes, "Synthetic classes");
    classify_cmd->add_option("--train-per-class", o.train_per_class, "Synthetic training samples per class");
    classify_cmd->add_option("--test-per-class", o.test_per_class, "Synthetic test samples per class");
    classify_cmd->add_option("--n", o.n, "Random-field size");
    classify_cmd->add_option("--rank", o.rank, "Random-field rank (default: --p)");

    auto* demo_sphere = app.add_subcommand("demo-sphere", "Two-cone sphere data with GDM and conventional embeddings");
    add_common(demo_sphere, o);
    demo_sphere->add_option("--n-samples", o.n_samples, "Number of points");

    auto* demo_field = app.add_subcommand("demo-randomfield", "Write a random-field dataset in directory-per-class layout");
    add_common(demo_field, o);
    demo_field->add_option("--n-samples", o.n_samples, "Number of fields");
    demo_field->add_option("--n", o.n, "Field size (n = m)");
    demo_field->add_option("--rank", o.rank, "Field rank (default: --p)");
    demo_field->add_option("--l-values", o.l_values, "L values, lo:hi or comma list");

    const std::map<const CLI::App*, std::function<void(Run&, const Options&)>> commands = {
        {embed, cmd_embed},     {stats, cmd_kernel_stats},      {cluster, cmd_cluster},
        {classify_cmd, cmd_classify}, {demo_sphere, cmd_demo_sphere}, {demo_field, cmd_demo_randomfield}};

    Run run_state(out, err);
    try {
        std::vector<std::string> argv = args;
        for (std::size_t i = 0; i < args.size(); ++i) {
            std::string path;
            if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
            if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
            if (path.empty()) continue;
            const auto injected = config_arguments(path);
            auto sub_pos = std::find_if(argv.begin(), argv.end(), [](const std::string& a) { return !a.empty() && a[0] != '-'; });
            if (sub_pos != argv.end()) argv.insert(std::next(sub_pos), injected.begin(), injected.end());
            break;
        }
        std::reverse(argv.begin(), argv.end());
        try {
            app.parse(argv);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) return app.exit(e, out, err);
            err << error_json("ConfigError", "config", e.what(), kConfig).dump() << "\n";
            return kConfig;
        }

        const CLI::App* chosen = app.get_subcommands().front();
        if (o.threads > 0) set_thread_count(o.threads);
        const json config = config_echo(chosen);
        commands.at(chosen)(run_state, o);
        run_state.finish(chosen->get_name(), config, o.output_dir);
        return kOk;
    } catch (const Error& e) {
        const int code = e.category() == ErrorCategory::Config ? kConfig
                         : e.category() == ErrorCategory::Data ? kData
                                                               : kNumerical;
        const char* category = code == kConfig ? "config" : code == kData ? "data" : "numerical";
        err << error_json(e.kind(), category, e.what(), code).dump() << "\n";
        return code;
    } catch (const fs::filesystem_error& e) {
        err << error_json("FilesystemError", "data", e.what(), kData).dump() << "\n";
        return kData;
    } catch (const std::exception& e) {
        err << error_json("InternalError", "internal", e.what(), kInternal).dump() << "\n";
        return kInternal;
    }
}

}  // namespace grassdm::cli
