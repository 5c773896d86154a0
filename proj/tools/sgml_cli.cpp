// Command-line front end: learn a metric, verify disc alignment on a matrix
// file, classify with k-NN, or run benchmark sweeps over a dataset manifest.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgml/baseline.hpp"
#include "sgml/dataset.hpp"
#include "sgml/gdpa.hpp"
#include "sgml/knn.hpp"
#include "sgml/log.hpp"
#include "sgml/optimizer.hpp"
#include "sgml/serialize.hpp"

namespace {

using nlohmann::json;
using namespace sgml;

constexpr int kExitOk = 0;
constexpr int kExitDegenerate = 2;
constexpr int kExitUnbalanced = 3;
constexpr int kExitUsage = 64;

struct CommonOptions {
    std::string objective = "glr";
    std::string scheme = "sgml";
    double trace_budget = 0.0;
    double rho = 0.0;
    std::uint64_t seed = 0;
    double mu = 0.5;
    double main_tol = 1e-5;
    int max_main_iter = 1000;
    double sub_tol = 1e-3;
    int max_sub_iter = 1000;
    double lobpcg_tol = 1e-4;
    int max_lobpcg_iter = 200;
    double nr_tol = 0.5;
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--objective", opt.objective, "objective function")
        ->check(CLI::IsMember({"mcml", "deml", "lsml", "lmnn", "glr"}));
    cmd->add_option("--scheme", opt.scheme, "optimization scheme")
        ->check(CLI::IsMember({"sgml", "pdcone"}));
    cmd->add_option("--C", opt.trace_budget, "trace budget (default: feature count)");
    cmd->add_option("--rho", opt.rho, "disc margin");
    cmd->add_option("--seed", opt.seed, "run seed");
    cmd->add_option("--mu", opt.mu, "LMNN trade-off");
    cmd->add_option("--main-tol", opt.main_tol, "main convergence tolerance");
    cmd->add_option("--max-main-iter", opt.max_main_iter, "main iteration cap");
    cmd->add_option("--sub-tol", opt.sub_tol, "dia/offdia convergence tolerance");
    cmd->add_option("--max-sub-iter", opt.max_sub_iter, "dia/offdia/FW iteration cap");
    cmd->add_option("--lobpcg-tol", opt.lobpcg_tol, "LOBPCG tolerance");
    cmd->add_option("--max-lobpcg-iter", opt.max_lobpcg_iter, "LOBPCG iteration cap");
    cmd->add_option("--nr-tol", opt.nr_tol, "FW step size NR tolerance");
}

ObjectiveKind parse_objective(const CommonOptions& opt) {
    ObjectiveKind kind;
    kind.mu = opt.mu;
    if (opt.objective == "mcml") kind.type = ObjectiveKind::MCML;
    else if (opt.objective == "deml") kind.type = ObjectiveKind::DEML;
    else if (opt.objective == "lsml") kind.type = ObjectiveKind::LSML;
    else if (opt.objective == "lmnn") kind.type = ObjectiveKind::LMNN;
    else kind.type = ObjectiveKind::GLR;
    return kind;
}

SgmlParams sgml_params(const CommonOptions& opt) {
    SgmlParams p;
    p.trace_budget = opt.trace_budget;
    p.disc_margin = opt.rho;
    p.main_tol = opt.main_tol;
    p.max_main_iter = opt.max_main_iter;
    p.sub_tol = opt.sub_tol;
    p.max_sub_iter = opt.max_sub_iter;
    p.lobpcg_tol = opt.lobpcg_tol;
    p.lobpcg_max_iter = opt.max_lobpcg_iter;
    p.nr_tol = opt.nr_tol;
    p.seed = opt.seed;
    return p;
}

Dataset load_data(const std::string& path) {
    if (std::filesystem::path(path).extension() == ".csv") return load_csv(path);
    return load_libsvm(path);
}

struct LearnOutcome {
    MetricFile metric;
    RunReport report;
    bool degenerate = false;
};

LearnOutcome learn_one(const Dataset& data, const CommonOptions& opt, int fold = -1) {
    const ObjectiveKind kind = parse_objective(opt);
    LearnOutcome out;
    out.report.scheme = opt.scheme;
    out.report.objective = kind.name();
    out.report.dataset = data.name;
    out.report.fold = fold;

    if (opt.scheme == "pdcone") {
        PdConeParams params;
        params.trace_budget = opt.trace_budget;
        params.eig_floor = opt.rho;
        params.main_tol = opt.main_tol;
        params.max_main_iter = opt.max_main_iter;
        params.seed = opt.seed;
        const PdConeResult res = pdcone_pg(data, kind, params);
        out.metric.m = res.m;
        out.metric.lambda_min = res.lambda_min;
        out.metric.trace = res.trace;
        out.report.final_objective = res.final_objective;
        out.report.iterations = res.iterations;
        out.report.timers = res.timers;
        out.report.final_lambda_min = res.lambda_min;
        out.report.trace = res.trace;
    } else {
        const SgmlResult res = run_sgml(data, kind, sgml_params(opt));
        out.metric.m = res.m;
        out.metric.colors = colors_to_strings(res.coloring);
        out.metric.lambda_min = res.lambda_min;
        out.metric.trace = res.trace;
        out.report.final_objective = res.final_objective;
        out.report.iterations = res.fw_iterations;
        out.report.timers = res.timers;
        out.report.final_lambda_min = res.lambda_min;
        out.report.trace = res.trace;
        out.report.degenerate_abort = res.degenerate_abort;
        out.degenerate = res.degenerate_abort;
    }
    return out;
}

int cmd_learn(const std::string& path, const CommonOptions& opt, const std::string& out_path) {
    const Dataset data = normalize(load_data(path));
    const LearnOutcome outcome = learn_one(data, opt);
    write_metric_file(outcome.metric, out_path);
    std::cout << outcome.report.to_json().dump(2) << std::endl;
    return outcome.degenerate ? kExitDegenerate : kExitOk;
}

int cmd_gdpa_check(const std::string& path) {
    const MetricFile mf = read_metric_file(path);
    const SignedGraph g = graph_from_laplacian(mf.m);
    const BalanceResult balance = check_balance(g);
    if (!balance.balanced()) {
        json err;
        err["error"] = "unbalanced";
        err["witness"] = {{"i", balance.witness.i},
                          {"j", balance.witness.j},
                          {"weight", balance.witness.weight}};
        std::cerr << err.dump() << std::endl;
        return kExitUnbalanced;
    }

    const GershgorinReport before = gershgorin(mf.m);
    double lambda_min = std::numeric_limits<double>::infinity();
    double deviation = 0.0;
    try {
        for (const auto& nodes : connected_components(mf.m)) {
            const MetricMatrix block = mf.m.block(nodes);
            Coloring block_coloring;
            for (int n : nodes) block_coloring.color.push_back(balance.coloring->color[n]);
            EigenPair pair;
            if (block.dim() == 1) {
                pair.value = block(0, 0);
                pair.vector = Eigen::VectorXd::Ones(1);
                lambda_min = std::min(lambda_min, pair.value);
                continue; // a single disc is trivially aligned
            }
            const JacobiEigen eig = jacobi_eigen(block);
            pair.value = eig.values[0];
            pair.vector = eig.vectors.col(0);
            lambda_min = std::min(lambda_min, pair.value);
            const GdpaScalars s = gdpa_scalars(block, block_coloring, pair);
            const GershgorinReport after = scaled_gershgorin(block, s);
            for (int i = 0; i < block.dim(); ++i)
                deviation = std::max(deviation, std::abs(after.left_end(i) - pair.value));
        }
    } catch (const DegenerateEigenvector& e) {
        json err;
        err["error"] = "degenerate_eigenvector";
        err["detail"] = e.what();
        std::cerr << err.dump() << std::endl;
        return kExitDegenerate;
    }

    json out;
    out["lower_bound_before_scaling"] = before.lower_bound;
    out["lambda_min"] = lambda_min;
    out["max_alignment_deviation"] = deviation;
    const bool aligned = deviation <= 1e-6 * std::max(1.0, std::abs(lambda_min));
    out["aligned"] = aligned;
    std::cout << out.dump(2) << std::endl;
    return aligned ? kExitOk : 1;
}

int cmd_classify(const std::string& train_path, const std::string& test_path,
                 const CommonOptions& opt, int k, bool cv10) {
    json out;
    if (cv10) {
        const Dataset data = normalize(load_data(train_path));
        const auto splits = cross_val_split(data.sample_count());
        double total = 0.0;
        json folds = json::array();
        for (std::size_t s = 0; s < splits.size(); ++s) {
            const Dataset train = subset(data, splits[s].train);
            const Dataset test = subset(data, splits[s].test);
            const LearnOutcome outcome = learn_one(train, opt, static_cast<int>(s));
            const double acc = knn_accuracy(outcome.metric.m, train, test, k);
            total += acc;
            folds.push_back({{"seed", s}, {"accuracy", acc}});
        }
        out["dataset"] = data.name;
        out["protocol"] = "cv10";
        out["k"] = k;
        out["folds"] = folds;
        out["mean_accuracy"] = total / splits.size();
    } else {
        const Dataset train = normalize(load_data(train_path));
        const Dataset test = normalize(load_data(test_path));
        const LearnOutcome outcome = learn_one(train, opt);
        RunReport report = outcome.report;
        report.accuracy = knn_accuracy(outcome.metric.m, train, test, k);
        out = report.to_json();
        out["k"] = k;
    }
    std::cout << out.dump(2) << std::endl;
    return kExitOk;
}

struct BenchJob {
    int dataset_idx;
    std::string objective;
    std::string scheme;
    int fold;
};

struct BenchCell {
    bool failed = false;
    double objective = 0.0;
    int iterations = 0;
    PhaseTimers timers;
};

int cmd_benchmark(const std::string& manifest_path, std::vector<std::string> objectives,
                  std::vector<std::string> schemes, const CommonOptions& base,
                  const std::string& out_dir, int jobs) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open " + manifest_path);
    json manifest;
    in >> manifest;
    if (manifest.contains("datasets")) manifest = manifest["datasets"];

    std::vector<Dataset> datasets;
    std::vector<std::vector<std::vector<int>>> fold_members; // dataset -> fold -> samples
    for (const auto& entry : manifest) {
        Dataset data = normalize(load_data(entry.at("path").get<std::string>()));
        if (entry.contains("name")) data.name = entry["name"].get<std::string>();
        const int t = std::max(1, static_cast<int>(std::lround(data.sample_count() / 4.0)));
        const FoldPlan plan = split_folds(data.sample_count(), t, base.seed);
        std::vector<std::vector<int>> members(t);
        for (int i = 0; i < data.sample_count(); ++i) members[plan.assignments[i]].push_back(i);
        datasets.push_back(std::move(data));
        fold_members.push_back(std::move(members));
    }

    std::vector<BenchJob> job_list;
    for (int d = 0; d < static_cast<int>(datasets.size()); ++d)
        for (const auto& obj : objectives)
            for (const auto& scheme : schemes)
                for (int f = 0; f < static_cast<int>(fold_members[d].size()); ++f)
                    job_list.push_back({d, obj, scheme, f});

    std::vector<BenchCell> cells(job_list.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= job_list.size()) return;
            const BenchJob& job = job_list[idx];
            try {
                CommonOptions opt = base;
                opt.objective = job.objective;
                opt.scheme = job.scheme;
                const Dataset fold_data =
                    subset(datasets[job.dataset_idx], fold_members[job.dataset_idx][job.fold]);
                const LearnOutcome outcome = learn_one(fold_data, opt, job.fold);
                cells[idx].objective = outcome.report.final_objective;
                cells[idx].iterations = outcome.report.iterations;
                cells[idx].timers = outcome.report.timers;
            } catch (const std::exception& e) {
                log_at(LogLevel::Error, "benchmark job failed: %s", e.what());
                cells[idx].failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // aggregate by (dataset, objective, scheme), keys already sorted by
    // construction order
    struct RowKey {
        int dataset;
        std::string objective;
        std::string scheme;
        bool operator<(const RowKey& o) const {
            return std::tie(dataset, objective, scheme) <
                   std::tie(o.dataset, o.objective, o.scheme);
        }
    };
    std::map<RowKey, std::vector<const BenchCell*>> grouped;
    for (std::size_t idx = 0; idx < job_list.size(); ++idx)
        grouped[{job_list[idx].dataset_idx, job_list[idx].objective, job_list[idx].scheme}]
            .push_back(&cells[idx]);

    std::filesystem::create_directories(out_dir);
    std::ofstream csv(std::filesystem::path(out_dir) / "benchmark.csv");
    csv << "dataset,objective,scheme,folds,failed,mean_objective,mean_iterations,"
           "mean_total_ms,mean_eigen_ms,mean_lp_ms,mean_gradient_ms,eigen_fraction,"
           "speedup_vs_pdcone\n";
    json report = json::array();
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& [key, group] : grouped) {
        int ok = 0, failed = 0;
        double obj = 0, iters = 0;
        PhaseTimers t{};
        for (const BenchCell* c : group) {
            if (c->failed) {
                ++failed;
                continue;
            }
            ++ok;
            obj += c->objective;
            iters += c->iterations;
            t.total_ms += c->timers.total_ms;
            t.eigen_ms += c->timers.eigen_ms;
            t.lp_ms += c->timers.lp_ms;
            t.gradient_ms += c->timers.gradient_ms;
        }
        if (ok > 0) {
            obj /= ok;
            iters /= ok;
            t.total_ms /= ok;
            t.eigen_ms /= ok;
            t.lp_ms /= ok;
            t.gradient_ms /= ok;
        }
        double speedup = 0.0;
        if (key.scheme == "sgml") {
            const auto other = grouped.find({key.dataset, key.objective, "pdcone"});
            if (other != grouped.end()) {
                double other_total = 0;
                int other_ok = 0;
                for (const BenchCell* c : other->second)
                    if (!c->failed) {
                        other_total += c->timers.total_ms;
                        ++other_ok;
                    }
                if (other_ok > 0 && t.total_ms > 0)
                    speedup = (other_total / other_ok) / t.total_ms;
            }
        }
        const std::string& name = datasets[key.dataset].name;
        csv << name << ',' << key.objective << ',' << key.scheme << ',' << group.size() << ','
            << failed << ',' << fmt(obj) << ',' << fmt(iters) << ',' << fmt(t.total_ms) << ','
            << fmt(t.eigen_ms) << ',' << fmt(t.lp_ms) << ',' << fmt(t.gradient_ms) << ','
            << fmt(t.total_ms > 0 ? t.eigen_ms / t.total_ms : 0.0) << ',' << fmt(speedup)
            << '\n';
        report.push_back({{"dataset", name},
                          {"objective", key.objective},
                          {"scheme", key.scheme},
                          {"folds", group.size()},
                          {"failed", failed},
                          {"mean_objective", obj},
                          {"mean_iterations", iters},
                          {"wall_ms",
                           {{"total", t.total_ms},
                            {"eigen", t.eigen_ms},
                            {"lp", t.lp_ms},
                            {"gradient", t.gradient_ms}}}});
    }
    std::ofstream(std::filesystem::path(out_dir) / "benchmark.json") << report.dump(2) << '\n';
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "benchmark.csv").string()
              << std::endl;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"signed graph metric learning toolkit"};
    app.require_subcommand(1);

    CommonOptions opt;

    auto* learn = app.add_subcommand("learn", "learn a metric matrix from a dataset");
    std::string learn_data, learn_out = "metric.json";
    learn->add_option("dataset", learn_data)->required();
    learn->add_option("--out", learn_out, "metric file path");
    add_common_flags(learn, opt);

    auto* check = app.add_subcommand("gdpa-check", "verify disc alignment of a metric file");
    std::string check_path;
    check->add_option("matrix", check_path)->required();

    auto* classify = app.add_subcommand("classify", "k-NN classification with a learned metric");
    std::string train_path, test_path;
    int knn_k = 10;
    bool cv10 = false;
    classify->add_option("train", train_path)->required();
    classify->add_option("test", test_path);
    classify->add_option("--k", knn_k, "neighbor count");
    classify->add_flag("--cv10", cv10, "ten 90/10 splits with seeds 0-9");
    add_common_flags(classify, opt);

    auto* bench = app.add_subcommand("benchmark", "run a dataset-manifest sweep");
    std::string manifest, out_dir = "bench_out";
    std::vector<std::string> objectives{"glr"}, schemes{"sgml"};
    int jobs = 1;
    bench->add_option("manifest", manifest)->required();
    bench->add_option("--objectives", objectives, "objective list")
        ->delimiter(',')
        ->check(CLI::IsMember({"mcml", "deml", "lsml", "lmnn", "glr"}));
    bench->add_option("--schemes", schemes, "scheme list")
        ->delimiter(',')
        ->check(CLI::IsMember({"sgml", "pdcone"}));
    bench->add_option("--out", out_dir, "output directory");
    bench->add_option("--jobs", jobs, "worker count");
    add_common_flags(bench, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (learn->parsed()) return cmd_learn(learn_data, opt, learn_out);
        if (check->parsed()) return cmd_gdpa_check(check_path);
        if (classify->parsed()) {
            if (!cv10 && test_path.empty()) {
                std::cerr << "classify needs a test file or --cv10" << std::endl;
                return kExitUsage;
            }
            return cmd_classify(train_path, test_path, opt, knn_k, cv10);
        }
        if (bench->parsed())
            return cmd_benchmark(manifest, objectives, schemes, opt, out_dir, std::max(1, jobs));
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        std::cerr << err.dump() << std::endl;
        return 1;
    }
    return kExitUsage;
}
