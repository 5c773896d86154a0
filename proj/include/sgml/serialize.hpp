#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "sgml/graph.hpp"
#include "sgml/metric_matrix.hpp"
#include "sgml/timers.hpp"

namespace sgml {

/// Metric file schema: dimension, row-major entries, node colors and the
/// certificate fields from the final solver state.
struct MetricFile {
    MetricMatrix m;
    std::vector<std::string> colors; // "blue"/"red", empty if uncertified
    double lambda_min = 0.0;
    double trace = 0.0;
};

inline nlohmann::json metric_to_json(const MetricFile& mf) {
    nlohmann::json j;
    j["dim"] = mf.m.dim();
    std::vector<double> entries;
    entries.reserve(static_cast<std::size_t>(mf.m.dim()) * mf.m.dim());
    for (int i = 0; i < mf.m.dim(); ++i)
        for (int k = 0; k < mf.m.dim(); ++k) entries.push_back(mf.m(i, k));
    j["entries"] = entries;
    if (!mf.colors.empty()) j["coloring"] = mf.colors;
    j["lambda_min"] = mf.lambda_min;
    j["trace"] = mf.trace;
    return j;
}

inline MetricFile metric_from_json(const nlohmann::json& j) {
    MetricFile mf;
    const int dim = j.at("dim").get<int>();
    const auto entries = j.at("entries").get<std::vector<double>>();
    if (static_cast<int>(entries.size()) != dim * dim)
        throw std::runtime_error("entry count does not match dim");
    Eigen::MatrixXd raw(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int k = 0; k < dim; ++k) raw(i, k) = entries[static_cast<std::size_t>(i) * dim + k];
    mf.m = MetricMatrix(raw);
    if (j.contains("coloring")) mf.colors = j["coloring"].get<std::vector<std::string>>();
    if (j.contains("lambda_min")) mf.lambda_min = j["lambda_min"].get<double>();
    if (j.contains("trace")) mf.trace = j["trace"].get<double>();
    return mf;
}

inline MetricFile read_metric_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return metric_from_json(j);
}

inline void write_metric_file(const MetricFile& mf, const std::string& path) {
    std::ofstream out(path);
    out << metric_to_json(mf).dump(2) << '\n';
}

inline std::vector<std::string> colors_to_strings(const Coloring& coloring) {
    std::vector<std::string> out;
    out.reserve(coloring.color.size());
    for (Color c : coloring.color) out.emplace_back(c == Color::Blue ? "blue" : "red");
    return out;
}

struct RunReport {
    std::string scheme;    // "sgml" | "pdcone"
    std::string objective; // kind name
    std::string dataset;
    int fold = -1;
    double final_objective = 0.0;
    int iterations = 0;
    PhaseTimers timers;
    double final_lambda_min = 0.0;
    double trace = 0.0;
    double accuracy = -1.0; // < 0 when classification was not requested
    bool degenerate_abort = false;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["scheme"] = scheme;
        j["objective"] = objective;
        j["dataset"] = dataset;
        if (fold >= 0) j["fold"] = fold;
        j["final_objective"] = final_objective;
        j["iterations"] = iterations;
        j["wall_ms"] = {{"total", timers.total_ms},
                        {"eigen", timers.eigen_ms},
                        {"lp", timers.lp_ms},
                        {"gradient", timers.gradient_ms}};
        j["final_lambda_min"] = final_lambda_min;
        j["trace"] = trace;
        if (accuracy >= 0) j["accuracy"] = accuracy;
        j["degenerate_abort"] = degenerate_abort;
        return j;
    }
};

} // namespace sgml
