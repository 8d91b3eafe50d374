#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bench.hpp"
#include "errors.hpp"
#include "matrix.hpp"
#include "synthgen.hpp"
#include "transform.hpp"

namespace sot {

using Json = nlohmann::ordered_json;

// All CSV floats are written with 17 significant digits so that parsing the
// text back yields bitwise-identical doubles.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_double_token(const std::string& tok, const std::string& file,
                                 std::size_t line) {
    const std::string t = trim(tok);
    if (t.empty()) throw ParseError(file, line, "empty field");
    const char* begin = t.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + t.size()) throw ParseError(file, line, "invalid number '" + t + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace detail

// Plain-text feature CSV: no header, one item per line, d comma-separated
// decimal floats.  Blank lines are skipped; every data line must have the
// same field count as the first.
inline FeatureMatrix read_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t d = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (d == 0) d = fields.size();
        else if (fields.size() != d)
            throw ParseError(path, lineno,
                             "expected " + std::to_string(d) + " fields, got " +
                                 std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(d);
        for (const auto& f : fields) row.push_back(detail::parse_double_token(f, path, lineno));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path, lineno, "no data rows");
    FeatureMatrix m(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = rows[i][j];
    return m;
}

// Companion label file: one nonnegative integer per line.
inline std::vector<int> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const char* begin = t.c_str();
        char* end = nullptr;
        const long v = std::strtol(begin, &end, 10);
        if (end != begin + t.size() || v < 0)
            throw ParseError(path, lineno, "invalid label '" + t + "'");
        labels.push_back(static_cast<int>(v));
    }
    if (labels.empty()) throw ParseError(path, lineno, "no labels");
    return labels;
}

inline void write_matrix_csv(std::ostream& out, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

inline void write_labels(std::ostream& out, const std::vector<int>& labels) {
    for (int l : labels) out << l << '\n';
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

// --- grid results ---------------------------------------------------------

inline const char* grid_csv_header() { return "dim,sigma,seed,method,accuracy,nmi,ari,wallclock_ms"; }

inline void write_grid_csv(std::ostream& out, const GridResult& res) {
    out << grid_csv_header() << '\n';
    for (const GridRow& r : res.rows) {
        out << r.dim << ',' << format_double(r.sigma) << ',' << r.seed << ',' << r.method << ','
            << format_double(r.accuracy) << ',' << format_double(r.nmi) << ','
            << format_double(r.ari) << ',' << format_double(r.wallclock_ms) << '\n';
    }
}

inline std::string grid_csv_string(const GridResult& res) {
    std::ostringstream ss;
    write_grid_csv(ss, res);
    return ss.str();
}

inline Json sot_config_to_json(const SotConfig& cfg) {
    return Json{{"lambda", cfg.sinkhorn.lambda},
                {"max_sweeps", cfg.sinkhorn.max_sweeps},
                {"marginal_tol", cfg.sinkhorn.marginal_tol},
                {"log_domain", cfg.sinkhorn.log_domain},
                {"symmetrize", cfg.symmetrize},
                {"set_unit_diagonal", cfg.set_unit_diagonal},
                {"max_rescale", cfg.max_rescale}};
}

inline Json grid_spec_to_json(const GridSpec& spec) {
    Json j;
    j["dims"] = spec.dims;
    j["sigmas"] = spec.sigmas;
    j["seeds"] = spec.seeds;
    j["task"] = Json{{"k", spec.task.k},
                     {"points_per_cluster", spec.task.points_per_cluster},
                     {"pca_dim", spec.task.pca_dim}};
    j["sot"] = sot_config_to_json(spec.sot);
    Json methods = Json::array();
    if (spec.run_baseline) methods.push_back("baseline");
    if (spec.run_sot) methods.push_back("sot");
    j["methods"] = methods;
    j["kmeans_restarts"] = spec.kmeans_restarts;
    j["timings"] = spec.timings;
    return j;
}

namespace detail {

template <typename T>
inline void read_key(const Json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

inline void check_keys(const Json& j, const std::vector<std::string>& known,
                       const std::string& where) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const auto& k : known)
            if (item.key() == k) ok = true;
        if (!ok) throw InvalidSpec("unknown key '" + item.key() + "' in " + where);
    }
}

} // namespace detail

// Parse a (possibly partial) grid spec; absent keys keep their defaults,
// unknown keys are rejected.
inline GridSpec grid_spec_from_json(const Json& j) {
    GridSpec spec;
    try {
        detail::check_keys(j, {"dims", "sigmas", "seeds", "task", "sot", "methods",
                               "kmeans_restarts", "timings"},
                           "grid spec");
        detail::read_key(j, "dims", spec.dims);
        detail::read_key(j, "sigmas", spec.sigmas);
        detail::read_key(j, "seeds", spec.seeds);
        if (j.contains("task")) {
            const Json& t = j.at("task");
            detail::check_keys(t, {"k", "points_per_cluster", "pca_dim"}, "task");
            detail::read_key(t, "k", spec.task.k);
            detail::read_key(t, "points_per_cluster", spec.task.points_per_cluster);
            detail::read_key(t, "pca_dim", spec.task.pca_dim);
        }
        if (j.contains("sot")) {
            const Json& s = j.at("sot");
            detail::check_keys(s, {"lambda", "max_sweeps", "marginal_tol", "log_domain",
                                   "symmetrize", "set_unit_diagonal", "max_rescale"},
                               "sot config");
            detail::read_key(s, "lambda", spec.sot.sinkhorn.lambda);
            detail::read_key(s, "max_sweeps", spec.sot.sinkhorn.max_sweeps);
            detail::read_key(s, "marginal_tol", spec.sot.sinkhorn.marginal_tol);
            detail::read_key(s, "log_domain", spec.sot.sinkhorn.log_domain);
            detail::read_key(s, "symmetrize", spec.sot.symmetrize);
            detail::read_key(s, "set_unit_diagonal", spec.sot.set_unit_diagonal);
            detail::read_key(s, "max_rescale", spec.sot.max_rescale);
        }
        if (j.contains("methods")) {
            spec.run_baseline = false;
            spec.run_sot = false;
            for (const auto& m : j.at("methods")) {
                const std::string name = m.get<std::string>();
                if (name == "baseline") spec.run_baseline = true;
                else if (name == "sot") spec.run_sot = true;
                else throw InvalidSpec("unknown method '" + name + "'");
            }
            if (!spec.run_baseline && !spec.run_sot) throw InvalidSpec("methods list is empty");
        }
        detail::read_key(j, "kmeans_restarts", spec.kmeans_restarts);
        detail::read_key(j, "timings", spec.timings);
    } catch (const Json::exception& e) {
        throw InvalidSpec(std::string("grid spec: ") + e.what());
    }
    if (spec.dims.empty() || spec.sigmas.empty() || spec.seeds.empty())
        throw InvalidSpec("grid lists must be nonempty");
    for (double s : spec.sigmas)
        if (s < 0.0) throw InvalidSpec("sigma must be >= 0");
    if (!(spec.sot.sinkhorn.lambda > 0.0)) throw InvalidSpec("lambda must be > 0");
    if (spec.sot.sinkhorn.max_sweeps < 1) throw InvalidSpec("max_sweeps must be >= 1");
    if (spec.kmeans_restarts < 1) throw InvalidSpec("kmeans_restarts must be >= 1");
    return spec;
}

inline Json grid_result_to_json(const GridResult& res) {
    Json j;
    j["spec"] = grid_spec_to_json(res.spec);
    Json rows = Json::array();
    for (const GridRow& r : res.rows)
        rows.push_back(Json{{"dim", r.dim},
                            {"sigma", r.sigma},
                            {"seed", r.seed},
                            {"method", r.method},
                            {"accuracy", r.accuracy},
                            {"nmi", r.nmi},
                            {"ari", r.ari},
                            {"wallclock_ms", r.wallclock_ms}});
    j["rows"] = rows;
    if (!res.errors.empty()) {
        Json errs = Json::array();
        for (const GridError& e : res.errors)
            errs.push_back(Json{{"dim", e.dim}, {"sigma", e.sigma}, {"seed", e.seed},
                                {"message", e.message}});
        j["errors"] = errs;
    }
    j["version"] = 1;
    return j;
}

// --- ablation tables ------------------------------------------------------

inline void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows,
                               const std::string& param_name, bool integer_param) {
    out << param_name << ",accuracy,nmi,ari\n";
    for (const AblationRow& r : rows) {
        if (integer_param) out << static_cast<long long>(r.parameter);
        else out << format_double(r.parameter);
        out << ',' << format_double(r.accuracy) << ',' << format_double(r.nmi) << ','
            << format_double(r.ari) << '\n';
    }
}

inline Json ablation_to_json(const std::vector<AblationRow>& rows, const std::string& param_name) {
    Json arr = Json::array();
    for (const AblationRow& r : rows)
        arr.push_back(Json{{param_name, r.parameter},
                           {"accuracy", r.accuracy},
                           {"nmi", r.nmi},
                           {"ari", r.ari}});
    return Json{{"rows", arr}, {"version", 1}};
}

// --- separation report ----------------------------------------------------

inline void write_separation_csv(std::ostream& out, const SeparationReport& rep) {
    out << "features,pairs,mean_percentile,std_percentile\n";
    const auto emit = [&](const char* feats, const char* pairs, double mean, double sd) {
        out << feats << ',' << pairs << ',' << format_double(mean) << ',' << format_double(sd)
            << '\n';
    };
    emit("original", "intra", rep.original.intra_mean, rep.original.intra_std);
    emit("original", "inter", rep.original.inter_mean, rep.original.inter_std);
    emit("sot", "intra", rep.transformed.intra_mean, rep.transformed.intra_std);
    emit("sot", "inter", rep.transformed.inter_mean, rep.transformed.inter_std);
}

inline Json separation_to_json(const SeparationReport& rep) {
    const auto entry = [](const SeparationEntry& e) {
        return Json{{"intra_mean", e.intra_mean},
                    {"intra_std", e.intra_std},
                    {"inter_mean", e.inter_mean},
                    {"inter_std", e.inter_std}};
    };
    return Json{{"original", entry(rep.original)},
                {"sot", entry(rep.transformed)},
                {"version", 1}};
}

// --- episode batches ------------------------------------------------------

inline void write_episodes_csv(std::ostream& out, const EpisodeBatchResult& res) {
    out << "seed,baseline_accuracy,sot_accuracy\n";
    for (const EpisodeBatchRow& r : res.rows)
        out << r.seed << ',' << format_double(r.baseline) << ',' << format_double(r.sot) << '\n';
}

inline Json episodes_to_json(const EpisodeBatchResult& res) {
    Json rows = Json::array();
    for (const EpisodeBatchRow& r : res.rows)
        rows.push_back(Json{{"seed", r.seed}, {"baseline_accuracy", r.baseline},
                            {"sot_accuracy", r.sot}});
    return Json{{"rows", rows},
                {"summary", Json{{"mean_baseline", res.mean_baseline},
                                 {"mean_sot", res.mean_sot},
                                 {"wins", res.wins},
                                 {"losses", res.losses},
                                 {"ties", res.ties},
                                 {"sign_test_p", res.sign_test_p}}},
                {"version", 1}};
}

} // namespace sot
