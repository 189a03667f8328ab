#ifndef LESIONFUSE_REPORTING_HPP
#define LESIONFUSE_REPORTING_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lesionfuse/errors.hpp"
#include "lesionfuse/metrics.hpp"
#include "lesionfuse/stats.hpp"

namespace lesionfuse {

namespace detail {

// Fixed numeric rendering so reruns are byte-identical.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace detail

// Undefined values serialize as "NA" in CSV and null in JSON, never as 0.
inline std::string csv_value(const MetricValue& v) {
    return v ? detail::fmt(*v) : std::string("NA");
}

inline nlohmann::json json_value(const MetricValue& v) {
    if (!v) return nullptr;
    return *v;
}

// ---------------------------------------------------------------------------
// MetricReport

inline std::string report_csv_header() {
    std::string out = "subject_id,class,units";
    for (const auto& name : metric_names()) out += "," + name;
    return out + "\n";
}

inline std::string report_csv_row(const MetricReport& r) {
    std::string out = r.subject_id + "," + label_name(r.evaluated_class) + "," + r.distance_units;
    for (const auto& name : metric_names()) out += "," + csv_value(r.get(name));
    return out + "\n";
}

inline std::string reports_to_csv(const std::vector<MetricReport>& reports) {
    std::string out = report_csv_header();
    for (const auto& r : reports) out += report_csv_row(r);
    return out;
}

inline nlohmann::json report_to_json(const MetricReport& r) {
    nlohmann::json j;
    j["subject_id"] = r.subject_id;
    j["class"] = label_name(r.evaluated_class);
    j["distance_units"] = r.distance_units;
    nlohmann::json m = nlohmann::json::object();
    for (const auto& name : metric_names()) m[name] = json_value(r.get(name));
    j["metrics"] = m;
    return j;
}

// Parse the eval CSV back into reports (consumed by the wilcoxon command).
inline std::vector<MetricReport> reports_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty report CSV");
    if (line != report_csv_header().substr(0, report_csv_header().size() - 1))
        throw FormatError("unexpected report CSV header: " + line);
    std::vector<MetricReport> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 3 + metric_names().size())
            throw FormatError("report CSV row has wrong column count: " + line);
        MetricReport r;
        r.subject_id = cells[0];
        r.evaluated_class = (cells[1] == "uncertainty") ? Label::Uncertainty : Label::Lesion;
        r.distance_units = cells[2];
        for (std::size_t k = 0; k < metric_names().size(); ++k) {
            const std::string& s = cells[3 + k];
            r.set(metric_names()[k], s == "NA" ? MetricValue{} : MetricValue(std::stod(s)));
        }
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregates, comparison matrices, per-lesion tables

inline std::string aggregate_to_csv(
    const std::vector<std::pair<std::string, AggregateEntry>>& agg) {
    std::string out = "metric,mean,std,n\n";
    for (const auto& [name, e] : agg)
        out += name + "," + csv_value(e.mean) + "," + csv_value(e.stddev) + "," +
               std::to_string(e.n) + "\n";
    return out;
}

inline std::string comparison_to_csv(const ComparisonMatrix& m) {
    std::string out = "metric,ground_truth,rater,value\n";
    for (std::size_t k = 0; k < m.metrics.size(); ++k)
        for (std::size_t g = 0; g < m.rater_names.size(); ++g)
            for (std::size_t r = 0; r < m.rater_names.size(); ++r) {
                if (g == r) continue;
                out += m.metrics[k] + "," + m.rater_names[g] + "," + m.rater_names[r] + "," +
                       csv_value(m.cells[k][g][r]) + "\n";
            }
    return out;
}

inline nlohmann::json comparison_to_json(const ComparisonMatrix& m) {
    nlohmann::json j;
    j["raters"] = m.rater_names;
    nlohmann::json per_metric = nlohmann::json::object();
    for (std::size_t k = 0; k < m.metrics.size(); ++k) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t g = 0; g < m.rater_names.size(); ++g) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t r = 0; r < m.rater_names.size(); ++r)
                row.push_back(json_value(m.cells[k][g][r]));
            rows.push_back(row);
        }
        per_metric[m.metrics[k]] = rows;
    }
    j["matrices"] = per_metric;
    return j;
}

inline std::string per_lesion_to_csv(std::vector<LesionMetrics> lesions) {
    std::sort(lesions.begin(), lesions.end(),
              [](const LesionMetrics& a, const LesionMetrics& b) {
                  return a.volume_mm3 < b.volume_mm3;
              });
    std::string out = "lesion_volume_mm3,dice,f1,sd\n";
    for (const auto& l : lesions)
        out += detail::fmt(l.volume_mm3) + "," + csv_value(l.dice) + "," + csv_value(l.f1) + "," +
               csv_value(l.sd) + "\n";
    return out;
}

inline nlohmann::json wilcoxon_to_json(const WilcoxonResult& r, double alpha) {
    nlohmann::json j;
    j["w_statistic"] = r.w_statistic;
    j["w_plus"] = r.w_plus;
    j["p_value"] = r.p_value;
    j["method"] = r.method;
    j["n_effective"] = r.n_effective;
    j["no_difference"] = r.no_difference;
    j["alpha"] = alpha;
    j["significant"] = r.significant_at(alpha);
    return j;
}

inline nlohmann::json split_plan_to_json(const SplitPlan& plan) {
    nlohmann::json j = nlohmann::json::object();
    for (auto s : {Split::Train, Split::Validation, Split::Test}) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [sub, sp] : plan.assignment)
            if (sp == s) arr.push_back({{"subject_id", sub.id}, {"centre", sub.centre}});
        j[split_name(s)] = arr;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Subject manifests and run manifests

// CSV with the exact header `subject_id,centre`.
inline std::vector<Subject> load_subject_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw FormatError("empty manifest: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "subject_id,centre")
        throw FormatError("manifest header must be 'subject_id,centre', got: " + line);
    std::vector<Subject> out;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw FormatError("malformed manifest row: " + line);
        out.push_back({line.substr(0, comma), line.substr(comma + 1)});
    }
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open file for writing: " + path.string());
    f << text;
    if (!f) throw IoError("write failure: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// FNV-1a over file bytes, enough to pin inputs in the run manifest.
inline std::string digest_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open file for digest: " + path.string());
    std::uint64_t h = 0xCBF29CE484222325ULL;
    char c;
    while (f.get(c)) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001B3ULL;
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace lesionfuse

#endif
