#pragma once

// Seed aggregation: merges per-seed results CSVs into per-episode means with
// 95% t-confidence intervals (n-1 degrees of freedom; blank when n = 1).

#include <boost/math/distributions/students_t.hpp>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace apl {

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    CsvTable t;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (header) {
            t.columns = fields;
            header = false;
            continue;
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& s : fields) row.push_back(std::stod(s));
        t.rows.push_back(std::move(row));
    }
    return t;
}

// Groups rows of the input tables by episode and writes
// episode, <col>_mean, <col>_ci for every other column. The CI column is the
// 95% t half-width and stays blank for a single seed.
inline void aggregate_results(const std::vector<std::string>& inputs, const std::string& out_path) {
    if (inputs.empty()) throw std::runtime_error("no input CSVs to aggregate");
    std::vector<CsvTable> tables;
    for (const auto& p : inputs) tables.push_back(read_csv(p));
    const auto& cols = tables.front().columns;
    for (const auto& t : tables)
        if (t.columns != cols) throw std::runtime_error("aggregate inputs have mismatched columns");
    int ep_col = -1;
    for (size_t c = 0; c < cols.size(); ++c)
        if (cols[c] == "episode") ep_col = static_cast<int>(c);
    if (ep_col < 0) throw std::runtime_error("aggregate inputs lack an episode column");

    std::map<double, std::vector<const std::vector<double>*>> by_episode;
    for (const auto& t : tables)
        for (const auto& row : t.rows) by_episode[row[ep_col]].push_back(&row);

    std::string out = "episode";
    for (size_t c = 0; c < cols.size(); ++c) {
        if (static_cast<int>(c) == ep_col || cols[c] == "seed") continue;
        out += "," + cols[c] + "_mean," + cols[c] + "_ci";
    }
    out += ",n\n";
    char buf[64];
    for (const auto& [episode, rows] : by_episode) {
        const int n = static_cast<int>(rows.size());
        std::snprintf(buf, sizeof(buf), "%g", episode);
        out += buf;
        for (size_t c = 0; c < cols.size(); ++c) {
            if (static_cast<int>(c) == ep_col || cols[c] == "seed") continue;
            double sum = 0;
            for (const auto* r : rows) sum += (*r)[c];
            double mean = sum / n;
            std::snprintf(buf, sizeof(buf), ",%.6g", mean);
            out += buf;
            if (n > 1) {
                double sq = 0;
                for (const auto* r : rows) sq += ((*r)[c] - mean) * ((*r)[c] - mean);
                double sd = std::sqrt(sq / (n - 1));
                boost::math::students_t dist(n - 1);
                double half = boost::math::quantile(dist, 0.975) * sd / std::sqrt(double(n));
                std::snprintf(buf, sizeof(buf), ",%.6g", half);
                out += buf;
            } else {
                out += ",";  // CI undefined for a single seed
            }
        }
        out += "," + std::to_string(n) + "\n";
    }
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + out_path);
    os << out;
}

inline std::vector<std::string> find_results_csvs(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("results_", 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".csv")
            found.push_back(entry.path().string());
    }
    std::sort(found.begin(), found.end());
    return found;
}

}  // namespace apl
