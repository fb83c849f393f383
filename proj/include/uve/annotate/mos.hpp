/* Copyright (c) 2026 The uvenet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#ifndef UVE_ANNOTATE_MOS_HPP_
#define UVE_ANNOTATE_MOS_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uve/core/tensor.hpp"

namespace uve {

// Observer x method integer score matrix for one video set. Column 0 is the
// raw video; the remaining columns are enhancement methods.
struct RatingTable {
    std::string set_id;
    std::vector<std::string> observer_ids;
    std::vector<std::string> method_ids;        // method_ids[0] == "raw"
    std::vector<std::vector<int>> scores;       // [observer][method], 0-100

    int64_t observers() const { return static_cast<int64_t>(observer_ids.size()); }
    int64_t methods() const { return static_cast<int64_t>(method_ids.size()); }

    void validate() const {
        require(!method_ids.empty() && method_ids[0] == "raw",
                "ratings: first method column must be 'raw' (set " + set_id + ")");
        require(method_ids.size() >= 2, "ratings: set " + set_id + " has no enhancement methods");
        require(scores.size() == observer_ids.size(),
                "ratings: row count mismatch in set " + set_id);
        for (const auto& row : scores) {
            require(row.size() == method_ids.size(), "ratings: column count mismatch in set " + set_id);
            for (int v : row)
                require(v >= 0 && v <= 100, "ratings: score " + std::to_string(v) +
                                                " outside [0, 100] in set " + set_id);
        }
    }
};

namespace detail {
inline double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}
inline double population_stddev(const std::vector<double>& v, double mean) {
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size()));
}
}  // namespace detail

struct OutlierResult {
    std::vector<int64_t> retained;  // observer row indices
    bool usable = true;             // false when fewer than 2 observers survive
    double raw_mean = 0.0;
    double raw_stddev = 0.0;        // population
};

// Screens observers by their raw-video rating: |score - mean| <= 2 stddev
// survives (inclusive boundary, population stddev). A zero spread retains
// everyone. Removal discards the observer's entire row.
inline OutlierResult reject_outliers(const RatingTable& table) {
    table.validate();
    require(table.observers() >= 3, "reject_outliers: set " + table.set_id +
                                        " needs >= 3 observers, has " +
                                        std::to_string(table.observers()));
    std::vector<double> raw;
    for (const auto& row : table.scores) raw.push_back(static_cast<double>(row[0]));
    OutlierResult res;
    res.raw_mean = detail::mean_of(raw);
    res.raw_stddev = detail::population_stddev(raw, res.raw_mean);
    for (int64_t o = 0; o < table.observers(); ++o) {
        if (res.raw_stddev == 0.0 ||
            std::abs(raw[static_cast<std::size_t>(o)] - res.raw_mean) <= 2.0 * res.raw_stddev)
            res.retained.push_back(o);
    }
    res.usable = res.retained.size() >= 2;
    return res;
}

// Each retained observer votes for their highest-scored enhancement method;
// per-observer ties go to the method with the higher mean over retained
// observers, then the lexicographically smaller id. The winner has the most
// votes, same tie-break hierarchy.
inline int64_t select_method(const RatingTable& table, const std::vector<int64_t>& retained) {
    require(retained.size() >= 2, "select_method: needs >= 2 retained observers");
    const int64_t m = table.methods();
    std::vector<double> method_mean(static_cast<std::size_t>(m), 0.0);
    for (int64_t mi = 1; mi < m; ++mi) {
        double acc = 0.0;
        for (int64_t o : retained) acc += table.scores[static_cast<std::size_t>(o)][static_cast<std::size_t>(mi)];
        method_mean[static_cast<std::size_t>(mi)] = acc / static_cast<double>(retained.size());
    }
    auto better = [&](int64_t a, int64_t b) {  // is method a preferable to b
        if (method_mean[static_cast<std::size_t>(a)] != method_mean[static_cast<std::size_t>(b)])
            return method_mean[static_cast<std::size_t>(a)] > method_mean[static_cast<std::size_t>(b)];
        return table.method_ids[static_cast<std::size_t>(a)] < table.method_ids[static_cast<std::size_t>(b)];
    };

    std::vector<int64_t> votes(static_cast<std::size_t>(m), 0);
    for (int64_t o : retained) {
        const auto& row = table.scores[static_cast<std::size_t>(o)];
        int64_t best = 1;
        for (int64_t mi = 2; mi < m; ++mi) {
            if (row[static_cast<std::size_t>(mi)] > row[static_cast<std::size_t>(best)])
                best = mi;
            else if (row[static_cast<std::size_t>(mi)] == row[static_cast<std::size_t>(best)] &&
                     better(mi, best))
                best = mi;
        }
        ++votes[static_cast<std::size_t>(best)];
    }
    int64_t winner = 1;
    for (int64_t mi = 2; mi < m; ++mi) {
        if (votes[static_cast<std::size_t>(mi)] > votes[static_cast<std::size_t>(winner)])
            winner = mi;
        else if (votes[static_cast<std::size_t>(mi)] == votes[static_cast<std::size_t>(winner)] &&
                 better(mi, winner))
            winner = mi;
    }
    return winner;
}

struct AggregationResult {
    std::string set_id;
    std::string chosen_method;
    double r_q = 0.0;      // mean raw rating over retained observers
    double s_r = 0.0;      // mean raw rating over the winners' voters
    double s_e = 0.0;      // mean chosen-method rating over the voters
    double delta_s = 0.0;  // s_e - s_r
    double g_q = 0.0;      // r_q + delta_s
    std::vector<std::string> retained_observers;
    bool filtered_out = false;

    nlohmann::json to_json() const {
        return nlohmann::json{{"set_id", set_id},
                              {"chosen_method", chosen_method},
                              {"R_q", r_q},
                              {"S_r", s_r},
                              {"S_e", s_e},
                              {"delta_s", delta_s},
                              {"G_q", g_q},
                              {"retained_observers", retained_observers},
                              {"filtered_out", filtered_out}};
    }
};

enum class FilterRule { conjunction, disjunction };

// Score synthesis across retained observers, given the chosen method:
// G_q = R_q + (S_e - S_r). The low-quality filter flags sets with R_q < 40
// and (or optionally or) delta_s < 3.
inline AggregationResult aggregate(const RatingTable& table, const std::vector<int64_t>& retained,
                                   int64_t method, FilterRule rule = FilterRule::conjunction) {
    require(method >= 1 && method < table.methods(), "aggregate: invalid method index");
    AggregationResult res;
    res.set_id = table.set_id;
    res.chosen_method = table.method_ids[static_cast<std::size_t>(method)];
    for (int64_t o : retained)
        res.retained_observers.push_back(table.observer_ids[static_cast<std::size_t>(o)]);

    double raw_acc = 0.0;
    for (int64_t o : retained) raw_acc += table.scores[static_cast<std::size_t>(o)][0];
    res.r_q = raw_acc / static_cast<double>(retained.size());

    // voters for the chosen method (same per-observer argmax rule as selection)
    std::vector<double> method_mean(static_cast<std::size_t>(table.methods()), 0.0);
    for (int64_t mi = 1; mi < table.methods(); ++mi) {
        double acc = 0.0;
        for (int64_t o : retained) acc += table.scores[static_cast<std::size_t>(o)][static_cast<std::size_t>(mi)];
        method_mean[static_cast<std::size_t>(mi)] = acc / static_cast<double>(retained.size());
    }
    auto better = [&](int64_t a, int64_t b) {
        if (method_mean[static_cast<std::size_t>(a)] != method_mean[static_cast<std::size_t>(b)])
            return method_mean[static_cast<std::size_t>(a)] > method_mean[static_cast<std::size_t>(b)];
        return table.method_ids[static_cast<std::size_t>(a)] < table.method_ids[static_cast<std::size_t>(b)];
    };
    double vr_acc = 0.0, ve_acc = 0.0;
    int64_t voters = 0;
    for (int64_t o : retained) {
        const auto& row = table.scores[static_cast<std::size_t>(o)];
        int64_t best = 1;
        for (int64_t mi = 2; mi < table.methods(); ++mi) {
            if (row[static_cast<std::size_t>(mi)] > row[static_cast<std::size_t>(best)])
                best = mi;
            else if (row[static_cast<std::size_t>(mi)] == row[static_cast<std::size_t>(best)] &&
                     better(mi, best))
                best = mi;
        }
        if (best == method) {
            vr_acc += row[0];
            ve_acc += row[static_cast<std::size_t>(method)];
            ++voters;
        }
    }
    require(voters > 0, "aggregate: chosen method has no voters (selection/aggregation mismatch)");
    res.s_r = vr_acc / static_cast<double>(voters);
    res.s_e = ve_acc / static_cast<double>(voters);
    res.delta_s = res.s_e - res.s_r;
    res.g_q = res.r_q + res.delta_s;
    res.filtered_out = rule == FilterRule::conjunction ? (res.r_q < 40.0 && res.delta_s < 3.0)
                                                       : (res.r_q < 40.0 || res.delta_s < 3.0);
    return res;
}

struct PipelineResult {
    bool usable = true;
    OutlierResult outliers;
    AggregationResult result;
};

inline PipelineResult aggregate_table(const RatingTable& table,
                                      FilterRule rule = FilterRule::conjunction) {
    PipelineResult pr;
    pr.outliers = reject_outliers(table);
    pr.usable = pr.outliers.usable;
    if (!pr.usable) {
        pr.result.set_id = table.set_id;
        return pr;
    }
    const int64_t m = select_method(table, pr.outliers.retained);
    pr.result = aggregate(table, pr.outliers.retained, m, rule);
    return pr;
}

struct ReliabilityReport {
    double fraction = 0.0;          // ratings within 2 column stddevs
    int64_t ratings_considered = 0;
    int64_t columns_excluded = 0;   // columns with a single rating
    bool passes_threshold = false;  // >= 95%, reported, never enforced
};

// Fraction of all individual ratings (every column of every table) within
// two population standard deviations of their column mean. Single-rating
// columns have no spread estimate and are excluded.
inline ReliabilityReport reliability_stat(const std::vector<RatingTable>& tables) {
    require(!tables.empty(), "reliability_stat: no tables");
    ReliabilityReport rep;
    int64_t within = 0;
    for (const RatingTable& t : tables) {
        t.validate();
        for (int64_t mi = 0; mi < t.methods(); ++mi) {
            std::vector<double> col;
            for (const auto& row : t.scores) col.push_back(static_cast<double>(row[static_cast<std::size_t>(mi)]));
            if (col.size() < 2) {
                ++rep.columns_excluded;
                continue;
            }
            const double mean = detail::mean_of(col);
            const double sd = detail::population_stddev(col, mean);
            for (double v : col) {
                ++rep.ratings_considered;
                if (std::abs(v - mean) <= 2.0 * sd) ++within;
            }
        }
    }
    rep.fraction = rep.ratings_considered > 0
                       ? static_cast<double>(within) / static_cast<double>(rep.ratings_considered)
                       : 0.0;
    rep.passes_threshold = rep.fraction >= 0.95;
    return rep;
}

// ---- CSV / JSON interfaces ----

// Input CSV columns: set_id,observer_id,method_id,score with method_id "raw"
// for the raw-video column. Every (observer, method) pair of a set must be
// present exactly once.
inline std::vector<RatingTable> read_ratings_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("ratings: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw IoError("ratings: empty file " + path);
    auto strip = [](std::string s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
        return s;
    };
    if (strip(line) != "set_id,observer_id,method_id,score")
        throw IoError("ratings: expected header 'set_id,observer_id,method_id,score' in " + path);

    struct Key {
        std::string obs, method;
    };
    std::map<std::string, std::vector<std::pair<Key, int>>> by_set;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        line = strip(line);
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string set_id, obs, method, score_s;
        if (!std::getline(ss, set_id, ',') || !std::getline(ss, obs, ',') ||
            !std::getline(ss, method, ',') || !std::getline(ss, score_s))
            throw IoError("ratings: " + path + ":" + std::to_string(lineno) + ": malformed row");
        int score = 0;
        try {
            std::size_t pos = 0;
            score = std::stoi(score_s, &pos);
            if (pos != score_s.size()) throw std::invalid_argument("");
        } catch (...) {
            throw IoError("ratings: " + path + ":" + std::to_string(lineno) +
                          ": score must be an integer, got '" + score_s + "'");
        }
        if (score < 0 || score > 100)
            throw IoError("ratings: " + path + ":" + std::to_string(lineno) +
                          ": score " + std::to_string(score) + " outside [0, 100]");
        by_set[set_id].push_back({{obs, method}, score});
    }

    std::vector<RatingTable> tables;
    for (auto& [set_id, rows] : by_set) {
        RatingTable t;
        t.set_id = set_id;
        std::vector<std::string> obs_ids, method_ids;
        for (const auto& [key, score] : rows) {
            if (std::find(obs_ids.begin(), obs_ids.end(), key.obs) == obs_ids.end())
                obs_ids.push_back(key.obs);
            if (key.method != "raw" &&
                std::find(method_ids.begin(), method_ids.end(), key.method) == method_ids.end())
                method_ids.push_back(key.method);
        }
        std::sort(obs_ids.begin(), obs_ids.end());
        std::sort(method_ids.begin(), method_ids.end());
        t.observer_ids = obs_ids;
        t.method_ids.push_back("raw");
        t.method_ids.insert(t.method_ids.end(), method_ids.begin(), method_ids.end());
        t.scores.assign(obs_ids.size(), std::vector<int>(t.method_ids.size(), -1));
        auto obs_index = [&](const std::string& id) {
            return std::distance(obs_ids.begin(), std::find(obs_ids.begin(), obs_ids.end(), id));
        };
        auto method_index = [&](const std::string& id) {
            return std::distance(t.method_ids.begin(),
                                 std::find(t.method_ids.begin(), t.method_ids.end(), id));
        };
        for (const auto& [key, score] : rows) {
            auto oi = obs_index(key.obs);
            auto mi = method_index(key.method);
            if (t.scores[static_cast<std::size_t>(oi)][static_cast<std::size_t>(mi)] != -1)
                throw IoError("ratings: duplicate entry for set " + set_id + " observer " + key.obs +
                              " method " + key.method);
            t.scores[static_cast<std::size_t>(oi)][static_cast<std::size_t>(mi)] = score;
        }
        for (std::size_t o = 0; o < t.scores.size(); ++o)
            for (std::size_t m = 0; m < t.scores[o].size(); ++m)
                if (t.scores[o][m] == -1)
                    throw IoError("ratings: set " + set_id + " is missing a score for observer " +
                                  t.observer_ids[o] + " method " + t.method_ids[m]);
        t.validate();
        tables.push_back(std::move(t));
    }
    return tables;
}

inline void write_summary_csv(const std::string& path, const std::vector<PipelineResult>& results) {
    std::ofstream os(path);
    if (!os) throw IoError("ratings: cannot open " + path);
    os << "set_id,usable,chosen_method,R_q,S_r,S_e,delta_s,G_q,filtered_out,retained\n";
    for (const auto& pr : results) {
        if (!pr.usable) {
            os << pr.result.set_id << ",false,,,,,,,," << "\n";
            continue;
        }
        const auto& r = pr.result;
        os << r.set_id << ",true," << r.chosen_method << "," << r.r_q << "," << r.s_r << ","
           << r.s_e << "," << r.delta_s << "," << r.g_q << "," << (r.filtered_out ? "true" : "false")
           << "," << r.retained_observers.size() << "\n";
    }
}

}  // namespace uve

#endif  // UVE_ANNOTATE_MOS_HPP_
