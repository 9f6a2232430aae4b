#include "matchpyramid/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "matchpyramid/error.hpp"

namespace matchpyramid {
namespace {

int grade_of(const std::map<std::string, int>& judged, const std::string& doc) {
    const auto it = judged.find(doc);
    return it == judged.end() ? 0 : it->second;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> fields;
    std::string field;
    while (in >> field) {
        fields.push_back(std::move(field));
    }
    return fields;
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

void sort_ranking(std::vector<ScoredDoc>& ranking) {
    std::sort(ranking.begin(), ranking.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
    });
}

double average_precision(std::span<const std::string> ranking, const std::map<std::string, int>& judged) {
    std::size_t total_relevant = 0;
    for (const auto& [doc, grade] : judged) {
        total_relevant += grade >= 1 ? 1 : 0;
    }
    if (total_relevant == 0) {
        return 0.0;
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (grade_of(judged, ranking[i]) >= 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(total_relevant);
}

double ndcg_at_k(std::span<const std::string> ranking, const std::map<std::string, int>& judged, std::size_t k) {
    if (k == 0) {
        throw Error("ndcg_at_k: k must be >= 1");
    }
    const auto gain = [](int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; };
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
        dcg += gain(grade_of(judged, ranking[i])) / std::log2(static_cast<double>(i + 2));
    }
    std::vector<int> grades;
    for (const auto& [doc, grade] : judged) {
        grades.push_back(grade);
    }
    std::sort(grades.begin(), grades.end(), std::greater<>());
    double ideal = 0.0;
    for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
        ideal += gain(grades[i]) / std::log2(static_cast<double>(i + 2));
    }
    return ideal > 0.0 ? dcg / ideal : 0.0;
}

double precision_at_k(std::span<const std::string> ranking, const std::map<std::string, int>& judged, std::size_t k) {
    if (k == 0) {
        throw Error("precision_at_k: k must be >= 1");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
        hits += grade_of(judged, ranking[i]) >= 1 ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

EvaluationReport evaluate_run(const RankedRun& run, const Qrels& qrels) {
    EvaluationReport report;
    double ap_sum = 0.0;
    double ndcg_sum = 0.0;
    double p_sum = 0.0;
    for (const auto& [qid, docs] : run) {
        const auto judged = qrels.find(qid);
        if (judged == qrels.end()) {
            report.warnings.push_back("query " + qid + " has no qrels; excluded from evaluation");
            continue;
        }
        std::vector<ScoredDoc> sorted = docs;
        sort_ranking(sorted);
        std::vector<std::string> ranking;
        ranking.reserve(sorted.size());
        for (const auto& d : sorted) {
            ranking.push_back(d.doc_id);
        }

        QueryMetrics m;
        m.query_id = qid;
        m.retrieved = ranking.size();
        for (const auto& [doc, grade] : judged->second) {
            m.relevant += grade >= 1 ? 1 : 0;
        }
        m.average_precision = average_precision(ranking, judged->second);
        m.ndcg_at_20 = ndcg_at_k(ranking, judged->second, 20);
        m.precision_at_20 = precision_at_k(ranking, judged->second, 20);
        if (m.relevant > 0) {
            ap_sum += m.average_precision;
            ++report.map_queries;
        }
        ndcg_sum += m.ndcg_at_20;
        p_sum += m.precision_at_20;
        report.per_query.push_back(std::move(m));
    }
    if (report.per_query.empty()) {
        throw Error("evaluate_run: run and qrels share no query");
    }
    const auto n = static_cast<double>(report.per_query.size());
    report.map = report.map_queries > 0 ? ap_sum / static_cast<double>(report.map_queries) : 0.0;
    report.ndcg_at_20 = ndcg_sum / n;
    report.precision_at_20 = p_sum / n;
    return report;
}

Qrels parse_qrels(std::istream& in, const std::string& source_name, std::vector<std::string>* warnings) {
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (fields.empty()) {
            continue;
        }
        int grade = 0;
        if (fields.size() != 4 || !parse_number(fields[3], grade)) {
            throw ParseError(source_name, line_no, "expected 'qid iter docid grade'");
        }
        if (grade < 0) {
            throw ParseError(source_name, line_no, "negative relevance grade");
        }
        auto& judged = qrels[fields[0]];
        const auto [it, inserted] = judged.insert_or_assign(fields[2], grade);
        if (!inserted && warnings != nullptr) {
            warnings->push_back(source_name + ":" + std::to_string(line_no) + ": duplicate judgment for (" +
                                fields[0] + ", " + fields[2] + "); keeping the last");
        }
    }
    if (in.bad()) {
        throw ParseError(source_name, line_no, "read failure");
    }
    return qrels;
}

Qrels parse_qrels(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) {
        throw Error(path + ": cannot open qrels file");
    }
    return parse_qrels(in, path, warnings);
}

void write_run(std::ostream& out, const RankedRun& run, const std::string& tag) {
    if (tag.empty() || tag.find_first_of(" \t\n") != std::string::npos) {
        throw Error("write_run: run tag must be a non-empty word");
    }
    char score[64];
    for (const auto& [qid, docs] : run) {
        std::vector<ScoredDoc> sorted = docs;
        sort_ranking(sorted);
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            std::snprintf(score, sizeof score, "%.17g", sorted[i].score);
            out << qid << " Q0 " << sorted[i].doc_id << ' ' << (i + 1) << ' ' << score << ' ' << tag << '\n';
        }
    }
}

void write_run(const std::string& path, const RankedRun& run, const std::string& tag) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(path + ": cannot open for writing");
    }
    write_run(out, run, tag);
    if (!out) {
        throw Error(path + ": write failed");
    }
}

RankedRun parse_run(std::istream& in, const std::string& source_name, std::vector<std::string>* warnings) {
    struct Row {
        ScoredDoc doc;
        long rank;
    };
    std::map<std::string, std::vector<Row>> rows;
    std::map<std::string, std::set<std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (fields.empty()) {
            continue;
        }
        long rank = 0;
        double score = 0.0;
        if (fields.size() != 6 || !parse_number(fields[3], rank) || !parse_number(fields[4], score)) {
            throw ParseError(source_name, line_no, "expected 'qid Q0 docid rank score tag'");
        }
        if (!std::isfinite(score)) {
            throw ParseError(source_name, line_no, "non-finite score");
        }
        if (!seen[fields[0]].insert(fields[2]).second) {
            throw ParseError(source_name, line_no, "duplicate document " + fields[2] + " for query " + fields[0]);
        }
        rows[fields[0]].push_back({{fields[2], score}, rank});
    }
    if (in.bad()) {
        throw ParseError(source_name, line_no, "read failure");
    }

    RankedRun run;
    for (auto& [qid, list] : rows) {
        auto& ranking = run[qid];
        ranking.reserve(list.size());
        for (const auto& row : list) {
            ranking.push_back(row.doc);
        }
        sort_ranking(ranking);
        bool consistent = true;
        std::map<std::string, long> rank_of;
        for (const auto& row : list) {
            rank_of[row.doc.doc_id] = row.rank;
        }
        for (std::size_t i = 0; i < ranking.size() && consistent; ++i) {
            consistent = rank_of[ranking[i].doc_id] == static_cast<long>(i + 1);
        }
        if (!consistent && warnings != nullptr) {
            warnings->push_back(source_name + ": query " + qid +
                                ": rank column disagrees with score order; using score order");
        }
    }
    return run;
}

RankedRun parse_run(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) {
        throw Error(path + ": cannot open run file");
    }
    return parse_run(in, path, warnings);
}

void write_report(std::ostream& out, const EvaluationReport& report) {
    char buf[256];
    out << "query\tAP\tnDCG@20\tP@20\trelevant\tretrieved\n";
    for (const auto& m : report.per_query) {
        std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t%.6f\t%zu\t%zu", m.average_precision, m.ndcg_at_20,
                      m.precision_at_20, m.relevant, m.retrieved);
        out << m.query_id << '\t' << buf << '\n';
    }
    std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t%.6f\t%zu\t%zu", report.map, report.ndcg_at_20,
                  report.precision_at_20, report.map_queries, report.per_query.size());
    out << "all\t" << buf << '\n';
}

}  // namespace matchpyramid
