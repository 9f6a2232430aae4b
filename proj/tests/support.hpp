#pragma once

// Helpers shared by the test binaries: scratch directories, small file
// writers, and brute-force reference implementations used as oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "matchpyramid/evaluation.hpp"
#include "matchpyramid/matching_matrix.hpp"
#include "matchpyramid/pyramid_net.hpp"
#include "matchpyramid/random.hpp"
#include "matchpyramid/text.hpp"

namespace mp_test {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("matchpyramid-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

    std::string write(const std::string& name, const std::string& content) const {
        const auto p = file(name);
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }

private:
    fs::path path_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline matchpyramid::MatchingMatrix random_matrix(matchpyramid::Rng& rng, std::size_t rows, std::size_t cols) {
    matchpyramid::MatchingMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.kind = matchpyramid::SimilarityKind::gaussian;
    m.values.resize(rows * cols);
    for (auto& v : m.values) {
        v = rng.uniform(-1.0, 1.0);
    }
    return m;
}

/// Model with every parameter drawn uniformly from [-scale, scale].
inline matchpyramid::PyramidModel random_model(const matchpyramid::PyramidConfig& cfg, matchpyramid::Rng& rng,
                                               double scale = 0.5) {
    auto model = matchpyramid::PyramidModel::initialize(cfg, rng.next_u64());
    model.params.for_each_block([&](std::string_view, std::vector<double>& block) {
        for (auto& v : block) {
            v = rng.uniform(-scale, scale);
        }
    });
    return model;
}

/// Nested-loop "same" convolution straight from the definition: output (i, j)
/// sums kernel(a, b) * M(i + a - (kr-1)/2, j + b - (kc-1)/2) over in-range cells.
inline std::vector<double> naive_conv(const matchpyramid::MatchingMatrix& m, const matchpyramid::PyramidModel& model) {
    const auto& c = model.config;
    std::vector<double> out;
    for (std::size_t f = 0; f < c.feature_maps; ++f) {
        for (long i = 0; i < static_cast<long>(m.rows); ++i) {
            for (long j = 0; j < static_cast<long>(m.cols); ++j) {
                double acc = model.params.conv_bias[f];
                for (long a = 0; a < static_cast<long>(c.kernel_rows); ++a) {
                    for (long b = 0; b < static_cast<long>(c.kernel_cols); ++b) {
                        const long r = i + a - (static_cast<long>(c.kernel_rows) - 1) / 2;
                        const long col = j + b - (static_cast<long>(c.kernel_cols) - 1) / 2;
                        if (r < 0 || col < 0 || r >= static_cast<long>(m.rows) || col >= static_cast<long>(m.cols)) {
                            continue;
                        }
                        acc += model.params.conv_kernels[(f * c.kernel_rows + a) * c.kernel_cols + b] *
                               m.values[r * m.cols + col];
                    }
                }
                out.push_back(acc);
            }
        }
    }
    return out;
}

struct PoolOracle {
    std::vector<double> values;
    std::vector<matchpyramid::GridCoord> argmax;
};

/// Enumerates every region explicitly. Region (pi, pj) covers rows
/// [floor(pi*R'/P), floor((pi+1)*R'/P)) of the input zero-padded to
/// R' = max(R, P), likewise for columns; the first maximum in row-major order wins.
inline PoolOracle brute_force_pool(const matchpyramid::FeatureMaps& maps, std::size_t pr, std::size_t pc) {
    PoolOracle out;
    const std::size_t rp = std::max(maps.rows, pr);
    const std::size_t cp = std::max(maps.cols, pc);
    for (std::size_t f = 0; f < maps.maps; ++f) {
        for (std::size_t pi = 0; pi < pr; ++pi) {
            for (std::size_t pj = 0; pj < pc; ++pj) {
                const std::size_t r0 = pi * rp / pr;
                const std::size_t r1 = (pi + 1) * rp / pr;
                const std::size_t c0 = pj * cp / pc;
                const std::size_t c1 = (pj + 1) * cp / pc;
                bool first = true;
                double best = 0.0;
                matchpyramid::GridCoord at{};
                for (std::size_t r = r0; r < r1; ++r) {
                    for (std::size_t c = c0; c < c1; ++c) {
                        const double v = (r < maps.rows && c < maps.cols) ? maps.at(f, r, c) : 0.0;
                        if (first || v > best) {
                            best = v;
                            at = {r, c};
                            first = false;
                        }
                    }
                }
                out.values.push_back(best);
                out.argmax.push_back(at);
            }
        }
    }
    return out;
}

/// AP / nDCG / P@k computed the slow way, from the definitions.
struct MetricOracle {
    static double ap(const std::vector<std::string>& ranking, const std::map<std::string, int>& judged) {
        std::size_t total = 0;
        for (const auto& [d, g] : judged) {
            total += g >= 1 ? 1 : 0;
        }
        if (total == 0) {
            return 0.0;
        }
        double sum = 0.0;
        for (std::size_t k = 1; k <= ranking.size(); ++k) {
            if (!is_rel(ranking[k - 1], judged)) {
                continue;
            }
            std::size_t hits = 0;
            for (std::size_t i = 0; i < k; ++i) {
                hits += is_rel(ranking[i], judged) ? 1 : 0;
            }
            sum += static_cast<double>(hits) / static_cast<double>(k);
        }
        return sum / static_cast<double>(total);
    }

    static double ndcg(const std::vector<std::string>& ranking, const std::map<std::string, int>& judged,
                       std::size_t k) {
        double dcg = 0.0;
        for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
            const auto it = judged.find(ranking[i]);
            const int g = it == judged.end() ? 0 : it->second;
            dcg += (std::pow(2.0, g) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
        }
        std::vector<int> grades;
        for (const auto& [d, g] : judged) {
            grades.push_back(g);
        }
        std::sort(grades.rbegin(), grades.rend());
        double ideal = 0.0;
        for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
            ideal += (std::pow(2.0, grades[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
        }
        return ideal > 0.0 ? dcg / ideal : 0.0;
    }

    static double precision(const std::vector<std::string>& ranking, const std::map<std::string, int>& judged,
                            std::size_t k) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
            hits += is_rel(ranking[i], judged) ? 1 : 0;
        }
        return static_cast<double>(hits) / static_cast<double>(k);
    }

private:
    static bool is_rel(const std::string& d, const std::map<std::string, int>& judged) {
        const auto it = judged.find(d);
        return it != judged.end() && it->second >= 1;
    }
};

using matchpyramid::EmbeddingTable;
using matchpyramid::Qrels;
using matchpyramid::RankedRun;
using matchpyramid::TokenizedCollection;
using matchpyramid::Vocabulary;

/// Synthetic re-ranking task. Every query has three private words. Relevant
/// documents contain two or three of them. Non-relevant documents contain
/// "neighbour" words whose vectors are the query word's vector scaled by 1.5
/// to 3.5, so their dot product with the query word beats the exact match's,
/// and optionally one query word. Everything else is filler.
struct SyntheticTask {
    TokenizedCollection queries;  // encoded
    TokenizedCollection docs;     // encoded
    std::map<std::string, std::string> query_text;
    std::map<std::string, std::string> doc_text;
    Vocabulary vocab;
    EmbeddingTable embeddings;
    std::map<std::string, std::vector<double>> vectors;  // by word
    Qrels qrels;
    RankedRun candidates;  // per query, its own candidate list (score 0)
    std::vector<std::string> query_ids;
};

struct SyntheticOptions {
    std::size_t queries = 30;
    std::size_t candidates = 20;
    std::size_t positives = 5;
    std::size_t dim = 16;
    std::size_t fillers = 300;
    double negative_query_word_rate = 0.0;
    std::size_t min_len = 20;
    std::size_t max_len = 60;
    std::string prefix = "";
};

inline SyntheticTask make_synthetic_task(const SyntheticOptions& o, std::uint64_t seed) {
    using namespace matchpyramid;
    Rng rng(seed);
    SyntheticTask task;
    const auto random_vector = [&](double norm) {
        std::vector<double> x(o.dim);
        double sq = 0.0;
        for (auto& c : x) {
            c = rng.normal();
            sq += c * c;
        }
        for (auto& c : x) {
            c *= norm / std::sqrt(sq);
        }
        return x;
    };
    std::vector<std::string> fillers;
    for (std::size_t j = 0; j < o.fillers; ++j) {
        fillers.push_back(o.prefix + "filler" + std::to_string(j));
        task.vectors[fillers.back()] = random_vector(rng.uniform(0.6, 1.4));
    }
    const auto filler_text = [&](std::vector<std::string>& words) {
        const std::size_t n = o.min_len + rng.below(o.max_len - o.min_len + 1);
        for (std::size_t k = 0; k < n; ++k) {
            words.push_back(fillers[rng.below(fillers.size())]);
        }
    };
    const auto insert = [&](std::vector<std::string>& words, const std::string& w) {
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)), w);
    };
    const auto join = [](const std::vector<std::string>& words) {
        std::string s;
        for (const auto& w : words) {
            s += (s.empty() ? "" : " ") + w;
        }
        return s;
    };

    for (std::size_t q = 0; q < o.queries; ++q) {
        const std::string qid = o.prefix + "Q" + std::to_string(q);
        task.query_ids.push_back(qid);
        std::vector<std::string> qwords;
        std::vector<std::string> neighbours;
        for (int k = 0; k < 3; ++k) {
            const std::string w = o.prefix + "q" + std::to_string(q) + "word" + std::to_string(k);
            const std::string n = o.prefix + "q" + std::to_string(q) + "near" + std::to_string(k);
            auto base = random_vector(rng.uniform(0.6, 1.4));
            const double scale = rng.uniform(1.5, 3.5);
            std::vector<double> near(base.size());
            for (std::size_t c = 0; c < base.size(); ++c) {
                near[c] = scale * base[c] + 0.05 * rng.normal();
            }
            task.vectors[w] = std::move(base);
            task.vectors[n] = std::move(near);
            qwords.push_back(w);
            neighbours.push_back(n);
        }
        task.query_text[qid] = join(qwords);
        auto& list = task.candidates[qid];
        for (std::size_t d = 0; d < o.candidates; ++d) {
            const std::string did = qid + "-D" + std::to_string(d);
            std::vector<std::string> words;
            filler_text(words);
            const bool relevant = d < o.positives;
            if (relevant) {
                const std::size_t distinct = 2 + rng.below(2);
                for (std::size_t k = 0; k < distinct; ++k) {
                    for (std::size_t rep = 0, n = 1 + rng.below(2); rep < n; ++rep) {
                        insert(words, qwords[k]);
                    }
                }
            } else {
                for (std::size_t rep = 0, n = 1 + rng.below(3); rep < n; ++rep) {
                    insert(words, neighbours[rng.below(neighbours.size())]);
                }
                if (rng.uniform() < o.negative_query_word_rate) {
                    insert(words, qwords[rng.below(qwords.size())]);
                }
            }
            task.doc_text[did] = join(words);
            task.qrels[qid][did] = relevant ? 1 : 0;
            list.push_back({did, 0.0});
        }
        sort_ranking(list);
    }

    std::vector<TokenizedText> all;
    for (const auto& [id, text] : task.query_text) {
        all.push_back(tokenize(text, false));
    }
    for (const auto& [id, text] : task.doc_text) {
        all.push_back(tokenize(text, false));
    }
    task.vocab = build_vocab(all, 1);
    task.embeddings = EmbeddingTable(o.dim, task.vocab.size() + 1);
    for (const auto& [word, vec] : task.vectors) {
        const TokenId id = task.vocab.lookup(word);
        if (id != task.vocab.oov_index()) {
            std::copy(vec.begin(), vec.end(), task.embeddings.mutable_vector(id).begin());
        }
    }
    for (const auto& [id, text] : task.query_text) {
        task.queries[id] = encode(tokenize(text, false), task.vocab, 5);
    }
    for (const auto& [id, text] : task.doc_text) {
        task.docs[id] = encode(tokenize(text, false), task.vocab, 500);
    }
    return task;
}

/// Writes corpus, queries, qrels and word2vec files for a task; returns the paths.
struct SyntheticFiles {
    std::string corpus;
    std::string queries;
    std::string qrels;
    std::string embeddings;
};

inline SyntheticFiles write_synthetic_files(const SyntheticTask& task, const ScratchDir& dir) {
    SyntheticFiles f{dir.file("corpus.tsv"), dir.file("queries.tsv"), dir.file("qrels.txt"), dir.file("emb.txt")};
    {
        std::ofstream out(f.corpus);
        for (const auto& [id, text] : task.doc_text) {
            out << id << '\t' << text << '\n';
        }
    }
    {
        std::ofstream out(f.queries);
        for (const auto& [id, text] : task.query_text) {
            out << id << '\t' << text << '\n';
        }
    }
    {
        std::ofstream out(f.qrels);
        for (const auto& [qid, docs] : task.qrels) {
            for (const auto& [did, grade] : docs) {
                out << qid << " 0 " << did << ' ' << grade << '\n';
            }
        }
    }
    {
        std::ofstream out(f.embeddings);
        out.precision(17);
        const std::size_t dim = task.vectors.begin()->second.size();
        out << task.vectors.size() << ' ' << dim << '\n';
        for (const auto& [word, vec] : task.vectors) {
            out << word;
            for (double x : vec) {
                out << ' ' << x;
            }
            out << '\n';
        }
    }
    return f;
}

}  // namespace mp_test
