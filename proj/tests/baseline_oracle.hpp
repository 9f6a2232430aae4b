#pragma once

// Five-document corpus with BM25 (k1 1.2, b 0.75) and Dirichlet QL (mu 2000
// and mu 10) scores computed by an independent Python script.

#include <string>
#include <utility>
#include <vector>

#include "matchpyramid/baselines.hpp"

namespace mp_test {

inline matchpyramid::Collection five_docs() {
    using matchpyramid::tokenize;
    const std::vector<std::pair<std::string, matchpyramid::TokenizedText>> docs = {
        {"d1", tokenize("the cat sat on the mat", false)},
        {"d2", tokenize("the dog sat", false)},
        {"d3", tokenize("cat cat dog", false)},
        {"d4", tokenize("a bird in the hand", false)},
        {"d5", tokenize("dog eat dog world", false)},
    };
    return matchpyramid::build_collection(docs, matchpyramid::TokenizerOptions{false, {}});
}

struct Expected {
    const char* query;
    const char* doc;
    double bm25;
    double ql2000;
    double ql10;
};

// Scripted formula oracle (independent Python evaluation of the same formulas).
inline const Expected kFiveDocs[] = {
    {"cat dog", "d1", 0.74487395332873263, -3.6066353543641867, -4.0135172330881463},
    {"cat dog", "d2", 0.61033427288848408, -3.6045144172013659, -3.7068723445344531},
    {"cat dog", "d3", 1.9192875306797519, -3.5975388034649405, -2.8314036071805528},
    {"cat dog", "d4", 0, -3.60913198605602, -4.4150684418751744},
    {"cat dog", "d5", 0.75118064355505731, -3.6028979641889451, -3.5592429057509549},
    {"the cat", "d1", 1.4062720498453369, -3.6013990875689403, -3.2956774399378297},
    {"the cat", "d2", 0.61033427288848408, -3.6045144172013659, -3.7068723445344531},
    {"the cat", "d3", 1.3089532577912677, -3.6001603641698923, -3.2533980172399279},
    {"the cat", "d4", 0.50003289827008335, -3.6065104253510682, -3.9930740318157993},
    {"the cat", "d5", 0, -3.6081342309841915, -4.277082698901272},
    {"zebra cat", "d1", 0.74487395332873263, -1.9454117687808561, -1.8852855272388784},
    {"zebra cat", "d2", 0, -1.9474090251790492, -2.2082744135228043},
    {"zebra cat", "d3", 1.3089532577912677, -1.9404334114426238, -1.3328056761689044},
    {"zebra cat", "d4", 0, -1.9484070292539004, -2.3513752571634776},
    {"zebra cat", "d5", 0, -1.9479081517179864, -2.2823823856765264},
    {"dog dog", "d1", 0, -3.3224471711666617, -4.2564634116985358},
    {"dog dog", "d2", 1.2206685457769682, -3.3142107840446333, -2.9971958620232972},
    {"dog dog", "d3", 1.2206685457769682, -3.3142107840446333, -2.9971958620232972},
    {"dog dog", "d4", 0, -3.3214499136042392, -4.1273863694233937},
    {"dog dog", "d5", 1.5023612871101146, -3.309979624941918, -2.553721040148857},
};

}  // namespace mp_test
