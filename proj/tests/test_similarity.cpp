#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rwom/similarity.hpp"

using namespace rwom;

TEST_CASE("identical strings score 1, including the empty pair") {
    CHECK(similarity("", "") == 1.0);
    CHECK(similarity("a", "a") == 1.0);
    CHECK(similarity("the same sentence twice", "the same sentence twice") == 1.0);
}

TEST_CASE("disjoint alphabets score 0") {
    CHECK(similarity("aaaa", "bbbb") == 0.0);
    CHECK(similarity("xyz", "") == 0.0);
    CHECK(similarity("", "xyz") == 0.0);
}

TEST_CASE("the textbook overlap example scores 0.75") {
    CHECK(similarity("abcd", "bcde") == doctest::Approx(0.75));
    // Symmetric lengths give a symmetric denominator even if the recursive
    // decomposition differs by argument order.
    CHECK(similarity("bcde", "abcd") == doctest::Approx(0.75));
}

TEST_CASE("scores are bounded and match the DP reference on random pairs") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> len(0, 80);
    std::uniform_int_distribution<int> alpha(0, 5);
    for (int trial = 0; trial < 300; ++trial) {
        std::string a, b;
        int la = len(rng), lb = len(rng);
        for (int i = 0; i < la; ++i) a += static_cast<char>('a' + alpha(rng));
        for (int i = 0; i < lb; ++i) b += static_cast<char>('a' + alpha(rng));
        double s = similarity(a, b);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        CHECK(s == doctest::Approx(oracles::ref_similarity(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("longer shared runs score higher than scattered characters") {
    // A contiguous common block beats the same characters shuffled apart.
    double contiguous = similarity("open the panel", "open the label");
    double scattered = similarity("open the panel", "lnap eeth nope");
    CHECK(contiguous > scattered);
}
