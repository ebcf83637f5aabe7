#include <doctest.h>

#include <set>

#include "natval/wata.hpp"

using namespace natval;
using wata::TermSet;

TEST_CASE("tokenizer") {
    CHECK(wata::tokenize("Sugarcane bagasse ASH") == TermSet{"sugarcane", "bagasse", "ash"});
    CHECK(wata::tokenize("fruit fruit fruit") == TermSet{"fruit"});
    CHECK(wata::tokenize("sp. nov. described").contains("nov."));
    CHECK(wata::tokenize("A new species, sp. nov. from Mauritius").contains("nov."));
    // Sentence-final periods are not abbreviations.
    const auto t = wata::tokenize("The island was. The economy grew.");
    CHECK(t.contains("was"));
    CHECK(t.contains("grew"));
    CHECK_FALSE(t.contains("was."));
    CHECK(wata::tokenize("small-island states") == TermSet{"small-island", "states"});
    CHECK(wata::tokenize("Mauritian economy").contains("mauritian"));
}

TEST_CASE("median split") {
    auto s = wata::split_by_median(std::vector<double>{1, 2, 3, 4});
    CHECK(s.median == 2.5);
    CHECK(s.high == std::vector<std::size_t>{2, 3});
    CHECK(s.low == std::vector<std::size_t>{0, 1});

    s = wata::split_by_median(std::vector<double>{1, 2, 2, 9});
    CHECK(s.median == 2.0);
    CHECK(s.high == std::vector<std::size_t>{3});
    CHECK(s.low == std::vector<std::size_t>{0, 1, 2});

    CHECK_THROWS_AS(wata::split_by_median(std::vector<double>{5, 5, 5}), Error);
}

TEST_CASE("enriched terms") {
    std::vector<TermSet> high(100), low(100);
    for (int i = 0; i < 100; ++i) {
        if (i < 90) high[i].insert("planted");
        if (i < 5) low[i].insert("planted");
        if (i < 40) {
            high[i].insert("even");
            low[i].insert("even");
        }
        if (i < 5) low[i].insert("lowish");
        high[i].insert("everywhere");
        low[i].insert("everywhere");
    }
    high[0].insert("rare");
    const auto terms = wata::enriched_terms(high, low, {});
    REQUIRE_FALSE(terms.empty());
    CHECK(terms[0].term == "planted");
    CHECK(terms[0].selected);
    CHECK(terms[0].chi2 == doctest::Approx(145.0).epsilon(0.01));
    for (const auto& t : terms) {
        CHECK(t.term != "rare");
        if (t.term == "even") {
            CHECK(t.chi2 == 0.0);
            CHECK_FALSE(t.selected);
        }
        if (t.term == "everywhere") CHECK(t.p == 1.0);
        if (t.term == "lowish") CHECK_FALSE(t.selected);
    }

    wata::EnrichmentConfig cfg;
    cfg.stop_words = {"planted"};
    for (const auto& t : wata::enriched_terms(high, low, cfg)) CHECK(t.term != "planted");
}

TEST_CASE("context sampling") {
    std::vector<wata::Document> docs;
    for (int i = 0; i < 50; ++i) {
        docs.push_back({"d" + std::to_string(100 + i),
                        "Opening line here. The island economy matters in case " + std::to_string(i) + ". Closing."});
    }
    docs.push_back({"none", "Nothing relevant."});

    const auto a = wata::sample_contexts("island", docs, 10, 7);
    const auto b = wata::sample_contexts("island", docs, 10, 7);
    REQUIRE(a.size() == 10);
    std::set<std::string> ids;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ids.insert(a[i].article_id);
        CHECK(a[i].article_id == b[i].article_id);
        CHECK(a[i].sentence.rfind("The island economy matters", 0) == 0);
    }
    CHECK(ids.size() == 10);

    std::vector<wata::Document> three(docs.begin(), docs.begin() + 3);
    CHECK(wata::sample_contexts("island", three, 10, 7).size() == 3);
    CHECK_THROWS_AS(wata::sample_contexts("volcano", docs, 10, 7), Error);
}
