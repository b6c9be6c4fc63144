#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "cogdec/errors.hpp"
#include "test_common.hpp"

using namespace cogdec;
using cogdec::testing::TempDir;
using cogdec::testing::make_corpus;
using cogdec::testing::make_study;

TEST_CASE("manifest load reflects declared studies") {
    TempDir tmp;
    const Corpus corpus = make_corpus(2, 4, 3, 100, 5);
    save_corpus(corpus, tmp.path);
    const Corpus loaded = load_corpus(tmp.path / "manifest.json");
    CHECK(loaded.n_studies() == 2);
    CHECK(loaded.n_features() == 100);
    CHECK(loaded.studies[0].n_maps() == corpus.studies[0].n_maps());
    CHECK(loaded.studies[1].labels == corpus.studies[1].labels);
}

TEST_CASE("load then re-serialize produces byte-identical matrix files") {
    TempDir tmp;
    save_corpus(make_corpus(2, 4, 3, 30, 9), tmp.path / "first");
    const Corpus loaded = load_corpus(tmp.path / "first" / "manifest.json");
    save_corpus(loaded, tmp.path / "second");
    for (const auto& s : loaded.studies) {
        std::ifstream a(tmp.path / "first" / (s.id + "_X.mat"), std::ios::binary);
        std::ifstream b(tmp.path / "second" / (s.id + "_X.mat"), std::ios::binary);
        const std::string sa(std::istreambuf_iterator<char>(a), {});
        const std::string sb(std::istreambuf_iterator<char>(b), {});
        CHECK(sa == sb);
    }
}

TEST_CASE("distinct load diagnostics") {
    TempDir tmp;
    Corpus corpus = make_corpus(1, 3, 3, 10, 4);

    SUBCASE("label out of range") {
        corpus.studies[0].labels[0] = 3;  // declares 3 contrasts: 0..2
        save_corpus(corpus, tmp.path);
        CHECK_THROWS_WITH_AS(load_corpus(tmp.path / "manifest.json"),
                             doctest::Contains("label out of range"), data_error);
    }
    SUBCASE("duplicate study id") {
        corpus.studies.push_back(corpus.studies[0]);
        // bypass save_corpus validation by writing by hand
        save_corpus(make_corpus(1, 3, 3, 10, 4), tmp.path);
        std::ifstream in(tmp.path / "manifest.json");
        std::string manifest(std::istreambuf_iterator<char>(in), {});
        in.close();
        const auto pos = manifest.find("\"studies\": [");
        REQUIRE(pos != std::string::npos);
        const auto open = manifest.find('{', pos);
        const auto close = manifest.find('}', open);
        const std::string entry = manifest.substr(open, close - open + 1);
        manifest.insert(close + 1, "," + entry);
        std::ofstream(tmp.path / "manifest.json") << manifest;
        CHECK_THROWS_WITH_AS(load_corpus(tmp.path / "manifest.json"),
                             doctest::Contains("duplicate study id"), data_error);
    }
    SUBCASE("missing matrix file") {
        save_corpus(corpus, tmp.path);
        std::filesystem::remove(tmp.path / "study0_X.mat");
        CHECK_THROWS_WITH_AS(load_corpus(tmp.path / "manifest.json"),
                             doctest::Contains("missing"), data_error);
    }
    SUBCASE("shape mismatch") {
        save_corpus(corpus, tmp.path);
        std::ofstream(tmp.path / "study0_labels.txt") << "0\n1\n";
        CHECK_THROWS_WITH_AS(load_corpus(tmp.path / "manifest.json"),
                             doctest::Contains("shape mismatch"), data_error);
    }
}

TEST_CASE("half split partitions subjects per study") {
    const Corpus corpus = make_corpus(1, 16, 3, 12, 21);
    const SplitPair pair = half_split(corpus, 3, 0.5);
    CHECK(pair.train.studies[0].n_subjects() == 8);
    CHECK(pair.test.studies[0].n_subjects() == 8);
    CHECK(pair.train.studies[0].n_maps() + pair.test.studies[0].n_maps() ==
          corpus.studies[0].n_maps());
}

TEST_CASE("odd subject count rounds the extra subject into train") {
    const Corpus corpus = make_corpus(1, 7, 2, 8, 2);
    const SplitPair pair = half_split(corpus, 1, 0.5);
    CHECK(pair.train.studies[0].n_subjects() == 4);
    CHECK(pair.test.studies[0].n_subjects() == 3);
}

TEST_CASE("shared subject lands on the same side in every study") {
    Corpus corpus = make_corpus(2, 6, 2, 8, 31);
    // rename one subject of study1 to match a subject of study0
    const std::string shared = "study0_s2";
    for (auto& sid : corpus.studies[1].subject_ids)
        if (sid == "study1_s4") sid = shared;

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const SplitPair pair = half_split(corpus, seed, 0.5);
        int sides = 0;
        for (int which = 0; which < 2; ++which) {
            const Corpus& half = which == 0 ? pair.train : pair.test;
            bool in0 = false, in1 = false;
            for (const auto& sid : half.studies[0].subject_ids)
                if (sid == shared) in0 = true;
            for (const auto& sid : half.studies[1].subject_ids)
                if (sid == shared) in1 = true;
            CHECK(in0 == in1);  // same side in both studies
            if (in0) ++sides;
        }
        CHECK(sides == 1);  // exactly one side holds the subject
    }
}

TEST_CASE("split is deterministic and recovers every map exactly once") {
    const Corpus corpus = make_corpus(3, 5, 4, 10, 77);
    const SplitPair a = half_split(corpus, 12, 0.5);
    const SplitPair b = half_split(corpus, 12, 0.5);
    for (std::size_t j = 0; j < corpus.n_studies(); ++j) {
        CHECK(a.train.studies[j].data == b.train.studies[j].data);
        CHECK(a.test.studies[j].subject_ids == b.test.studies[j].subject_ids);

        // union of maps = original corpus (subject-wise partition)
        std::multiset<std::string> got, want;
        for (const auto& sid : a.train.studies[j].subject_ids) got.insert(sid);
        for (const auto& sid : a.test.studies[j].subject_ids) got.insert(sid);
        for (const auto& sid : corpus.studies[j].subject_ids) want.insert(sid);
        CHECK(got == want);
    }
}

TEST_CASE("distinct seeds give distinct partitions") {
    const Corpus corpus = make_corpus(1, 8, 2, 6, 15);
    std::set<std::string> partitions;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const SplitPair pair = half_split(corpus, seed, 0.5);
        std::set<std::string> train(pair.train.studies[0].subject_ids.begin(),
                                    pair.train.studies[0].subject_ids.end());
        std::string key;
        for (const auto& sid : train) key += sid + "|";
        partitions.insert(key);
    }
    CHECK(partitions.size() >= 2);
}

TEST_CASE("single-subject study is split-infeasible with the study named") {
    Corpus corpus = make_corpus(1, 1, 2, 6, 1);
    CHECK_THROWS_WITH_AS(half_split(corpus, 1, 0.5), doctest::Contains("study0"),
                         data_error);
}

TEST_CASE("subject repeating a contrast violates an invariant") {
    Corpus corpus = make_corpus(1, 2, 2, 6, 1);
    corpus.studies[0].subject_ids[2] = corpus.studies[0].subject_ids[0];
    CHECK_THROWS_AS(corpus.validate(), data_error);
}
