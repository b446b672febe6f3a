#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "knowledge.hpp"
#include "rng.hpp"

using namespace flowcast;
namespace fs = std::filesystem;

namespace {

struct TempCorpus {
    fs::path root;
    TempCorpus() {
        root = fs::temp_directory_path() / ("flowcast_corpus_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root / "prot");
        fs::create_directories(root / "phy");
        fs::create_directories(root / "empty");
    }
    ~TempCorpus() { fs::remove_all(root); }

    void write(const std::string& rel, const std::string& content) {
        std::ofstream out(root / rel);
        out << content;
    }
};

const std::string kWaveRule =
    "---\n"
    "variable: wave_height\n"
    "op: >\n"
    "value: 5\n"
    "unit: m\n"
    "directive: suspend flight routes\n"
    "---\n"
    "Operational standard: significant wave heights above five meters require "
    "suspension of low-altitude flight routes and small craft advisories.\n";

}  // namespace

TEST_CASE("hashing embedder is deterministic and unit-normalized") {
    HashingEmbedder embedder(256, 7);
    auto a = embedder.embed("mass conservation of incompressible flow");
    auto b = embedder.embed("mass conservation of incompressible flow");
    CHECK(a == b);
    CHECK(a.size() == 256);
    double norm = 0.0;
    for (double x : a) norm += x * x;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    // Empty text embeds to the zero vector rather than failing.
    auto zero = embedder.embed("");
    CHECK(std::all_of(zero.begin(), zero.end(), [](double x) { return x == 0.0; }));
}

TEST_CASE("ingest parses front-matter threshold rules") {
    TempCorpus corpus;
    corpus.write("prot/wave_height_flights.txt", kWaveRule);
    corpus.write("prot/wave_height_harbor.txt",
                 "---\nvariable: wave_height\nop: >\nvalue: 7\nunit: m\ndirective: close harbor "
                 "entrance\n---\nSevere sea state protocol for harbor operations.\n");
    corpus.write("prot/cold_surge.txt",
                 "---\nvariable: temperature\nop: <\nvalue: 248.15\nunit: K\ndirective: issue deep "
                 "freeze advisory\n---\nCold surge response protocol.\n");

    HashingEmbedder embedder(64, 3);
    KnowledgeStore store;
    CHECK(store.ingest_directory(corpus.root / "prot", Partition::prot, embedder) == 3);
    CHECK(store.size() == 3);
    CHECK(store.protocol_rules().size() == 3);
    const auto& chunk = store.chunk_by_id("prot/wave_height_flights");
    REQUIRE(chunk.rule.has_value());
    CHECK(chunk.rule->comparator == ">");
    CHECK(chunk.rule->value == 5.0);
    CHECK(chunk.rule->directive == "suspend flight routes");
}

TEST_CASE("ingest edge cases") {
    TempCorpus corpus;
    HashingEmbedder embedder(64, 3);

    SUBCASE("empty directory ingests zero chunks") {
        KnowledgeStore store;
        CHECK(store.ingest_directory(corpus.root / "empty", Partition::hist, embedder) == 0);
    }
    SUBCASE("duplicate ids are rejected") {
        corpus.write("phy/navier_stokes.txt", "The Navier-Stokes equations govern viscous flow.\n");
        KnowledgeStore store;
        store.ingest_directory(corpus.root / "phy", Partition::phy, embedder);
        CHECK_THROWS_WITH_AS(store.ingest_directory(corpus.root / "phy", Partition::phy, embedder),
                             doctest::Contains("duplicate"), Error);
    }
    SUBCASE("malformed front-matter names the file") {
        corpus.write("prot/broken.txt", "---\nvariable wave_height\n---\nbody\n");
        KnowledgeStore store;
        CHECK_THROWS_WITH_AS(store.ingest_directory(corpus.root / "prot", Partition::prot, embedder),
                             doctest::Contains("broken"), Error);
    }
    SUBCASE("threshold rules outside prot are rejected") {
        corpus.write("phy/rule.txt", kWaveRule);
        KnowledgeStore store;
        CHECK_THROWS_WITH_AS(store.ingest_directory(corpus.root / "phy", Partition::phy, embedder),
                             doctest::Contains("prot"), Error);
    }
    SUBCASE("missing directory raises") {
        KnowledgeStore store;
        CHECK_THROWS_AS(store.ingest_directory(corpus.root / "nope", Partition::phy, embedder), Error);
    }
}

TEST_CASE("mips ranks an exact-match embedding first") {
    HashingEmbedder embedder(64, 3);
    KnowledgeStore store;
    const std::vector<std::string> texts = {"vorticity dynamics of two dimensional turbulence",
                                            "ensemble forecast spread and uncertainty",
                                            "wave height safety protocols"};
    for (size_t i = 0; i < texts.size(); ++i) {
        KnowledgeChunk c;
        c.id = "phy/c" + std::to_string(i);
        c.partition = Partition::phy;
        c.text = texts[i];
        c.embedding = embedder.embed(texts[i]);
        store.add(std::move(c));
    }
    auto result = store.mips_topk(embedder.embed(texts[1]), 2, Partition::phy);
    REQUIRE(result.ranked.size() == 2);
    CHECK(result.ranked[0].id == "phy/c1");
    CHECK(result.ranked[0].score >= result.ranked[1].score);
}

TEST_CASE("mips equals a brute-force rescan on a random store") {
    Rng rng(2024);
    const int dim = 32, n_chunks = 1000, n_queries = 100, k = 10;
    KnowledgeStore store(dim);
    std::vector<std::vector<double>> embeddings;
    for (int i = 0; i < n_chunks; ++i) {
        KnowledgeChunk c;
        char id[32];
        std::snprintf(id, sizeof(id), "hist/chunk%04d", i);
        c.id = id;
        c.partition = Partition::hist;
        c.text = "entry";
        c.embedding.resize(dim);
        for (double& x : c.embedding) x = rng.next_gaussian();
        embeddings.push_back(c.embedding);
        store.add(std::move(c));
    }
    for (int q = 0; q < n_queries; ++q) {
        std::vector<double> query(dim);
        for (double& x : query) x = rng.next_gaussian();
        auto result = store.mips_topk(query, k);

        // Independent recomputation: full scan + stable sort.
        std::vector<std::pair<double, int>> scores;
        for (int i = 0; i < n_chunks; ++i) {
            double s = 0.0;
            for (int d = 0; d < dim; ++d) s += embeddings[i][d] * query[d];
            scores.emplace_back(s, i);
        }
        std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;  // index order == id order here
        });
        REQUIRE(result.ranked.size() == static_cast<size_t>(k));
        for (int i = 0; i < k; ++i) {
            char id[32];
            std::snprintf(id, sizeof(id), "hist/chunk%04d", scores[i].second);
            CHECK(result.ranked[i].id == id);
            CHECK(result.ranked[i].score == doctest::Approx(scores[i].first).epsilon(1e-12));
        }
    }
}

TEST_CASE("mips tie-breaking and k handling") {
    KnowledgeStore store(4);
    for (const char* id : {"phy/b", "phy/a", "phy/c"}) {
        KnowledgeChunk c;
        c.id = id;
        c.partition = Partition::phy;
        c.text = "same";
        c.embedding = {1.0, 0.0, 0.0, 0.0};  // identical scores
        store.add(std::move(c));
    }
    auto result = store.mips_topk({1.0, 0.0, 0.0, 0.0}, 10);
    REQUIRE(result.ranked.size() == 3);  // k larger than the store returns everything
    CHECK(result.ranked[0].id == "phy/a");
    CHECK(result.ranked[1].id == "phy/b");
    CHECK(result.ranked[2].id == "phy/c");
    CHECK_THROWS_AS(store.mips_topk({1.0, 0.0, 0.0, 0.0}, 0), Error);
}

TEST_CASE("partition filter never leaks other partitions") {
    HashingEmbedder embedder(32, 1);
    KnowledgeStore store;
    for (int i = 0; i < 30; ++i) {
        KnowledgeChunk c;
        c.partition = static_cast<Partition>(i % 3);
        c.id = partition_name(c.partition) + "/c" + std::to_string(i);
        c.text = "text " + std::to_string(i);
        c.embedding = embedder.embed(c.text);
        store.add(std::move(c));
    }
    for (Partition p : {Partition::phy, Partition::prot, Partition::hist}) {
        auto result = store.query("text", 30, embedder, p);
        CHECK(result.ranked.size() == 10);
        for (const auto& r : result.ranked) {
            CHECK(store.chunk_by_id(r.id).partition == p);
        }
    }
}

TEST_CASE("store round-trips through its binary + manifest form") {
    TempCorpus corpus;
    corpus.write("prot/wave.txt", kWaveRule);
    corpus.write("phy/ns.txt", "Conservation of mass requires a divergence-free velocity field.\n");
    HashingEmbedder embedder(64, 3);
    KnowledgeStore store;
    store.ingest_directory(corpus.root / "prot", Partition::prot, embedder);
    store.ingest_directory(corpus.root / "phy", Partition::phy, embedder);

    const fs::path stem = corpus.root / "store";
    store.save(stem);
    auto loaded = KnowledgeStore::load(stem);
    REQUIRE(loaded.size() == store.size());
    for (size_t i = 0; i < store.size(); ++i) {
        CHECK(loaded.chunks()[i].id == store.chunks()[i].id);
        CHECK(loaded.chunks()[i].embedding == store.chunks()[i].embedding);
        CHECK(loaded.chunks()[i].rule.has_value() == store.chunks()[i].rule.has_value());
    }
}

TEST_CASE("embedder spec strings") {
    auto hash = make_embedder("hash:128:9");
    CHECK(hash->dimension() == 128);
    auto default_hash = make_embedder("hash");
    CHECK(default_hash->dimension() == 256);
    CHECK_THROWS_AS(make_embedder("bogus:1"), Error);
}
