#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"

namespace flowcast {

enum class Partition { phy, prot, hist };

Partition parse_partition(const std::string& name);
std::string partition_name(Partition p);

// Alert threshold carried by protocol chunks: fires when the field's
// extremal statistic violates `comparator value` (strict comparison).
struct ThresholdRule {
    std::string variable;
    std::string comparator;  // ">" or "<"
    double value = 0.0;
    std::string unit;
    std::string directive;
};

struct KnowledgeChunk {
    std::string id;
    Partition partition = Partition::phy;
    std::string text;
    std::vector<double> embedding;
    std::optional<ThresholdRule> rule;  // prot partition only
};

struct ScoredChunk {
    std::string id;
    double score = 0.0;
};

struct RetrievalResult {
    std::string query;
    std::vector<ScoredChunk> ranked;  // scores non-increasing, ties by ascending id
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual int dimension() const = 0;
    virtual std::vector<double> embed(const std::string& text) const = 0;
};

// Deterministic offline embedder: seeded feature hashing of word unigrams
// and bigrams into `dimension` signed buckets, L2-normalized.
class HashingEmbedder : public Embedder {
public:
    explicit HashingEmbedder(int dimension = 256, uint64_t seed = 7);
    int dimension() const override { return dimension_; }
    std::vector<double> embed(const std::string& text) const override;

private:
    int dimension_;
    uint64_t seed_;
};

// Creates an embedder from a spec string: "hash:<dim>:<seed>" (both parts
// optional) or "remote:<dim>:<url>".
std::unique_ptr<Embedder> make_embedder(const std::string& spec);
// HTTP-backed embedder; defined alongside the remote policy client.
std::unique_ptr<Embedder> make_remote_embedder(const std::string& spec);

class KnowledgeStore {
public:
    KnowledgeStore() = default;
    explicit KnowledgeStore(int dimension) : dimension_(dimension) {}

    int dimension() const { return dimension_; }
    size_t size() const { return chunks_.size(); }
    const std::vector<KnowledgeChunk>& chunks() const { return chunks_; }
    const KnowledgeChunk& chunk_by_id(const std::string& id) const;

    void add(KnowledgeChunk chunk);

    // One chunk per file; optional front-matter between leading "---" lines
    // carries the threshold rule keys (variable, op, value, unit, directive).
    // Returns the number of chunks ingested. File order is sorted by name.
    int ingest_directory(const std::filesystem::path& dir, Partition partition, const Embedder& embedder);

    // Exact top-k maximum inner product search over the filtered partition;
    // ties broken by ascending id.
    RetrievalResult mips_topk(const std::vector<double>& query_embedding, int k,
                              std::optional<Partition> filter = std::nullopt) const;
    RetrievalResult query(const std::string& text, int k, const Embedder& embedder,
                          std::optional<Partition> filter = std::nullopt) const;

    // All threshold rules in the prot partition, with owning chunk ids.
    std::vector<std::pair<std::string, ThresholdRule>> protocol_rules() const;

    // Persistence: <stem>.bin holds the embedding matrix, <stem>.json the
    // manifest (texts, partitions, rules, dimensions).
    void save(const std::filesystem::path& stem) const;
    static KnowledgeStore load(const std::filesystem::path& stem);

private:
    int dimension_ = 0;
    std::vector<KnowledgeChunk> chunks_;
};

}  // namespace flowcast
