#include "knowledge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rng.hpp"

namespace flowcast {

Partition parse_partition(const std::string& name) {
    if (name == "phy") return Partition::phy;
    if (name == "prot") return Partition::prot;
    if (name == "hist") return Partition::hist;
    throw config_error("unknown knowledge partition '" + name + "' (expected phy, prot or hist)");
}

std::string partition_name(Partition p) {
    switch (p) {
        case Partition::phy: return "phy";
        case Partition::prot: return "prot";
        case Partition::hist: return "hist";
    }
    return "phy";
}

HashingEmbedder::HashingEmbedder(int dimension, uint64_t seed) : dimension_(dimension), seed_(seed) {
    if (dimension < 2) throw config_error("embedder dimension must be at least 2");
}

std::vector<double> HashingEmbedder::embed(const std::string& text) const {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));

    std::vector<double> v(static_cast<size_t>(dimension_), 0.0);
    auto add_feature = [&](const std::string& feature) {
        uint64_t h = fnv1a(feature) ^ seed_;
        h = splitmix64(h);
        const size_t idx = static_cast<size_t>(h % static_cast<uint64_t>(dimension_));
        const double sign = (h >> 63) ? -1.0 : 1.0;
        v[idx] += sign;
    };
    for (size_t i = 0; i < tokens.size(); ++i) {
        add_feature(tokens[i]);
        if (i + 1 < tokens.size()) add_feature(tokens[i] + " " + tokens[i + 1]);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

const KnowledgeChunk& KnowledgeStore::chunk_by_id(const std::string& id) const {
    for (const auto& c : chunks_) {
        if (c.id == id) return c;
    }
    throw runtime_error("unknown chunk id '" + id + "'");
}

void KnowledgeStore::add(KnowledgeChunk chunk) {
    if (dimension_ == 0) dimension_ = static_cast<int>(chunk.embedding.size());
    if (static_cast<int>(chunk.embedding.size()) != dimension_) {
        throw runtime_error("chunk '" + chunk.id + "' embedding dimension " +
                            std::to_string(chunk.embedding.size()) + " does not match store dimension " +
                            std::to_string(dimension_));
    }
    for (double x : chunk.embedding) {
        if (!std::isfinite(x)) throw runtime_error("chunk '" + chunk.id + "' embedding is not finite");
    }
    if (chunk.rule && chunk.partition != Partition::prot) {
        throw runtime_error("chunk '" + chunk.id + "' carries a threshold rule outside the prot partition");
    }
    for (const auto& c : chunks_) {
        if (c.id == chunk.id) throw runtime_error("duplicate chunk id '" + chunk.id + "'");
    }
    chunks_.push_back(std::move(chunk));
}

namespace {

std::string trim_copy(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::optional<ThresholdRule> parse_front_matter(std::istream& in, const std::string& filename,
                                                std::string& body) {
    std::string line;
    std::getline(in, line);
    if (trim_copy(line) != "---") {
        body = trim_copy(line);
        std::ostringstream rest;
        rest << in.rdbuf();
        body += body.empty() ? rest.str() : "\n" + rest.str();
        body = trim_copy(body);
        return std::nullopt;
    }
    ThresholdRule rule;
    bool closed = false, any_key = false;
    while (std::getline(in, line)) {
        const std::string t = trim_copy(line);
        if (t == "---") {
            closed = true;
            break;
        }
        size_t colon = t.find(':');
        if (colon == std::string::npos) {
            throw runtime_error(filename + ": malformed front-matter line '" + t + "'");
        }
        const std::string key = trim_copy(t.substr(0, colon));
        const std::string value = trim_copy(t.substr(colon + 1));
        any_key = true;
        if (key == "variable") {
            rule.variable = value;
        } else if (key == "op") {
            if (value != ">" && value != "<") {
                throw runtime_error(filename + ": front-matter op must be '>' or '<', got '" + value + "'");
            }
            rule.comparator = value;
        } else if (key == "value") {
            try {
                rule.value = std::stod(value);
            } catch (const std::exception&) {
                throw runtime_error(filename + ": front-matter value '" + value + "' is not a number");
            }
        } else if (key == "unit") {
            rule.unit = value;
        } else if (key == "directive") {
            rule.directive = value;
        } else {
            throw runtime_error(filename + ": unknown front-matter key '" + key + "'");
        }
    }
    if (!closed) throw runtime_error(filename + ": front-matter is not closed with '---'");
    std::ostringstream rest;
    rest << in.rdbuf();
    body = trim_copy(rest.str());
    if (!any_key) return std::nullopt;
    if (rule.variable.empty() || rule.comparator.empty() || rule.directive.empty()) {
        throw runtime_error(filename + ": front-matter rule needs variable, op, value, unit and directive");
    }
    return rule;
}

}  // namespace

int KnowledgeStore::ingest_directory(const std::filesystem::path& dir, Partition partition,
                                     const Embedder& embedder) {
    if (!std::filesystem::exists(dir)) {
        throw runtime_error("corpus directory '" + dir.string() + "' does not exist");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    int count = 0;
    for (const auto& path : files) {
        std::ifstream in(path);
        if (!in) throw runtime_error("cannot open corpus file '" + path.string() + "'");
        KnowledgeChunk chunk;
        chunk.partition = partition;
        chunk.id = partition_name(partition) + "/" + path.stem().string();
        chunk.rule = parse_front_matter(in, path.string(), chunk.text);
        if (chunk.text.empty()) {
            throw runtime_error(path.string() + ": chunk body is empty");
        }
        chunk.embedding = embedder.embed(chunk.text);
        add(std::move(chunk));
        ++count;
    }
    return count;
}

RetrievalResult KnowledgeStore::mips_topk(const std::vector<double>& query_embedding, int k,
                                          std::optional<Partition> filter) const {
    if (k <= 0) throw usage_error("retrieval k must be positive");
    if (static_cast<int>(query_embedding.size()) != dimension_) {
        throw runtime_error("query embedding dimension does not match the store");
    }
    RetrievalResult result;
    for (const auto& c : chunks_) {
        if (filter && c.partition != *filter) continue;
        double score = 0.0;
        for (size_t i = 0; i < c.embedding.size(); ++i) score += c.embedding[i] * query_embedding[i];
        result.ranked.push_back({c.id, score});
    }
    std::sort(result.ranked.begin(), result.ranked.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (static_cast<int>(result.ranked.size()) > k) result.ranked.resize(static_cast<size_t>(k));
    return result;
}

RetrievalResult KnowledgeStore::query(const std::string& text, int k, const Embedder& embedder,
                                      std::optional<Partition> filter) const {
    auto result = mips_topk(embedder.embed(text), k, filter);
    result.query = text;
    return result;
}

std::vector<std::pair<std::string, ThresholdRule>> KnowledgeStore::protocol_rules() const {
    std::vector<std::pair<std::string, ThresholdRule>> rules;
    for (const auto& c : chunks_) {
        if (c.rule) rules.emplace_back(c.id, *c.rule);
    }
    return rules;
}

void KnowledgeStore::save(const std::filesystem::path& stem) const {
    std::filesystem::path bin = stem;
    bin += ".bin";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw runtime_error("cannot open '" + bin.string() + "' for writing");
    for (const auto& c : chunks_) {
        out.write(reinterpret_cast<const char*>(c.embedding.data()),
                  static_cast<std::streamsize>(c.embedding.size() * sizeof(double)));
    }

    nlohmann::ordered_json manifest;
    manifest["dimension"] = dimension_;
    manifest["count"] = chunks_.size();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : chunks_) {
        nlohmann::ordered_json item = {
            {"id", c.id}, {"partition", partition_name(c.partition)}, {"text", c.text}};
        if (c.rule) {
            item["rule"] = {{"variable", c.rule->variable}, {"op", c.rule->comparator},
                            {"value", c.rule->value},       {"unit", c.rule->unit},
                            {"directive", c.rule->directive}};
        }
        arr.push_back(std::move(item));
    }
    manifest["chunks"] = std::move(arr);
    std::filesystem::path jpath = stem;
    jpath += ".json";
    std::ofstream jout(jpath);
    if (!jout) throw runtime_error("cannot open '" + jpath.string() + "' for writing");
    jout << manifest.dump(2) << "\n";
}

KnowledgeStore KnowledgeStore::load(const std::filesystem::path& stem) {
    std::filesystem::path jpath = stem;
    jpath += ".json";
    std::ifstream jin(jpath);
    if (!jin) throw runtime_error("cannot open store manifest '" + jpath.string() + "'");
    auto manifest = nlohmann::ordered_json::parse(jin);

    KnowledgeStore store(manifest.at("dimension").get<int>());
    std::filesystem::path bin = stem;
    bin += ".bin";
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw runtime_error("cannot open store data '" + bin.string() + "'");

    for (const auto& item : manifest.at("chunks")) {
        KnowledgeChunk chunk;
        chunk.id = item.at("id").get<std::string>();
        chunk.partition = parse_partition(item.at("partition").get<std::string>());
        chunk.text = item.at("text").get<std::string>();
        chunk.embedding.resize(static_cast<size_t>(store.dimension()));
        in.read(reinterpret_cast<char*>(chunk.embedding.data()),
                static_cast<std::streamsize>(chunk.embedding.size() * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(chunk.embedding.size() * sizeof(double))) {
            throw runtime_error("store data '" + bin.string() + "' is truncated");
        }
        if (item.contains("rule")) {
            const auto& r = item.at("rule");
            chunk.rule = ThresholdRule{r.at("variable").get<std::string>(), r.at("op").get<std::string>(),
                                       r.at("value").get<double>(), r.at("unit").get<std::string>(),
                                       r.at("directive").get<std::string>()};
        }
        store.add(std::move(chunk));
    }
    return store;
}

std::unique_ptr<Embedder> make_embedder(const std::string& spec) {
    if (spec.empty() || spec == "hash" || spec.rfind("hash:", 0) == 0) {
        int dim = 256;
        uint64_t seed = 7;
        if (spec.rfind("hash:", 0) == 0) {
            std::string rest = spec.substr(5);
            size_t colon = rest.find(':');
            try {
                dim = std::stoi(colon == std::string::npos ? rest : rest.substr(0, colon));
                if (colon != std::string::npos) seed = std::stoull(rest.substr(colon + 1));
            } catch (const std::exception&) {
                throw config_error("cannot parse embedder spec '" + spec + "'");
            }
        }
        return std::make_unique<HashingEmbedder>(dim, seed);
    }
    if (spec.rfind("remote:", 0) == 0) {
        return make_remote_embedder(spec);
    }
    throw config_error("unknown embedder spec '" + spec + "' (expected hash:<dim>:<seed> or remote:<dim>:<url>)");
}

}  // namespace flowcast
