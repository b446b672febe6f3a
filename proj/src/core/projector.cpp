#include "projector.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "knowledge.hpp"
#include "rng.hpp"

namespace flowcast {

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.next_gaussian();
    }
    return m;
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw runtime_error(std::string(what) + " contains non-finite values");
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof(double));
        }
    }
}

Eigen::MatrixXd read_matrix(std::ifstream& in, int rows, int cols, const std::string& path) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            double v = 0.0;
            in.read(reinterpret_cast<char*>(&v), sizeof(double));
            if (!in) throw runtime_error("projector checkpoint '" + path + "' is truncated");
            m(i, j) = v;
        }
    }
    return m;
}

// Rows of cosine similarities between each token and every text embedding,
// plus the norms needed by the backward pass.
struct CosineTable {
    Eigen::MatrixXd sim;        // N x M
    Eigen::VectorXd token_norm; // N
    Eigen::VectorXd text_norm;  // M
};

CosineTable cosine_table(const Eigen::MatrixXd& tokens, const Eigen::MatrixXd& texts) {
    CosineTable t;
    t.token_norm = tokens.rowwise().norm();
    t.text_norm = texts.rowwise().norm();
    for (int i = 0; i < tokens.rows(); ++i) {
        if (t.token_norm(i) == 0.0) throw runtime_error("alignment: token has zero norm, cosine undefined");
    }
    for (int j = 0; j < texts.rows(); ++j) {
        if (t.text_norm(j) == 0.0) {
            throw runtime_error("alignment: text embedding has zero norm, cosine undefined");
        }
    }
    t.sim = (tokens * texts.transpose()).array() /
            (t.token_norm * t.text_norm.transpose()).array();
    return t;
}

void check_alignment_inputs(const Eigen::MatrixXd& tokens, const Eigen::MatrixXd& texts,
                            const std::vector<int>& positives, double temperature) {
    require_finite(tokens, "alignment tokens");
    require_finite(texts, "alignment text embeddings");
    if (temperature <= 0.0) throw config_error("contrastive temperature must be positive");
    if (texts.rows() < 2) throw runtime_error("alignment needs at least two candidate texts");
    if (texts.cols() != tokens.cols()) {
        throw runtime_error("alignment: token dim " + std::to_string(tokens.cols()) +
                            " does not match text embedding dim " + std::to_string(texts.cols()));
    }
    if (static_cast<int>(positives.size()) != tokens.rows()) {
        throw runtime_error("alignment: one positive index per token is required");
    }
    for (int p : positives) {
        if (p < 0 || p >= texts.rows()) throw runtime_error("alignment: positive index out of range");
    }
}

// Softmax over each row of (sim / temperature), numerically stabilized.
Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p = logits;
    for (int i = 0; i < p.rows(); ++i) {
        const double m = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - m).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

}  // namespace

ProjectorParams ProjectorParams::random_init(int tokens, int dim, int patch_embed_dim, int patch_size,
                                             uint64_t seed, double temperature) {
    if (tokens < 1 || dim < 1 || patch_embed_dim < 1 || patch_size < 1) {
        throw config_error("projector dimensions must be positive");
    }
    if (temperature <= 0.0) throw config_error("contrastive temperature must be positive");
    Rng rng(seed);
    ProjectorParams p;
    p.queries = random_matrix(rng, tokens, dim, 0.5);
    p.key_proj = random_matrix(rng, patch_embed_dim, dim, 1.0 / std::sqrt(double(patch_embed_dim)));
    p.value_proj = random_matrix(rng, patch_embed_dim, dim, 1.0 / std::sqrt(double(patch_embed_dim)));
    p.contrastive_temperature = temperature;
    p.patch_size = patch_size;
    p.seed = seed;
    return p;
}

void ProjectorParams::save(const std::filesystem::path& stem) const {
    std::filesystem::path bin = stem;
    bin += ".bin";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw runtime_error("cannot open '" + bin.string() + "' for writing");
    write_matrix(out, queries);
    write_matrix(out, key_proj);
    write_matrix(out, value_proj);

    nlohmann::ordered_json header = {{"tokens", token_count()},
                                     {"dim", token_dim()},
                                     {"patch_embed_dim", patch_embed_dim()},
                                     {"patch_size", patch_size},
                                     {"seed", seed},
                                     {"temperature", contrastive_temperature}};
    std::filesystem::path jpath = stem;
    jpath += ".json";
    std::ofstream jout(jpath);
    if (!jout) throw runtime_error("cannot open '" + jpath.string() + "' for writing");
    jout << header.dump(2) << "\n";
}

ProjectorParams ProjectorParams::load(const std::filesystem::path& stem) {
    std::filesystem::path jpath = stem;
    jpath += ".json";
    std::ifstream jin(jpath);
    if (!jin) throw runtime_error("cannot open projector header '" + jpath.string() + "'");
    auto header = nlohmann::ordered_json::parse(jin);
    const int tokens = header.at("tokens").get<int>();
    const int dim = header.at("dim").get<int>();
    const int dv = header.at("patch_embed_dim").get<int>();

    ProjectorParams p;
    p.patch_size = header.at("patch_size").get<int>();
    p.seed = header.at("seed").get<uint64_t>();
    p.contrastive_temperature = header.at("temperature").get<double>();

    std::filesystem::path bin = stem;
    bin += ".bin";
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw runtime_error("cannot open projector data '" + bin.string() + "'");
    p.queries = read_matrix(in, tokens, dim, bin.string());
    p.key_proj = read_matrix(in, dv, dim, bin.string());
    p.value_proj = read_matrix(in, dv, dim, bin.string());
    return p;
}

PatchEncoding patch_encode(const ScalarField& field, const ProjectorParams& params) {
    field.require_finite("patch_encode");
    const GridSpec& g = field.grid();
    const int p = params.patch_size;
    if (g.height % p != 0 || g.width % p != 0) {
        throw runtime_error("patch size " + std::to_string(p) + " does not divide grid " +
                            std::to_string(g.height) + "x" + std::to_string(g.width));
    }
    const int rows = g.height / p, cols = g.width / p;
    Eigen::MatrixXd raw(rows * cols, p * p);
    for (int pi = 0; pi < rows; ++pi) {
        for (int pj = 0; pj < cols; ++pj) {
            int col = 0;
            for (int di = 0; di < p; ++di) {
                for (int dj = 0; dj < p; ++dj) {
                    raw(pi * cols + pj, col++) = field.at(pi * p + di, pj * p + dj);
                }
            }
        }
    }
    // Fixed random projection, regenerated from the projector seed.
    Rng rng(params.seed ^ 0x7061746368ULL);
    Eigen::MatrixXd embed = random_matrix(rng, p * p, params.patch_embed_dim(), 1.0 / p);
    return PatchEncoding{raw * embed};
}

Eigen::MatrixXd attention_weights(const ProjectorParams& params, const PatchEncoding& v) {
    require_finite(v.patches, "patch encoding");
    require_finite(params.queries, "projector queries");
    if (v.patches.cols() != params.key_proj.rows()) {
        throw runtime_error("patch embedding dim " + std::to_string(v.patches.cols()) +
                            " does not match projector dim " + std::to_string(params.key_proj.rows()));
    }
    const Eigen::MatrixXd keys = v.patches * params.key_proj;
    const Eigen::MatrixXd scores =
        params.queries * keys.transpose() / std::sqrt(double(params.token_dim()));
    return row_softmax(scores);
}

SemanticTokenSequence cross_attend(const ProjectorParams& params, const PatchEncoding& v) {
    const Eigen::MatrixXd attn = attention_weights(params, v);
    SemanticTokenSequence seq;
    seq.tokens = attn * (v.patches * params.value_proj);
    return seq;
}

double alignment_loss(const Eigen::MatrixXd& tokens, const Eigen::MatrixXd& text_embeddings,
                      const std::vector<int>& positives, double temperature) {
    check_alignment_inputs(tokens, text_embeddings, positives, temperature);
    const CosineTable table = cosine_table(tokens, text_embeddings);
    const Eigen::MatrixXd probs = row_softmax(table.sim / temperature);
    double loss = 0.0;
    for (int i = 0; i < tokens.rows(); ++i) {
        loss -= std::log(probs(i, positives[static_cast<size_t>(i)]));
    }
    return loss;
}

AlignmentGradients alignment_grad(const ProjectorParams& params, const PatchEncoding& v,
                                  const Eigen::MatrixXd& text_embeddings, const std::vector<int>& positives,
                                  double temperature) {
    const Eigen::MatrixXd& patches = v.patches;
    const Eigen::MatrixXd keys = patches * params.key_proj;      // P x d
    const Eigen::MatrixXd values = patches * params.value_proj;  // P x d
    const double inv_sqrt_d = 1.0 / std::sqrt(double(params.token_dim()));
    const Eigen::MatrixXd scores = params.queries * keys.transpose() * inv_sqrt_d;  // N x P
    const Eigen::MatrixXd attn = row_softmax(scores);
    const Eigen::MatrixXd tokens = attn * values;  // N x d

    check_alignment_inputs(tokens, text_embeddings, positives, temperature);
    const CosineTable table = cosine_table(tokens, text_embeddings);
    const Eigen::MatrixXd probs = row_softmax(table.sim / temperature);

    AlignmentGradients g;
    g.loss = 0.0;
    for (int i = 0; i < tokens.rows(); ++i) {
        g.loss -= std::log(probs(i, positives[static_cast<size_t>(i)]));
    }

    // d loss / d tokens through the cosine similarities.
    Eigen::MatrixXd d_tokens = Eigen::MatrixXd::Zero(tokens.rows(), tokens.cols());
    for (int i = 0; i < tokens.rows(); ++i) {
        const double hn = table.token_norm(i);
        for (int j = 0; j < text_embeddings.rows(); ++j) {
            const double dl = (probs(i, j) - (j == positives[static_cast<size_t>(i)] ? 1.0 : 0.0)) /
                              temperature;
            if (dl == 0.0) continue;
            const double tn = table.text_norm(j);
            d_tokens.row(i) += dl * (text_embeddings.row(j) / (hn * tn) -
                                     table.sim(i, j) / (hn * hn) * tokens.row(i));
        }
    }

    const Eigen::MatrixXd d_values = attn.transpose() * d_tokens;   // P x d
    const Eigen::MatrixXd d_attn = d_tokens * values.transpose();   // N x P

    // Softmax backward, row-wise.
    Eigen::MatrixXd d_scores(attn.rows(), attn.cols());
    for (int i = 0; i < attn.rows(); ++i) {
        const double dot = attn.row(i).dot(d_attn.row(i));
        d_scores.row(i) = attn.row(i).array() * (d_attn.row(i).array() - dot);
    }

    g.d_queries = d_scores * keys * inv_sqrt_d;
    const Eigen::MatrixXd d_keys = d_scores.transpose() * params.queries * inv_sqrt_d;
    g.d_key_proj = patches.transpose() * d_keys;
    g.d_value_proj = patches.transpose() * d_values;
    return g;
}

DescriptorTrainingSet make_synthetic_descriptor_set(const GridSpec& grid, int samples_per_class,
                                                    int token_dim, uint64_t seed) {
    DescriptorTrainingSet set;
    set.class_texts = {"rotating vortex core with closed circular streamlines",
                       "flow stagnation point where the local speed vanishes",
                       "sharp shear line separating opposing parallel streams"};
    HashingEmbedder embedder(token_dim, seed);
    set.class_embeddings.resize(3, token_dim);
    for (int c = 0; c < 3; ++c) {
        const auto e = embedder.embed(set.class_texts[static_cast<size_t>(c)]);
        for (int j = 0; j < token_dim; ++j) set.class_embeddings(c, j) = e[static_cast<size_t>(j)];
    }

    Rng rng(seed);
    const double lx = grid.length_x, ly = grid.length_y;
    for (int s = 0; s < samples_per_class; ++s) {
        for (int c = 0; c < 3; ++c) {
            const double cx = lx * (0.35 + 0.3 * rng.next_double());
            const double cy = ly * (0.35 + 0.3 * rng.next_double());
            const double width = 0.08 * lx * (1.0 + 0.5 * rng.next_double());
            const double amp = 1.5 + rng.next_double();
            ScalarField f(grid, "vorticity", "1/s");
            for (int i = 0; i < grid.height; ++i) {
                for (int j = 0; j < grid.width; ++j) {
                    const double dx = grid.x(j) - cx, dy = grid.y(i) - cy;
                    const double r2 = dx * dx + dy * dy;
                    double value = 0.0;
                    if (c == 0) {
                        value = amp * std::exp(-r2 / (2.0 * width * width));
                    } else if (c == 1) {
                        value = amp * (dx * dx - dy * dy) / (width * width) *
                                std::exp(-r2 / (2.0 * width * width));
                    } else {
                        value = amp * std::tanh(dy / width);
                    }
                    f.at(i, j) = value + 0.02 * rng.next_gaussian();
                }
            }
            set.fields.push_back(std::move(f));
            set.labels.push_back(c);
        }
    }
    return set;
}

TrainingResult train_projector(ProjectorParams& params, const DescriptorTrainingSet& set, int steps,
                               double learning_rate) {
    if (set.fields.empty()) throw runtime_error("training set is empty");

    std::vector<PatchEncoding> encodings;
    encodings.reserve(set.fields.size());
    for (const auto& f : set.fields) encodings.push_back(patch_encode(f, params));

    const double inv_n = 1.0 / static_cast<double>(set.fields.size());
    TrainingResult result;
    for (int step = 0; step <= steps; ++step) {
        Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(params.queries.rows(), params.queries.cols());
        Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(params.key_proj.rows(), params.key_proj.cols());
        Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(params.value_proj.rows(), params.value_proj.cols());
        double loss = 0.0;
        for (size_t s = 0; s < encodings.size(); ++s) {
            const std::vector<int> positives(static_cast<size_t>(params.token_count()), set.labels[s]);
            auto g = alignment_grad(params, encodings[s], set.class_embeddings, positives,
                                    params.contrastive_temperature);
            loss += g.loss;
            dq += g.d_queries;
            dk += g.d_key_proj;
            dv += g.d_value_proj;
        }
        loss *= inv_n;
        result.loss_history.push_back(loss);
        if (step == 0) result.initial_loss = loss;
        result.final_loss = loss;
        if (step == steps) break;
        params.queries -= learning_rate * inv_n * dq;
        params.key_proj -= learning_rate * inv_n * dk;
        params.value_proj -= learning_rate * inv_n * dv;
    }
    return result;
}

}  // namespace flowcast
