#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "grid.hpp"

namespace flowcast {

// P x d_v matrix of patch embeddings: non-overlapping p x p patches,
// flattened row-major and passed through a fixed seeded linear projection.
struct PatchEncoding {
    Eigen::MatrixXd patches;
};

// Learnable projector state: query bank plus key/value projections, together
// with the (frozen) patch embedder configuration that produced its inputs.
struct ProjectorParams {
    Eigen::MatrixXd queries;     // N x d
    Eigen::MatrixXd key_proj;    // d_v x d
    Eigen::MatrixXd value_proj;  // d_v x d
    double contrastive_temperature = 0.07;
    int patch_size = 8;
    uint64_t seed = 0;

    int token_count() const { return static_cast<int>(queries.rows()); }
    int token_dim() const { return static_cast<int>(queries.cols()); }
    int patch_embed_dim() const { return static_cast<int>(key_proj.rows()); }

    static ProjectorParams random_init(int tokens, int dim, int patch_embed_dim, int patch_size,
                                       uint64_t seed, double temperature = 0.07);

    // Checkpoint: <stem>.bin matrix dump + <stem>.json header.
    void save(const std::filesystem::path& stem) const;
    static ProjectorParams load(const std::filesystem::path& stem);
};

struct SemanticTokenSequence {
    Eigen::MatrixXd tokens;  // N x d
    std::string rendered_text;
};

// Splits the field into patches and applies the fixed linear embedder derived
// from params.seed. Field dimensions must be divisible by the patch size.
PatchEncoding patch_encode(const ScalarField& field, const ProjectorParams& params);

// Attention weights for diagnostics: Softmax(Q (v W_K)^T / sqrt(d)), rows sum
// to one.
Eigen::MatrixXd attention_weights(const ProjectorParams& params, const PatchEncoding& v);

SemanticTokenSequence cross_attend(const ProjectorParams& params, const PatchEncoding& v);

// InfoNCE over cosine similarity: for each token i, candidates are the rows
// of text_embeddings and positives[i] indexes the matching one.
double alignment_loss(const Eigen::MatrixXd& tokens, const Eigen::MatrixXd& text_embeddings,
                      const std::vector<int>& positives, double temperature);

struct AlignmentGradients {
    double loss = 0.0;
    Eigen::MatrixXd d_queries;
    Eigen::MatrixXd d_key_proj;
    Eigen::MatrixXd d_value_proj;
};

// Analytic gradients of the alignment loss through the cross-attention,
// with respect to the query bank and both projections.
AlignmentGradients alignment_grad(const ProjectorParams& params, const PatchEncoding& v,
                                  const Eigen::MatrixXd& text_embeddings, const std::vector<int>& positives,
                                  double temperature);

// Labeled synthetic training set: localized bump / bowl / shear-band fields
// with matching class texts embedded to the token dimension.
struct DescriptorTrainingSet {
    std::vector<ScalarField> fields;
    std::vector<int> labels;
    Eigen::MatrixXd class_embeddings;  // one row per class
    std::vector<std::string> class_texts;
};

DescriptorTrainingSet make_synthetic_descriptor_set(const GridSpec& grid, int samples_per_class,
                                                    int token_dim, uint64_t seed);

struct TrainingResult {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> loss_history;
};

// Full-batch gradient descent with a fixed step size on Q, W_K, W_V.
TrainingResult train_projector(ProjectorParams& params, const DescriptorTrainingSet& set, int steps,
                               double learning_rate);

}  // namespace flowcast
