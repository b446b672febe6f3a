#include "doctest.h"

#include <cmath>

#include "projector.hpp"
#include "rng.hpp"
#include "support.hpp"

using namespace flowcast;
using namespace flowcast::test;

namespace {

Eigen::MatrixXd random_eigen(Rng& rng, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = rng.next_gaussian();
    }
    return m;
}

struct SmallInstance {
    ProjectorParams params;
    PatchEncoding patches;
    Eigen::MatrixXd texts;
    std::vector<int> positives;
};

SmallInstance make_instance(uint64_t seed, int tokens = 2, int n_patches = 3, int dim = 4,
                            int patch_dim = 5, int n_texts = 3) {
    Rng rng(seed);
    SmallInstance inst;
    inst.params = ProjectorParams::random_init(tokens, dim, patch_dim, 8, seed);
    inst.patches.patches = random_eigen(rng, n_patches, patch_dim);
    inst.texts = random_eigen(rng, n_texts, dim);
    for (int i = 0; i < tokens; ++i) {
        inst.positives.push_back(static_cast<int>(rng.next_u64() % static_cast<uint64_t>(n_texts)));
    }
    return inst;
}

double fd_loss(const SmallInstance& inst, const ProjectorParams& params) {
    auto seq = cross_attend(params, inst.patches);
    return alignment_loss(seq.tokens, inst.texts, inst.positives, params.contrastive_temperature);
}

// Central finite differences over every parameter entry.
AlignmentGradients finite_difference_grad(const SmallInstance& inst, double h) {
    AlignmentGradients g;
    auto diff = [&](Eigen::MatrixXd ProjectorParams::* member) {
        ProjectorParams p = inst.params;
        Eigen::MatrixXd& m = p.*member;
        Eigen::MatrixXd out(m.rows(), m.cols());
        for (int i = 0; i < m.rows(); ++i) {
            for (int j = 0; j < m.cols(); ++j) {
                const double saved = m(i, j);
                m(i, j) = saved + h;
                const double up = fd_loss(inst, p);
                m(i, j) = saved - h;
                const double down = fd_loss(inst, p);
                m(i, j) = saved;
                out(i, j) = (up - down) / (2.0 * h);
            }
        }
        return out;
    };
    g.d_queries = diff(&ProjectorParams::queries);
    g.d_key_proj = diff(&ProjectorParams::key_proj);
    g.d_value_proj = diff(&ProjectorParams::value_proj);
    return g;
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-12);
}

}  // namespace

TEST_CASE("cross attention closed forms") {
    SUBCASE("a single patch makes every token the single value row") {
        auto inst = make_instance(3, 3, 1, 4, 5);
        auto seq = cross_attend(inst.params, inst.patches);
        const Eigen::MatrixXd value_row = inst.patches.patches * inst.params.value_proj;
        for (int i = 0; i < seq.tokens.rows(); ++i) {
            CHECK((seq.tokens.row(i) - value_row.row(0)).norm() < 1e-12);
        }
    }
    SUBCASE("zero queries give uniform attention, tokens are the patch mean") {
        auto inst = make_instance(4, 2, 6, 4, 5);
        inst.params.queries.setZero();
        auto seq = cross_attend(inst.params, inst.patches);
        const Eigen::MatrixXd values = inst.patches.patches * inst.params.value_proj;
        const Eigen::RowVectorXd mean = values.colwise().mean();
        for (int i = 0; i < seq.tokens.rows(); ++i) {
            CHECK((seq.tokens.row(i) - mean).norm() < 1e-12);
        }
    }
    SUBCASE("attention rows sum to one for random inputs") {
        for (uint64_t seed = 0; seed < 50; ++seed) {
            auto inst = make_instance(100 + seed, 3, 7, 6, 5);
            auto attn = attention_weights(inst.params, inst.patches);
            for (int i = 0; i < attn.rows(); ++i) {
                CHECK(std::abs(attn.row(i).sum() - 1.0) < 1e-9);
            }
        }
    }
    SUBCASE("shape mismatch raises") {
        auto inst = make_instance(5);
        Rng rng(1);
        PatchEncoding bad{random_eigen(rng, 3, 7)};  // wrong patch dim
        CHECK_THROWS_AS(cross_attend(inst.params, bad), Error);
    }
}

TEST_CASE("alignment loss closed forms") {
    SUBCASE("identical candidates give N log M at the default temperature") {
        const int n_tokens = 3, n_texts = 5, dim = 4;
        Rng rng(7);
        Eigen::MatrixXd tokens = random_eigen(rng, n_tokens, dim);
        Eigen::MatrixXd texts(n_texts, dim);
        const Eigen::RowVectorXd t = random_eigen(rng, 1, dim);
        for (int j = 0; j < n_texts; ++j) texts.row(j) = t;
        std::vector<int> positives{0, 2, 4};
        const double loss = alignment_loss(tokens, texts, positives, 0.07);
        CHECK(std::abs(loss - n_tokens * std::log(double(n_texts))) < 1e-9);
    }
    SUBCASE("perfect positives and opposite negatives drive the loss to zero") {
        const int dim = 4, n_tokens = 3, n_texts = 4;
        Eigen::MatrixXd tokens = Eigen::MatrixXd::Zero(n_tokens, dim);
        tokens.col(0).setOnes();
        Eigen::MatrixXd texts = Eigen::MatrixXd::Zero(n_texts, dim);
        texts(0, 0) = 1.0;
        for (int j = 1; j < n_texts; ++j) texts(j, 0) = -1.0;
        std::vector<int> positives(n_tokens, 0);
        CHECK(alignment_loss(tokens, texts, positives, 0.01) < 1e-6);
    }
    SUBCASE("zero-norm inputs are rejected") {
        Eigen::MatrixXd tokens = Eigen::MatrixXd::Zero(2, 4);
        Eigen::MatrixXd texts = Eigen::MatrixXd::Ones(3, 4);
        CHECK_THROWS_WITH_AS(alignment_loss(tokens, texts, {0, 1}, 0.07),
                             doctest::Contains("zero norm"), Error);
    }
    SUBCASE("fewer than two candidates is an error") {
        Eigen::MatrixXd tokens = Eigen::MatrixXd::Ones(2, 4);
        Eigen::MatrixXd texts = Eigen::MatrixXd::Ones(1, 4);
        CHECK_THROWS_AS(alignment_loss(tokens, texts, {0, 0}, 0.07), Error);
    }
    SUBCASE("loss respects the logit-range bound") {
        for (uint64_t seed = 0; seed < 20; ++seed) {
            auto inst = make_instance(400 + seed, 3, 5, 4, 5, 6);
            auto seq = cross_attend(inst.params, inst.patches);
            const double tau = inst.params.contrastive_temperature;
            const double loss = alignment_loss(seq.tokens, inst.texts, inst.positives, tau);
            // Worst case per token: log M + (s_max - s_min) / tau.
            const double bound =
                seq.tokens.rows() * (std::log(double(inst.texts.rows())) + 2.0 / tau);
            CHECK(loss <= bound);
        }
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    int failures = 0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        auto inst = make_instance(1000 + seed);
        auto analytic = alignment_grad(inst.params, inst.patches, inst.texts, inst.positives,
                                       inst.params.contrastive_temperature);
        auto numeric = finite_difference_grad(inst, 1e-5);
        if (relative_error(analytic.d_queries, numeric.d_queries) >= 1e-4 ||
            relative_error(analytic.d_key_proj, numeric.d_key_proj) >= 1e-4 ||
            relative_error(analytic.d_value_proj, numeric.d_value_proj) >= 1e-4) {
            ++failures;
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("gradient of a constant-loss configuration vanishes") {
    auto inst = make_instance(55);
    const Eigen::RowVectorXd t = inst.texts.row(0);
    for (int j = 0; j < inst.texts.rows(); ++j) inst.texts.row(j) = t;  // all candidates identical
    auto g = alignment_grad(inst.params, inst.patches, inst.texts, inst.positives,
                            inst.params.contrastive_temperature);
    CHECK(g.d_queries.norm() < 1e-8);
    CHECK(g.d_key_proj.norm() < 1e-8);
    CHECK(g.d_value_proj.norm() < 1e-8);
}

TEST_CASE("cosine scale invariance of loss and gradients") {
    auto inst = make_instance(77);
    auto base = alignment_grad(inst.params, inst.patches, inst.texts, inst.positives, 0.07);
    SmallInstance scaled = inst;
    scaled.texts *= 3.7;
    auto after = alignment_grad(scaled.params, scaled.patches, scaled.texts, scaled.positives, 0.07);
    CHECK(std::abs(base.loss - after.loss) < 1e-10);
    CHECK((base.d_queries - after.d_queries).norm() < 1e-10);
    CHECK((base.d_key_proj - after.d_key_proj).norm() < 1e-10);
    CHECK((base.d_value_proj - after.d_value_proj).norm() < 1e-10);
}

TEST_CASE("patch encoding shape and determinism") {
    GridSpec grid(32, 32);
    auto field = random_smooth_field(grid, 5);
    auto params = ProjectorParams::random_init(4, 32, 16, 8, 11);
    auto enc = patch_encode(field, params);
    CHECK(enc.patches.rows() == 16);  // (32/8)^2
    CHECK(enc.patches.cols() == 16);
    auto enc2 = patch_encode(field, params);
    CHECK(enc.patches == enc2.patches);
    auto bad = ProjectorParams::random_init(4, 32, 16, 7, 11);
    CHECK_THROWS_WITH_AS(patch_encode(field, bad), doctest::Contains("patch size"), Error);
}

TEST_CASE("200 gradient steps halve the loss on the 3-class synthetic set") {
    GridSpec grid(32, 32);
    auto set = make_synthetic_descriptor_set(grid, 8, 32, 5);
    CHECK(set.fields.size() == 24);
    auto params = ProjectorParams::random_init(4, 32, 16, 8, 11);
    auto result = train_projector(params, set, 200, 1e-2);
    CHECK(result.final_loss <= 0.5 * result.initial_loss);
    CHECK(result.loss_history.size() == 201);
}

TEST_CASE("projector checkpoints round trip") {
    auto params = ProjectorParams::random_init(4, 32, 16, 8, 123);
    auto dir = std::filesystem::temp_directory_path() / "flowcast_projector_test";
    std::filesystem::create_directories(dir);
    params.save(dir / "ckpt");
    auto loaded = ProjectorParams::load(dir / "ckpt");
    CHECK(loaded.queries == params.queries);
    CHECK(loaded.key_proj == params.key_proj);
    CHECK(loaded.value_proj == params.value_proj);
    CHECK(loaded.patch_size == params.patch_size);
    CHECK(loaded.seed == params.seed);
    CHECK(loaded.contrastive_temperature == params.contrastive_temperature);
    std::filesystem::remove_all(dir);
}
