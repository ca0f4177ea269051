#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cir/augment.hpp"
#include "cir/dataset.hpp"
#include "cir/eval.hpp"
#include "cir/losses.hpp"
#include "cir/net.hpp"
#include "cir/optim.hpp"

namespace {

using namespace cir;

TensorBuffer random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    TensorBuffer b = TensorBuffer::matrix(rows, cols);
    Rng rng(seed);
    for (double& v : b.values) v = rng.next_gaussian();
    return b;
}

std::vector<int> random_labels(std::size_t rows, int n_classes, std::uint64_t seed) {
    std::vector<int> labels(rows);
    Rng rng(seed);
    for (int& y : labels) y = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_classes)));
    return labels;
}

// Central finite differences over all parameters of a copy of the network.
std::vector<double> numeric_grad(const MlpNetwork& net,
                                 const std::function<double(const MlpNetwork&)>& loss_fn,
                                 double h = 1e-5) {
    MlpNetwork probe = net;
    std::vector<double> grad(net.param_count());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double orig = probe.params()[i];
        probe.params()[i] = orig + h;
        const double up = loss_fn(probe);
        probe.params()[i] = orig - h;
        const double down = loss_fn(probe);
        probe.params()[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

TEST(Forward, ZeroWeightNetGivesUniformSoftmax) {
    MlpSpec spec{.input_dim = 6, .hidden = {8}, .activation = Activation::Tanh, .n_outputs = 5};
    MlpNetwork net(spec, 3);
    std::fill(net.params().begin(), net.params().end(), 0.0);
    const auto out = net.forward(random_batch(4, 6, 1));
    for (double v : out.logits.values) EXPECT_DOUBLE_EQ(v, 0.0);
    const auto probs = softmax_rows(out.logits);
    for (double p : probs.values) EXPECT_NEAR(p, 0.2, 1e-12);
}

TEST(Forward, SingleLinearLayerOnUnitInput) {
    MlpSpec spec{.input_dim = 4, .hidden = {}, .activation = Activation::Tanh, .n_outputs = 3};
    MlpNetwork net(spec, 7);
    TensorBuffer ones = TensorBuffer::matrix(1, 4, 1.0);
    const auto out = net.forward(ones);
    const auto& head = net.head();
    for (std::size_t o = 0; o < 3; ++o) {
        double expected = net.params()[head.b_offset + o];
        for (std::size_t i = 0; i < 4; ++i) expected += net.params()[head.w_offset + o * 4 + i];
        EXPECT_NEAR(out.logits.at(0, o), expected, 1e-12);
    }
}

TEST(Forward, MatchesStraightLineRecomputation) {
    MlpSpec spec{.input_dim = 5, .hidden = {7, 6}, .activation = Activation::Tanh, .n_outputs = 4};
    MlpNetwork net(spec, 11);
    const TensorBuffer batch = random_batch(3, 5, 2);
    const auto out = net.forward(batch);

    // Independent re-computation, one scalar at a time.
    for (std::size_t r = 0; r < 3; ++r) {
        std::vector<double> h(batch.row(r).begin(), batch.row(r).end());
        for (const auto& v : net.hidden_layers()) {
            std::vector<double> next(v.out);
            for (std::size_t o = 0; o < v.out; ++o) {
                double acc = net.params()[v.b_offset + o];
                for (std::size_t i = 0; i < v.in; ++i)
                    acc += net.params()[v.w_offset + o * v.in + i] * h[i];
                next[o] = std::tanh(acc);
            }
            h = std::move(next);
        }
        for (std::size_t o = 0; o < 4; ++o) {
            double acc = net.params()[net.head().b_offset + o];
            for (std::size_t i = 0; i < h.size(); ++i)
                acc += net.params()[net.head().w_offset + o * h.size() + i] * h[i];
            EXPECT_NEAR(out.logits.at(r, o), acc, 1e-12);
            EXPECT_NEAR(out.features.at(r, o < h.size() ? o : 0), h[o < h.size() ? o : 0], 1e-12);
        }
    }
}

TEST(Forward, ShapeMismatchThrows) {
    MlpNetwork net(MlpSpec{.input_dim = 4, .hidden = {4}, .n_outputs = 2}, 1);
    EXPECT_THROW(net.forward(random_batch(2, 5, 1)), ConfigError);
}

TEST(CrossEntropy, UniformLogitsGiveLogC) {
    const TensorBuffer logits = TensorBuffer::matrix(6, 10, 0.0);
    const auto labels = random_labels(6, 10, 4);
    const auto lg = cross_entropy(logits, labels);
    EXPECT_NEAR(lg.loss, std::log(10.0), 1e-12);
}

TEST(CrossEntropy, ConfidentCorrectLogitDrivesLossToZero) {
    TensorBuffer logits = TensorBuffer::matrix(1, 5, 0.0);
    logits.at(0, 2) = 50.0;
    const int label = 2;
    const auto lg = cross_entropy(logits, std::span<const int>(&label, 1));
    EXPECT_LT(lg.loss, 1e-12);
}

TEST(CrossEntropy, GradientRowsSumToZero) {
    const TensorBuffer logits = random_batch(8, 7, 5);
    const auto labels = random_labels(8, 7, 6);
    const auto lg = cross_entropy(logits, labels);
    for (std::size_t r = 0; r < 8; ++r) {
        auto row = lg.dlogits.row(r);
        EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 0.0, 1e-9);
    }
    const auto probs = softmax_rows(logits);
    for (std::size_t r = 0; r < 8; ++r) {
        auto row = probs.row(r);
        EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-9);
    }
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
    MlpSpec spec{.input_dim = 6, .hidden = {10, 8}, .activation = Activation::Tanh, .n_outputs = 5};
    const TensorBuffer batch = random_batch(6, 6, 21);
    const auto labels = random_labels(6, 5, 22);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        MlpNetwork net(spec, seed);
        const auto trace = net.forward_trace(batch);
        const auto lg = cross_entropy(trace.logits, labels);
        const auto analytic = net.backward(trace, &lg.dlogits, nullptr);
        const auto numeric = numeric_grad(net, [&](const MlpNetwork& n) {
            return cross_entropy(n.forward_trace(batch).logits, labels).loss;
        });
        EXPECT_LT(relative_error(analytic, numeric), 1e-4);
    }
}

TEST(Triplet, CoincidentFeaturesGiveAnchorCountTimesMargin) {
    TensorBuffer features = TensorBuffer::matrix(4, 3, 0.0);
    for (std::size_t r = 0; r < 4; ++r) features.at(r, 0) = 1.0;
    const std::vector<int> labels = {0, 0, 1, 1};
    Rng rng(1);
    const auto result = triplet_contrastive_loss(features, labels, 0.5, Mining::Random, rng);
    ASSERT_TRUE(result.has_value());
    EXPECT_EQ(result->n_anchors, 4u);
    EXPECT_NEAR(result->loss, 4 * 0.5, 1e-12);
}

TEST(Triplet, WellSeparatedClassesGiveZeroLoss) {
    TensorBuffer features = TensorBuffer::matrix(4, 2, 0.0);
    features.at(0, 0) = 1.0;
    features.at(1, 0) = 1.0;
    features.at(2, 0) = -1.0;
    features.at(3, 0) = -1.0;
    const std::vector<int> labels = {0, 0, 1, 1};
    Rng rng(1);
    const auto result = triplet_contrastive_loss(features, labels, 0.5, Mining::HardNegative, rng);
    ASSERT_TRUE(result.has_value());
    EXPECT_DOUBLE_EQ(result->loss, 0.0);
    for (double g : result->dfeatures.values) EXPECT_DOUBLE_EQ(g, 0.0);
}

TEST(Triplet, SingleClassBatchIsSignaled) {
    const TensorBuffer features = random_batch(4, 3, 9);
    const std::vector<int> labels = {2, 2, 2, 2};
    Rng rng(1);
    EXPECT_FALSE(triplet_contrastive_loss(features, labels, 0.5, Mining::Random, rng).has_value());
}

// Guard against hinge and mining boundaries before comparing against finite
// differences; resampling on geometry keeps the comparison unbiased.
bool triplet_geometry_is_smooth(const TensorBuffer& features, std::span<const int> labels,
                                double margin) {
    const std::size_t n = features.rows();
    TensorBuffer unit = features;
    for (std::size_t r = 0; r < n; ++r) {
        auto row = unit.row(r);
        double sq = 0.0;
        for (double v : row) sq += v * v;
        const double norm = std::max(std::sqrt(sq), 1e-12);
        for (double& v : row) v /= norm;
    }
    auto dist = [&](std::size_t a, std::size_t b) {
        double d = 0.0;
        for (std::size_t i = 0; i < unit.cols(); ++i) {
            const double diff = unit.at(a, i) - unit.at(b, i);
            d += diff * diff;
        }
        return d;
    };
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<double> negs;
        std::vector<double> poss;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == a) continue;
            (labels[j] == labels[a] ? poss : negs).push_back(dist(a, j));
        }
        if (poss.empty() || negs.empty()) return false;
        std::sort(negs.begin(), negs.end());
        if (negs.size() > 1 && negs[1] - negs[0] < 1e-3) return false;  // mining tie
        for (double dp : poss)
            if (std::abs(dp - negs[0] + margin) < 1e-3) return false;  // hinge boundary
    }
    return true;
}

TEST(Triplet, GradientThroughProjectionHeadMatchesFiniteDifferences) {
    MlpSpec spec{.input_dim = 5,
                 .hidden = {9},
                 .activation = Activation::Tanh,
                 .n_outputs = 0,
                 .projection_dim = 6};
    const double margin = 0.5;
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 40 && checked < 3; ++seed) {
        MlpNetwork net(spec, seed);
        const TensorBuffer batch = random_batch(6, 5, seed * 100);
        const auto labels = random_labels(6, 3, seed * 100 + 1);
        const auto trace = net.forward_trace(batch, true);
        if (!triplet_geometry_is_smooth(trace.projection, labels, margin)) continue;

        Rng rng(7);
        const auto res =
            triplet_contrastive_loss(trace.projection, labels, margin, Mining::HardNegative, rng);
        if (!res.has_value() || res->loss == 0.0) continue;
        const auto analytic = net.backward(trace, nullptr, &res->dfeatures);
        const auto numeric = numeric_grad(net, [&](const MlpNetwork& n) {
            Rng inner(7);
            const auto t = n.forward_trace(batch, true);
            return triplet_contrastive_loss(t.projection, labels, margin, Mining::HardNegative, inner)
                ->loss;
        });
        EXPECT_LT(relative_error(analytic, numeric), 1e-4) << "seed " << seed;
        ++checked;
    }
    EXPECT_GE(checked, 3);
}

TEST(Distillation, IdenticalLogitsGiveZeroLoss) {
    const TensorBuffer logits = random_batch(5, 8, 31);
    const std::vector<int> old_classes = {0, 2, 5};
    const auto lg = distillation_loss(logits, logits, old_classes, 2.0, 1.0);
    EXPECT_NEAR(lg.loss, -std::log(1.0) + lg.loss, 1e-12);  // loss equals teacher entropy term
    // Gradient must vanish when student == teacher.
    for (double g : lg.dlogits.values) EXPECT_NEAR(g, 0.0, 1e-12);
}

TEST(Distillation, GradientMatchesFiniteDifferences) {
    MlpSpec spec{.input_dim = 6, .hidden = {12}, .activation = Activation::Tanh, .n_outputs = 8};
    const TensorBuffer batch = random_batch(5, 6, 41);
    const std::vector<int> old_classes = {1, 3, 4, 6};
    MlpNetwork teacher(spec, 99);
    const auto teacher_logits = teacher.forward(batch).logits;
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        MlpNetwork net(spec, seed);
        const auto trace = net.forward_trace(batch);
        const auto lg = distillation_loss(trace.logits, teacher_logits, old_classes, 2.0, 1.0);
        const auto analytic = net.backward(trace, &lg.dlogits, nullptr);
        const auto numeric = numeric_grad(net, [&](const MlpNetwork& n) {
            return distillation_loss(n.forward_trace(batch).logits, teacher_logits, old_classes, 2.0,
                                     1.0)
                .loss;
        });
        EXPECT_LT(relative_error(analytic, numeric), 1e-4);
    }
}

TEST(Sgd, ZeroGradientLeavesParamsUntouched) {
    std::vector<double> params = {1.0, -2.0, 3.0};
    std::vector<double> grads = {0.0, 0.0, 0.0};
    SgdState state(3);
    TrainConfig cfg;
    cfg.weight_decay = 0.0;
    sgd_step(params, grads, state, cfg);
    EXPECT_EQ(params, (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(Sgd, SingleStepOnQuadratic) {
    std::vector<double> params = {1.0};
    SgdState state(1);
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    std::vector<double> grads = {2.0 * params[0]};  // d/dw of w^2
    sgd_step(params, grads, state, cfg);
    EXPECT_DOUBLE_EQ(params[0], 0.8);
}

TEST(Sgd, MomentumAccumulatesPerRecurrence) {
    std::vector<double> params = {0.0};
    SgdState state(1);
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.0;
    const std::vector<double> grads = {1.0};
    sgd_step(params, grads, state, cfg);
    EXPECT_DOUBLE_EQ(state.velocity[0], 1.0);  // v1 = g
    EXPECT_DOUBLE_EQ(params[0], -0.1);
    sgd_step(params, grads, state, cfg);
    EXPECT_DOUBLE_EQ(state.velocity[0], 1.9);  // v2 = 0.9 v1 + g
    EXPECT_DOUBLE_EQ(params[0], -0.1 - 0.19);
}

TEST(Sgd, NonFiniteGradientThrows) {
    std::vector<double> params = {1.0};
    std::vector<double> grads = {std::numeric_limits<double>::quiet_NaN()};
    SgdState state(1);
    TrainConfig cfg;
    EXPECT_THROW(sgd_step(params, grads, state, cfg), RunError);
}

TEST(Augment, StrengthZeroIsIdentity) {
    const TensorBuffer batch = random_batch(5, 8, 51);
    Rng rng(9);
    EXPECT_EQ(augment(batch, 0.0, rng), batch);
}

TEST(Augment, FixedSeedIsDeterministic) {
    const TensorBuffer batch = random_batch(5, 8, 52);
    Rng a(11), b(11);
    EXPECT_EQ(augment(batch, 0.7, a), augment(batch, 0.7, b));
}

TEST(Augment, PerturbationMagnitudeScalesLinearly) {
    const TensorBuffer batch = random_batch(40, 25, 53);  // 10^4 coordinates per strength
    auto mean_abs_delta = [&](double strength, std::uint64_t seed) {
        Rng rng(seed);
        const TensorBuffer out = augment(batch, strength, rng);
        double acc = 0.0;
        for (std::size_t i = 0; i < batch.numel(); ++i)
            acc += std::abs(out.values[i] - batch.values[i]);
        return acc / static_cast<double>(batch.numel());
    };
    const double at1 = mean_abs_delta(0.2, 1);
    const double at2 = mean_abs_delta(0.4, 2);
    const double at4 = mean_abs_delta(0.8, 3);
    EXPECT_NEAR(at2 / at1, 2.0, 0.1);
    EXPECT_NEAR(at4 / at2, 2.0, 0.1);
}

class OracleClassifier : public Classifier {
public:
    explicit OracleClassifier(std::vector<int> answers) : answers_(std::move(answers)) {}
    std::vector<int> predict(const TensorBuffer&) const override { return answers_; }

private:
    std::vector<int> answers_;
};

TEST(Evaluate, PerfectAndConstantPredictors) {
    const TensorBuffer x = random_batch(40, 4, 61);
    std::vector<int> labels(40);
    for (std::size_t i = 0; i < 40; ++i) labels[i] = static_cast<int>(i % 4);  // balanced
    EXPECT_DOUBLE_EQ(evaluate(OracleClassifier(labels), x, labels), 1.0);
    EXPECT_DOUBLE_EQ(evaluate(OracleClassifier(std::vector<int>(40, 2)), x, labels), 0.25);
}

TEST(Evaluate, RandomPredictorNearChance) {
    const std::size_t n = 10000;
    const TensorBuffer x = TensorBuffer::matrix(n, 1);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 10);
    Rng rng(71);
    std::vector<int> guesses(n);
    for (int& g : guesses) g = static_cast<int>(rng.next_below(10));
    EXPECT_NEAR(evaluate(OracleClassifier(guesses), x, labels), 0.1, 0.01);
}

TEST(Evaluate, EmptyTestSetThrows) {
    EXPECT_THROW(evaluate(OracleClassifier({}), TensorBuffer::matrix(0, 3), {}), ConfigError);
}

// Plain CE training loop used by determinism/separability checks.
MlpNetwork train_two_class_net(std::uint64_t seed, const LabeledSet& data, std::size_t epochs) {
    MlpSpec spec{.input_dim = 2, .hidden = {16}, .activation = Activation::Tanh, .n_outputs = 2};
    MlpNetwork net(spec, seed);
    SgdState state(net.param_count());
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.epochs = epochs;
    cfg.weight_decay = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle = substream(seed, {rng_tag::shuffle, epoch});
        for_each_batch(data.labels.size(), cfg.batch_size, shuffle,
                       [&](std::span<const std::size_t> idx, std::size_t) {
                           TensorBuffer xb = gather_rows(data.x, idx);
                           std::vector<int> yb(idx.size());
                           for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = data.labels[idx[i]];
                           const auto trace = net.forward_trace(xb);
                           const auto lg = cross_entropy(trace.logits, yb);
                           const auto grads = net.backward(trace, &lg.dlogits, nullptr);
                           sgd_step(net.params(), grads, state, cfg);
                       });
    }
    return net;
}

TEST(Training, LinearlySeparableTwoClassProblemIsLearned) {
    LabeledSet data;
    data.x = TensorBuffer::matrix(200, 2);
    Rng rng(81);
    for (std::size_t i = 0; i < 200; ++i) {
        const int label = i < 100 ? 0 : 1;
        data.x.at(i, 0) = (label == 0 ? -2.0 : 2.0) + 0.5 * rng.next_gaussian();
        data.x.at(i, 1) = rng.next_gaussian();
        data.labels.push_back(label);
    }
    const MlpNetwork net = train_two_class_net(5, data, 50);
    const auto out = net.forward(data.x);
    const auto predicted = argmax_labels(out.logits, {});
    std::size_t correct = 0;
    for (std::size_t i = 0; i < 200; ++i) correct += predicted[i] == data.labels[i];
    EXPECT_GE(static_cast<double>(correct) / 200.0, 0.99);
}

TEST(Training, DeterministicUnderFixedSeeds) {
    LabeledSet data;
    data.x = random_batch(60, 2, 91);
    data.labels = random_labels(60, 2, 92);
    const MlpNetwork a = train_two_class_net(33, data, 5);
    const MlpNetwork b = train_two_class_net(33, data, 5);
    EXPECT_EQ(a.params(), b.params());
}

TEST(Checkpoint, RoundTripPreservesEverything) {
    MlpSpec spec{.input_dim = 7,
                 .hidden = {9, 5},
                 .activation = Activation::Relu,
                 .n_outputs = 4,
                 .projection_dim = 3};
    MlpNetwork net(spec, 17);
    const std::string path = ::testing::TempDir() + "/net.ckpt";
    save_checkpoint(net, path);
    const MlpNetwork loaded = load_checkpoint(path);
    EXPECT_EQ(loaded.params(), net.params());
    EXPECT_EQ(loaded.spec().hidden, spec.hidden);
    EXPECT_EQ(loaded.spec().activation, Activation::Relu);
    EXPECT_EQ(loaded.spec().projection_dim, 3u);
}

TEST(Dataset, TrainAndTestSplitsDiffer) {
    DatasetSpec spec;
    spec.n_classes = 3;
    spec.train_per_class = 5;
    spec.test_per_class = 4;
    SyntheticDataset data(spec);
    const std::vector<int> classes = {0, 1, 2};
    const auto test = data.test_set(classes);
    ASSERT_EQ(test.labels.size(), 12u);
    // No test row equals any train row.
    for (std::size_t r = 0; r < test.x.rows(); ++r) {
        for (int c : classes) {
            for (std::size_t s = 0; s < spec.train_per_class; ++s) {
                auto train = data.train_sample(c, s);
                bool same = true;
                for (std::size_t i = 0; i < spec.input_dim && same; ++i)
                    same = train[i] == test.x.at(r, i);
                EXPECT_FALSE(same);
            }
        }
    }
}

TEST(Dataset, MaterializeUsesPoolIndices) {
    DatasetSpec spec;
    spec.n_classes = 4;
    SyntheticDataset data(spec);
    Experience exp;
    exp.index = 1;
    exp.classes = {1, 3};
    exp.samples[1] = {0, 5, 7};
    exp.samples[3] = {2, 2};  // repetition across draws is allowed
    const auto set = data.materialize(exp);
    ASSERT_EQ(set.labels.size(), 5u);
    EXPECT_EQ(set.labels, (std::vector<int>{1, 1, 1, 3, 3}));
    auto expect_row = [&](std::size_t row, int c, std::size_t pool) {
        auto src = data.train_sample(c, pool);
        for (std::size_t i = 0; i < spec.input_dim; ++i) EXPECT_EQ(set.x.at(row, i), src[i]);
    };
    expect_row(0, 1, 0);
    expect_row(1, 1, 5);
    expect_row(2, 1, 7);
    expect_row(3, 3, 2);
    expect_row(4, 3, 2);
}

}  // namespace
