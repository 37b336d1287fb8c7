#include <gtest/gtest.h>

#include <cmath>

#include "calibgan/error.hpp"
#include "calibgan/layers.hpp"
#include "calibgan/losses.hpp"
#include "calibgan/networks.hpp"
#include "test_util.hpp"

using namespace calibgan;
using calibgan::test::max_abs_diff;
using calibgan::test::numeric_gradient;
using calibgan::test::random_matrix;
using calibgan::test::relative_error;
using calibgan::test::weighted_sum;

namespace {

constexpr double fd_tolerance = 1e-4;

GeneratorNet small_generator(std::uint64_t seed) {
    GeneratorOptions opts;
    opts.dim = 4;
    opts.hidden = 6;
    opts.identity_init = false;
    Rng rng(seed);
    return GeneratorNet(opts, rng);
}

DiscriminatorNet small_discriminator(std::uint64_t seed) {
    DiscriminatorOptions opts;
    opts.dim = 4;
    opts.hidden = 6;
    Rng rng(seed);
    return DiscriminatorNet(opts, rng);
}

// Checks input and parameter gradients of `net` under the probe loss sum(out * w).
template<typename Net>
void check_network_gradients(Net& net, Matrix x, std::uint64_t seed) {
    const Matrix out0 = net.forward(x, Mode::train);
    const Matrix w = random_matrix(out0.rows(), out0.cols(), seed);
    auto loss = [&] { return weighted_sum(net.forward(x, Mode::train), w); };

    net.zero_grad();
    net.forward(x, Mode::train);
    const Matrix dx = net.backward(w);
    std::vector<Matrix> analytic;
    for (const auto& p : net.parameters()) {
        analytic.push_back(*p.grad);
    }

    EXPECT_LT(relative_error(dx, numeric_gradient(x, loss)), fd_tolerance) << "input";
    auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        EXPECT_LT(relative_error(analytic[i], numeric_gradient(*params[i].value, loss)), fd_tolerance) << params[i].name;
    }
}

}

TEST(Linear, IdentityForward) {
    LinearLayer layer(3, 3);
    layer.weight() = Matrix::identity(3);
    const Matrix x = random_matrix(5, 3, 1);
    EXPECT_EQ(layer.forward(x), x);
}

TEST(Linear, HandExample) {
    LinearLayer layer(2, 2);
    layer.weight() = Matrix::from_rows({{2, 0}, {0, 3}});
    layer.bias() = Matrix::row_vector({1, 1});
    EXPECT_EQ(layer.forward(Matrix::from_rows({{1, 1}})), Matrix::from_rows({{3, 4}}));
}

TEST(Linear, ForwardMatchesDotProducts) {
    Rng rng(3);
    LinearLayer layer = LinearLayer::he_normal(4, 3, rng);
    layer.bias() = random_matrix(1, 3, 4);
    const Matrix x = random_matrix(6, 4, 5);
    const Matrix y = layer.forward(x);
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t o = 0; o < 3; ++o) {
            double s = layer.bias()(0, o);
            for (std::size_t i = 0; i < 4; ++i) {
                s += x(r, i) * layer.weight()(o, i);
            }
            EXPECT_NEAR(y(r, o), s, 1e-12);
        }
    }
}

TEST(Linear, ZeroUpstreamGivesZeroGradients) {
    Rng rng(6);
    LinearLayer layer = LinearLayer::he_normal(3, 2, rng);
    layer.forward(random_matrix(4, 3, 7));
    EXPECT_EQ(layer.backward(Matrix(4, 2)), Matrix(4, 3));
    EXPECT_EQ(layer.grad_weight(), Matrix(2, 3));
    EXPECT_EQ(layer.grad_bias(), Matrix(1, 2));
}

TEST(Linear, IdentityJacobian) {
    LinearLayer layer(3, 3);
    layer.weight() = Matrix::identity(3);
    layer.forward(random_matrix(4, 3, 8));
    const Matrix g = random_matrix(4, 3, 9);
    EXPECT_EQ(layer.backward(g), g);
}

TEST(Linear, FiniteDifferences) {
    Rng rng(10);
    LinearLayer layer = LinearLayer::he_normal(4, 3, rng);
    layer.bias() = random_matrix(1, 3, 11);
    Matrix x = random_matrix(8, 4, 12);
    const Matrix w = random_matrix(8, 3, 13);
    auto loss = [&] { return weighted_sum(layer.infer(x), w); };
    layer.forward(x);
    const Matrix dx = layer.backward(w);
    EXPECT_LT(relative_error(dx, numeric_gradient(x, loss)), 1e-5);
    EXPECT_LT(relative_error(layer.grad_weight(), numeric_gradient(layer.weight(), loss)), 1e-5);
    EXPECT_LT(relative_error(layer.grad_bias(), numeric_gradient(layer.bias(), loss)), 1e-5);
}

TEST(Linear, Errors) {
    LinearLayer layer(3, 2);
    EXPECT_THROW(layer.backward(Matrix(1, 2)), StateError);
    EXPECT_THROW(layer.forward(Matrix(2, 4)), ShapeError);
    layer.forward(Matrix(2, 3));
    EXPECT_THROW(layer.backward(Matrix(3, 2)), ShapeError);
    layer.forward(Matrix(2, 3), Mode::infer);
    EXPECT_THROW(layer.backward(Matrix(2, 2)), StateError);
}

TEST(BatchNorm, ConstantColumnNormalizesToZero) {
    BatchNormLayer bn(2);
    Matrix x = random_matrix(5, 2, 14);
    for (std::size_t r = 0; r < 5; ++r) {
        x(r, 0) = 7.0;
    }
    const Matrix y = bn.forward(x);
    for (std::size_t r = 0; r < 5; ++r) {
        EXPECT_EQ(y(r, 0), 0.0);
    }
}

TEST(BatchNorm, ZeroGammaCollapsesToBeta) {
    BatchNormLayer bn(3);
    bn.gamma() = Matrix(1, 3, 0.0);
    bn.beta() = Matrix(1, 3, 5.0);
    EXPECT_EQ(bn.forward(random_matrix(4, 3, 15)), Matrix(4, 3, 5.0));
}

TEST(BatchNorm, TrainOutputIsStandardized) {
    BatchNormLayer bn(3);
    const Matrix x = random_matrix(8, 3, 16, 2.0);
    const Matrix y = bn.forward(x);
    const Matrix in_var = reduce(x, Axis::over_rows, Stat::var);
    const Matrix mean = reduce(y, Axis::over_rows, Stat::mean);
    const Matrix var = reduce(y, Axis::over_rows, Stat::var);
    for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_NEAR(mean(0, c), 0.0, 1e-12);
        EXPECT_NEAR(var(0, c), in_var(0, c) / (in_var(0, c) + 1e-5), 1e-6);
    }
}

TEST(BatchNorm, ZeroUpstreamGivesZeroGradients) {
    BatchNormLayer bn(3);
    bn.forward(random_matrix(8, 3, 17));
    EXPECT_EQ(bn.backward(Matrix(8, 3)), Matrix(8, 3));
    EXPECT_EQ(bn.grad_gamma(), Matrix(1, 3));
    EXPECT_EQ(bn.grad_beta(), Matrix(1, 3));
}

TEST(BatchNorm, FiniteDifferences) {
    BatchNormLayer bn(3);
    bn.gamma() = Matrix::row_vector({0.5, 1.5, -2.0});
    bn.beta() = Matrix::row_vector({0.1, -0.3, 0.7});
    Matrix x = random_matrix(8, 3, 18, 3.0);
    const Matrix w = random_matrix(8, 3, 19);
    auto loss = [&] { return weighted_sum(bn.forward(x), w); };
    bn.forward(x);
    const Matrix dx = bn.backward(w);
    const Matrix dgamma = bn.grad_gamma();
    const Matrix dbeta = bn.grad_beta();
    EXPECT_LT(relative_error(dx, numeric_gradient(x, loss)), fd_tolerance);
    EXPECT_LT(relative_error(dgamma, numeric_gradient(bn.gamma(), loss)), fd_tolerance);
    EXPECT_LT(relative_error(dbeta, numeric_gradient(bn.beta(), loss)), fd_tolerance);
}

TEST(BatchNorm, InputGradientColumnsSumToZero) {
    BatchNormLayer bn(4);
    bn.forward(random_matrix(8, 4, 20, 2.0));
    const Matrix dx = bn.backward(random_matrix(8, 4, 21));
    const Matrix sums = reduce(dx, Axis::over_rows, Stat::sum);
    for (double s : sums.values()) {
        EXPECT_NEAR(s, 0.0, 1e-8);
    }
}

TEST(BatchNorm, InferUsesRunningStatisticsOnly) {
    BatchNormLayer bn(2);
    bn.running_mean() = Matrix::row_vector({1.0, -1.0});
    bn.running_var() = Matrix::row_vector({4.0, 0.25});
    const Matrix x = Matrix::from_rows({{3.0, 0.0}});
    const Matrix y = bn.infer(x);
    EXPECT_NEAR(y(0, 0), 2.0 / std::sqrt(4.0 + 1e-5), 1e-15);
    EXPECT_NEAR(y(0, 1), 1.0 / std::sqrt(0.25 + 1e-5), 1e-15);
    // A single row is fine at inference and independent of its batch mates.
    const Matrix batch = vstack(x, random_matrix(3, 2, 22));
    EXPECT_EQ(slice_rows(bn.infer(batch), 0, 1), y);
}

TEST(BatchNorm, RunningStatisticsUpdate) {
    BatchNormLayer bn(1);
    bn.forward(Matrix::from_rows({{1}, {3}}));
    EXPECT_NEAR(bn.running_mean()(0, 0), 0.9 * 0.0 + 0.1 * 2.0, 1e-15);
    EXPECT_NEAR(bn.running_var()(0, 0), 0.9 * 1.0 + 0.1 * 1.0, 1e-15);
}

TEST(BatchNorm, RunningMeanConverges) {
    BatchNormLayer bn(2);
    Rng rng(23);
    const std::size_t n = 64;
    for (int i = 0; i < 200; ++i) {
        Matrix x = gaussian_matrix(n, 2, 0.0, 1.0, rng);
        for (std::size_t r = 0; r < n; ++r) {
            x(r, 0) = 3.0 + 2.0 * x(r, 0);
            x(r, 1) = -1.0 + 0.5 * x(r, 1);
        }
        bn.forward(x);
    }
    // The moving average mixes about 19 batches (momentum 0.1), so its standard error is at most that of one batch.
    EXPECT_NEAR(bn.running_mean()(0, 0), 3.0, 3.0 * 2.0 / std::sqrt(double(n)));
    EXPECT_NEAR(bn.running_mean()(0, 1), -1.0, 3.0 * 0.5 / std::sqrt(double(n)));
    for (double v : bn.running_var().values()) {
        EXPECT_GE(v, 0.0);
    }
}

TEST(BatchNorm, Errors) {
    BatchNormLayer bn(2);
    EXPECT_THROW(bn.forward(Matrix(1, 2)), DomainError);
    EXPECT_THROW(bn.backward(Matrix(2, 2)), StateError);
    bn.forward(random_matrix(4, 2, 24), Mode::infer);
    EXPECT_THROW(bn.backward(Matrix(4, 2)), StateError);
    EXPECT_THROW(bn.forward(Matrix(4, 3)), ShapeError);
}

TEST(Activation, Examples) {
    EXPECT_EQ(sigmoid(0.0), 0.5);
    Activation relu(ActivationKind::relu);
    EXPECT_EQ(relu.forward(Matrix::from_rows({{-3, 3}})), Matrix::from_rows({{0, 3}}));
    Activation sig(ActivationKind::sigmoid);
    const Matrix s = sig.forward(Matrix::from_rows({{-1000, 1000}}));
    EXPECT_EQ(s(0, 0), sigmoid_clamp);
    EXPECT_EQ(s(0, 1), 1.0 - sigmoid_clamp);
}

TEST(Activation, FiniteDifferencesAwayFromKink) {
    for (ActivationKind kind : {ActivationKind::relu, ActivationKind::sigmoid}) {
        Activation act(kind);
        Matrix x = random_matrix(8, 4, 25, 2.0);
        for (double& v : x.values()) {
            if (std::abs(v) < 1e-3) {
                v = 0.5;
            }
        }
        const Matrix w = random_matrix(8, 4, 26);
        auto loss = [&] { return weighted_sum(act.infer(x), w); };
        act.forward(x);
        const Matrix dx = act.backward(w);
        const Matrix num = numeric_gradient(x, loss);
        EXPECT_LT(max_abs_diff(dx, num), 1e-6);
    }
}

TEST(Generator, ZeroResidualIsExactIdentity) {
    GeneratorOptions opts;
    opts.identity_init = false;
    Rng rng(27);
    GeneratorNet g(opts, rng);
    g.zero_residuals();
    const Matrix z = random_matrix(10, 25, 28);
    EXPECT_EQ(g.forward(z, Mode::train), z);
    EXPECT_EQ(g.infer(z), z);
}

TEST(Generator, IdentityInitIsIdentity) {
    Rng rng(29);
    GeneratorNet g(GeneratorOptions{}, rng);
    const Matrix z = random_matrix(10, 25, 30);
    EXPECT_EQ(g.forward(z, Mode::train), z);
}

TEST(Generator, OutputShapeMatchesInput) {
    GeneratorOptions opts;
    opts.identity_init = false;
    Rng rng(31);
    GeneratorNet g(opts, rng);
    const Matrix out = g.forward(random_matrix(12, 25, 32), Mode::train);
    EXPECT_EQ(out.rows(), 12u);
    EXPECT_EQ(out.cols(), 25u);
    EXPECT_THROW(g.forward(Matrix(4, 24), Mode::train), ShapeError);
}

TEST(Generator, FiniteDifferences) {
    GeneratorNet g = small_generator(33);
    check_network_gradients(g, random_matrix(8, 4, 34), 35);
}

TEST(Generator, InferIsPure) {
    GeneratorNet g = small_generator(36);
    g.forward(random_matrix(8, 4, 37), Mode::train);
    const GeneratorNet before = g;
    const Matrix z = random_matrix(5, 4, 38);
    const Matrix a = g.infer(z);
    const Matrix b = g.infer(z);
    EXPECT_EQ(a, b);
    GeneratorNet copy = before;
    auto p0 = copy.parameters();
    auto p1 = g.parameters();
    for (std::size_t i = 0; i < p0.size(); ++i) {
        EXPECT_EQ(*p0[i].value, *p1[i].value);
    }
    auto b0 = copy.buffers();
    auto b1 = g.buffers();
    for (std::size_t i = 0; i < b0.size(); ++i) {
        EXPECT_EQ(*b0[i].value, *b1[i].value);
    }
}

TEST(Generator, ParameterNames) {
    GeneratorNet g = small_generator(39);
    const auto params = g.parameters();
    ASSERT_FALSE(params.empty());
    EXPECT_EQ(params.front().name, "block0.norm_in.gamma");
    EXPECT_EQ(g.buffers().size(), 8u);
}

TEST(Discriminator, OutputsInUnitInterval) {
    Rng rng(40);
    DiscriminatorNet d(DiscriminatorOptions{}, rng);
    const Matrix out = d.forward(random_matrix(32, 25, 41, 5.0), Mode::train);
    EXPECT_EQ(out.cols(), 1u);
    for (double v : out.values()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Discriminator, ZeroOutputLayerGivesHalf) {
    Rng rng(42);
    DiscriminatorNet d(DiscriminatorOptions{}, rng);
    d.output_layer().weight() = Matrix(1, 64);
    d.output_layer().bias() = Matrix(1, 1);
    EXPECT_EQ(d.forward(random_matrix(16, 25, 43), Mode::train), Matrix(16, 1, 0.5));
}

TEST(Discriminator, FiniteDifferences) {
    DiscriminatorNet d = small_discriminator(44);
    check_network_gradients(d, random_matrix(8, 4, 45), 46);
}

// A batch-norm net whose running statistics equal the batch statistics of `x`: repeated training passes drive the
// moving average to the batch values, after which inference evaluates the forward with those statistics frozen.
template<typename Net>
Net frozen_at(const Net& net, const Matrix& x) {
    Net copy = net;
    for (int i = 0; i < 500; ++i) {
        copy.forward(x, Mode::train);
    }
    return copy;
}

TEST(BatchNorm, FixedStatisticsFiniteDifferences) {
    BatchNormLayer bn(3);
    bn.gamma() = Matrix::row_vector({0.5, 1.5, -2.0});
    Matrix x = random_matrix(8, 3, 51, 3.0);
    const Matrix w = random_matrix(8, 3, 52);
    const BatchNormLayer frozen = frozen_at(bn, x);
    auto loss = [&] { return weighted_sum(frozen.infer(x), w); };
    bn.forward(x);
    const Matrix dx = bn.backward(w, BatchStats::fixed);
    EXPECT_LT(relative_error(dx, numeric_gradient(x, loss)), fd_tolerance);
}

TEST(BatchNorm, FixedStatisticsIsRowLocal) {
    BatchNormLayer bn(2);
    bn.forward(random_matrix(6, 2, 53));
    Matrix g(6, 2);
    g(2, 0) = 1.0;
    g(2, 1) = -1.0;
    const Matrix dx = bn.backward(g, BatchStats::fixed);
    for (std::size_t r = 0; r < 6; ++r) {
        if (r != 2) {
            EXPECT_EQ(dx(r, 0), 0.0);
            EXPECT_EQ(dx(r, 1), 0.0);
        }
    }
}

TEST(Discriminator, FixedStatisticsFiniteDifferences) {
    DiscriminatorNet d = small_discriminator(54);
    Matrix x = random_matrix(8, 4, 55);
    const Matrix w = random_matrix(8, 1, 56);
    const DiscriminatorNet frozen = frozen_at(d, x);
    auto loss = [&] { return weighted_sum(frozen.infer(x), w); };
    d.forward(x, Mode::train);
    const Matrix dx = d.backward(w, BatchStats::fixed);
    EXPECT_LT(relative_error(dx, numeric_gradient(x, loss)), fd_tolerance);
}

// Generator-phase objective: D scores the stacked [real; G(z)] batch with its batch statistics held fixed,
// and only the fake rows enter the loss.
TEST(AdversarialChain, GeneratorObjectiveFiniteDifferences) {
    GeneratorNet g = small_generator(47);
    DiscriminatorNet d = small_discriminator(48);
    const Matrix real = random_matrix(8, 4, 49);
    Matrix z = elementwise(random_matrix(8, 4, 50), 1.0, ElementOp::add);

    const DiscriminatorNet frozen = frozen_at(d, vstack(real, GeneratorNet(g).forward(z, Mode::train)));
    auto loss = [&] {
        const Matrix scores = frozen.infer(vstack(real, g.forward(z, Mode::train)));
        return generator_loss(slice_rows(scores, 8, 16));
    };

    g.zero_grad();
    d.zero_grad();
    const Matrix fake = g.forward(z, Mode::train);
    const Matrix scores = d.forward(vstack(real, fake), Mode::train);
    const Matrix upstream = vstack(Matrix(8, 1), generator_loss_grad(slice_rows(scores, 8, 16)));
    const Matrix dinput = d.backward(upstream, BatchStats::fixed);
    const Matrix dz = g.backward(slice_rows(dinput, 8, 16));
    std::vector<Matrix> analytic;
    for (const auto& p : g.parameters()) {
        analytic.push_back(*p.grad);
    }

    EXPECT_LT(relative_error(dz, numeric_gradient(z, loss)), fd_tolerance);
    auto params = g.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        EXPECT_LT(relative_error(analytic[i], numeric_gradient(*params[i].value, loss)), fd_tolerance) << params[i].name;
    }
}
