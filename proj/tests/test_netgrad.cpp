#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "vbnet/net.hpp"
#include "vbnet/rng.hpp"

using namespace vbnet;

namespace {

// layer-by-layer reference forward pass, written independently of the
// library path (explicit loops over unpacked weights)
Matrix oracle_forward(const Architecture& arch, const FlatParams& w, const Matrix& x) {
    Matrix a = x;
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        const Matrix wl = unpack_layer_weights(arch, w, l);
        const std::vector<double> bl = unpack_layer_biases(arch, w, l);
        Matrix z(a.rows(), wl.cols());
        for (std::size_t i = 0; i < a.rows(); ++i) {
            for (std::size_t j = 0; j < wl.cols(); ++j) {
                double s = bl[j];
                for (std::size_t k = 0; k < wl.rows(); ++k) {
                    s += a(i, k) * wl(k, j);
                }
                if (l + 1 < arch.num_layers()) {
                    s = arch.activation == Activation::Relu ? std::max(s, 0.0) : std::tanh(s);
                }
                z(i, j) = s;
            }
        }
        a = std::move(z);
    }
    return a;
}

double sum_outputs(const Architecture& arch, const FlatParams& w, const Matrix& x) {
    const Matrix y = forward(arch, w, x);
    double s = 0.0;
    for (double v : y.data()) s += v;
    return s;
}

Matrix random_matrix(std::size_t r, std::size_t c, RngState& rng) {
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

// central finite differences of loss = sum of outputs, against the analytic
// gradient; the relative-error guard uses an absolute floor for tiny entries
void check_gradient_fd(const Architecture& arch, std::uint64_t seed, double max_rel) {
    RngState rng(seed);
    FlatParams w = init_params(arch, rng);
    const Matrix x = random_matrix(6, arch.input_dim(), rng);
    const Matrix upstream(6, arch.output_dim(), 1.0);
    const NetGradients analytic = backward(arch, w, x, upstream);

    const double h = 1e-5;
    for (std::size_t i = 0; i < w.size(); ++i) {
        FlatParams wp = w, wm = w;
        wp.values[i] += h;
        wm.values[i] -= h;
        const double fd = (sum_outputs(arch, wp, x) - sum_outputs(arch, wm, x)) / (2.0 * h);
        const double a = analytic.w_grad.values[i];
        const double denom = std::max(std::abs(fd), 1e-8);
        REQUIRE(std::abs(a - fd) / denom < max_rel);
    }
}

} // namespace

TEST_CASE("parameter count and packing offsets") {
    Architecture arch;
    arch.layer_sizes = {3, 8, 8, 2};
    CHECK(arch.param_count() == 4 * 8 + 9 * 8 + 9 * 2);
    CHECK(layer_weight_offset(arch, 0) == 0);
    CHECK(layer_bias_offset(arch, 0) == 24);
    CHECK(layer_weight_offset(arch, 1) == 32);
}

TEST_CASE("pack/unpack round-trips exactly") {
    Architecture arch;
    arch.layer_sizes = {2, 4, 1};
    RngState rng(3);
    const FlatParams w = init_params(arch, rng);
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        weights.push_back(unpack_layer_weights(arch, w, l));
        biases.push_back(unpack_layer_biases(arch, w, l));
    }
    const FlatParams repacked = pack_params(arch, weights, biases);
    REQUIRE(repacked.size() == w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(repacked.values[i] == w.values[i]);
    }
}

TEST_CASE("zero weights propagate only the output bias") {
    Architecture arch;
    arch.layer_sizes = {2, 3, 2};
    FlatParams w(arch.param_count(), 0.0);
    w.values[layer_bias_offset(arch, 1) + 0] = 1.5;
    w.values[layer_bias_offset(arch, 1) + 1] = -2.0;
    RngState rng(1);
    const Matrix x = random_matrix(4, 2, rng);
    const Matrix y = forward(arch, w, x);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(y(i, 0) == Catch::Approx(1.5));
        CHECK(y(i, 1) == Catch::Approx(-2.0));
    }
}

TEST_CASE("relu gates negative pre-activations") {
    Architecture arch;
    arch.layer_sizes = {1, 1, 1};
    FlatParams w(arch.param_count(), 0.0);
    w.values[0] = 1.0;  // hidden weight
    w.values[1] = -5.0; // hidden bias, makes the pre-activation negative
    w.values[2] = 3.0;  // output weight
    const Matrix x{{1.0}};
    const Matrix y = forward(arch, w, x);
    CHECK(y(0, 0) == Catch::Approx(0.0));
}

TEST_CASE("forward matches the per-layer oracle on a random small net") {
    Architecture arch;
    arch.layer_sizes = {2, 3, 1};
    RngState rng(21);
    const FlatParams w = init_params(arch, rng);
    const Matrix x = random_matrix(5, 2, rng);
    const Matrix fast = forward(arch, w, x);
    const Matrix slow = oracle_forward(arch, w, x);
    for (std::size_t i = 0; i < fast.size(); ++i) {
        CHECK(fast.data()[i] == Catch::Approx(slow.data()[i]).margin(1e-12));
    }
}

TEST_CASE("zero upstream gives a zero gradient") {
    Architecture arch;
    arch.layer_sizes = {2, 4, 1};
    RngState rng(2);
    const FlatParams w = init_params(arch, rng);
    const Matrix x = random_matrix(3, 2, rng);
    const Matrix upstream(3, 1, 0.0);
    const NetGradients g = backward(arch, w, x, upstream);
    for (double v : g.w_grad.values) CHECK(v == 0.0);
    for (double v : g.x_grad.data()) CHECK(v == 0.0);
}

TEST_CASE("least-squares gradient of a linear single-output net is x^T residual") {
    // one layer of weights to the output going through a pass-through hidden
    // unit is awkward; instead check the output layer's gradient directly on
    // a 1-hidden-layer tanh net at small weights, where hidden ~ identity
    Architecture arch;
    arch.layer_sizes = {2, 2, 1};
    arch.activation = Activation::Tanh;
    RngState rng(77);
    FlatParams w(arch.param_count(), 0.0);
    // hidden layer = identity map for small inputs: w = I, b = 0
    w.values[0] = 1.0;
    w.values[3] = 1.0;
    // output layer weights
    w.values[layer_weight_offset(arch, 1) + 0] = 0.25;
    w.values[layer_weight_offset(arch, 1) + 1] = -0.5;

    const Matrix x{{0.01, 0.02}, {-0.03, 0.005}};
    const Matrix y{{0.5}, {-0.25}};
    const Matrix yhat = forward(arch, w, x);
    Matrix upstream(2, 1);
    upstream(0, 0) = yhat(0, 0) - y(0, 0);
    upstream(1, 0) = yhat(1, 0) - y(1, 0);
    const NetGradients g = backward(arch, w, x, upstream);

    // output-layer weight gradient = hidden^T (yhat - y); hidden == tanh(x)
    for (std::size_t k = 0; k < 2; ++k) {
        double expected = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            expected += std::tanh(x(i, k)) * upstream(i, 0);
        }
        CHECK(g.w_grad.values[layer_weight_offset(arch, 1) + k] ==
              Catch::Approx(expected).margin(1e-12));
    }
    // output bias gradient = sum of residuals
    CHECK(g.w_grad.values[layer_bias_offset(arch, 1)] ==
          Catch::Approx(upstream(0, 0) + upstream(1, 0)).margin(1e-12));
}

TEST_CASE("analytic gradients match finite differences over the architecture grid") {
    // tanh keeps the loss smooth; relu kink cases are covered separately
    const std::vector<std::vector<std::size_t>> grid = {
        {2, 4, 1}, {3, 8, 8, 2}, {5, 16, 4, 1}};
    for (const auto& sizes : grid) {
        Architecture arch;
        arch.layer_sizes = sizes;
        arch.activation = Activation::Tanh;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            check_gradient_fd(arch, seed, 1e-4);
        }
    }
}

TEST_CASE("relu gradients match finite differences away from kinks") {
    Architecture arch;
    arch.layer_sizes = {2, 4, 1};
    arch.activation = Activation::Relu;
    // seeds verified to keep every pre-activation safely away from zero
    check_gradient_fd(arch, 11, 1e-4);
    check_gradient_fd(arch, 12, 1e-4);
}

TEST_CASE("x-gradient matches finite differences") {
    Architecture arch;
    arch.layer_sizes = {3, 5, 2};
    arch.activation = Activation::Tanh;
    RngState rng(31);
    const FlatParams w = init_params(arch, rng);
    Matrix x = random_matrix(4, 3, rng);
    const Matrix upstream(4, 2, 1.0);
    const NetGradients g = backward(arch, w, x, upstream);
    const double h = 1e-6;
    for (std::size_t i = 0; i < x.size(); ++i) {
        Matrix xp = x, xm = x;
        xp.data()[i] += h;
        xm.data()[i] -= h;
        const double fd = (sum_outputs(arch, w, xp) - sum_outputs(arch, w, xm)) / (2.0 * h);
        CHECK(g.x_grad.data()[i] == Catch::Approx(fd).margin(1e-6));
    }
}

TEST_CASE("first-layer positive scaling scales hidden pre-activations") {
    Architecture arch;
    arch.layer_sizes = {2, 3, 1};
    RngState rng(41);
    FlatParams w = init_params(arch, rng);
    const Matrix x = random_matrix(4, 2, rng);
    const ForwardTrace base = forward_trace(arch, w, x);

    const double c = 2.5;
    FlatParams scaled = w;
    const std::size_t first_layer_len = (arch.layer_sizes[0] + 1) * arch.layer_sizes[1];
    for (std::size_t i = 0; i < first_layer_len; ++i) scaled.values[i] *= c;
    const ForwardTrace after = forward_trace(arch, scaled, x);
    for (std::size_t i = 0; i < base.preacts[0].size(); ++i) {
        CHECK(after.preacts[0].data()[i] ==
              Catch::Approx(c * base.preacts[0].data()[i]).margin(1e-12));
    }
}

TEST_CASE("shape errors name the offending dimensions") {
    Architecture arch;
    arch.layer_sizes = {2, 3, 1};
    RngState rng(8);
    const FlatParams w = init_params(arch, rng);
    CHECK_THROWS_AS(forward(arch, w, Matrix(4, 5)), ShapeError);
    FlatParams bad(3);
    CHECK_THROWS_AS(forward(arch, bad, Matrix(4, 2)), ShapeError);
    CHECK_THROWS_AS(backward(arch, w, Matrix(4, 2), Matrix(4, 2)), ShapeError);
    Architecture no_hidden;
    no_hidden.layer_sizes = {2, 1};
    CHECK_THROWS_AS(no_hidden.validate(), ConfigError);
}
