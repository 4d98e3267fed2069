#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "antifor/autodiff.hpp"
#include "doctest.h"
#include "shadow.hpp"

using antifor::Tape;
using antifor::Tensor;
using antifor::Var;

namespace {

Tensor random_tensor(const std::vector<int>& shape, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(shape);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(lo, hi);
    for (float& v : t.data) v = u(rng);
    return t;
}

double dot(const Tensor& seed, const shadow::T& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.data.size(); ++i) acc += static_cast<double>(seed.data[i]) * v.data[i];
    return acc;
}

// Checks every analytic partial of <seed, op(inputs)> against a 64-bit
// central finite difference of the shadow evaluation.
void check_grad(const std::vector<Tensor>& inputs,
                const std::function<Var(Tape&, const std::vector<Var>&)>& build,
                const std::function<shadow::T(const std::vector<shadow::T>&)>& op, double tol = 1e-3,
                double h = 1e-3) {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.leaf(t));
    const Var out = build(tape, vars);
    const Tensor seed = random_tensor(tape.value(out).shape, 0x5eed0001ull, -1.0f, 1.0f);
    tape.backward_seeded(out, seed);

    std::vector<shadow::T> sh;
    for (const Tensor& t : inputs) sh.push_back(shadow::from_tensor(t));
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Tensor& g = tape.grad(vars[i]);
        for (std::size_t j = 0; j < inputs[i].data.size(); ++j) {
            const double saved = sh[i].data[j];
            sh[i].data[j] = saved + h;
            const double up = dot(seed, op(sh));
            sh[i].data[j] = saved - h;
            const double dn = dot(seed, op(sh));
            sh[i].data[j] = saved;
            const double fd = (up - dn) / (2.0 * h);
            const double an = g.data[j];
            CAPTURE(i);
            CAPTURE(j);
            CHECK(std::abs(an - fd) <= tol * std::max(1.0, std::abs(fd)));
        }
    }
}

}  // namespace

TEST_CASE("conv2d gradient matches finite differences (stride 1, padded)") {
    check_grad({random_tensor({1, 2, 6, 6}, 11), random_tensor({3, 2, 3, 3}, 12)},
               [](Tape& t, const std::vector<Var>& v) { return t.conv2d(v[0], v[1], 1, 1); },
               [](const std::vector<shadow::T>& s) { return shadow::conv2d(s[0], s[1], 1, 1); });
}

TEST_CASE("conv2d gradient matches finite differences (stride 2, unpadded)") {
    check_grad({random_tensor({2, 3, 7, 7}, 13), random_tensor({4, 3, 3, 3}, 14)},
               [](Tape& t, const std::vector<Var>& v) { return t.conv2d(v[0], v[1], 2, 0); },
               [](const std::vector<shadow::T>& s) { return shadow::conv2d(s[0], s[1], 2, 0); });
}

TEST_CASE("channel_bias gradient matches finite differences") {
    check_grad({random_tensor({2, 3, 4, 4}, 15), random_tensor({3}, 16)},
               [](Tape& t, const std::vector<Var>& v) { return t.channel_bias(v[0], v[1]); },
               [](const std::vector<shadow::T>& s) { return shadow::channel_bias(s[0], s[1]); });
}

TEST_CASE("dense gradient matches finite differences") {
    check_grad({random_tensor({3, 5}, 17), random_tensor({5, 4}, 18), random_tensor({4}, 19)},
               [](Tape& t, const std::vector<Var>& v) { return t.dense(v[0], v[1], v[2]); },
               [](const std::vector<shadow::T>& s) { return shadow::dense(s[0], s[1], s[2]); });
}

TEST_CASE("relu gradient matches finite differences away from the kink") {
    Tensor x = random_tensor({2, 3, 4, 4}, 20);
    for (float& v : x.data) {
        if (std::abs(v) < 0.05f) v += 0.1f;  // keep clear of the non-differentiable point
    }
    check_grad({x}, [](Tape& t, const std::vector<Var>& v) { return t.relu(v[0]); },
               [](const std::vector<shadow::T>& s) { return shadow::relu(s[0]); });
}

TEST_CASE("sigmoid gradient matches finite differences") {
    check_grad({random_tensor({4, 7}, 21, -3.0f, 3.0f)},
               [](Tape& t, const std::vector<Var>& v) { return t.sigmoid(v[0]); },
               [](const std::vector<shadow::T>& s) { return shadow::sigmoid(s[0]); });
}

TEST_CASE("layer_norm gradient matches finite differences") {
    check_grad({random_tensor({3, 9}, 29, -2.0f, 2.0f)},
               [](Tape& t, const std::vector<Var>& v) { return t.layer_norm(v[0]); },
               [](const std::vector<shadow::T>& s) { return shadow::layer_norm(s[0]); }, 1e-3, 1e-4);
}

TEST_CASE("layer_norm standardizes each row and validates its input") {
    Tape tape;
    const Var out = tape.layer_norm(tape.leaf(random_tensor({4, 16}, 30, -5.0f, 5.0f)));
    const Tensor& y = tape.value(out);
    for (int i = 0; i < 4; ++i) {
        double mu = 0.0, var = 0.0;
        for (int j = 0; j < 16; ++j) mu += y.data[static_cast<std::size_t>(i) * 16 + j];
        mu /= 16.0;
        for (int j = 0; j < 16; ++j) {
            const double c = y.data[static_cast<std::size_t>(i) * 16 + j] - mu;
            var += c * c;
        }
        CHECK(std::abs(mu) < 1e-5);
        CHECK(std::abs(var / 16.0 - 1.0) < 1e-3);
    }
    Tape bad;
    CHECK_THROWS_AS(bad.layer_norm(bad.leaf(random_tensor({2, 2, 2, 2}, 31))), std::invalid_argument);
}

TEST_CASE("avg_pool2d gradient matches finite differences") {
    check_grad({random_tensor({2, 2, 6, 6}, 22)},
               [](Tape& t, const std::vector<Var>& v) { return t.avg_pool2d(v[0], 2); },
               [](const std::vector<shadow::T>& s) { return shadow::avg_pool2d(s[0], 2); });
}

TEST_CASE("max_pool2d gradient matches finite differences away from ties") {
    Tensor x({1, 2, 6, 6});
    std::mt19937_64 rng(23);
    std::vector<float> grid(x.data.size());
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<float>(i) * 0.01f;
    std::shuffle(grid.begin(), grid.end(), rng);  // distinct values: argmax stable under +-h
    x.data = grid;
    check_grad({x}, [](Tape& t, const std::vector<Var>& v) { return t.max_pool2d(v[0], 2); },
               [](const std::vector<shadow::T>& s) { return shadow::max_pool2d(s[0], 2); });
}

TEST_CASE("flatten gradient matches finite differences") {
    check_grad({random_tensor({2, 3, 2, 2}, 24)},
               [](Tape& t, const std::vector<Var>& v) { return t.flatten(v[0]); },
               [](const std::vector<shadow::T>& s) { return shadow::flatten(s[0]); });
}

TEST_CASE("add gradient matches finite differences") {
    check_grad({random_tensor({2, 5}, 25), random_tensor({2, 5}, 26)},
               [](Tape& t, const std::vector<Var>& v) { return t.add(v[0], v[1]); },
               [](const std::vector<shadow::T>& s) { return shadow::add(s[0], s[1]); });
}

TEST_CASE("affine gradient matches finite differences") {
    check_grad({random_tensor({3, 4}, 27)},
               [](Tape& t, const std::vector<Var>& v) { return t.affine(v[0], 2.5f, -0.75f); },
               [](const std::vector<shadow::T>& s) { return shadow::affine(s[0], 2.5, -0.75); });
}

TEST_CASE("square and sum gradients match finite differences") {
    check_grad({random_tensor({3, 4}, 28)},
               [](Tape& t, const std::vector<Var>& v) { return t.sum(t.square(v[0])); },
               [](const std::vector<shadow::T>& s) {
                   shadow::T out{{1}, {shadow::sum(shadow::square(s[0]))}};
                   return out;
               });
}

TEST_CASE("bce_loss gradient matches finite differences") {
    const std::vector<float> labels{1.0f, 0.0f, 1.0f, 0.0f, 1.0f};
    check_grad({random_tensor({5, 1}, 29, 0.1f, 0.9f)},
               [&](Tape& t, const std::vector<Var>& v) { return t.bce_loss(v[0], labels); },
               [&](const std::vector<shadow::T>& s) {
                   shadow::T out{{1}, {shadow::bce(s[0], labels)}};
                   return out;
               });
}

TEST_CASE("bce_loss validates labels") {
    Tape t;
    Var s = t.leaf(random_tensor({2, 1}, 30, 0.2f, 0.8f));
    CHECK_THROWS(t.bce_loss(s, {0.5f, 1.0f}));
    CHECK_THROWS(t.bce_loss(s, {1.0f}));
}

TEST_CASE("a tensor consumed twice accumulates both partials") {
    Tape t;
    Var x = t.leaf(random_tensor({2, 3}, 31));
    Var y = t.add(x, x);
    t.backward(t.sum(y));
    for (float g : t.grad(x).data) CHECK(g == doctest::Approx(2.0f));
}

TEST_CASE("tape is sealed after backward") {
    Tape t;
    Var x = t.leaf(random_tensor({2, 2}, 32));
    Var loss = t.sum(t.square(x));
    t.backward(loss);
    CHECK(t.finished());
    CHECK_THROWS(t.relu(x));
    CHECK_THROWS(t.backward(loss));
    CHECK_NOTHROW(t.grad(x));  // gradients stay readable
}

TEST_CASE("backward requires a scalar loss") {
    Tape t;
    Var x = t.leaf(random_tensor({2, 2}, 33));
    CHECK_THROWS(t.backward(x));
}

TEST_CASE("sign is +1/-1/0") {
    Tensor t = Tensor::from_values({5}, {-2.0f, -0.0f, 0.0f, 3.5f, -1e-20f});
    const Tensor s = antifor::sign(t);
    CHECK(s.data[0] == -1.0f);
    CHECK(s.data[1] == 0.0f);
    CHECK(s.data[2] == 0.0f);
    CHECK(s.data[3] == 1.0f);
    CHECK(s.data[4] == -1.0f);
}

TEST_CASE("conv2d rejects mismatched shapes") {
    Tape t;
    Var x = t.leaf(random_tensor({1, 2, 4, 4}, 34));
    Var k = t.leaf(random_tensor({3, 3, 3, 3}, 35));  // 3 input channels vs 2
    CHECK_THROWS(t.conv2d(x, k, 1, 1));
}

TEST_CASE("end-to-end detector gradient matches a 64-bit shadow at sampled pixels") {
    for (const char* id : {"a1", "a3"}) {
        CAPTURE(id);
        auto arch = antifor::DetectorArch::preset(id, 8);
        auto model = antifor::DetectorModel::init(arch, 3);
        // the head is zero-initialized; randomize it mildly so input gradients
        // are nonzero without saturating the sigmoid (a clamped score has an
        // exactly-zero loss gradient by design)
        std::mt19937_64 rng(40);
        std::normal_distribution<float> nd(0.0f, 0.01f);
        for (auto& p : model.params) {
            if (p.ndim() == 2 || p.ndim() == 1) {
                for (float& v : p.data) v = nd(rng);
            }
        }

        Tensor x = random_tensor({1, 3, 8, 8}, 41, 0.0f, 255.0f);
        const std::vector<float> labels{1.0f};
        Tape tape;
        Var in = tape.leaf(x);
        Var loss = tape.bce_loss(model.forward(tape, in), labels);
        tape.backward(loss);
        const Tensor& g = tape.grad(in);

        double gmax = 0.0;
        for (float v : g.data) gmax = std::max(gmax, std::abs(static_cast<double>(v)));
        REQUIRE(gmax > 0.0);

        shadow::T xd = shadow::from_tensor(x);
        auto phi = [&](const shadow::T& v) { return shadow::bce(shadow::detector_forward(model, v), labels); };
        std::uniform_int_distribution<std::size_t> pick(0, x.data.size() - 1);
        const double h = 1e-2;
        for (int k = 0; k < 20; ++k) {
            const std::size_t j = pick(rng);
            const double saved = xd.data[j];
            xd.data[j] = saved + h;
            const double up = phi(xd);
            xd.data[j] = saved - h;
            const double dn = phi(xd);
            xd.data[j] = saved;
            const double fd = (up - dn) / (2.0 * h);
            CAPTURE(j);
            // 2% relative to the finite difference (float32 forward/backward
            // vs the 64-bit oracle), floored at 1% of the peak gradient so
            // float noise on near-zero entries is not amplified
            CHECK(std::abs(static_cast<double>(g.data[j]) - fd) <= 2e-2 * std::max(0.01 * gmax, std::abs(fd)));
        }
    }
}
