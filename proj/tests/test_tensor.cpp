#include "doctest.h"

#include <random>

#include "gradcheck.hpp"
#include "vspt/rng.hpp"
#include "vspt/tensor.hpp"

using namespace vspt;

namespace {

Tensor random_tensor(Shape shape, uint64_t seed, bool requires_grad = true, double lo = -1.0,
                     double hi = 1.0) {
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(size_t(shape_numel(shape)));
    for (auto& x : v) x = dist(rng);
    return Tensor(std::move(shape), std::move(v), requires_grad);
}

} // namespace

TEST_SUITE_BEGIN("tensor");

TEST_CASE("elementwise basics") {
    Tensor a({2}, {1.0, 2.0});
    Tensor b({2}, {3.0, 4.0});
    Tensor c = add(a, b);
    CHECK(c.values() == std::vector<double>{4.0, 6.0});

    Tensor r = relu(Tensor({3}, {-1.0, 0.0, 2.0}));
    CHECK(r.values() == std::vector<double>{0.0, 0.0, 2.0});

    Tensor d = sub(b, a);
    CHECK(d.values() == std::vector<double>{2.0, 2.0});
    Tensor m = mul(a, b);
    CHECK(m.values() == std::vector<double>{3.0, 8.0});
    Tensor s = scale(a, -2.0);
    CHECK(s.values() == std::vector<double>{-2.0, -4.0});
}

TEST_CASE("x*x gradient matches finite differences") {
    Tensor x = Tensor::scalar(3.0, true);
    auto res = gradcheck::check([&]() { return mul(x, x); }, {x});
    CHECK(res.max_rel_err < 1e-6);
    {
        x.zero_grad();
        Tape tape;
        Tensor y = mul(x, x);
        tape.backward(y);
    }
    CHECK(x.grad_values()[0] == doctest::Approx(6.0));
}

TEST_CASE("matmul values") {
    Tensor eye({2, 2}, {1.0, 0.0, 0.0, 1.0});
    Tensor m({2, 2}, {1.0, 2.0, 3.0, 4.0});
    CHECK(matmul(eye, m).values() == m.values());

    Tensor row({1, 2}, {1.0, 0.0});
    Tensor col({2, 1}, {5.0, 7.0});
    CHECK(matmul(row, col).values() == std::vector<double>{5.0});

    CHECK_THROWS_AS(matmul(row, row), std::invalid_argument);
}

TEST_CASE("matmul gradients vs finite differences") {
    Tensor a = random_tensor({3, 4}, 11);
    Tensor b = random_tensor({4, 2}, 12);
    auto res = gradcheck::check([&]() { return sum_all(mul(matmul(a, b), matmul(a, b))); }, {a, b});
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("shape ops") {
    Tensor feat({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor prompt({1, 3}, {7, 8, 9});
    Tensor cat = concat(prompt, feat, 0);
    CHECK(cat.shape() == Shape{3, 3});
    CHECK(cat.values() == std::vector<double>{7, 8, 9, 1, 2, 3, 4, 5, 6});

    Tensor m({2, 2}, {2, 4, 6, 8});
    Tensor mn = mean(m, 0);
    CHECK(mn.values() == std::vector<double>{4, 6});

    Tensor t = transpose(feat);
    CHECK(t.shape() == Shape{3, 2});
    CHECK(t.at({0, 1}) == 4);

    CHECK_THROWS_AS(concat(feat, Tensor({1, 2}, {0.0, 0.0}), 0), std::invalid_argument);
    CHECK_THROWS_AS(sum(feat, 2), std::invalid_argument);
}

TEST_CASE("slice backward routes gradient into sliced region only") {
    Tensor x({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8}, true);
    {
        Tape tape;
        Tensor s = slice(x, 0, 1, 2);
        CHECK(s.values() == std::vector<double>{3, 4, 5, 6});
        tape.backward(sum_all(s));
    }
    CHECK(x.grad_values() == std::vector<double>{0, 0, 1, 1, 1, 1, 0, 0});
}

TEST_CASE("backward of sum gives all-ones grad") {
    Tensor p = random_tensor({3, 2}, 5);
    {
        Tape tape;
        tape.backward(sum_all(p));
    }
    CHECK(p.grad_values() == std::vector<double>(6, 1.0));
}

TEST_CASE("unreached parameters get no gradient") {
    Tensor used = Tensor::scalar(2.0, true);
    Tensor unused = Tensor::scalar(5.0, true);
    {
        Tape tape;
        Tensor loss = mul(used, used);
        tape.backward(loss);
    }
    CHECK(used.has_grad());
    CHECK_FALSE(unused.has_grad());
}

TEST_CASE("frozen tensors never accumulate gradient") {
    Tensor frozen = random_tensor({2, 2}, 3, false);
    Tensor live = random_tensor({2, 2}, 4, true);
    {
        Tape tape;
        tape.backward(sum_all(matmul(frozen, live)));
    }
    CHECK_FALSE(frozen.has_grad());
    CHECK(live.has_grad());
}

TEST_CASE("backward requires a scalar recorded on the tape") {
    Tensor x = random_tensor({2, 2}, 9);
    Tape tape;
    Tensor y = add(x, x);
    CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
    CHECK_THROWS_AS(tape.backward(x), std::invalid_argument); // leaf, not recorded
}

TEST_CASE("tape runs every rule exactly once, in reverse") {
    Tensor x = Tensor::scalar(1.5, true);
    Tape tape;
    Tensor y = mul(add(x, x), sub(x, scale(x, 0.5)));
    Tensor loss = sum_all(y);
    size_t recorded = tape.size();
    tape.backward(loss);
    CHECK(tape.rules_run() == recorded);
    CHECK(loss.node_id() == int(recorded) - 1); // outputs appear after their inputs
}

TEST_CASE("broadcast add: [T,...] + [...] sums gradient over leading dim") {
    Tensor video = random_tensor({3, 2, 2, 1}, 21, false);
    Tensor prompt({2, 2, 1}, 0.0, true);
    {
        Tape tape;
        Tensor out = add(video, prompt);
        CHECK(out.shape() == Shape{3, 2, 2, 1});
        tape.backward(sum_all(out));
    }
    CHECK(prompt.grad_values() == std::vector<double>(4, 3.0)); // summed over T=3
    CHECK_THROWS_WITH_AS(add(Tensor({2, 3}, 0.0), Tensor({4}, 0.0)),
                         doctest::Contains("[2,3]"), std::invalid_argument);
}

TEST_CASE("gradcheck across the op set") {
    Tensor a = random_tensor({2, 3}, 31);
    Tensor b = random_tensor({2, 3}, 32);
    Tensor w = random_tensor({3, 3}, 33);
    auto fn = [&]() {
        Tensor h = matmul(add(a, b), w);
        Tensor e = vspt::exp(scale(h, 0.3));
        Tensor l = vspt::log(add(e, Tensor(e.shape(), 1.0)));
        Tensor p = permute(reshape(l, {3, 2}), {1, 0});
        Tensor sm = softmax_rows(p);
        Tensor ls = log_softmax_rows(mul(p, sm));
        Tensor sl = slice(ls, 1, 0, 2);
        Tensor cc = concat(sl, sl, 0);
        return add(sum_all(mean(cc, 0)), select(sum(cc, 1), 1));
    };
    auto res = gradcheck::check(fn, {a, b, w});
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("gradcheck relu graph away from the kink") {
    Tensor a = random_tensor({4, 4}, 41, true, 0.05, 1.0);
    Tensor w = random_tensor({4, 2}, 42, true, 0.05, 1.0);
    auto res = gradcheck::check([&]() { return sum_all(relu(matmul(a, w))); }, {a, w});
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("determinism: identical inputs give bit-identical outputs and grads") {
    auto run = [&](std::vector<double>& grads) {
        Tensor a = random_tensor({3, 3}, 77);
        Tensor b = random_tensor({3, 3}, 78);
        Tape tape;
        Tensor loss = sum_all(softmax_rows(matmul(a, b)));
        tape.backward(loss);
        grads = a.grad_values();
        return loss.item();
    };
    std::vector<double> g1, g2;
    double l1 = run(g1);
    double l2 = run(g2);
    CHECK(l1 == l2);
    CHECK(g1 == g2);
}

TEST_CASE("softmax rows sum to one") {
    Tensor x = random_tensor({5, 7}, 90, false, -4.0, 4.0);
    Tensor y = softmax_rows(x);
    for (int i = 0; i < 5; ++i) {
        double s = 0.0;
        for (int j = 0; j < 7; ++j) s += y.at({i, j});
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_SUITE_END();
