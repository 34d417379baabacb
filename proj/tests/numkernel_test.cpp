#include <doctest.h>

#include <cmath>

#include "dmbpn/recurrent.hpp"
#include "dmbpn/tape.hpp"

using namespace dmbpn;

namespace {

GruParams zero_gru(ParamRegistry& reg, const std::string& prefix, int in, int hid) {
    Rng rng(1);
    GruParams p = make_gru(reg, prefix, in, hid, rng);
    for (Tensor* t : {p.wz, p.uz, p.bz, p.wr, p.ur, p.br, p.wh, p.uh, p.bh})
        std::fill(t->values.begin(), t->values.end(), 0.0);
    return p;
}

// Straight-line re-implementation of the three gate formulas, independent of
// the tape.
std::vector<double> gru_oracle(const std::vector<double>& x, const std::vector<double>& h,
                               const GruParams& p) {
    const int hid = p.hidden_dim, in = p.input_dim;
    auto mv = [](const Tensor& w, const std::vector<double>& v, int rows, int cols) {
        std::vector<double> out(static_cast<std::size_t>(rows), 0.0);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                out[static_cast<std::size_t>(i)] +=
                    w.values[static_cast<std::size_t>(i) * cols + j] * v[static_cast<std::size_t>(j)];
        return out;
    };
    std::vector<double> z(static_cast<std::size_t>(hid)), r(static_cast<std::size_t>(hid)),
        cand(static_cast<std::size_t>(hid)), out(static_cast<std::size_t>(hid));
    auto wzx = mv(*p.wz, x, hid, in), uzh = mv(*p.uz, h, hid, hid);
    auto wrx = mv(*p.wr, x, hid, in), urh = mv(*p.ur, h, hid, hid);
    for (int i = 0; i < hid; ++i) {
        z[i] = 1.0 / (1.0 + std::exp(-(wzx[i] + uzh[i] + p.bz->values[i])));
        r[i] = 1.0 / (1.0 + std::exp(-(wrx[i] + urh[i] + p.br->values[i])));
    }
    std::vector<double> rh(static_cast<std::size_t>(hid));
    for (int i = 0; i < hid; ++i) rh[i] = r[i] * h[static_cast<std::size_t>(i)];
    auto whx = mv(*p.wh, x, hid, in), uhrh = mv(*p.uh, rh, hid, hid);
    for (int i = 0; i < hid; ++i) {
        cand[i] = std::tanh(whx[i] + uhrh[i] + p.bh->values[i]);
        out[i] = (1.0 - z[i]) * h[static_cast<std::size_t>(i)] + z[i] * cand[i];
    }
    return out;
}

}  // namespace

TEST_CASE("tensor invariants") {
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK_THROWS_AS(Tensor({0, 3}), DimensionError);

    t.values[0] = std::nan("");
    CHECK_THROWS_AS(t.check_invariants(), NumericError);
    t.values[0] = 0.0;
    t.grad = {1.0};
    CHECK_THROWS_AS(t.check_invariants(), DimensionError);
}

TEST_CASE("rng determinism and bounds") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    bool saw_difference = false;
    for (int i = 0; i < 100; ++i)
        if (a.uniform() != c.uniform()) saw_difference = true;
    CHECK(saw_difference);

    Rng d(7);
    for (int i = 0; i < 1000; ++i) CHECK(d.uniform_int(5) < 5);
    CHECK_THROWS_AS(d.uniform_int(0), DomainError);
}

TEST_CASE("registry keeps insertion order and rejects duplicates") {
    ParamRegistry reg;
    reg.add("b", Tensor({2}));
    reg.add("a", Tensor({3}));
    CHECK(reg.names() == std::vector<std::string>{"b", "a"});
    CHECK(reg.total_parameters() == 5);
    CHECK_THROWS_AS(reg.add("a", Tensor({1})), DomainError);
    CHECK_THROWS_AS(reg.get("missing"), StateError);
}

TEST_CASE("softmax: symmetry, closed form, large-input stability") {
    Tape t;
    auto p = t.value(t.softmax(t.constant({0.0, 0.0})));
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));

    auto q = t.value(t.softmax(t.constant({std::log(2.0), 0.0})));
    CHECK(q[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    auto big = t.value(t.softmax(t.constant({1000.0, 999.0})));
    CHECK(std::isfinite(big[0]));
    CHECK(big[0] == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(big[1] == doctest::Approx(0.2689).epsilon(1e-4));
}

TEST_CASE("softmax properties: sums to one, shift invariant") {
    Rng rng(11);
    Tape t;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(8));
        std::vector<double> x(static_cast<std::size_t>(n));
        for (double& v : x) v = rng.uniform(-20.0, 20.0);
        const double c = rng.uniform(-50.0, 50.0);
        std::vector<double> shifted = x;
        for (double& v : shifted) v += c;

        auto a = t.value(t.softmax(t.constant(x)));
        auto b = t.value(t.softmax(t.constant(shifted)));
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            sum += a[i];
            CHECK(a[i] > 0.0);
            CHECK(std::fabs(a[i] - b[i]) < 1e-12);
        }
        CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
    CHECK_THROWS_AS(t.constant(std::initializer_list<double>{}), DomainError);
}

TEST_CASE("cross entropy: perfect, uniform, calculator value, floor") {
    Tape t;
    CHECK(t.scalar(t.cross_entropy(t.constant({1.0, 0.0}), 0)) == 0.0);
    CHECK(t.scalar(t.cross_entropy(t.constant({0.5, 0.5}), 1)) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // 0.9526/0.0474 is softmax([0,-3]); the oracle value is -ln of the exact
    // normalized mass.
    const double p1 = std::exp(-3.0) / (1.0 + std::exp(-3.0));
    auto pred = t.softmax(t.constant({0.0, -3.0}));
    CHECK(t.scalar(t.cross_entropy(pred, 1)) == doctest::Approx(-std::log(p1)).epsilon(1e-12));
    CHECK(t.scalar(t.cross_entropy(pred, 1)) == doctest::Approx(3.0486).epsilon(1e-4));

    // Flooring keeps confident-wrong losses finite.
    CHECK(std::isfinite(t.scalar(t.cross_entropy(t.constant({1.0, 0.0}), 1))));
    CHECK_THROWS_AS(t.cross_entropy(t.constant({0.5, 0.5}), 2), DomainError);
}

TEST_CASE("dropout: identity cases, expectation, LLN mean") {
    Tape t;
    Rng rng(5);
    Var x = t.constant({1.0, 2.0, 3.0});
    CHECK(t.dropout(x, 0.0, rng, true).id == x.id);
    CHECK(t.dropout(x, 0.2, rng, false).id == x.id);
    CHECK_THROWS_AS(t.dropout(x, 1.0, rng, true), DomainError);

    std::vector<double> ones(10000, 1.0);
    Tape big;
    Rng seed17(17);
    auto out = big.value(big.dropout(big.constant(ones), 0.2, seed17, true));
    double mean = 0.0;
    for (double v : out) {
        CHECK((v == 0.0 || v == doctest::Approx(1.25).epsilon(1e-12)));
        mean += v;
    }
    mean /= static_cast<double>(out.size());
    CHECK(mean == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("sgd: arithmetic, zero grad, quadratic iteration, missing grad") {
    ParamRegistry reg;
    Tensor& p = reg.add("p", Tensor({1}));
    p.values = {1.0};
    p.grad = {2.0};
    sgd_step(reg, 0.001);
    CHECK(p.values[0] == doctest::Approx(0.998).epsilon(1e-15));
    CHECK_FALSE(p.has_grad());

    p.grad = {0.0};
    sgd_step(reg, 0.5);
    CHECK(p.values[0] == doctest::Approx(0.998).epsilon(1e-15));

    // Two steps on f(p)=p^2 from p=1 with lr=0.1: p <- p - 0.2p.
    p.values = {1.0};
    for (int step = 0; step < 2; ++step) {
        Tape t;
        Var loss = t.mul(t.param(p), t.param(p));
        t.backward(loss);
        sgd_step(reg, 0.1);
    }
    CHECK(p.values[0] == doctest::Approx(0.64).epsilon(1e-12));

    reg.add("q", Tensor({1}));
    CHECK_THROWS_AS(sgd_step(reg, 0.1), StateError);
}

TEST_CASE("gru cell: zero weights halve the hidden state") {
    ParamRegistry reg;
    GruParams p = zero_gru(reg, "g", 3, 2);
    Tape t;
    Var h = t.constant({1.0, -2.0});
    Var x = t.constant({0.3, -0.7, 2.0});
    auto out = t.value(gru_cell(t, x, h, p));
    CHECK(out[0] == 0.5);
    CHECK(out[1] == -1.0);

    auto zero_h = t.value(gru_cell(t, x, t.zeros(2), p));
    CHECK(zero_h[0] == 0.0);
    CHECK(zero_h[1] == 0.0);
}

TEST_CASE("gru cell matches the straight-line oracle") {
    ParamRegistry reg;
    Rng rng(99);
    GruParams p = make_gru(reg, "g", 3, 2, rng);
    // Give biases nonzero values too.
    for (Tensor* b : {p.bz, p.br, p.bh})
        for (double& v : b->values) v = rng.uniform(-0.5, 0.5);

    std::vector<double> x = {0.2, -1.3, 0.8}, h = {0.5, -0.25};
    Tape t;
    auto got = t.value(gru_cell(t, t.constant(x), t.constant(h), p));
    auto want = gru_oracle(x, h, p);
    for (int i = 0; i < 2; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));

    CHECK_THROWS_AS(gru_cell(t, t.constant({1.0}), t.constant(h), p), DimensionError);
}

TEST_CASE("bigru: length one, zero weights, palindrome symmetry") {
    ParamRegistry reg;
    Rng rng(3);
    BiGruParams p = make_bigru(reg, "bg", 2, 3, rng);

    Tape t;
    std::vector<Var> one = {t.constant({0.4, -0.2})};
    auto out = bigru_sequence(t, one, p);
    REQUIRE(out.size() == 1);
    CHECK(t.dim(out[0]) == 6);
    // Degenerate sequence: forward and backward each take exactly one step
    // from zero state.
    auto fwd = t.value(gru_cell(t, one[0], t.zeros(3), p.fwd));
    auto bwd = t.value(gru_cell(t, one[0], t.zeros(3), p.bwd));
    auto both = t.value(out[0]);
    for (int i = 0; i < 3; ++i) {
        CHECK(both[i] == fwd[i]);
        CHECK(both[3 + i] == bwd[i]);
    }

    CHECK_THROWS_AS(bigru_sequence(t, std::vector<Var>{}, p), DomainError);

    ParamRegistry zreg;
    BiGruParams zp = {zero_gru(zreg, "f", 2, 3), zero_gru(zreg, "b", 2, 3)};
    std::vector<Var> xs = {t.constant({1.0, 2.0}), t.constant({-1.0, 0.5})};
    for (Var v : bigru_sequence(t, xs, zp))
        for (double c : t.value(v)) CHECK(c == 0.0);

    // Palindromic input with tied fwd/bwd weights: running on the reversed
    // sequence swaps the two halves of each output.
    ParamRegistry treg;
    Rng trng(8);
    GruParams shared = make_gru(treg, "s", 2, 3, trng);
    BiGruParams tied = {shared, shared};
    std::vector<Var> pal = {t.constant({1.0, 0.0}), t.constant({0.5, 0.5}),
                            t.constant({1.0, 0.0})};
    std::vector<Var> rev = {pal[2], pal[1], pal[0]};
    auto a = bigru_sequence(t, pal, tied);
    auto b = bigru_sequence(t, rev, tied);
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto av = t.value(a[i]);
        auto bv = t.value(b[a.size() - 1 - i]);
        for (int j = 0; j < 3; ++j) {
            CHECK(av[j] == doctest::Approx(bv[3 + j]).epsilon(1e-14));
            CHECK(av[3 + j] == doctest::Approx(bv[j]).epsilon(1e-14));
        }
    }
}

TEST_CASE("tape ops surface numeric errors at op boundaries") {
    Tape t;
    Var huge = t.constant({1e308});
    CHECK_THROWS_AS(t.mul(huge, huge), NumericError);
}

TEST_CASE("tape determinism: same seed, same graph, identical bits") {
    auto run = [](std::uint64_t seed) {
        ParamRegistry reg;
        Rng rng(seed);
        GruParams p = make_gru(reg, "g", 3, 4, rng);
        Tape t;
        Rng drop(derive_seed(seed, 9));
        Var x = t.dropout(t.constant({0.3, -0.2, 0.9}), 0.3, drop, true);
        Var h = gru_cell(t, x, t.zeros(4), p);
        Var loss = t.dot(h, h);
        t.backward(loss);
        std::vector<double> out{t.scalar(loss)};
        reg.for_each([&](const std::string&, const Tensor& tn) {
            out.insert(out.end(), tn.grad.begin(), tn.grad.end());
        });
        return out;
    };
    CHECK(run(123) == run(123));
    CHECK(run(123) != run(124));
}

TEST_CASE("average of identical vectors is bit-identical") {
    Tape t;
    std::vector<double> v = {0.1, -0.7, 3.14159, 1e-8};
    for (int k : {1, 5, 15}) {
        std::vector<Var> copies;
        for (int i = 0; i < k; ++i) copies.push_back(t.constant(v));
        auto mean = t.value(t.average(copies));
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(mean[i] == v[i]);
    }
}
