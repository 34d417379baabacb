#include <doctest.h>

#include <cmath>

#include "dmbpn/memory.hpp"

using namespace dmbpn;

namespace {

MemoryParams test_memory(ParamRegistry& reg, int dim, std::uint64_t seed,
                         MemoryUpdate update = MemoryUpdate::Relu) {
    Rng rng(seed);
    return make_memory(reg, "mem", dim, dim, update, rng);
}

void zero_tensor(Tensor* t) { std::fill(t->values.begin(), t->values.end(), 0.0); }

}  // namespace

TEST_CASE("attention gate: singleton and symmetry") {
    ParamRegistry reg;
    MemoryParams mem = test_memory(reg, 3, 1);
    Tape t;
    Var q = t.constant({0.5, -0.5, 1.0});
    Var m = t.constant({0.1, 0.2, 0.3});

    std::vector<Var> one = {t.constant({1.0, 0.0, 0.0})};
    auto a1 = t.value(attention_gate(t, one, q, m, mem));
    REQUIRE(a1.size() == 1);
    CHECK(a1[0] == 1.0);

    Var f = t.constant({0.7, 0.7, -0.7});
    std::vector<Var> twins = {f, f};
    auto a2 = t.value(attention_gate(t, twins, q, m, mem));
    CHECK(a2[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a2[1] == doctest::Approx(0.5).epsilon(1e-12));

    std::vector<Var> wrong = {t.constant({1.0, 2.0})};
    CHECK_THROWS_AS(attention_gate(t, wrong, q, m, mem), DimensionError);
}

TEST_CASE("attention gate: fact matching the question wins") {
    // 2-dim setup evaluated directly against the gate formulas: with zero
    // memory, features [F*q, |F-q|, 0, |F|]; W1 row picks out sum(F*q), so
    // the fact equal to q scores tanh(1) and the orthogonal one tanh(0).
    ParamRegistry reg;
    Rng rng(3);
    MemoryParams mem = make_memory(reg, "mem", 2, 2, MemoryUpdate::Relu, rng);
    zero_tensor(mem.gate_hidden);
    zero_tensor(mem.gate_out);
    mem.gate_hidden->values[0] = 1.0;  // row 0: F*q component 0
    mem.gate_hidden->values[1] = 1.0;  // row 0: F*q component 1
    mem.gate_out->values[0] = 1.0;
    // Identity projections so raw vectors pass through the gate untouched.
    zero_tensor(mem.fact_proj.w);
    mem.fact_proj.w->values[0] = 1.0;
    mem.fact_proj.w->values[3] = 1.0;
    zero_tensor(mem.fact_proj.b);
    zero_tensor(mem.question_proj.w);
    mem.question_proj.w->values[0] = 1.0;
    mem.question_proj.w->values[3] = 1.0;
    zero_tensor(mem.question_proj.b);

    Tape t;
    Var q = t.constant({1.0, 0.0});
    Var m0 = t.zeros(2);
    std::vector<Var> facts = {t.constant({1.0, 0.0}), t.constant({0.0, 1.0})};
    auto a = t.value(attention_gate(t, facts, q, m0, mem));
    CHECK(a[0] > a[1]);
    const double s0 = std::exp(std::tanh(1.0)), s1 = std::exp(std::tanh(0.0));
    CHECK(a[0] == doctest::Approx(s0 / (s0 + s1)).epsilon(1e-12));
}

TEST_CASE("attentional gru: fixed point, single fact, attention rescales inputs") {
    ParamRegistry reg;
    MemoryParams mem = test_memory(reg, 2, 7);

    SUBCASE("zero weights give zero context") {
        for (Tensor* w : {mem.attn_gru.wz, mem.attn_gru.uz, mem.attn_gru.bz, mem.attn_gru.wr,
                          mem.attn_gru.ur, mem.attn_gru.br, mem.attn_gru.wh, mem.attn_gru.uh,
                          mem.attn_gru.bh})
            zero_tensor(w);
        Tape t;
        std::vector<Var> facts = {t.constant({1.0, 1.0}), t.constant({2.0, 2.0}),
                                  t.constant({3.0, 3.0})};
        Var a = t.constant({1.0, 0.0, 0.0});
        auto c = t.value(attentional_gru(t, facts, a, mem));
        CHECK(c[0] == 0.0);
        CHECK(c[1] == 0.0);
    }

    SUBCASE("single fact equals one gru step from zero state") {
        Tape t;
        std::vector<Var> facts = {t.constant({0.4, -0.9})};
        Var a = t.constant({1.0});
        auto c = t.value(attentional_gru(t, facts, a, mem));
        auto step = t.value(gru_cell(t, facts[0], t.zeros(2), mem.attn_gru));
        CHECK(c[0] == step[0]);
        CHECK(c[1] == step[1]);
    }

    SUBCASE("halving the attention changes the context") {
        Tape t;
        std::vector<Var> facts = {t.constant({0.4, -0.9}), t.constant({-0.2, 0.3})};
        auto c1 = t.value(attentional_gru(t, facts, t.constant({0.6, 0.4}), mem));
        auto c2 = t.value(attentional_gru(t, facts, t.constant({0.3, 0.2}), mem));
        bool differs = false;
        for (int i = 0; i < 2; ++i)
            if (c1[i] != c2[i]) differs = true;
        CHECK(differs);

        CHECK_THROWS_AS(attentional_gru(t, facts, t.constant({1.0}), mem), DimensionError);
    }
}

TEST_CASE("memory update: relu semantics") {
    ParamRegistry reg;
    MemoryParams mem = test_memory(reg, 2, 9);
    Tape t;
    Var m = t.constant({0.5, -0.5});
    Var c = t.constant({1.0, 2.0});
    Var q = t.constant({-1.0, 1.0});

    zero_tensor(mem.update_w);
    zero_tensor(mem.update_b);
    auto zero_out = t.value(memory_update(t, m, c, q, mem));
    CHECK(zero_out[0] == 0.0);
    CHECK(zero_out[1] == 0.0);

    mem.update_b->values = {-1.0, -1.0};
    auto clamped = t.value(memory_update(t, m, c, q, mem));
    CHECK(clamped[0] == 0.0);
    CHECK(clamped[1] == 0.0);
}

TEST_CASE("memory update: non-negativity over random inputs") {
    ParamRegistry reg;
    MemoryParams mem = test_memory(reg, 4, 21);
    Rng rng(55);
    Tape t;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> mv(4), cv(4), qv(4);
        for (double* vec : {mv.data(), cv.data(), qv.data()})
            for (int i = 0; i < 4; ++i) vec[i] = rng.uniform(-2.0, 2.0);
        auto out =
            t.value(memory_update(t, t.constant(mv), t.constant(cv), t.constant(qv), mem));
        for (double v : out) CHECK(v >= 0.0);
        if (trial % 100 == 99) t.reset();
    }
}

TEST_CASE("run_episodic_memory: defaults, pass count matters, purity") {
    ParamRegistry reg;
    MemoryParams mem = test_memory(reg, 3, 13);
    Tape t;
    std::vector<Var> facts = {t.constant({0.2, -0.4, 0.6}), t.constant({1.0, 0.1, -0.3})};
    Var q = t.constant({0.5, 0.5, -0.5});

    CHECK_THROWS_AS(run_episodic_memory(t, facts, q, 0, mem), DomainError);
    CHECK_THROWS_AS(run_episodic_memory(t, std::vector<Var>{}, q, 1, mem), DomainError);

    auto m1 = t.value(run_episodic_memory(t, facts, q, 1, mem));
    auto m3 = t.value(run_episodic_memory(t, facts, q, 3, mem));
    bool differs = false;
    for (int i = 0; i < 3; ++i)
        if (m1[i] != m3[i]) differs = true;
    CHECK(differs);

    auto again = t.value(run_episodic_memory(t, facts, q, 3, mem));
    for (int i = 0; i < 3; ++i) CHECK(m3[i] == again[i]);
}

TEST_CASE("per-pass attention is a distribution; trace records every pass") {
    ParamRegistry reg;
    MemoryParams mem = test_memory(reg, 3, 29);
    Rng rng(71);
    Tape t;
    for (int trial = 0; trial < 50; ++trial) {
        const int n_facts = 1 + static_cast<int>(rng.uniform_int(5));
        std::vector<Var> facts;
        for (int f = 0; f < n_facts; ++f) {
            std::vector<double> v(3);
            for (double& c : v) c = rng.uniform(-2.0, 2.0);
            facts.push_back(t.constant(v));
        }
        std::vector<double> qv(3);
        for (double& c : qv) c = rng.uniform(-2.0, 2.0);

        MemoryTrace trace;
        run_episodic_memory(t, facts, t.constant(qv), 3, mem, &trace);
        REQUIRE(trace.pass_attention.size() == 3);
        for (const auto& pass : trace.pass_attention) {
            REQUIRE(pass.size() == static_cast<std::size_t>(n_facts));
            double sum = 0.0;
            for (double w : pass) {
                CHECK(w >= 0.0);
                sum += w;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
        t.reset();
    }
}

TEST_CASE("gate weights permute with facts; attentional gru is order sensitive") {
    ParamRegistry reg;
    MemoryParams mem = test_memory(reg, 3, 41);
    Tape t;
    std::vector<Var> facts = {t.constant({0.9, -0.1, 0.2}), t.constant({-0.5, 0.8, 0.0}),
                              t.constant({0.3, 0.3, -0.6})};
    std::vector<Var> swapped = {facts[2], facts[1], facts[0]};
    Var q = t.constant({0.2, 0.4, -0.2});
    Var m0 = t.constant({0.1, 0.1, 0.1});

    // The gate scores each fact independently, so permuting facts permutes
    // the weights identically.
    auto a = t.value(attention_gate(t, facts, q, m0, mem));
    auto b = t.value(attention_gate(t, swapped, q, m0, mem));
    CHECK(a[0] == doctest::Approx(b[2]).epsilon(1e-14));
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-14));
    CHECK(a[2] == doctest::Approx(b[0]).epsilon(1e-14));

    // The GRU consumes a sequence, so order matters.
    Var attn = t.constant({0.5, 0.3, 0.2});
    Var attn_swapped = t.constant({0.2, 0.3, 0.5});
    auto c1 = t.value(attentional_gru(t, facts, attn, mem));
    auto c2 = t.value(attentional_gru(t, swapped, attn_swapped, mem));
    bool differs = false;
    for (int i = 0; i < 3; ++i)
        if (c1[i] != c2[i]) differs = true;
    CHECK(differs);
}

TEST_CASE("gru-form memory update runs and differs from relu form") {
    ParamRegistry reg_relu, reg_gru;
    Rng r1(5), r2(5);
    MemoryParams relu = make_memory(reg_relu, "m", 3, 3, MemoryUpdate::Relu, r1);
    MemoryParams gru = make_memory(reg_gru, "m", 3, 3, MemoryUpdate::Gru, r2);
    CHECK(reg_relu.contains("m.update_w"));
    CHECK_FALSE(reg_gru.contains("m.update_w"));
    CHECK(reg_gru.contains("m.update_gru.wz"));

    Tape t;
    std::vector<Var> facts = {t.constant({0.1, 0.2, 0.3})};
    Var q = t.constant({0.3, -0.3, 0.3});
    auto mr = t.value(run_episodic_memory(t, facts, q, 2, relu));
    auto mg = t.value(run_episodic_memory(t, facts, q, 2, gru));
    bool differs = false;
    for (int i = 0; i < 3; ++i)
        if (mr[i] != mg[i]) differs = true;
    CHECK(differs);
}
