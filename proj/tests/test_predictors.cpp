#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nonstat/predictors.hpp"
#include "nonstat/sources.hpp"

#include <cmath>
#include <map>

using namespace nonstat;

namespace {

BinarySequence bits_of(std::uint64_t v, std::size_t n) {
    std::vector<bit_t> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<bit_t>((v >> (n - 1 - i)) & 1u);
    return BinarySequence(std::move(s));
}

BinarySequence random_bits(RngStream &rng, std::size_t n) {
    std::vector<bit_t> s(n);
    for (auto &b : s) b = rng.bernoulli(0.5) ? 1 : 0;
    return BinarySequence(std::move(s));
}

double expected_kl_regret_bits(SequentialPredictor &pred, const PiecewiseSource &src, const BinarySequence &x) {
    double total = 0.0;
    for (std::size_t t = 1; t <= x.size(); ++t) {
        double theta = src.bias_at(t), p = pred.predict();
        total += theta * std::log2(theta / p) + (1.0 - theta) * std::log2((1.0 - theta) / (1.0 - p));
        pred.update(x.at(t));
    }
    return total;
}

// every registry-style predictor that can handle sequences up to 17 symbols
std::vector<std::unique_ptr<SequentialPredictor>> all_predictors() {
    std::vector<std::unique_ptr<SequentialPredictor>> out;
    out.push_back(std::make_unique<KtPredictor>());
    out.push_back(std::make_unique<KtOraclePredictor>(TemporalPartition::from_ends({3, 7, 8, 17})));
    out.push_back(std::make_unique<PtwPredictor>(5));
    out.push_back(std::make_unique<LinPredictor>());
    out.push_back(constant_predictor(0.3));
    std::vector<MixturePredictor::Component> comps;
    comps.emplace_back(0.25, std::make_unique<PtwPredictor>(5));
    comps.emplace_back(0.75, std::make_unique<LinPredictor>());
    out.push_back(mixture_predictor(std::move(comps)));
    return out;
}

}  // namespace

TEST_CASE("kt_predict") {
    CHECK(kt_predict({0, 0}) == 0.5);
    CHECK(kt_predict({0, 1}) == 0.75);
    CHECK(kt_predict({3, 1}) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("kt_log_marginal") {
    CHECK(kt_log_marginal(BinarySequence::parse("1")).value == doctest::Approx(std::log(0.5)).epsilon(1e-15));
    CHECK(kt_log_marginal(BinarySequence::parse("11")).value == doctest::Approx(std::log(0.375)).epsilon(1e-15));
    CHECK(std::abs(kt_log_marginal(BinarySequence::parse("1111")).prob() - 105.0 / 384.0) < 1e-12);
    CHECK(kt_log_marginal(BinarySequence()).value == 0.0);
}

TEST_CASE("kt_oracle_log_marginal") {
    auto x = BinarySequence::parse("0011");
    CHECK(std::abs(kt_oracle_log_marginal(x, TemporalPartition::from_ends({2, 4})).prob() - 9.0 / 64.0) < 1e-12);
    CHECK(kt_oracle_log_marginal(x, TemporalPartition::single(4)).value == doctest::Approx(kt_log_marginal(x).value));
    CHECK(std::abs(kt_oracle_log_marginal(BinarySequence::parse("01"), TemporalPartition::from_ends({1, 2})).prob() -
                   0.25) < 1e-12);
    CHECK_THROWS_AS(kt_oracle_log_marginal(x, TemporalPartition::single(5)), std::invalid_argument);

    KtOraclePredictor oracle(TemporalPartition::from_ends({2, 4}));
    feed(oracle, x);
    CHECK(std::abs(oracle.log_marginal().prob() - 9.0 / 64.0) < 1e-12);
}

TEST_CASE("PTW hand values") {
    PtwPredictor p0(0);
    p0.update(1);
    CHECK(p0.log_marginal().value == doctest::Approx(std::log(0.5)));
    CHECK_THROWS_AS(p0.update(1), std::out_of_range);

    PtwPredictor p1(1);
    feed(p1, BinarySequence::parse("00"));
    CHECK(std::abs(p1.log_marginal().prob() - 5.0 / 16.0) < 1e-12);
    CHECK(std::abs(brute_force_ptw(BinarySequence::parse("00"), 1).prob() - 5.0 / 16.0) < 1e-12);
    CHECK_THROWS_AS(brute_force_ptw(BinarySequence::parse("000"), 2), std::invalid_argument);
}

TEST_CASE("incremental PTW equals the recursion on all length-8 sequences") {
    double worst = 0.0;
    for (std::uint64_t v = 0; v < 256; ++v) {
        BinarySequence x = bits_of(v, 8);
        PtwPredictor ptw(3);
        feed(ptw, x);
        worst = std::max(worst, std::abs(ptw.log_marginal().value - brute_force_ptw(x, 3).value));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("PTW prefixes equal the recursion padded over both continuations") {
    // log PTW(x_{1:t}) must equal the log of the sum over all completions
    for (std::uint64_t v = 0; v < 256; v += 7) {
        BinarySequence x = bits_of(v, 8);
        PtwPredictor ptw(3);
        for (std::size_t t = 1; t <= 8; ++t) {
            ptw.update(x.at(t));
            std::vector<double> terms;
            std::size_t rest = 8 - t;
            for (std::uint64_t tail = 0; tail < (1u << rest); ++tail) {
                std::vector<bit_t> full(x.symbols().begin(), x.symbols().begin() + static_cast<long>(t));
                BinarySequence suffix = bits_of(tail, rest);
                full.insert(full.end(), suffix.symbols().begin(), suffix.symbols().end());
                terms.push_back(brute_force_ptw(BinarySequence(full), 3).value);
            }
            CHECK(std::abs(ptw.log_marginal().value - logspace_sum(terms)) < 1e-9);
        }
    }
}

TEST_CASE("PTW dominates half of KT") {
    for (unsigned d = 0; d <= 3; ++d) {
        std::size_t n = std::size_t{1} << d;
        for (std::uint64_t v = 0; v < (1u << n); ++v) {
            BinarySequence x = bits_of(v, n);
            PtwPredictor ptw(d);
            feed(ptw, x);
            CHECK(ptw.log_marginal().value >= std::log(0.5) + kt_log_marginal(x).value - 1e-12);
        }
    }
}

TEST_CASE("LIN hand values") {
    LinPredictor lin;
    lin.update(0);
    CHECK(lin.log_marginal().value == doctest::Approx(std::log(0.5)));
    lin.update(0);
    CHECK(std::abs(lin.log_marginal().prob() - 5.0 / 16.0) < 1e-12);
    CHECK(std::abs(brute_force_lin(BinarySequence::parse("00")).prob() - 5.0 / 16.0) < 1e-12);
    CHECK(brute_force_lin(BinarySequence::parse("1")).value == doctest::Approx(std::log(0.5)));
    CHECK_THROWS_AS(brute_force_lin(BinarySequence(std::vector<bit_t>(15, 0))), std::invalid_argument);
    CHECK_THROWS_AS(brute_force_lin(BinarySequence()), std::invalid_argument);
}

TEST_CASE("LIN prior weights are normalized") {
    for (std::size_t n = 1; n <= 10; ++n) {
        std::vector<double> w;
        std::size_t count = 0;
        for_each_partition(n, [&](const TemporalPartition &p) {
            w.push_back(lin_prior_weight(p).value);
            ++count;
        });
        CHECK(count == (std::size_t{1} << (n - 1)));
        CHECK(std::abs(logspace_sum(w)) < 1e-12);
    }
    // n = 3, no switch: (1 - 1/2)(1 - 1/4)
    CHECK(lin_prior_weight(TemporalPartition::single(3)).prob() == doctest::Approx(3.0 / 8.0));
}

TEST_CASE("LIN sampler agrees with the prior weights") {
    RngStream rng(21, 0);
    const int draws = 40000;
    std::map<std::vector<std::size_t>, int> hist;
    for (int i = 0; i < draws; ++i) ++hist[sample_lin_partition(4, rng).ends()];
    for_each_partition(4, [&](const TemporalPartition &p) {
        double expected = lin_prior_weight(p).prob();
        double observed = static_cast<double>(hist[p.ends()]) / draws;
        CHECK(std::abs(observed - expected) < 0.01);
    });
}

TEST_CASE("sequential LIN equals the enumeration on random length-10 sequences") {
    RngStream rng(22, 0);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        BinarySequence x = random_bits(rng, 10);
        LinPredictor lin;
        feed(lin, x);
        worst = std::max(worst, std::abs(lin.log_marginal().value - brute_force_lin(x).value));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("LIN hypotheses stay normalized on length-256 sequences") {
    RngStream rng(23, 0);
    for (int rep = 0; rep < 3; ++rep) {
        SampledSequence s = sample_from_prior(PriorSpec::lin(256), 23, static_cast<std::size_t>(rep));
        LinPredictor lin;
        for (std::size_t t = 1; t <= 256; ++t) {
            lin.update(s.symbols.at(t));
            REQUIRE(lin.hypotheses().size() == t);
            std::vector<double> w;
            for (const auto &h : lin.hypotheses()) w.push_back(h.log_weight);
            REQUIRE(std::abs(logspace_sum(w)) < 1e-9);
        }
    }
    (void)rng;
}

TEST_CASE("LIN pruning keeps fewer hypotheses and stays close") {
    SampledSequence s = sample_from_prior(PriorSpec::lin(256), 24, 0);
    LinPredictor exact, pruned(1e-8);
    feed(exact, s.symbols);
    feed(pruned, s.symbols);
    CHECK(pruned.hypotheses().size() < exact.hypotheses().size());
    CHECK(std::abs(pruned.log_marginal().value - exact.log_marginal().value) < 1e-3);
}

TEST_CASE("chain rule and compatibility for every predictor") {
    RngStream rng(25, 0);
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t n = rng.uniform_int(0, 16);
        BinarySequence x = random_bits(rng, n);
        for (auto &pred : all_predictors()) {
            INFO(pred->name());
            // chain rule
            pred->reset();
            double sum = 0.0;
            for (std::size_t t = 1; t <= n; ++t) {
                double p1 = pred->predict();
                REQUIRE(p1 > 0.0);
                REQUIRE(p1 < 1.0);
                sum += std::log(pred->prob(x.at(t)));
                pred->update(x.at(t));
            }
            CHECK(std::abs(pred->log_marginal().value - sum) < 1e-10);
            CHECK(pred->time() == n);

            // compatibility
            std::vector<bit_t> x0 = x.symbols(), x1 = x.symbols();
            x0.push_back(0);
            x1.push_back(1);
            double m = log_marginal_of(*pred, x).prob();
            double m0 = log_marginal_of(*pred, BinarySequence(x0)).prob();
            double m1 = log_marginal_of(*pred, BinarySequence(x1)).prob();
            CHECK(std::abs(m0 + m1 - m) < 1e-9);
        }
    }
}

TEST_CASE("reset and clone") {
    auto x = BinarySequence::parse("0110100");
    for (auto &pred : all_predictors()) {
        INFO(pred->name());
        feed(*pred, x);
        auto copy = pred->clone();
        CHECK(copy->log_marginal() == pred->log_marginal());
        CHECK(copy->predict() == pred->predict());
        pred->reset();
        CHECK(pred->time() == 0);
        CHECK(std::abs(pred->log_marginal().value) < 1e-15);
        feed(*pred, x);
        CHECK(copy->log_marginal() == pred->log_marginal());
    }
}

TEST_CASE("mixture predictor") {
    std::vector<MixturePredictor::Component> single;
    single.emplace_back(1.0, std::make_unique<PtwPredictor>(3));
    auto mix1 = mixture_predictor(std::move(single));
    PtwPredictor ptw(3);
    auto x = BinarySequence::parse("00101101");
    for (std::size_t t = 1; t <= 8; ++t) {
        CHECK(mix1->predict() == doctest::Approx(ptw.predict()).epsilon(1e-14));
        mix1->update(x.at(t));
        ptw.update(x.at(t));
    }
    CHECK(mix1->log_marginal().value == doctest::Approx(ptw.log_marginal().value).epsilon(1e-14));

    // component marginals 0.5 and 0.125 on "1"
    std::vector<MixturePredictor::Component> two;
    two.emplace_back(0.5, constant_predictor(0.5));
    two.emplace_back(0.5, constant_predictor(0.125));
    MixturePredictor mix2(std::move(two));
    mix2.update(1);
    CHECK(mix2.log_marginal().prob() == doctest::Approx(0.3125).epsilon(1e-14));
    double loss_bits = -nats_to_bits(mix2.log_marginal().value);
    CHECK(loss_bits == doctest::Approx(1.678).epsilon(1e-3));
    CHECK(loss_bits <= 2.0);
    auto post = mix2.posterior_weights();
    CHECK(post[0] == doctest::Approx(0.8));
    CHECK(post[0] + post[1] == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(MixturePredictor({}), std::invalid_argument);
    std::vector<MixturePredictor::Component> bad;
    bad.emplace_back(0.6, constant_predictor(0.5));
    bad.emplace_back(0.6, constant_predictor(0.5));
    CHECK_THROWS_AS(MixturePredictor(std::move(bad)), std::invalid_argument);
    std::vector<MixturePredictor::Component> negative;
    negative.emplace_back(1.5, constant_predictor(0.5));
    negative.emplace_back(-0.5, constant_predictor(0.5));
    CHECK_THROWS_AS(MixturePredictor(std::move(negative)), std::invalid_argument);
}

TEST_CASE("mixture regret bound over PTW_3 and LIN") {
    RngStream rng(26, 0);
    for (int i = 0; i < 1000; ++i) {
        BinarySequence x = random_bits(rng, 8);
        std::vector<MixturePredictor::Component> comps;
        comps.emplace_back(0.5, std::make_unique<PtwPredictor>(3));
        comps.emplace_back(0.5, std::make_unique<LinPredictor>());
        MixturePredictor mix(std::move(comps));
        feed(mix, x);
        std::vector<double> post = mix.posterior_weights();
        REQUIRE(std::abs(post[0] + post[1] - 1.0) < 1e-9);
        double best = std::max(mix.component(0).log_marginal().value, mix.component(1).log_marginal().value);
        REQUIRE(-mix.log_marginal().value <= std::log(2.0) - best);
    }
}

TEST_CASE("constant predictor") {
    ConstantPredictor c(0.5);
    auto x = BinarySequence::parse("1101001");
    feed(c, x);
    CHECK(c.log_marginal().value == doctest::Approx(7 * std::log(0.5)));
    CHECK(c.predict() == 0.5);
    ConstantPredictor c3(0.3);
    feed(c3, x);
    CHECK(c3.predict() == 0.3);
    CHECK_THROWS_AS(ConstantPredictor(0.0), std::invalid_argument);
    CHECK_THROWS_AS(ConstantPredictor(1.0), std::invalid_argument);
    CHECK_THROWS_AS(ConstantPredictor(-0.2), std::invalid_argument);

    double total = 0.0;
    for (std::size_t id = 0; id < 1000; ++id) {
        SampledSequence s = sample_from_prior(PriorSpec::ptw(5), 27, id);
        ConstantPredictor half(0.5);
        total += expected_kl_regret_bits(half, s.source, s.symbols);
    }
    CHECK(total / 1000.0 > 0.0);
}

TEST_CASE("KT oracle is no worse than PTW on PTW-prior data") {
    const std::size_t seqs = 1000;
    std::vector<double> diff;
    for (std::size_t id = 0; id < seqs; ++id) {
        SampledSequence s = sample_from_prior(PriorSpec::ptw(5), 28, id);
        KtOraclePredictor oracle(s.source.partition());
        PtwPredictor ptw(5);
        diff.push_back(expected_kl_regret_bits(oracle, s.source, s.symbols) -
                       expected_kl_regret_bits(ptw, s.source, s.symbols));
    }
    double mean = 0.0;
    for (double d : diff) mean += d;
    mean /= seqs;
    double var = 0.0;
    for (double d : diff) var += (d - mean) * (d - mean);
    double se = std::sqrt(var / (seqs - 1) / seqs);
    CHECK(mean <= 2.0 * se);
}

TEST_CASE("predictor error paths") {
    PtwPredictor ptw(2);
    feed(ptw, BinarySequence::parse("0101"));
    CHECK_THROWS_AS(ptw.update(0), std::out_of_range);
    CHECK_THROWS_AS(ptw.predict(), std::out_of_range);
    KtOraclePredictor oracle(TemporalPartition::single(2));
    feed(oracle, BinarySequence::parse("01"));
    CHECK_THROWS_AS(oracle.update(1), std::out_of_range);
    CHECK_THROWS_AS(LinPredictor(1.0), std::invalid_argument);
    CHECK_THROWS_AS(brute_force_ptw(BinarySequence(std::vector<bit_t>(128, 0)), 7), std::invalid_argument);
}
