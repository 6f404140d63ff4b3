#include "doctest.h"
#include "json.hpp"
#include "maxdrop/bench.hpp"
#include "maxdrop/ref_kernels.hpp"

using namespace maxdrop;

TEST_CASE("analytic comparison counts") {
    CHECK(comparison_count(DropVariant::MaxDropout, Shape{1, 1, 1, 1}) == 1);
    CHECK(comparison_count(DropVariant::MaxDropoutV2, Shape{1, 1, 1, 1}) == 1);
    const Shape wide{1, 64, 32, 32};
    CHECK(comparison_count(DropVariant::MaxDropout, wide) == 65536);
    CHECK(comparison_count(DropVariant::MaxDropoutV2, wide) == 1024);
}

TEST_CASE("instrumented counters agree with the analytic formulas") {
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const Shape s{1 + static_cast<int>(rng.next_u64() % 3),
                      1 + static_cast<int>(rng.next_u64() % 8),
                      1 + static_cast<int>(rng.next_u64() % 10),
                      1 + static_cast<int>(rng.next_u64() % 10)};
        const Tensor t = Tensor::uniform(s, rng);
        CHECK(ref::max_dropout_forward(t, 0.4f, NormScope::PerSample).comparisons ==
              comparison_count(DropVariant::MaxDropout, s));
        CHECK(ref::max_dropout_v2_forward(t, 0.4f, NormScope::PerSample).comparisons ==
              comparison_count(DropVariant::MaxDropoutV2, s));
    }
}

TEST_CASE("bench_kernel validates its inputs") {
    BenchOptions opt;
    opt.iters = 10;
    CHECK_THROWS_AS(bench_kernel(DropVariant::MaxDropout, Shape{1, 1, 4, 4}, opt),
                    std::invalid_argument);
    opt.iters = 30;
    opt.warmup = 1;
    CHECK_THROWS_AS(bench_kernel(DropVariant::MaxDropout, Shape{1, 1, 4, 4}, opt),
                    std::invalid_argument);
    opt.warmup = 5;
    opt.max_elems = 100;
    CHECK_THROWS_AS(bench_kernel(DropVariant::MaxDropout, Shape{1, 64, 32, 32}, opt),
                    std::invalid_argument);
}

TEST_CASE("bench reports carry counts and ordered statistics") {
    BenchOptions opt;
    const Shape s{1, 8, 16, 16};
    const BenchReport v1 = bench_kernel(DropVariant::MaxDropout, s, opt);
    const BenchReport v2 = bench_kernel(DropVariant::MaxDropoutV2, s, opt);
    CHECK(v1.comparison_count == s.elems());
    CHECK(v2.comparison_count == s.elems() / 8);
    CHECK(static_cast<int>(v1.times_ns.size()) == opt.iters);
    CHECK(v1.p10_ns <= v1.median_ns);
    CHECK(v1.median_ns <= v1.p90_ns);

    const CompareSummary cmp = compare(v1, v2);
    CHECK(cmp.comparison_ratio == doctest::Approx(1.0 / 8.0));

    const CompareSummary self = compare(v1, v1);
    CHECK(self.time_ratio == doctest::Approx(1.0));
    CHECK_FALSE(self.pass);

    BenchReport other = v2;
    other.shape = Shape{2, 8, 16, 16};
    CHECK_THROWS_AS(compare(v1, other), std::invalid_argument);
}

TEST_CASE("serial and parallel kernels report the same counts") {
    BenchOptions opt;
    const Shape s{2, 4, 8, 8};
    const BenchReport par = bench_kernel(DropVariant::MaxDropoutV2, s, opt);
    opt.impl = BenchImpl::Serial;
    const BenchReport ser = bench_kernel(DropVariant::MaxDropoutV2, s, opt);
    CHECK(par.comparison_count == ser.comparison_count);
}

TEST_CASE("jsonl report is valid json with the expected fields") {
    BenchOptions opt;
    const BenchReport r = bench_kernel(DropVariant::MaxDropout, Shape{1, 2, 4, 4}, opt);
    const auto j = nlohmann::json::parse(r.to_jsonl());
    CHECK(j["kernel"] == "maxdropout");
    CHECK(j["comparison_count"] == 32);
    CHECK(j["shape"].size() == 4);
    CHECK(j["median_ns"].is_number());
}

TEST_CASE("bench lock is exclusive") {
    BenchLock lock;
    CHECK_THROWS_AS(BenchLock{}, std::runtime_error);
}
