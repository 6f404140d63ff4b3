#include "maxdrop/bench.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"
#include "maxdrop/ref_kernels.hpp"

namespace maxdrop {

namespace {

constexpr const char* kLockPath = "/tmp/maxdrop-bench.lock";

double percentile(std::vector<double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Mask-generation-only paths, shared by both impls (serial enough already).
std::uint64_t run_mask_only(DropVariant variant, const Tensor& t,
                            const BenchOptions& opt, volatile float* sink) {
    DropConfig cfg{variant, opt.rate, Mode::Train, opt.scope, opt.seed};
    switch (variant) {
        case DropVariant::Dropout: {
            DropResult r = dropout_forward(t, cfg);
            *sink = *sink + r.mask.values.data.front() + r.mask.values.data.back();
            return r.comparisons;
        }
        case DropVariant::MaxDropout: {
            DropMask m = max_dropout_mask(t, cfg);
            *sink = *sink + m.values.data.front() + m.values.data.back();
            return t.size();
        }
        case DropVariant::MaxDropoutV2: {
            const Tensor norm = minmax_normalize(sum_axis1(t), cfg.scope);
            const float thr = cfg.threshold();
            Tensor mask(norm.shape);
            for (std::size_t i = 0; i < norm.size(); ++i)
                mask.data[i] = norm.data[i] > thr ? 0.0f : 1.0f;
            *sink = *sink + mask.data.front() + mask.data.back();
            return norm.size();
        }
    }
    return 0;
}

std::uint64_t run_once(DropVariant variant, const Tensor& t, const BenchOptions& opt,
                       volatile float* sink) {
    if (opt.mask_only) return run_mask_only(variant, t, opt, sink);
    if (opt.impl == BenchImpl::Serial) {
        if (variant == DropVariant::MaxDropout) {
            ref::RefResult r = ref::max_dropout_forward(t, opt.rate, opt.scope);
            *sink = *sink + r.output.data.front() + r.output.data.back();
            return r.comparisons;
        }
        if (variant == DropVariant::MaxDropoutV2) {
            ref::RefResult r = ref::max_dropout_v2_forward(t, opt.rate, opt.scope);
            *sink = *sink + r.output.data.front() + r.output.data.back();
            return r.comparisons;
        }
        // no serial reference for plain Dropout; fall through
    }
    DropConfig cfg{variant, opt.rate, Mode::Train, opt.scope, opt.seed};
    DropResult r = drop_forward(t, cfg);
    *sink = *sink + r.output.data.front() + r.output.data.back();
    return r.comparisons;
}

}  // namespace

BenchLock::BenchLock() {
    fd_ = ::open(kLockPath, O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw std::runtime_error("bench: cannot open lockfile");
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw std::runtime_error("bench: another benchmark instance is running");
    }
}

BenchLock::~BenchLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

BenchReport bench_kernel(DropVariant variant, Shape shape, const BenchOptions& opt) {
    if (opt.iters < 30) throw std::invalid_argument("bench: iters must be >= 30");
    if (opt.warmup < 5) throw std::invalid_argument("bench: warmup must be >= 5");
    if (shape.elems() > opt.max_elems)
        throw std::invalid_argument("bench: shape " + shape.str() +
                                    " exceeds the memory cap");

    Rng rng(opt.seed);
    const Tensor input = Tensor::uniform(shape, rng);

    BenchReport report;
    report.kernel = variant_name(variant);
    if (opt.mask_only) report.kernel += "/mask-only";
    if (opt.impl == BenchImpl::Serial) report.kernel += "/serial";
    report.shape = shape;
    report.iters = opt.iters;
    report.warmup = opt.warmup;

#ifdef _OPENMP
    const int prev_threads = omp_get_max_threads();
    omp_set_num_threads(1);  // single-thread pin for stable medians
#endif
    volatile float sink = 0.0f;
    for (int i = 0; i < opt.warmup; ++i) run_once(variant, input, opt, &sink);
    report.times_ns.reserve(opt.iters);
    for (int i = 0; i < opt.iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        report.comparison_count = run_once(variant, input, opt, &sink);
        const auto t1 = std::chrono::steady_clock::now();
        report.times_ns.push_back(
            std::chrono::duration<double, std::nano>(t1 - t0).count());
    }
#ifdef _OPENMP
    omp_set_num_threads(prev_threads);
#endif
    (void)sink;

    std::vector<double> sorted = report.times_ns;
    std::sort(sorted.begin(), sorted.end());
    report.median_ns = percentile(sorted, 0.5);
    report.p10_ns = percentile(sorted, 0.1);
    report.p90_ns = percentile(sorted, 0.9);
    return report;
}

CompareSummary compare(const BenchReport& v1, const BenchReport& v2) {
    if (!(v1.shape == v2.shape) || v1.iters != v2.iters)
        throw std::invalid_argument("compare: reports are not comparable");
    CompareSummary s;
    s.time_ratio = v2.median_ns / v1.median_ns;
    s.comparison_ratio = static_cast<double>(v2.comparison_count) /
                         static_cast<double>(v1.comparison_count);
    s.pass = s.time_ratio < 1.0;
    return s;
}

std::string BenchReport::to_jsonl() const {
    nlohmann::json j{{"kernel", kernel},
                     {"shape", {shape.n, shape.c, shape.h, shape.w}},
                     {"iters", iters},
                     {"warmup", warmup},
                     {"median_ns", median_ns},
                     {"p10_ns", p10_ns},
                     {"p90_ns", p90_ns},
                     {"comparison_count", comparison_count}};
    return j.dump();
}

void print_table(std::ostream& out, const std::vector<BenchReport>& reports) {
    out << std::left << std::setw(26) << "kernel" << std::setw(20) << "shape"
        << std::right << std::setw(14) << "median(us)" << std::setw(12) << "p10(us)"
        << std::setw(12) << "p90(us)" << std::setw(14) << "comparisons" << '\n';
    for (const auto& r : reports)
        out << std::left << std::setw(26) << r.kernel << std::setw(20) << r.shape.str()
            << std::right << std::fixed << std::setprecision(1) << std::setw(14)
            << r.median_ns / 1e3 << std::setw(12) << r.p10_ns / 1e3 << std::setw(12)
            << r.p90_ns / 1e3 << std::setw(14) << r.comparison_count << '\n';
}

void print_csv(std::ostream& out, const std::vector<BenchReport>& reports) {
    out << "kernel,shape,iters,median_ns,p10_ns,p90_ns,comparison_count\n";
    for (const auto& r : reports)
        out << r.kernel << ',' << r.shape.str() << ',' << r.iters << ',' << r.median_ns
            << ',' << r.p10_ns << ',' << r.p90_ns << ',' << r.comparison_count << '\n';
}

}  // namespace maxdrop
