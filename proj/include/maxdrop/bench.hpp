#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "maxdrop/regularizers.hpp"

namespace maxdrop {

enum class BenchImpl { Parallel, Serial };

struct BenchOptions {
    int iters = 30;
    int warmup = 5;
    std::uint64_t seed = 0;
    float rate = 0.5f;
    NormScope scope = NormScope::PerSample;
    bool mask_only = false;  // time mask generation without the apply step
    BenchImpl impl = BenchImpl::Parallel;
    std::size_t max_elems = 1ull << 28;  // memory cap, in tensor elements
};

struct BenchReport {
    std::string kernel;
    Shape shape;
    int iters = 0;
    int warmup = 0;
    std::vector<double> times_ns;  // post-warmup, one per iteration
    double median_ns = 0.0;
    double p10_ns = 0.0;
    double p90_ns = 0.0;
    std::uint64_t comparison_count = 0;

    std::string to_jsonl() const;
};

struct CompareSummary {
    double time_ratio = 0.0;        // v2 median / v1 median
    double comparison_ratio = 0.0;  // v2 count / v1 count
    bool pass = false;              // time_ratio < 1
};

/// Times the mask-generate(+apply) path on a fixed random tensor, pinned to
/// a single thread. Throws if another benchmark holds the lockfile or the
/// shape exceeds the memory cap.
BenchReport bench_kernel(DropVariant variant, Shape shape, const BenchOptions& opt);

CompareSummary compare(const BenchReport& v1, const BenchReport& v2);

void print_table(std::ostream& out, const std::vector<BenchReport>& reports);
void print_csv(std::ostream& out, const std::vector<BenchReport>& reports);

/// Exclusive lock held for the duration of a benchmark run.
class BenchLock {
public:
    BenchLock();   // throws std::runtime_error if already locked
    ~BenchLock();
    BenchLock(const BenchLock&) = delete;
    BenchLock& operator=(const BenchLock&) = delete;

private:
    int fd_ = -1;
};

}  // namespace maxdrop
