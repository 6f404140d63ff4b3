#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "maxdrop/bench.hpp"
#include "maxdrop/image_io.hpp"
#include "maxdrop/train.hpp"

using namespace maxdrop;

namespace {

// exit codes: 0 ok, 2 usage, 3 data/parse, 4 internal
constexpr int kUsageError = 2;
constexpr int kDataError = 3;
constexpr int kInternalError = 4;

DropVariant parse_variant(const std::string& name) {
    if (name == "dropout") return DropVariant::Dropout;
    if (name == "maxdropout") return DropVariant::MaxDropout;
    if (name == "maxdropoutv2") return DropVariant::MaxDropoutV2;
    throw CLI::ValidationError("--variant", "unknown variant: " + name);
}

NormScope parse_scope(const std::string& name) {
    if (name == "per-sample") return NormScope::PerSample;
    if (name == "whole-tensor") return NormScope::WholeTensor;
    throw CLI::ValidationError("--scope", "unknown scope: " + name);
}

Shape parse_shape(const std::string& spec) {
    Shape s;
    if (std::sscanf(spec.c_str(), "%dx%dx%dx%d", &s.n, &s.c, &s.h, &s.w) != 4)
        throw CLI::ValidationError("--shape", "expected NxCxHxW, got " + spec);
    return s;
}

// "0.05:0.5:0.05" (inclusive grid) or "0.1,0.2,0.3"
std::vector<float> parse_rates(const std::string& spec) {
    std::vector<float> out;
    if (spec.find(':') != std::string::npos) {
        float lo, hi, step;
        if (std::sscanf(spec.c_str(), "%f:%f:%f", &lo, &hi, &step) != 3 || step <= 0)
            throw CLI::ValidationError("--rates", "expected lo:hi:step, got " + spec);
        for (double r = lo; r <= hi + 1e-9; r += step) out.push_back(static_cast<float>(r));
    } else {
        std::stringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.push_back(std::stof(tok));
    }
    if (out.empty()) throw CLI::ValidationError("--rates", "empty grid");
    for (float r : out)
        if (!(r >= 0.0f && r < 1.0f))
            throw CLI::ValidationError("--rates", "rates must lie in [0,1)");
    return out;
}

struct DropFlags {
    std::string variant = "maxdropoutv2";
    float rate = 0.5f;
    std::string scope = "per-sample";
    std::uint64_t seed = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--variant", variant, "dropout | maxdropout | maxdropoutv2")
            ->capture_default_str();
        cmd->add_option("--rate", rate, "drop rate in [0,1)")->capture_default_str();
        cmd->add_option("--scope", scope, "per-sample | whole-tensor")
            ->capture_default_str();
        cmd->add_option("--seed", seed, "rng seed")->capture_default_str();
    }
    DropConfig to_config(Mode mode) const {
        DropConfig cfg{parse_variant(variant), rate, mode, parse_scope(scope), seed};
        cfg.validate();
        return cfg;
    }
};

int run_visualize(const std::string& input, const std::string& output,
                  const DropFlags& flags, const std::string& dump_tensor_path,
                  const std::string& dump_mask_path) {
    const Tensor img = read_ppm(input);
    const DropResult r = drop_forward(img, flags.to_config(Mode::Train));
    write_ppm(output, r.output);
    if (!dump_tensor_path.empty()) {
        std::ofstream out(dump_tensor_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + dump_tensor_path);
        dump_tensor(out, r.output);
    }
    if (!dump_mask_path.empty()) {
        std::ofstream out(dump_mask_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + dump_mask_path);
        dump_tensor(out, r.mask.values);
    }
    return 0;
}

struct TrainFlags {
    TrainConfig cfg;
    DropFlags drop;
    int train_size = 2000;
    int val_size = 500;
    std::string decay_epochs = "6,12,16";
    std::string metrics_path;
    float hflip_prob = -1.0f;
    int cutout_size = 0;
    bool erase = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--epochs", cfg.epochs)->capture_default_str();
        cmd->add_option("--batch-size", cfg.batch_size)->capture_default_str();
        cmd->add_option("--lr0", cfg.lr0)->capture_default_str();
        cmd->add_option("--momentum", cfg.momentum)->capture_default_str();
        cmd->add_option("--weight-decay", cfg.weight_decay)->capture_default_str();
        cmd->add_option("--decay-factor", cfg.lr_decay_factor)->capture_default_str();
        cmd->add_option("--decay-epochs", decay_epochs, "comma-separated epochs")
            ->capture_default_str();
        cmd->add_option("--train-size", train_size)->capture_default_str();
        cmd->add_option("--val-size", val_size)->capture_default_str();
        cmd->add_option("--metrics", metrics_path, "CSV output path (default stdout)");
        cmd->add_option("--hflip", hflip_prob, "horizontal flip probability");
        cmd->add_option("--cutout", cutout_size, "cutout square size in pixels");
        cmd->add_flag("--erase", erase, "apply random erasing");
        drop.attach(cmd);
    }

    TrainConfig build() const {
        TrainConfig out = cfg;
        out.drop = drop.to_config(Mode::Train);
        out.seed = drop.seed;
        out.decay_epochs.clear();
        std::stringstream ss(decay_epochs);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.decay_epochs.push_back(std::stoi(tok));
        out.augment.steps.clear();
        if (hflip_prob >= 0.0f)
            out.augment.steps.push_back(AugmentStep::hflip(hflip_prob));
        if (cutout_size > 0)
            out.augment.steps.push_back(AugmentStep::cutout(cutout_size));
        if (erase) out.augment.steps.push_back(AugmentStep::random_erasing({}));
        return out;
    }
};

int run_train(const TrainFlags& flags) {
    const TrainConfig cfg = flags.build();
    const auto train_set = SyntheticDataset::make(flags.train_size, cfg.seed + 1);
    const auto val_set = SyntheticDataset::make(flags.val_size, cfg.seed + 2);
    const MetricsLog log = train(cfg, train_set, val_set);
    if (flags.metrics_path.empty()) {
        log.write_csv(std::cout);
    } else {
        std::ofstream out(flags.metrics_path);
        if (!out) throw std::runtime_error("cannot open " + flags.metrics_path);
        log.write_csv(out);
    }
    const auto& last = log.rows.back();
    std::cerr << "final train_acc=" << last.train_acc << " val_acc=" << last.val_acc
              << "\n";
    return 0;
}

int run_bench(const std::string& shape_spec, BenchOptions opt,
              std::vector<std::string> variant_names, bool both_impls, bool csv,
              const std::string& jsonl_path) {
    BenchLock lock;
    const Shape shape = parse_shape(shape_spec);
    if (variant_names.empty()) variant_names = {"maxdropout", "maxdropoutv2"};

    std::vector<BenchReport> reports;
    const BenchReport* v1 = nullptr;
    const BenchReport* v2 = nullptr;
    for (const auto& name : variant_names) {
        const DropVariant v = parse_variant(name);
        opt.impl = BenchImpl::Parallel;
        reports.push_back(bench_kernel(v, shape, opt));
        if (both_impls && v != DropVariant::Dropout) {
            opt.impl = BenchImpl::Serial;
            reports.push_back(bench_kernel(v, shape, opt));
        }
    }
    for (const auto& r : reports) {
        if (r.kernel == "maxdropout") v1 = &r;
        if (r.kernel == "maxdropoutv2") v2 = &r;
    }

    if (csv)
        print_csv(std::cout, reports);
    else
        print_table(std::cout, reports);

    if (!jsonl_path.empty()) {
        std::ofstream out(jsonl_path);
        if (!out) throw std::runtime_error("cannot open " + jsonl_path);
        for (const auto& r : reports) out << r.to_jsonl() << '\n';
    }

    if (v1 && v2) {
        const CompareSummary s = compare(*v1, *v2);
        std::cout << "v2/v1 median time ratio: " << s.time_ratio
                  << "  comparison ratio: " << s.comparison_ratio << "  "
                  << (s.pass ? "PASS" : "FAIL") << " (faster when < 1)\n";
    }
    return 0;
}

struct SweepFlags {
    TrainFlags train;
    std::string rates = "0.05:0.5:0.05";
    std::vector<std::string> variants = {"maxdropout", "maxdropoutv2"};
    int reps = 3;
    int jobs = 1;
    std::string out_path;
};

int run_sweep(const SweepFlags& flags) {
    const std::vector<float> rates = parse_rates(flags.rates);
    struct Point {
        std::string variant;
        float rate;
        std::vector<float> val_accs;
    };
    std::vector<Point> grid;
    for (const auto& v : flags.variants)
        for (float r : rates) grid.push_back(Point{v, r, {}});

    const TrainFlags base = flags.train;
    auto run_point = [&](Point& p) {
        for (int rep = 0; rep < flags.reps; ++rep) {
            TrainFlags tf = base;
            tf.drop.variant = p.variant;
            tf.drop.rate = p.rate;
            tf.drop.seed = Rng::hash(base.drop.seed, std::hash<std::string>{}(p.variant) +
                                                         static_cast<std::uint64_t>(p.rate * 1000) * 31 +
                                                         rep);
            TrainConfig cfg = tf.build();
            const auto train_set = SyntheticDataset::make(tf.train_size, base.drop.seed + 1);
            const auto val_set = SyntheticDataset::make(tf.val_size, base.drop.seed + 2);
            const MetricsLog log = train(cfg, train_set, val_set);
            p.val_accs.push_back(log.rows.back().val_acc);
        }
    };

    if (flags.jobs <= 1) {
        for (auto& p : grid) run_point(p);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mu;
        for (int t = 0; t < flags.jobs; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t mine;
                    {
                        std::lock_guard<std::mutex> g(mu);
                        if (next >= grid.size()) return;
                        mine = next++;
                    }
                    run_point(grid[mine]);
                }
            });
        for (auto& t : pool) t.join();
    }

    std::sort(grid.begin(), grid.end(), [](const Point& a, const Point& b) {
        return a.variant != b.variant ? a.variant < b.variant : a.rate < b.rate;
    });
    std::ostringstream csv;
    csv << "variant,rate,reps,mean_val_acc,std_val_acc\n";
    for (const auto& p : grid) {
        double mean = 0.0;
        for (float a : p.val_accs) mean += a;
        mean /= p.val_accs.size();
        double var = 0.0;
        for (float a : p.val_accs) var += (a - mean) * (a - mean);
        const double stddev = std::sqrt(var / p.val_accs.size());
        csv << p.variant << ',' << p.rate << ',' << p.val_accs.size() << ',' << mean
            << ',' << stddev << '\n';
    }
    if (flags.out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(flags.out_path);
        if (!out) throw std::runtime_error("cannot open " + flags.out_path);
        out << csv.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structured dropout kernels, toy training harness, and benchmarks"};
    app.require_subcommand(1);

    // visualize
    auto* vis = app.add_subcommand("visualize", "apply a drop variant to a PPM image");
    std::string vis_in, vis_out, vis_dump_tensor, vis_dump_mask;
    DropFlags vis_drop;
    vis->add_option("--input", vis_in, "input PPM (P6)")->required();
    vis->add_option("--output", vis_out, "output PPM")->required();
    vis->add_option("--dump-tensor", vis_dump_tensor, "binary tensor dump path");
    vis->add_option("--dump-mask", vis_dump_mask, "binary mask dump path");
    vis_drop.attach(vis);

    // train
    auto* tr = app.add_subcommand("train", "train the toy CNN on synthetic data");
    tr->set_config("--config", "", "flat key=value config file");
    TrainFlags train_flags;
    train_flags.attach(tr);

    // bench
    auto* be = app.add_subcommand("bench", "micro-benchmark the mask kernels");
    std::string bench_shape = "128x64x32x32";
    BenchOptions bench_opt;
    std::vector<std::string> bench_variants;
    bool bench_both = false, bench_csv = false, bench_mask_only = false;
    std::string bench_jsonl;
    std::size_t bench_cap_mb = 1024;
    be->add_option("--shape", bench_shape, "tensor shape NxCxHxW")->capture_default_str();
    be->add_option("--iters", bench_opt.iters, ">= 30")->capture_default_str();
    be->add_option("--warmup", bench_opt.warmup, ">= 5")->capture_default_str();
    be->add_option("--seed", bench_opt.seed)->capture_default_str();
    be->add_option("--rate", bench_opt.rate)->capture_default_str();
    be->add_option("--variant", bench_variants, "kernel(s) to bench (repeatable)");
    be->add_flag("--mask-only", bench_mask_only, "time mask generation only");
    be->add_flag("--both-impls", bench_both, "also run the serial reference kernels");
    be->add_flag("--csv", bench_csv, "CSV instead of the table");
    be->add_option("--jsonl", bench_jsonl, "JSON-lines output path");
    be->add_option("--max-mb", bench_cap_mb, "memory cap for the input tensor")
        ->capture_default_str();

    // sweep
    auto* sw = app.add_subcommand("sweep", "drop-rate grid over toy training runs");
    sw->set_config("--config", "", "flat key=value config file");
    SweepFlags sweep_flags;
    sweep_flags.train.cfg.epochs = 10;
    sweep_flags.train.train_size = 400;
    sweep_flags.train.val_size = 100;
    sw->add_option("--rates", sweep_flags.rates, "lo:hi:step or comma list")
        ->capture_default_str();
    sw->add_option("--variants", sweep_flags.variants, "variants to sweep")
        ->capture_default_str();
    sw->add_option("--reps", sweep_flags.reps, "repetitions per grid point")
        ->capture_default_str();
    sw->add_option("--jobs", sweep_flags.jobs, "parallel workers")->capture_default_str();
    sw->add_option("--out", sweep_flags.out_path, "CSV output path (default stdout)");
    sweep_flags.train.attach(sw);

    try {
        app.parse(argc, argv);
        if (*vis)
            return run_visualize(vis_in, vis_out, vis_drop, vis_dump_tensor, vis_dump_mask);
        if (*tr) return run_train(train_flags);
        if (*be) {
            bench_opt.mask_only = bench_mask_only;
            bench_opt.max_elems = bench_cap_mb * 1024 * 1024 / sizeof(float);
            return run_bench(bench_shape, bench_opt, bench_variants, bench_both,
                             bench_csv, bench_jsonl);
        }
        if (*sw) return run_sweep(sweep_flags);
        return kUsageError;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    } catch (const PpmError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
}
