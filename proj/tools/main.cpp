#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "egd/archive.hpp"
#include "egd/container.hpp"
#include "egd/csv.hpp"
#include "egd/errors.hpp"
#include "egd/imageio.hpp"
#include "egd/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// exit codes: 0 ok, 2 schema, 3 I/O, 4 missing precondition, 5 numeric failure
constexpr int kExitSchema = 2;
constexpr int kExitIo = 3;
constexpr int kExitPrecondition = 4;
constexpr int kExitNumeric = 5;

uint64_t default_seed() {
    if (const char* env = std::getenv("EGD_SEED")) return std::strtoull(env, nullptr, 10);
    return 0;
}

void emit(const json& summary, bool as_json) {
    if (as_json) {
        std::cout << summary.dump() << '\n';
        return;
    }
    bool first = true;
    for (auto it = summary.begin(); it != summary.end(); ++it) {
        if (!first) std::cout << ' ';
        first = false;
        std::cout << it.key() << '=';
        if (it->is_string())
            std::cout << it->get<std::string>();
        else
            std::cout << it->dump();
    }
    std::cout << '\n';
}

size_t target_index(const egd::Schema& schema, const std::string& target) {
    if (target.empty()) return schema.size() - 1;
    for (size_t c = 0; c < schema.size(); ++c)
        if (schema[c].name == target) return c;
    throw egd::SchemaMismatch("no column named '" + target + "'");
}

int cmd_compress(const std::string& input, const std::string& out, uint32_t beta, uint32_t tau,
                 const std::string& condensed, const std::string& target,
                 const std::optional<std::string>& sidecar, bool as_json) {
    egd::CsvData data = egd::read_csv(input, sidecar);
    egd::SearchConfig cfg;
    cfg.beta = beta;
    cfg.tau = tau;
    cfg.condensed_mode = egd::condensed_mode_from_string(condensed);
    // keep the training target out of the cluster keys so condensed samples
    // are never selected on the outcome they will later predict
    if (!target.empty())
        cfg.cluster_exclude_col = static_cast<int32_t>(target_index(data.schema, target));
    egd::BitMatrix bm = egd::encode_tabular(data.rows, data.schema);
    egd::CompressedDataset cd = egd::compress(bm, cfg);
    egd::write_container(cd, out);

    uint64_t raw_bits = cd.n * cd.l_t;
    json summary{{"n", cd.n},
                 {"m", cd.m},
                 {"n_b", cd.n_b},
                 {"l_b", cd.l_b},
                 {"l_d", cd.l_d},
                 {"l_t", cd.l_t},
                 {"best_size", cd.best_size},
                 {"params_bits", cd.params_bits()},
                 {"ratio", static_cast<double>(cd.best_size) / static_cast<double>(raw_bits)},
                 {"out", out}};
    emit(summary, as_json);
    return 0;
}

int cmd_decompress(const std::string& input, const std::string& out, bool as_json) {
    egd::CompressedDataset cd = egd::read_container(input);
    egd::BitMatrix bm = egd::decompress(cd);
    egd::write_csv(out, bm.schema(), egd::decode_tabular(bm));
    emit(json{{"n", cd.n}, {"out", out}}, as_json);
    return 0;
}

int cmd_stats(const std::string& input, bool as_json) {
    egd::CompressedDataset cd = egd::read_container(input);
    json summary{{"n", cd.n},
                 {"m", cd.m},
                 {"n_b", cd.n_b},
                 {"l_b", cd.l_b},
                 {"l_d", cd.l_d},
                 {"l_t", cd.l_t},
                 {"beta", cd.beta},
                 {"tau", cd.tau},
                 {"condensed", egd::to_string(cd.condensed_mode)},
                 {"best_size", egd::compressed_size(cd.n_b, cd.l_b, cd.l_d, cd.n, cd.m, 0)},
                 {"params_bits", cd.params_bits()},
                 {"ratio", static_cast<double>(cd.best_size) / static_cast<double>(cd.n * cd.l_t)}};
    emit(summary, as_json);
    return 0;
}

int cmd_entropy(const std::string& input, const std::optional<std::string>& sidecar, bool as_json) {
    egd::CsvData data = egd::read_csv(input, sidecar);
    egd::BitMatrix bm = egd::encode_tabular(data.rows, data.schema);
    egd::EntropyProfile prof = egd::bit_entropy(bm);
    if (as_json) {
        json out = json::array();
        for (size_t i = 0; i < prof.h.size(); ++i)
            out.push_back({{"pos", i},
                           {"h", prof.h[i]},
                           {"ones", prof.ones_count[i]},
                           {"constant", static_cast<bool>(prof.constant_mask[i])}});
        std::cout << out.dump() << '\n';
    } else {
        for (size_t i = 0; i < prof.h.size(); ++i)
            std::cout << i << ' ' << prof.h[i] << ' ' << prof.ones_count[i] << ' '
                      << (prof.constant_mask[i] ? 1 : 0) << '\n';
    }
    return 0;
}

struct TrainInputs {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::optional<Eigen::VectorXd> w;
    double n_effective = 0;
};

json run_training(const std::string& mode, const TrainInputs& in, const Eigen::MatrixXd& X_test,
                  const Eigen::VectorXd& y_test, const std::string& model,
                  egd::train::TrainConfig cfg) {
    Eigen::MatrixXd X = in.X, Xt = X_test;
    if (cfg.standardize) {
        auto std_fit = egd::train::Standardizer::fit(in.X);
        X = std_fit.apply(in.X);
        Xt = std_fit.apply(X_test);
    }
    egd::train::TrainReport report =
        model == "logreg" ? egd::train::train_logistic(X, in.y, in.w, in.n_effective, cfg)
                          : egd::train::train_linear(X, in.y, in.w, in.n_effective, cfg);
    egd::train::Metrics metrics = egd::train::evaluate(report.params, Xt, y_test);
    json out{{"mode", mode},
             {"model", model},
             {"iters", report.iters_run},
             {"converged", report.converged},
             {"final_loss", report.final_loss},
             {"wall_time", report.wall_time},
             {"test_mse", metrics.mse}};
    if (model == "logreg") out["test_accuracy"] = metrics.accuracy;
    return out;
}

int cmd_train(const std::string& input, const std::string& model, const std::string& mode,
              double lr, double tol, uint64_t max_iters, const std::string& target,
              const std::string& test, bool standardize, bool intercept, uint64_t seed,
              bool as_json) {
    bool is_container = input.size() > 4 && input.substr(input.size() - 4) == ".egd";

    egd::Schema schema;
    std::vector<egd::TypedRow> full_rows;
    std::optional<egd::CondensedSet> condensed;
    egd::CompressedDataset cd;
    if (is_container) {
        cd = egd::read_container(input);
        schema = cd.schema;
        if (mode != "condensed") full_rows = egd::decode_tabular(egd::decompress(cd));
        if (mode != "full") {
            try {
                condensed = egd::get_condensed(cd);
            } catch (const egd::NoCondensedData&) {
                std::cerr << "error: container has no condensed data\n";
                return kExitPrecondition;
            }
        }
    } else {
        egd::CsvData data = egd::read_csv(input);
        schema = data.schema;
        full_rows = std::move(data.rows);
        if (mode != "full") {
            std::cerr << "error: condensed training requires a container input\n";
            return kExitPrecondition;
        }
    }
    size_t tcol = target_index(schema, target);

    // Test data: either a CSV path or a hold-out fraction of the full rows.
    Eigen::MatrixXd X_test;
    Eigen::VectorXd y_test;
    char* end = nullptr;
    double frac = std::strtod(test.c_str(), &end);
    bool is_fraction = end && *end == '\0' && frac > 0.0 && frac < 1.0;
    if (is_fraction) {
        if (full_rows.empty()) {
            std::cerr << "error: fractional --test needs the full rows; pass a test CSV instead\n";
            return kExitPrecondition;
        }
        std::vector<size_t> idx(full_rows.size());
        std::iota(idx.begin(), idx.end(), size_t{0});
        std::mt19937_64 rng(seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        size_t n_test = static_cast<size_t>(frac * static_cast<double>(idx.size()));
        std::vector<egd::TypedRow> test_rows, train_rows;
        for (size_t i = 0; i < idx.size(); ++i)
            (i < n_test ? test_rows : train_rows).push_back(full_rows[idx[i]]);
        full_rows = std::move(train_rows);
        std::tie(X_test, y_test) = egd::train::rows_to_matrices(test_rows, tcol);
    } else {
        egd::CsvData test_data = egd::read_csv(test);
        std::tie(X_test, y_test) = egd::train::rows_to_matrices(test_data.rows, tcol);
    }

    egd::train::TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.tol = tol;
    cfg.max_iters = max_iters;
    cfg.intercept = intercept;
    cfg.standardize = standardize;
    cfg.seed = seed;
    if (model == "logreg" && max_iters == 1'000'000) cfg.max_iters = 100'000;

    std::vector<json> summaries;
    if (mode == "full" || mode == "both") {
        TrainInputs in;
        std::tie(in.X, in.y) = egd::train::rows_to_matrices(full_rows, tcol);
        in.n_effective = static_cast<double>(in.X.rows());
        summaries.push_back(run_training("full", in, X_test, y_test, model, cfg));
    }
    if (mode == "condensed" || mode == "both") {
        TrainInputs in;
        std::tie(in.X, in.y, in.w) = egd::train::condensed_to_matrices(*condensed, tcol);
        in.n_effective = static_cast<double>(cd.n);
        summaries.push_back(run_training("condensed", in, X_test, y_test, model, cfg));
    }
    for (const auto& s : summaries) emit(s, as_json);
    return 0;
}

int cmd_sample(const std::string& dir, double fraction, uint64_t seed, uint64_t epoch,
               const std::string& out_dir, bool as_json) {
    egd::img::ClasswiseArchive archive = egd::img::open_archive(dir);
    egd::img::EpochSample sample = egd::img::sample_epoch(archive, {fraction, seed, epoch});
    fs::create_directories(out_dir);
    std::ofstream index(fs::path(out_dir) / "labels.txt");
    for (size_t i = 0; i < sample.images.size(); ++i) {
        std::string name = "img_" + std::to_string(i) + (archive.channels == 3 ? ".ppm" : ".pgm");
        egd::img::write_pnm((fs::path(out_dir) / name).string(), sample.images[i]);
        index << name << ' ' << sample.labels[i] << '\n';
    }
    emit(json{{"images", sample.images.size()},
              {"bytes_read", sample.bytes_read},
              {"archive_bytes", archive.total_bytes()},
              {"out", out_dir}},
         as_json);
    return 0;
}

int cmd_images_compress(const std::string& idx_images, const std::string& idx_labels,
                        const std::string& dir_input, const std::string& out_dir, bool use_dct,
                        uint32_t tau, unsigned jobs, uint64_t limit_per_class, bool as_json) {
    std::map<std::string, std::vector<egd::img::ImageTensor>> by_label;
    if (!idx_images.empty()) {
        auto images = egd::img::read_idx_images(idx_images);
        auto labels = egd::img::read_idx_labels(idx_labels);
        if (images.size() != labels.size()) throw egd::ShapeMismatch("image/label counts differ");
        for (size_t i = 0; i < images.size(); ++i) {
            auto& bucket = by_label[std::to_string(labels[i])];
            if (limit_per_class == 0 || bucket.size() < limit_per_class)
                bucket.push_back(std::move(images[i]));
        }
    } else {
        // directory of per-label subdirectories holding PPM/PGM files
        for (const auto& label_dir : fs::directory_iterator(dir_input)) {
            if (!label_dir.is_directory()) continue;
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(label_dir.path()))
                files.push_back(entry.path());
            std::sort(files.begin(), files.end());
            auto& bucket = by_label[label_dir.path().filename().string()];
            for (const auto& file : files) {
                if (limit_per_class != 0 && bucket.size() >= limit_per_class) break;
                bucket.push_back(egd::img::read_pnm(file.string()));
            }
        }
    }
    egd::img::ArchiveBuildConfig cfg;
    cfg.use_dct = use_dct;
    cfg.search.tau = tau;
    auto archive = egd::img::compress_classwise(by_label, cfg, out_dir, jobs);
    emit(json{{"classes", archive.classes.size()},
              {"archive_bytes", archive.total_bytes()},
              {"raw_bytes", archive.raw_bytes()},
              {"ratio",
               static_cast<double>(archive.total_bytes()) / static_cast<double>(archive.raw_bytes())},
              {"out", out_dir}},
         as_json);
    return 0;
}

// Timing helpers for the bench verb.
double time_seconds(const std::function<void()>& fn, int reps) {
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
           static_cast<double>(reps);
}

int cmd_bench(const std::string& task, uint64_t n, uint64_t d, double fraction, bool as_json) {
    std::mt19937_64 rng(default_seed() + 1);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd theta_true(d), y(n);
    for (uint64_t j = 0; j < d; ++j) theta_true[static_cast<Eigen::Index>(j)] = gauss(rng);
    for (uint64_t i = 0; i < n; ++i) {
        for (uint64_t j = 0; j < d; ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gauss(rng);
        y[static_cast<Eigen::Index>(i)] =
            X.row(static_cast<Eigen::Index>(i)).dot(theta_true) + 0.1 * gauss(rng);
    }
    uint64_t m = std::max<uint64_t>(1, static_cast<uint64_t>(fraction * static_cast<double>(n)));
    Eigen::MatrixXd Xc = X.topRows(static_cast<Eigen::Index>(m));
    Eigen::VectorXd yc = y.head(static_cast<Eigen::Index>(m));
    Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m),
                                                  static_cast<double>(n) / static_cast<double>(m));
    w[0] += static_cast<double>(n) - w.sum(); // exact partition

    json summary{{"task", task}, {"n", n}, {"d", d}, {"m", m}};
    if (task == "gd-iter") {
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
        double t_full =
            time_seconds([&] { theta = egd::train::gd_step_full(X, y, theta, 1e-4); }, 20);
        theta.setZero();
        double t_cond = time_seconds(
            [&] {
                theta = egd::train::gd_step_condensed(Xc, yc, w, theta, 1e-4,
                                                      static_cast<double>(n));
            },
            20);
        summary["full_iter_s"] = t_full;
        summary["condensed_iter_s"] = t_cond;
        summary["speedup"] = t_full / t_cond;
    } else if (task == "closed-form") {
        double t_full = time_seconds([&] { egd::train::closed_form_full(X, y); }, 5);
        double t_cond = time_seconds([&] { egd::train::closed_form_weighted(Xc, yc, w); }, 5);
        double nd = static_cast<double>(n) * d * d + static_cast<double>(d) * d * d;
        double md = static_cast<double>(m) * d * d + static_cast<double>(d) * d * d;
        summary["full_s"] = t_full;
        summary["condensed_s"] = t_cond;
        summary["speedup"] = t_full / t_cond;
        summary["predicted_speedup"] = nd / md;
    } else if (task == "compress") {
        std::vector<egd::TypedRow> rows(n);
        for (uint64_t i = 0; i < n; ++i) {
            egd::TypedRow row(d);
            for (uint64_t j = 0; j < d; ++j)
                row[j] = static_cast<int64_t>(std::llround(
                    100.0 * X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
            rows[i] = std::move(row);
        }
        egd::Schema schema(d);
        for (uint64_t j = 0; j < d; ++j) {
            schema[j].name = "c" + std::to_string(j);
            schema[j].kind = egd::ColumnKind::Int;
        }
        egd::fit_schema(schema, rows);
        egd::BitMatrix bm = egd::encode_tabular(rows, schema);
        egd::SearchConfig cfg;
        cfg.beta = 8;
        cfg.tau = 16;
        double t = time_seconds([&] { egd::compress(bm, cfg); }, 3);
        summary["compress_s"] = t;
    } else {
        std::cerr << "error: unknown bench task '" << task << "'\n";
        return kExitPrecondition;
    }
    emit(summary, as_json);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"EntroGeDe compression and train-on-compressed-data toolkit"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "structured JSON output");

    std::string input, out, target, condensed = "stored", sidecar;
    uint32_t beta = 0, tau = 16;

    auto* compress = app.add_subcommand("compress", "compress a CSV into an EGD1 container");
    compress->add_option("input", input)->required();
    compress->add_option("--out", out)->required();
    compress->add_option("--beta", beta);
    compress->add_option("--tau", tau);
    compress->add_option("--condensed", condensed)
        ->check(CLI::IsMember({"stored", "on-demand", "none"}));
    compress->add_option("--target", target);
    compress->add_option("--schema", sidecar);

    auto* decompress = app.add_subcommand("decompress", "restore a container to CSV");
    decompress->add_option("input", input)->required();
    decompress->add_option("--out", out)->required();

    auto* stats = app.add_subcommand("stats", "print container counters");
    stats->add_option("input", input)->required();

    auto* entropy = app.add_subcommand("entropy", "per-bit-position entropy of a CSV");
    entropy->add_option("input", input)->required();
    entropy->add_option("--schema", sidecar);

    std::string model = "linreg", mode = "full", test;
    double lr = 0.001, tol = 1e-8;
    uint64_t max_iters = 1'000'000, seed = default_seed();
    bool standardize = false, no_intercept = false;
    auto* train = app.add_subcommand("train", "train on full or condensed data");
    train->add_option("input", input, "CSV or .egd container")->required();
    train->add_option("--model", model)->check(CLI::IsMember({"linreg", "logreg"}));
    train->add_option("--mode", mode)->check(CLI::IsMember({"full", "condensed", "both"}));
    train->add_option("--lr", lr);
    train->add_option("--tol", tol);
    train->add_option("--max-iters", max_iters);
    train->add_option("--target", target);
    train->add_option("--test", test, "test CSV path or hold-out fraction")->required();
    train->add_flag("--standardize", standardize);
    train->add_flag("--no-intercept", no_intercept);
    train->add_option("--seed", seed);

    double fraction = 1.0;
    uint64_t epoch = 0;
    auto* sample = app.add_subcommand("sample", "decode a per-epoch random subset of an archive");
    sample->add_option("archive", input)->required();
    sample->add_option("--fraction", fraction);
    sample->add_option("--seed", seed);
    sample->add_option("--epoch", epoch);
    sample->add_option("--out", out)->required();

    auto* images = app.add_subcommand("images", "image archive operations");
    images->require_subcommand(1);
    std::string idx_images, idx_labels, dir_input;
    bool use_dct = false;
    unsigned jobs = 1;
    uint64_t limit_per_class = 0;
    auto* images_compress = images->add_subcommand("compress", "build a class-wise archive");
    images_compress->add_option("--idx-images", idx_images);
    images_compress->add_option("--idx-labels", idx_labels);
    images_compress->add_option("--dir", dir_input);
    images_compress->add_option("--out", out)->required();
    images_compress->add_flag("--dct", use_dct);
    images_compress->add_option("--tau", tau);
    images_compress->add_option("--jobs", jobs);
    images_compress->add_option("--limit-per-class", limit_per_class);

    std::string task = "gd-iter";
    uint64_t bench_n = 100000, bench_d = 8;
    double bench_fraction = 0.05;
    auto* bench = app.add_subcommand("bench", "timing of full vs condensed training paths");
    bench->add_option("--task", task)->check(CLI::IsMember({"gd-iter", "closed-form", "compress"}));
    bench->add_option("--n", bench_n);
    bench->add_option("--d", bench_d);
    bench->add_option("--fraction", bench_fraction);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*compress)
            return cmd_compress(input, out, beta, tau, condensed, target,
                                sidecar.empty() ? std::nullopt : std::optional(sidecar), as_json);
        if (*decompress) return cmd_decompress(input, out, as_json);
        if (*stats) return cmd_stats(input, as_json);
        if (*entropy)
            return cmd_entropy(input, sidecar.empty() ? std::nullopt : std::optional(sidecar),
                               as_json);
        if (*train)
            return cmd_train(input, model, mode, lr, tol, max_iters, target, test, standardize,
                             !no_intercept, seed, as_json);
        if (*sample) return cmd_sample(input, fraction, seed, epoch, out, as_json);
        if (*images_compress) {
            if (idx_images.empty() == dir_input.empty()) {
                std::cerr << "error: pass exactly one of --idx-images or --dir\n";
                return kExitPrecondition;
            }
            return cmd_images_compress(idx_images, idx_labels, dir_input, out, use_dct, tau, jobs,
                                       limit_per_class, as_json);
        }
        if (*bench) return cmd_bench(task, bench_n, bench_d, bench_fraction, as_json);
    } catch (const egd::SchemaMismatch& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const egd::RangeOverflow& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const egd::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const egd::CorruptContainer& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const egd::NoCondensedData& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPrecondition;
    } catch (const egd::EmptyDataset& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPrecondition;
    } catch (const egd::IndexOutOfRange& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPrecondition;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return 0;
}
