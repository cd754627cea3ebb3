// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>

#include "../support.hpp"
#include "painpipe/cli.hpp"
#include "painpipe/dataset.hpp"
#include "painpipe/evaluation.hpp"
#include "painpipe/facs.hpp"
#include "painpipe/metrics.hpp"
#include "painpipe/models.hpp"
#include "painpipe/report.hpp"
#include "painpipe/training.hpp"

using namespace painpipe;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void guarded(int id, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        verdict(id, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

bool within(double value, double target, double band) { return std::abs(value - target) <= band * target; }

void architecture() {
    struct Row {
        models::Architecture arch;
        double params, flops;
    };
    const Row rows[] = {{models::Architecture::resnet18, 11.4e6, 1.8e9},
                        {models::Architecture::resnet34, 21.5e6, 3.6e9},
                        {models::Architecture::vgg16, 134.7e6, 1.55e10}};
    bool ok = true;
    std::string detail;
    for (const auto& r : rows) {
        models::ModelSpec spec;
        spec.name = r.arch;
        spec.n_classes = 1000;
        spec.input_size = 224;
        const auto cost = models::cost_report(spec);
        const double p = static_cast<double>(cost.parameter_count), f = static_cast<double>(cost.flop_count);
        ok = ok && within(p, r.params, 0.05) && within(f, r.flops, 0.10);
        detail += models::to_string(r.arch) + " " + fmt("%.2fM", p / 1e6) + " " + fmt("%.3gG", f / 1e9) + "; ";
    }
    verdict(1, ok, detail);
}

int brute_pspi(int au4, int au6, int au7, int au9, int au10, int au43) {
    int s = au4;
    s += au6 > au7 ? au6 : au7;
    s += au9 > au10 ? au9 : au10;
    return s + au43;
}

void pspi_oracle() {
    std::size_t checked = 0, mismatches = 0;
    std::set<int> range;
    for (int a = 0; a <= 5; ++a)
        for (int b = 0; b <= 5; ++b)
            for (int c = 0; c <= 5; ++c)
                for (int d = 0; d <= 5; ++d)
                    for (int e = 0; e <= 5; ++e)
                        for (int g = 0; g <= 1; ++g) {
                            const facs::ActionUnitVector au{a, b, c, d, e, g};
                            const int v = facs::compute_pspi(au).value;
                            mismatches += v != brute_pspi(a, b, c, d, e, g);
                            range.insert(v);
                            ++checked;
                        }
    const bool full = range.size() == 17 && *range.begin() == 0 && *range.rbegin() == 16;
    verdict(2, checked == 15552 && mismatches == 0 && full,
            std::to_string(checked) + " vectors, " + std::to_string(mismatches) + " mismatches, " +
                std::to_string(range.size()) + " distinct values");
}

void weight_identities() {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int classes = 2 + static_cast<int>(rng() % 16);
        std::vector<std::size_t> counts(static_cast<std::size_t>(classes));
        std::size_t total = 0;
        for (auto& n : counts) {
            n = rng() % 4 == 0 ? 0 : rng() % 5000;
            total += n;
        }
        if (total == 0) counts[0] = total = 1;
        const auto t = dataset::compute_class_weights(counts);
        double sum = 0.0;
        for (int c = 0; c < classes; ++c) sum += static_cast<double>(counts[static_cast<std::size_t>(c)]) * t.weight(c);
        worst = std::max(worst, std::abs(sum - static_cast<double>(total)) / static_cast<double>(total));
    }
    bool uniform_exact = true;
    for (int classes = 2; classes <= 17; ++classes) {
        for (std::size_t n : {1u, 7u, 49u, 1000u, 12345u}) {
            const auto t = dataset::compute_class_weights(std::vector<std::size_t>(static_cast<std::size_t>(classes), n));
            for (double w : t.weights) uniform_exact = uniform_exact && w == 1.0;
        }
    }
    verdict(3, worst <= 1e-9 && uniform_exact,
            "max relative error " + fmt("%.3g", worst) + ", uniform exact " + (uniform_exact ? "yes" : "no"));
}

void fold_protocol() {
    const auto subjects = dataset::numbered_subjects(25);
    int good = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto plan = dataset::make_fold_plan(subjects, 5, 15, 5, 5, seed);
        bool ok = plan.folds.size() == 5;
        std::map<std::string, int> tested;
        for (const auto& f : plan.folds) {
            std::set<std::string> all(f.train);
            all.insert(f.val.begin(), f.val.end());
            all.insert(f.test.begin(), f.test.end());
            ok = ok && f.train.size() == 15 && f.val.size() == 5 && f.test.size() == 5 && all == subjects;
            for (const auto& s : f.test) ++tested[s];
        }
        for (const auto& s : subjects) ok = ok && tested[s] == 1;
        try {
            dataset::check_fold_plan(plan, subjects);
        } catch (const std::exception&) {
            ok = false;
        }
        good += ok;
    }
    verdict(4, good == 200, std::to_string(good) + "/200 seeds satisfy every invariant");
}

void loss_correctness() {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + trial % 9, c = 2 + trial % 16;
        nn::Tensor<double> z(nn::Shape{n, c, 1, 1});
        for (auto& v : z.data) v = g(rng);
        std::vector<int> y;
        double plain = 0.0;
        for (int i = 0; i < n; ++i) {
            y.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(c)));
            double s = 0.0;
            for (int k = 0; k < c; ++k) s += std::exp(z.sample(i)[k]);
            plain += std::log(s) - z.sample(i)[y.back()];
        }
        const auto r = training::weighted_cross_entropy<double>(z, y, dataset::ClassWeightTable::uniform(c));
        worst = std::max(worst, std::abs(r.loss - plain / n));
    }
    std::vector<std::unique_ptr<nn::Layer<double>>> layers;
    layers.push_back(std::make_unique<nn::Conv2d<double>>("conv", 3, 4, 3, 1, 1, false));
    layers.push_back(std::make_unique<nn::BatchNorm2d<double>>("bn", 4));
    layers.push_back(std::make_unique<nn::ReLU<double>>());
    layers.push_back(std::make_unique<nn::MaxPool2d<double>>(2, 2, 0));
    layers.push_back(std::make_unique<nn::BasicBlock<double>>("block", 4, 6, 2));
    layers.push_back(std::make_unique<nn::GlobalAvgPool<double>>());
    layers.push_back(std::make_unique<nn::Linear<double>>("fc", 6, 3));
    nn::Network<double> net(nn::Shape{1, 3, 8, 8}, std::move(layers));
    net.init(7);
    nn::Tensor<double> x(nn::Shape{4, 3, 8, 8});
    for (auto& v : x.data) v = g(rng);
    const auto check = training::gradient_check(net, x, std::vector<int>{0, 1, 2, 1},
                                                std::vector<double>{0.6, 1.4, 3.0});
    verdict(5, worst <= 1e-6 && check.max_relative_error < 1e-4 && net.parameter_count() <= 5000,
            "uniform-weight gap " + fmt("%.3g", worst) + ", gradient check " + fmt("%.3g", check.max_relative_error) +
                " over " + std::to_string(check.checked) + " of " + std::to_string(net.parameter_count()) +
                " parameters");
}

// Direct reading of the rule: stop once the validation MAE has gone
// `patience` epochs without a strict improvement.
std::pair<int, int> simulate_stop(const std::vector<double>& mae, int patience) {
    int best = 1, stop = static_cast<int>(mae.size());
    for (int e = 2; e <= static_cast<int>(mae.size()); ++e) {
        if (mae[static_cast<std::size_t>(e - 1)] < mae[static_cast<std::size_t>(best - 1)]) best = e;
        if (e - best >= patience) {
            stop = e;
            break;
        }
    }
    return {stop, best};
}

void early_stopping() {
    std::mt19937_64 rng(99);
    int matches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int max_epochs = 5 + static_cast<int>(rng() % 120);
        const int patience = 1 + static_cast<int>(rng() % 25);
        std::vector<double> mae;
        double level = 3.0;
        for (int e = 0; e < max_epochs; ++e) {
            if (rng() % 3 == 0) level *= 0.9;
            mae.push_back(level + 0.05 * static_cast<double>(rng() % 4));  // plateaus and ties included
        }
        const auto expected = simulate_stop(mae, patience);
        const auto got = training::run_epoch_loop(max_epochs, patience, [&](int e) {
            return training::EpochRecord{e, 1.0, mae[static_cast<std::size_t>(e - 1)], 0.0, 0.0};
        });
        matches += got.stop_epoch == expected.first && got.best_epoch == expected.second;
    }
    verdict(6, matches == 100, std::to_string(matches) + "/100 sequences match");
}

struct CliRun {
    int code;
    std::string out, err;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

std::string desk_config(const fs::path& data, const fs::path& out) {
    auto text = test_support::read_text(fs::path(PAINPIPE_CONFIG_DIR) / "desk.ini");
    text = std::regex_replace(text, std::regex(R"(root = [^\n]*)"), "root = " + data.string());
    text = std::regex_replace(text, std::regex(R"(output_dir = [^\n]*)"), "output_dir = " + out.string());
    return text;
}

std::optional<evaluation::MetricsReport> first_report;  // desk run, reused by the reproducibility check

void desk_scale(const fs::path& work) {
    test_support::write_text(work / "desk.ini", desk_config(work / "data", work / "run_a"));
    const auto cfg = (work / "desk.ini").string();
    guarded(7, [&] {
        const auto start = std::chrono::steady_clock::now();
        const auto synth = cli({"synth", "--config", cfg});
        if (synth.code != 0) throw std::runtime_error("synth failed: " + synth.err);
        const auto run = cli({"evaluate", "--config", cfg});
        if (run.code != 0) throw std::runtime_error("evaluate failed: " + run.err);
        const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
        first_report = evaluation::read_report(work / "run_a" / "report.json");

        const auto data = dataset::ingest(work / "data", dataset::Layout::synthetic, 3).index;
        const auto plan = dataset::fold_plan_from_json(nlohmann::json::parse(test_support::read_text(work / "run_a" / "folds.json")));
        evaluation::MajorityClassRunner majority;
        const auto base = evaluation::run_cross_validation(data, plan, majority);
        const bool ok = first_report->per_fold.size() == 5 && minutes < 15.0 &&
                        first_report->aggregate.accuracy >= 80.0 && base.aggregate.accuracy <= 70.0;
        verdict(7, ok,
                "accuracy " + fmt("%.2f%%", first_report->aggregate.accuracy) + " (majority baseline " +
                    fmt("%.2f%%", base.aggregate.accuracy) + "), MAE " + fmt("%.4f", first_report->aggregate.mae) + ", " +
                    fmt("%.1f", minutes) + " min");
    });
}

void reproducibility(const fs::path& work) {
    const auto cfg = (work / "desk.ini").string();
    guarded(9, [&] {
        if (!first_report) throw std::runtime_error("first evaluate run unavailable");
        const auto run = cli({"evaluate", "--config", cfg, "--out", (work / "run_b").string()});
        if (run.code != 0) throw std::runtime_error("evaluate failed: " + run.err);
        const auto second = evaluation::read_report(work / "run_b" / "report.json");
        const bool bytes = test_support::read_text(work / "run_a" / "report.json") ==
                           test_support::read_text(work / "run_b" / "report.json");
        verdict(9, second == *first_report && bytes, std::string("reports ") + (bytes ? "byte-identical" : "differ"));
    });
}

void metrics_oracle() {
    std::mt19937_64 rng(8);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 200), c = 2 + static_cast<int>(rng() % 16);
        std::vector<int> p, t;
        double a = 0, s = 0, h = 0;
        for (int i = 0; i < n; ++i) {
            p.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(c)));
            t.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(c)));
            const double d = p.back() - t.back();
            a += std::abs(d);
            s += d * d;
            h += d == 0;
        }
        const auto m = evaluation::compute_metrics(p, t);
        worst = std::max({worst, std::abs(m.mae - a / n), std::abs(m.mse - s / n), std::abs(m.accuracy - 100.0 * h / n)});
    }
    const auto ex = evaluation::compute_metrics(std::vector<int>{0, 0, 1}, std::vector<int>{0, 1, 1});
    const bool example = fmt("%.4f", ex.mae) == "0.3333" && fmt("%.4f", ex.mse) == "0.3333" &&
                         fmt("%.2f", ex.accuracy) == "66.67";
    verdict(8, worst <= 1e-12 && example,
            "max deviation " + fmt("%.3g", worst) + ", example (" + fmt("%.4f", ex.mae) + ", " + fmt("%.4f", ex.mse) +
                ", " + fmt("%.2f", ex.accuracy) + ")");
}

void published_chart(const fs::path& work) {
    const fs::path fixture = fs::path(PAINPIPE_FIXTURE_DIR) / "published_comparison.json";
    const auto run = cli({"plot", fixture.string(), "--out", (work / "fig3.svg").string()});
    if (run.code != 0) throw std::runtime_error("plot failed: " + run.err);
    const auto svg = test_support::read_text(work / "fig3.svg");

    const std::vector<std::string> models{"VGG-Face", "Resnet18", "Resnet34"};
    const std::map<std::string, std::vector<std::string>> labels{
        {"mae", {"0.3589", "0.4073", "0.5521"}},
        {"mse", {"1.7273", "2.5002", "1.7727"}},
        {"accuracy", {"82.1400", "87.8900", "78.0400"}}};
    std::size_t matched = 0;
    const std::regex label(R"re(<text class="bar-label" data-model="([^"]+)" data-metric="([^"]+)"[^>]*>([^<]+)</text>)re");
    std::vector<std::tuple<std::string, std::string, std::string>> found;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), label); it != std::sregex_iterator(); ++it) {
        found.emplace_back((*it)[1], (*it)[2], (*it)[3]);
    }
    std::size_t k = 0;
    for (const auto& metric : {"mae", "mse", "accuracy"}) {
        for (std::size_t m = 0; m < models.size(); ++m, ++k) {
            if (k < found.size() && std::get<0>(found[k]) == models[m] && std::get<1>(found[k]) == metric &&
                std::get<2>(found[k]) == labels.at(metric)[m]) {
                ++matched;
            }
        }
    }
    const std::regex panel(R"(<g class="panel")"), bar(R"(<rect class="bar")");
    const auto count = [&](const std::regex& re) {
        return std::distance(std::sregex_iterator(svg.begin(), svg.end(), re), std::sregex_iterator());
    };
    const bool ok = matched == 9 && found.size() == 9 && count(panel) == 3 && count(bar) == 9;
    verdict(10, ok,
            std::to_string(count(panel)) + " panels, " + std::to_string(count(bar)) + " bars, " + std::to_string(matched) +
                "/9 labels match the published values");
}

}  // namespace

int main() {
    test_support::TempDir work("acceptance");
    guarded(1, architecture);
    guarded(2, pspi_oracle);
    guarded(3, weight_identities);
    guarded(4, fold_protocol);
    guarded(5, loss_correctness);
    guarded(6, early_stopping);
    desk_scale(work.path());
    guarded(8, metrics_oracle);
    reproducibility(work.path());
    guarded(10, [&] { published_chart(work.path()); });
    std::printf("%d criteria failed\n", failures);
    return failures;
}
