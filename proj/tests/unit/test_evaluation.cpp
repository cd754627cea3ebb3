#include <doctest.h>

#include <random>
#include <regex>

#include "../support.hpp"
#include "painpipe/error.hpp"
#include "painpipe/evaluation.hpp"
#include "painpipe/metrics.hpp"
#include "painpipe/report.hpp"

using namespace painpipe;
using namespace painpipe::evaluation;

namespace {

dataset::DatasetIndex labelled_index(int subjects, int frames, int n_classes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<dataset::FrameRecord> records;
    for (const auto& s : dataset::numbered_subjects(subjects)) {
        for (int f = 0; f < frames; ++f) {
            dataset::FrameRecord r;
            r.subject_id = s;
            r.sequence_id = "seq1";
            r.frame_index = f + 1;
            r.frame_name = "f" + std::to_string(f + 1);
            r.au.au4 = static_cast<int>(rng() % 6);
            r.au.au6 = static_cast<int>(rng() % 6);
            r.au.au9 = static_cast<int>(rng() % 6);
            r.au.au43 = static_cast<int>(rng() % 2);
            r.pspi = facs::compute_pspi(r.au);
            r.pain_class = facs::quantize_pspi(r.pspi, n_classes);
            records.push_back(r);
        }
    }
    return dataset::DatasetIndex(std::move(records), n_classes);
}

class ThrowingRunner : public FoldRunner {
public:
    std::string model_name() const override { return "throws"; }
    std::vector<int> run(const dataset::DatasetIndex&, const dataset::FoldSplit&, int fold_id,
                         std::span<const std::size_t> test) override {
        if (fold_id == 2) throw ValidationError("boom");
        return std::vector<int>(test.size(), 0);
    }
};

class RecordingRunner : public FoldRunner {
public:
    std::vector<std::vector<std::size_t>> seen;
    std::string model_name() const override { return "recording"; }
    std::vector<int> run(const dataset::DatasetIndex& data, const dataset::FoldSplit&, int,
                         std::span<const std::size_t> test) override {
        seen.emplace_back(test.begin(), test.end());
        std::vector<int> out;
        for (auto i : test) out.push_back(data[i].pain_class.index);
        return out;
    }
};

MetricsReport sample_report() {
    MetricsReport r;
    r.model_name = "resnet18";
    r.n_classes = 17;
    for (int f = 0; f < 5; ++f) {
        FoldMetrics m;
        m.fold_id = f;
        m.mae = 0.1 * (f + 1) + 1.0 / 3.0;
        m.mse = 0.7 * (f + 1);
        m.accuracy = 60.0 + f * 7.123456789;
        m.n_test_frames = 100 + static_cast<std::size_t>(f);
        m.test_subjects = {"S0" + std::to_string(f + 1)};
        r.per_fold.push_back(m);
    }
    r.recompute_aggregate();
    return r;
}

}  // namespace

TEST_CASE("metric worked examples") {
    const auto a = compute_metrics(std::vector<int>{0, 0, 1}, std::vector<int>{0, 1, 1});
    CHECK(a.mae == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(a.mse == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(a.accuracy == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
    const auto b = compute_metrics(std::vector<int>{0, 3}, std::vector<int>{0, 0});
    CHECK(b.mae == 1.5);
    CHECK(b.mse == 4.5);
    CHECK(b.accuracy == 50.0);
    CHECK_THROWS_AS(compute_metrics(std::vector<int>{0}, std::vector<int>{0, 1}), ValidationError);
    CHECK_THROWS_AS(compute_metrics(std::vector<int>{}, std::vector<int>{}), ValidationError);
}

TEST_CASE("metrics agree with a brute-force oracle") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 50);
        const int c = 2 + static_cast<int>(rng() % 16);
        std::vector<int> p, t;
        long abs_sum = 0, sq_sum = 0, hits = 0;
        for (int i = 0; i < n; ++i) {
            p.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(c)));
            t.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(c)));
            const int d = p.back() - t.back();
            abs_sum += d < 0 ? -d : d;
            sq_sum += d * d;
            hits += d == 0;
        }
        const auto m = compute_metrics(p, t);
        REQUIRE(m.mae == doctest::Approx(static_cast<double>(abs_sum) / n).epsilon(1e-12));
        REQUIRE(m.mse == doctest::Approx(static_cast<double>(sq_sum) / n).epsilon(1e-12));
        REQUIRE(m.accuracy == doctest::Approx(100.0 * static_cast<double>(hits) / n).epsilon(1e-12));
        REQUIRE(m.mae <= c - 1);
        REQUIRE(m.mse >= m.mae * m.mae - 1e-12);

        const auto uniform = dataset::ClassWeightTable::uniform(c);
        const auto w = compute_metrics(p, t, &uniform);
        REQUIRE(w.mae == doctest::Approx(m.mae).epsilon(1e-12));
        REQUIRE(w.accuracy == doctest::Approx(m.accuracy).epsilon(1e-12));
    }
}

TEST_CASE("per-class precision, recall and F1") {
    const auto s = per_class_scores(std::vector<int>{0, 0, 1, 2}, std::vector<int>{0, 1, 1, 1}, 3);
    REQUIRE(s.size() == 3);
    CHECK(s[0].precision == 0.5);
    CHECK(s[0].recall == 1.0);
    CHECK(s[1].precision == 1.0);
    CHECK(s[1].recall == doctest::Approx(1.0 / 3.0));
    CHECK(s[1].f1 == doctest::Approx(0.5));
    CHECK(s[1].support == 3);
    CHECK(s[2].precision == 0.0);
    CHECK(s[2].f1 == 0.0);
}

TEST_CASE("oracle runner scores perfectly on a five-subject protocol") {
    const auto data = labelled_index(5, 20, 17, 1);
    const auto plan = dataset::make_fold_plan(data.subjects(), 5, 3, 1, 1, 4);
    OracleRunner oracle;
    const auto r = run_cross_validation(data, plan, oracle);
    CHECK(r.model_name == "oracle");
    REQUIRE(r.per_fold.size() == 5);
    std::size_t frames = 0;
    for (const auto& f : r.per_fold) {
        CHECK(f.mae == 0.0);
        CHECK(f.mse == 0.0);
        CHECK(f.accuracy == 100.0);
        CHECK(f.test_subjects.size() == 1);
        frames += f.n_test_frames;
    }
    CHECK(frames == data.size());
    CHECK(r.aggregate.accuracy == 100.0);
    CHECK_NOTHROW(r.validate());
}

TEST_CASE("test frames are exactly the test subjects' frames") {
    const auto data = labelled_index(10, 7, 5, 2);
    const auto plan = dataset::make_fold_plan(data.subjects(), 5, 6, 2, 2, 8);
    RecordingRunner rec;
    (void)run_cross_validation(data, plan, rec);
    REQUIRE(rec.seen.size() == 5);
    std::set<std::size_t> all;
    for (std::size_t f = 0; f < 5; ++f) {
        for (auto i : rec.seen[f]) {
            CHECK(plan.folds[f].test.count(data[i].subject_id) == 1);
            all.insert(i);
        }
        CHECK(rec.seen[f].size() == 14);
    }
    CHECK(all.size() == data.size());
}

TEST_CASE("majority runner uses the training partition") {
    const auto data = labelled_index(5, 30, 3, 3);
    const auto plan = dataset::make_fold_plan(data.subjects(), 5, 3, 1, 1, 0);
    MajorityClassRunner majority;
    const auto r = run_cross_validation(data, plan, majority);
    for (std::size_t f = 0; f < 5; ++f) {
        std::map<int, int> counts;
        for (auto i : data.indices_for(plan.folds[f].train)) ++counts[data[i].pain_class.index];
        int best = 0;
        for (auto [c, n] : counts) {
            if (n > counts[best]) best = c;
        }
        std::vector<int> p, t;
        for (auto i : data.indices_for(plan.folds[f].test)) {
            p.push_back(best);
            t.push_back(data[i].pain_class.index);
        }
        CHECK(r.per_fold[f].accuracy == doctest::Approx(compute_metrics(p, t).accuracy));
    }
}

TEST_CASE("a failing fold is tagged with its id") {
    const auto data = labelled_index(5, 4, 3, 4);
    const auto plan = dataset::make_fold_plan(data.subjects(), 5, 3, 1, 1, 0);
    ThrowingRunner runner;
    try {
        (void)run_cross_validation(data, plan, runner);
        FAIL("expected FoldError");
    } catch (const FoldError& e) {
        CHECK(e.fold_id() == 2);
        CHECK(std::string(e.what()).find("fold 2") != std::string::npos);
        CHECK(std::string(e.what()).find("boom") != std::string::npos);
    }
}

TEST_CASE("overlapping plans are rejected before any fold runs") {
    const auto data = labelled_index(5, 4, 3, 5);
    auto plan = dataset::make_fold_plan(data.subjects(), 5, 3, 1, 1, 0);
    plan.folds[1].train.insert(*plan.folds[1].test.begin());
    RecordingRunner rec;
    CHECK_THROWS_AS(run_cross_validation(data, plan, rec), ValidationError);
    CHECK(rec.seen.empty());
}

TEST_CASE("report validation") {
    auto r = sample_report();
    CHECK_NOTHROW(r.validate());
    auto bad = r;
    bad.aggregate.mae += 1e-6;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = r;
    bad.per_fold[0].accuracy = 101.0;
    bad.recompute_aggregate();
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = r;
    bad.per_fold[0].mae = 16.5;
    bad.recompute_aggregate();
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("JSON report round trip") {
    const auto r = sample_report();
    const auto j = to_json(r);
    CHECK(j.at("aggregation") == kAggregation);
    CHECK(report_from_json(j) == r);
    test_support::TempDir dir("report");
    emit_report(r, ReportFormat::json, dir / "r.json");
    CHECK(read_report(dir / "r.json") == r);
}

TEST_CASE("CSV has one row per fold and an aggregate row equal to the mean") {
    const auto r = sample_report();
    const auto csv = to_csv(r);
    std::istringstream in(csv);
    std::vector<std::vector<std::string>> rows;
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        rows.push_back(cells);
    }
    REQUIRE(rows.size() == 7);
    CHECK(rows[0] == std::vector<std::string>{"model", "fold", "mae", "mse", "accuracy"});
    for (int col = 2; col <= 4; ++col) {
        double sum = 0.0;
        for (int i = 1; i <= 5; ++i) sum += std::stod(rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)]);
        CHECK(std::abs(std::stod(rows[6][static_cast<std::size_t>(col)]) - sum / 5) <= 1e-9);
    }
    CHECK(rows[6][1] == "AGGREGATE");
    CHECK(parse_report_format("csv") == ReportFormat::csv);
    CHECK_THROWS_AS(parse_report_format("xml"), ValidationError);
}

TEST_CASE("unwritable report path is an IO error") {
    test_support::TempDir dir("ro");
    test_support::write_text(dir / "file", "x");
    CHECK_THROWS_AS(emit_report(sample_report(), ReportFormat::json, dir / "file" / "r.json"), IoError);
}

TEST_CASE("comparison chart has one labelled bar per model and metric") {
    std::vector<MetricsReport> reports;
    const std::vector<std::tuple<std::string, double, double, double>> rows{
        {"a", 0.25, 1.5, 80.0}, {"b", 0.5, 2.125, 75.5}, {"c", 1.0, 3.0, 60.0}};
    for (const auto& [name, mae, mse, acc] : rows) {
        MetricsReport r;
        r.model_name = name;
        r.n_classes = 17;
        r.aggregate = {mae, mse, acc};
        reports.push_back(r);
    }
    const auto svg = comparison_svg(reports);
    CHECK(svg.rfind("<svg", 0) != std::string::npos);
    const std::regex bar(R"(<rect class="bar")");
    CHECK(std::distance(std::sregex_iterator(svg.begin(), svg.end(), bar), std::sregex_iterator()) == 9);
    for (const auto& metric : {"mae", "mse", "accuracy"}) {
        CHECK(svg.find(std::string("data-metric=\"") + metric + "\"") != std::string::npos);
    }
    CHECK(svg.find(">0.2500<") != std::string::npos);
    CHECK(svg.find(">2.1250<") != std::string::npos);
    CHECK(svg.find(">75.5000<") != std::string::npos);
    CHECK_THROWS(comparison_svg(std::span<const MetricsReport>{}));
}
