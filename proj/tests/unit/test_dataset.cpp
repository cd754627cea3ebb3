#include <doctest.h>

#include <map>
#include <random>

#include "../support.hpp"
#include "painpipe/dataset.hpp"
#include "painpipe/error.hpp"
#include "painpipe/image.hpp"

using namespace painpipe;
using namespace painpipe::dataset;
using test_support::TempDir;
using test_support::write_text;

namespace {

// Images/<s>/<q>/<frame>.png plus one AU file per frame.
void write_frame(const std::filesystem::path& root, const std::string& s, const std::string& q, const std::string& f,
                 const std::optional<std::string>& au_text) {
    const auto img = image_file_for(root, s, q, f);
    std::filesystem::create_directories(img.parent_path());
    save_png(ImageTensor(8, 8, 0.25f), img);
    if (au_text) write_text(au_file_for(root, s, q, f), *au_text);
}

FrameRecord record(const std::string& subject, int frame, int pspi, int n_classes = 17) {
    FrameRecord r;
    r.subject_id = subject;
    r.sequence_id = "q";
    r.frame_index = frame;
    r.frame_name = std::to_string(frame);
    r.pspi = {pspi};
    r.pain_class = facs::quantize_pspi(r.pspi, n_classes);
    return r;
}

DatasetIndex index_with_classes(const std::vector<int>& classes, int n_classes) {
    std::vector<FrameRecord> rs;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        // lowest score of the class bin
        const int pspi = (classes[i] * 17 + n_classes - 1) / n_classes;
        rs.push_back(record("S" + std::to_string(i % 3), static_cast<int>(i), pspi, n_classes));
    }
    return DatasetIndex(rs, n_classes);
}

std::map<int, std::size_t> counts_of(const DatasetIndex& idx) { return class_histogram(idx); }

}  // namespace

TEST_CASE("ingest counts frames and subjects") {
    TempDir dir("ingest");
    for (auto s : {"A", "B"})
        for (auto f : {"f001", "f002", "f003"}) write_frame(dir.path(), s, "seq1", f, std::string("4 1\n"));
    const auto result = ingest(dir.path(), Layout::unbc_like);
    CHECK(result.index.size() == 6);
    CHECK(result.index.subjects().size() == 2);
    CHECK(result.warnings.empty());
    CHECK(result.index[0].frame_index == 1);
    CHECK(result.index[0].pspi.value == 1);
}

TEST_CASE("absent units default to zero") {
    TempDir dir("au");
    write_frame(dir.path(), "A", "s", "f1", std::string("4 3\n43 1\n"));
    const auto idx = ingest(dir.path(), Layout::unbc_like).index;
    REQUIRE(idx.size() == 1);
    CHECK(idx[0].au == facs::ActionUnitVector{3, 0, 0, 0, 0, 1});
    CHECK(idx[0].pspi.value == 4);
}

TEST_CASE("AU files accept decimal and scientific numbers and ignore other codes") {
    TempDir dir("au2");
    write_text(dir / "x_facs.txt", "4.0 2.000\n12 3\n6 1e0\n\n");
    const auto au = parse_au_file(dir / "x_facs.txt");
    CHECK(au == facs::ActionUnitVector{2, 1, 0, 0, 0, 0});
}

TEST_CASE("malformed AU lines cite file and line") {
    TempDir dir("bad");
    write_frame(dir.path(), "A", "s", "f1", std::string("4 2\n6 seven\n"));
    try {
        ingest(dir.path(), Layout::unbc_like);
        FAIL("no error");
    } catch (const IngestError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("f1_facs.txt") != std::string::npos);
        CHECK(msg.find(":2") != std::string::npos);
    }
    write_text(dir / "frac_facs.txt", "4 2.5\n");
    CHECK_THROWS_AS(parse_au_file(dir / "frac_facs.txt"), IngestError);
    write_text(dir / "range_facs.txt", "43 2\n");
    CHECK_THROWS_AS(parse_au_file(dir / "range_facs.txt"), IngestError);
    write_text(dir / "dup_facs.txt", "4 1\n4 2\n");
    CHECK_THROWS_AS(parse_au_file(dir / "dup_facs.txt"), IngestError);
}

TEST_CASE("frames without AU file are skipped and counted") {
    TempDir dir("skip");
    write_frame(dir.path(), "A", "s", "f1", std::string("4 1\n"));
    write_frame(dir.path(), "A", "s", "f2", std::nullopt);
    const auto result = ingest(dir.path(), Layout::unbc_like);
    CHECK(result.index.size() == 1);
    CHECK(result.warnings.missing_au_files == 1);
    CHECK(to_json(result.warnings).at("missing_au_files") == 1);
}

TEST_CASE("empty or missing roots are errors") {
    TempDir dir("empty");
    CHECK_THROWS_AS(ingest(dir / "nope", Layout::unbc_like), IngestError);
    std::filesystem::create_directories(dir / "Images");
    CHECK_THROWS_AS(ingest(dir.path(), Layout::unbc_like), IngestError);
}

TEST_CASE("class weight examples") {
    const std::vector<std::size_t> a{90, 10};
    auto t = compute_class_weights(a);
    CHECK(t.weight(0) == doctest::Approx(100.0 / 180.0).epsilon(1e-12));
    CHECK(t.weight(1) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(t.weight(0) == doctest::Approx(0.5556).epsilon(1e-4));
    const std::vector<std::size_t> b{1, 1, 2};
    t = compute_class_weights(b);
    CHECK(t.weight(0) == doctest::Approx(4.0 / 3.0));
    CHECK(t.weight(1) == doctest::Approx(4.0 / 3.0));
    CHECK(t.weight(2) == doctest::Approx(2.0 / 3.0));
    CHECK(t.n_classes == 3);
    CHECK(t.total_samples == 4);
}

TEST_CASE("uniform histograms weigh exactly one") {
    for (std::size_t per : {1u, 3u, 7u, 49u, 1000u}) {
        for (std::size_t c : {2u, 3u, 17u}) {
            const std::vector<std::size_t> counts(c, per);
            for (double w : compute_class_weights(counts).weights) REQUIRE(w == 1.0);
        }
    }
}

TEST_CASE("empty classes get zero weight and keep the total identity") {
    const std::vector<std::size_t> counts{5, 0, 15, 0};
    const auto t = compute_class_weights(counts);
    CHECK(t.weight(1) == 0.0);
    CHECK(t.empty_classes == std::vector<int>{1, 3});
    CHECK(t.n_classes == 2);
    double sum = 0.0;
    for (std::size_t c = 0; c < counts.size(); ++c) sum += counts[c] * t.weights[c];
    CHECK(sum == doctest::Approx(20.0).epsilon(1e-12));
    CHECK_THROWS_AS(compute_class_weights(std::vector<std::size_t>{0, 0}), ValidationError);
}

TEST_CASE("weights from an index subset") {
    const auto idx = index_with_classes({0, 0, 0, 1, 1, 2}, 3);
    const std::vector<std::size_t> subset{0, 1, 3};
    const auto t = compute_class_weights(idx, subset);
    CHECK(t.counts == std::vector<std::size_t>{2, 1, 0});
    CHECK(t.weight(0) == doctest::Approx(0.75));
    CHECK(t.weight(1) == doctest::Approx(1.5));
}

TEST_CASE("histogram examples") {
    std::vector<FrameRecord> rs;
    for (int i = 0; i < 6; ++i) rs.push_back(record("A", i, 0));
    CHECK(class_histogram(DatasetIndex(rs, 17)) == std::map<int, std::size_t>{{0, 6}});
    rs.clear();
    int i = 0;
    for (int p : {0, 0, 1, 3}) rs.push_back(record("A", i++, p));
    CHECK(class_histogram(DatasetIndex(rs, 17)) == std::map<int, std::size_t>{{0, 2}, {1, 1}, {3, 1}});
}

TEST_CASE("resampling reaches its target counts") {
    const auto idx = index_with_classes({0, 0, 0, 0, 1, 1}, 2);
    CHECK(counts_of(resample(idx, ResampleStrategy::oversample_minority, 1)) ==
          std::map<int, std::size_t>{{0, 4}, {1, 4}});
    CHECK(counts_of(resample(idx, ResampleStrategy::undersample_majority, 1)) ==
          std::map<int, std::size_t>{{0, 2}, {1, 2}});
    CHECK_THROWS_AS(resample(index_with_classes({1, 1}, 2), ResampleStrategy::oversample_minority, 1),
                    ValidationError);
}

TEST_CASE("resampling is seeded and keeps labels consistent") {
    std::vector<FrameRecord> rs;
    for (int i = 0; i < 40; ++i) rs.push_back(record("S" + std::to_string(i % 4), i, (i * 7) % 17 < 12 ? 0 : 13, 4));
    const DatasetIndex idx(rs, 4);
    for (auto strategy : {ResampleStrategy::oversample_minority, ResampleStrategy::undersample_majority}) {
        const auto a = resample(idx, strategy, 42);
        const auto b = resample(idx, strategy, 42);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].frame_index == b[i].frame_index);
            CHECK(a[i].subject_id == b[i].subject_id);
            CHECK(a[i].pain_class == facs::quantize_pspi(a[i].pspi, 4));
        }
    }
}

TEST_CASE("fold plan for 25 subjects, 15/5/5") {
    const auto subjects = numbered_subjects(25);
    const auto plan = make_fold_plan(subjects, 5, 15, 5, 5, 3);
    CHECK(plan.folds.size() == 5);
    std::map<std::string, int> tested;
    for (const auto& f : plan.folds) {
        CHECK(f.train.size() == 15);
        CHECK(f.val.size() == 5);
        CHECK(f.test.size() == 5);
        for (const auto& s : f.test) ++tested[s];
    }
    CHECK(tested.size() == 25);
    for (const auto& [s, n] : tested) CHECK(n == 1);
    CHECK_NOTHROW(check_fold_plan(plan, subjects));
    // validation block is the following test block
    for (std::size_t i = 0; i < 5; ++i) CHECK(plan.folds[i].val == plan.folds[(i + 1) % 5].test);
}

TEST_CASE("five subjects, 3/1/1, each tested once") {
    const auto subjects = numbered_subjects(5);
    const auto plan = make_fold_plan(subjects, 5, 3, 1, 1, 9);
    std::set<std::string> tested;
    for (const auto& f : plan.folds) tested.insert(f.test.begin(), f.test.end());
    CHECK(tested == subjects);
}

TEST_CASE("fold plans are seeded") {
    const auto subjects = numbered_subjects(10);
    const auto a = make_fold_plan(subjects, 5, 6, 2, 2, 11);
    const auto b = make_fold_plan(subjects, 5, 6, 2, 2, 11);
    const auto c = make_fold_plan(subjects, 5, 6, 2, 2, 12);
    CHECK(to_json(a) == to_json(b));
    bool differs = false;
    for (std::size_t i = 0; i < a.folds.size(); ++i) differs |= a.folds[i].test != c.folds[i].test;
    CHECK(differs);
}

TEST_CASE("fold plan arity errors state the constraint") {
    const auto subjects = numbered_subjects(25);
    try {
        make_fold_plan(subjects, 5, 14, 5, 5, 0);
        FAIL("no error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("n_train + n_val + n_test") != std::string::npos);
    }
    try {
        make_fold_plan(subjects, 4, 15, 5, 5, 0);
        FAIL("no error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("k * n_test") != std::string::npos);
    }
}

TEST_CASE("fold plan invariants over valid shapes") {
    for (int k = 2; k <= 8; ++k) {
        for (int n_test = 1; n_test <= 4; ++n_test) {
            const int total = k * n_test;
            for (int n_val = 1; n_val <= total - n_test - 1; ++n_val) {
                const auto subjects = numbered_subjects(total);
                const int n_train = total - n_val - n_test;
                for (std::uint64_t seed = 0; seed < 3; ++seed) {
                    const auto plan = make_fold_plan(subjects, k, n_train, n_val, n_test, seed);
                    REQUIRE_NOTHROW(check_fold_plan(plan, subjects));
                }
            }
        }
    }
}

TEST_CASE("fold plan json round trip") {
    const auto subjects = numbered_subjects(10);
    const auto plan = make_fold_plan(subjects, 5, 6, 2, 2, 4);
    const auto back = fold_plan_from_json(nlohmann::json::parse(to_json(plan).dump()));
    CHECK(to_json(back) == to_json(plan));
    CHECK(back.seed == 4);
}

TEST_CASE("check_fold_plan rejects overlap") {
    const auto subjects = numbered_subjects(5);
    auto plan = make_fold_plan(subjects, 5, 3, 1, 1, 0);
    plan.folds[0].train.insert(*plan.folds[0].test.begin());
    CHECK_THROWS_AS(check_fold_plan(plan, subjects), ValidationError);
}

TEST_CASE("index helpers") {
    const auto idx = index_with_classes({0, 1, 2, 0, 1, 2}, 3);
    CHECK(idx.indices_for({"S0"}) == std::vector<std::size_t>{0, 3});
    CHECK(idx.has_unique_keys());
    std::vector<FrameRecord> rs{record("A", 1, 16), record("A", 2, 4)};
    const auto narrowed = DatasetIndex(rs, 17).with_class_count(4);
    CHECK(narrowed[0].pain_class.index == 3);
    CHECK(narrowed[1].pain_class.index == 0);
    CHECK(parse_layout("synthetic") == Layout::synthetic);
    CHECK_THROWS_AS(parse_layout("other"), ValidationError);
}
