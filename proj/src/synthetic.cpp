#include "painpipe/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>
#include <sstream>

#include "painpipe/error.hpp"
#include "painpipe/io_util.hpp"
#include "painpipe/seed.hpp"

namespace painpipe::synthetic {

namespace fs = std::filesystem;

namespace {

constexpr int kSupersample = 4;
constexpr int kShift = 4;  // fixed-point bits for sub-pixel OpenCV drawing
constexpr double kFixed = 1 << kShift;

cv::Point fx(double x, double y) {
    return {static_cast<int>(std::lround(x * kFixed)), static_cast<int>(std::lround(y * kFixed))};
}

cv::Size fxs(double w, double h) {
    return {static_cast<int>(std::lround(w * kFixed)), static_cast<int>(std::lround(h * kFixed))};
}

cv::Scalar rgb(const float c[3]) { return cv::Scalar(c[0] * 255.0, c[1] * 255.0, c[2] * 255.0); }

cv::Scalar shade(const float c[3], double factor) {
    return cv::Scalar(c[0] * 255.0 * factor, c[1] * 255.0 * factor, c[2] * 255.0 * factor);
}

std::string padded(const char* prefix, int value, int width) {
    std::string digits = std::to_string(value);
    if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
    return prefix + digits;
}

/// Largest-remainder allocation of `total` items over `shares`.
std::vector<int> allocate(const std::vector<double>& shares, int total) {
    std::vector<int> counts(shares.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        const double exact = shares[i] * total;
        counts[i] = static_cast<int>(std::floor(exact));
        assigned += counts[i];
        remainders.emplace_back(exact - counts[i], i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[remainders[i % remainders.size()].second];
    return counts;
}

}  // namespace

void SyntheticConfig::validate() const {
    if (n_subjects < 1) throw ValidationError("synthetic n_subjects must be >= 1");
    if (frames_per_subject < 1) throw ValidationError("synthetic frames_per_subject must be >= 1");
    if (frames_per_sequence < 1) throw ValidationError("synthetic frames_per_sequence must be >= 1");
    if (image_size < 32) throw ValidationError("synthetic image_size must be >= 32");
    if (class_mix.size() < 2) throw ValidationError("synthetic class_mix needs at least two bands");
    double sum = 0.0;
    for (double m : class_mix) {
        if (!(m >= 0.0)) throw ValidationError("synthetic class_mix entries must be non-negative");
        sum += m;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ValidationError("synthetic class_mix must sum to 1");
}

std::vector<int> core_scores(int class_index, int n_classes) {
    const auto band = facs::class_band(class_index, n_classes);
    const double margin = (band.upper - band.lower) / 4.0;
    std::vector<int> members;
    std::vector<int> core;
    for (int p = 0; p <= facs::kMaxPspi; ++p) {
        if (facs::quantize_pspi(facs::PainScore{p}, n_classes).index != class_index) continue;
        members.push_back(p);
        const bool clear_below = class_index == 0 || p >= band.lower + margin;
        const bool clear_above = class_index == n_classes - 1 || p <= band.upper - margin;
        if (clear_below && clear_above) core.push_back(p);
    }
    return core.empty() ? members : core;
}

facs::ActionUnitVector sample_action_units(int pspi, std::mt19937_64& rng) {
    if (pspi < 0 || pspi > facs::kMaxPspi) throw ValidationError("PSPI target outside [0, 16]");
    // (au4, max(au6, au7), max(au9, au10), au43) combinations with the target sum.
    std::vector<std::array<int, 4>> options;
    for (int a4 = 0; a4 <= 5; ++a4)
        for (int eye = 0; eye <= 5; ++eye)
            for (int nose = 0; nose <= 5; ++nose)
                for (int closed = 0; closed <= 1; ++closed)
                    if (a4 + eye + nose + closed == pspi) options.push_back({a4, eye, nose, closed});
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    const auto chosen = options[pick(rng)];

    auto split = [&rng](int peak, int& first, int& second) {
        std::uniform_int_distribution<int> lower(0, peak);
        std::bernoulli_distribution coin(0.5);
        const int other = lower(rng);
        if (coin(rng)) {
            first = peak;
            second = other;
        } else {
            first = other;
            second = peak;
        }
    };
    facs::ActionUnitVector au;
    au.au4 = chosen[0];
    split(chosen[1], au.au6, au.au7);
    split(chosen[2], au.au9, au.au10);
    au.au43 = chosen[3];
    return au;
}

SubjectStyle make_subject_style(std::uint64_t subject_seed) {
    std::mt19937_64 rng(subject_seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    static constexpr float kTones[][3] = {
        {0.96f, 0.80f, 0.69f}, {0.87f, 0.67f, 0.52f}, {0.76f, 0.57f, 0.42f},
        {0.62f, 0.45f, 0.33f}, {0.93f, 0.76f, 0.62f}, {0.80f, 0.62f, 0.50f}};
    SubjectStyle s{};
    const auto& tone = kTones[static_cast<std::size_t>(u(rng) * 6.0) % 6];
    for (int c = 0; c < 3; ++c) s.skin[c] = static_cast<float>(std::clamp(tone[c] + (u(rng) - 0.5) * 0.06, 0.0, 1.0));
    const double grey = 0.25 + 0.45 * u(rng);
    for (int c = 0; c < 3; ++c) s.background[c] = static_cast<float>(std::clamp(grey + (u(rng) - 0.5) * 0.2, 0.0, 1.0));
    s.aspect = 1.18 + 0.12 * u(rng);
    s.eye_y = 0.38 + 0.04 * u(rng);
    s.eye_dx = 0.19 + 0.03 * u(rng);
    s.mouth_y = 0.74 + 0.04 * u(rng);
    s.face_scale = 0.58 + 0.06 * u(rng);
    return s;
}

ImageTensor render_face(const facs::ActionUnitVector& au, const SubjectStyle& style, int image_size,
                        std::mt19937_64& rng, BoundingBox& face_box) {
    au.validate();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double size = image_size;

    // Face box in output pixels, jittered per frame and kept inside the image.
    const double fw = std::clamp(style.face_scale * size * (0.97 + 0.06 * u(rng)), 8.0, size - 2.0);
    const double fh = std::min(fw * style.aspect, size - 2.0);
    const double cx = std::clamp(size / 2.0 + (u(rng) - 0.5) * 0.08 * size, fw / 2.0 + 1.0, size - fw / 2.0 - 1.0);
    const double cy = std::clamp(size / 2.0 + (u(rng) - 0.5) * 0.08 * size, fh / 2.0 + 1.0, size - fh / 2.0 - 1.0);
    face_box.x = static_cast<int>(std::floor(cx - fw / 2.0));
    face_box.y = static_cast<int>(std::floor(cy - fh / 2.0));
    face_box.w = std::min(static_cast<int>(std::ceil(cx + fw / 2.0)), image_size) - face_box.x;
    face_box.h = std::min(static_cast<int>(std::ceil(cy + fh / 2.0)), image_size) - face_box.y;

    const int canvas_size = image_size * kSupersample;
    const double k = kSupersample;
    cv::Mat canvas(canvas_size, canvas_size, CV_8UC3, rgb(style.background));

    // Face-box coordinates (0..1) to canvas pixels.
    const double left = (cx - fw / 2.0) * k;
    const double top = (cy - fh / 2.0) * k;
    const double W = fw * k;
    const double H = fh * k;
    auto P = [&](double fxu, double fyv) { return fx(left + fxu * W, top + fyv * H); };
    auto thick = [&](double fraction) { return std::max(1, static_cast<int>(std::lround(fraction * H))); };

    const double a4 = au.au4 / 5.0;
    const double a6 = au.au6 / 5.0;
    const double a7 = au.au7 / 5.0;
    const double a9 = au.au9 / 5.0;
    const double a10 = au.au10 / 5.0;
    const bool closed = au.au43 == 1;

    const cv::Scalar dark(45, 32, 30);
    const auto line_aa = cv::LINE_AA;

    // Head and hairline.
    cv::ellipse(canvas, P(0.5, 0.5), fxs(W / 2.0, H / 2.0), 0, 0, 360, rgb(style.skin), cv::FILLED, line_aa, kShift);
    cv::ellipse(canvas, P(0.5, 0.5), fxs(W / 2.0, H / 2.0), 0, 200, 340, cv::Scalar(60, 45, 35), thick(0.06), line_aa,
                kShift);

    // Cheek raiser: raised, shaded cheek pads under the eyes.
    if (au.au6 > 0) {
        cv::Mat overlay = canvas.clone();
        for (double side : {-1.0, 1.0}) {
            cv::ellipse(overlay, P(0.5 + side * (style.eye_dx + 0.03), style.eye_y + 0.15 - 0.05 * a6),
                        fxs(W * 0.13, H * 0.07), 0, 0, 360, cv::Scalar(185, 80, 80), cv::FILLED, line_aa, kShift);
        }
        cv::addWeighted(overlay, 0.25 + 0.6 * a6, canvas, 0.75 - 0.6 * a6, 0.0, canvas);
    }

    // Eyes: aperture shrinks with lid tightening and cheek raising; AU43 closes them.
    const double open = closed ? 0.0 : 0.12 * (1.0 - 0.75 * a7) * (1.0 - 0.3 * a6);
    for (double side : {-1.0, 1.0}) {
        const double ex = 0.5 + side * style.eye_dx;
        if (open < 0.012) {
            cv::line(canvas, P(ex - 0.09, style.eye_y), P(ex + 0.09, style.eye_y), dark, thick(0.025), line_aa, kShift);
        } else {
            cv::ellipse(canvas, P(ex, style.eye_y), fxs(W * 0.1, H * open / 2.0), 0, 0, 360, cv::Scalar(245, 245, 240),
                        cv::FILLED, line_aa, kShift);
            const double iris = std::min(0.045, open / 2.0);
            cv::ellipse(canvas, P(ex, style.eye_y), fxs(H * iris, H * iris), 0, 0, 360, cv::Scalar(40, 60, 90),
                        cv::FILLED, line_aa, kShift);
            cv::ellipse(canvas, P(ex, style.eye_y), fxs(W * 0.1, H * open / 2.0), 0, 0, 360, dark, thick(0.012),
                        line_aa, kShift);
        }
    }

    // Brows: lowered and drawn together with AU4, inner ends dropping the most.
    const double brow_base = style.eye_y - 0.12;
    for (double side : {-1.0, 1.0}) {
        const double inner_x = 0.5 + side * (0.07 - 0.03 * a4);
        const double outer_x = 0.5 + side * (style.eye_dx + 0.12);
        const double inner_y = brow_base + 0.085 * a4;
        const double outer_y = brow_base - 0.01 + 0.03 * a4;
        cv::line(canvas, P(inner_x, inner_y), P(outer_x, outer_y), dark, thick(0.035 + 0.02 * a4), line_aa, kShift);
    }
    if (au.au4 >= 2) {
        for (double off : {-0.02, 0.02}) {
            cv::line(canvas, P(0.5 + off, brow_base + 0.02), P(0.5 + off * 0.7, brow_base + 0.02 + 0.08 * a4),
                     shade(style.skin, 0.55), thick(0.012), line_aa, kShift);
        }
    }

    // Nose, with horizontal wrinkles on the bridge for AU9.
    const double nose_top = style.eye_y + 0.04;
    const double nose_bottom = (style.eye_y + style.mouth_y) / 2.0 + 0.04;
    cv::line(canvas, P(0.5, nose_top), P(0.5, nose_bottom), shade(style.skin, 0.7), thick(0.02), line_aa, kShift);
    cv::line(canvas, P(0.44, nose_bottom), P(0.56, nose_bottom), shade(style.skin, 0.6), thick(0.025), line_aa, kShift);
    const int wrinkles = static_cast<int>(std::lround(a9 * 4.0));
    for (int i = 0; i < wrinkles; ++i) {
        const double y = nose_top + 0.015 + i * 0.03;
        cv::line(canvas, P(0.43, y), P(0.57, y), shade(style.skin, 0.45), thick(0.018), line_aa, kShift);
    }

    // Nasolabial folds deepen with nose wrinkling and lip raising.
    const double fold = std::max(a9, a10);
    if (fold > 0.0) {
        for (double side : {-1.0, 1.0}) {
            cv::line(canvas, P(0.5 + side * 0.09, nose_bottom), P(0.5 + side * 0.2, style.mouth_y + 0.02),
                     shade(style.skin, 1.0 - 0.5 * fold), thick(0.015 + 0.015 * fold), line_aa, kShift);
        }
    }

    // Mouth: the upper lip lifts with AU10, opening a dark gap over the teeth.
    const double gap = 0.015 + 0.1 * a10;
    const double lip_top = style.mouth_y - gap;
    cv::ellipse(canvas, P(0.5, style.mouth_y - gap / 2.0), fxs(W * 0.19, H * (gap / 2.0 + 0.01)), 0, 0, 360,
                cv::Scalar(70, 20, 25), cv::FILLED, line_aa, kShift);
    if (a10 >= 0.4) {
        cv::rectangle(canvas, P(0.4, lip_top + 0.01), P(0.6, lip_top + 0.01 + gap * 0.45), cv::Scalar(235, 235, 225),
                      cv::FILLED, line_aa, kShift);
    }
    cv::ellipse(canvas, P(0.5, lip_top), fxs(W * 0.2, H * 0.025), 0, 180, 360, cv::Scalar(150, 60, 60), thick(0.03),
                line_aa, kShift);
    cv::ellipse(canvas, P(0.5, style.mouth_y + 0.005), fxs(W * 0.19, H * 0.03), 0, 0, 180, cv::Scalar(150, 60, 60),
                thick(0.03), line_aa, kShift);

    cv::Mat small;
    cv::resize(canvas, small, cv::Size(image_size, image_size), 0, 0, cv::INTER_AREA);

    ImageTensor out(image_size, image_size);
    std::normal_distribution<float> noise(0.0f, 0.035f);
    const float gain = static_cast<float>(0.92 + 0.16 * u(rng));
    for (int y = 0; y < image_size; ++y) {
        const auto* row = small.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image_size; ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = row[x][c] / 255.0f * gain + noise(rng);
                out.at(y, x, c) = std::clamp(v, 0.0f, 1.0f);
            }
        }
    }
    return out;
}

dataset::DatasetIndex generate_synthetic(const SyntheticConfig& config, const fs::path& out) {
    config.validate();
    const int n_classes = static_cast<int>(config.class_mix.size());
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw IoError("cannot create dataset directory " + out.string());

    const auto subjects = dataset::numbered_subjects(config.n_subjects);
    const int frame_digits = std::max(4, static_cast<int>(std::to_string(config.frames_per_sequence).size()));
    const int sequence_count = (config.frames_per_subject + config.frames_per_sequence - 1) / config.frames_per_sequence;
    const int sequence_digits = std::max(2, static_cast<int>(std::to_string(sequence_count).size()));

    std::vector<std::vector<int>> cores;
    for (int c = 0; c < n_classes; ++c) cores.push_back(core_scores(c, n_classes));

    std::ostringstream boxes;
    boxes << "subject,sequence,frame,x,y,w,h\n";
    std::vector<dataset::FrameRecord> records;
    for (const auto& subject : subjects) {
        const std::uint64_t subject_seed = derive_seed(config.seed, {fnv1a64(subject)});
        const auto style = make_subject_style(subject_seed);
        std::mt19937_64 rng(derive_seed(subject_seed, {1}));

        std::vector<int> labels;
        const auto counts = allocate(config.class_mix, config.frames_per_subject);
        for (int c = 0; c < n_classes; ++c) labels.insert(labels.end(), static_cast<std::size_t>(counts[c]), c);
        std::shuffle(labels.begin(), labels.end(), rng);

        for (int f = 0; f < config.frames_per_subject; ++f) {
            const auto sequence = padded("seq", f / config.frames_per_sequence + 1, sequence_digits);
            const int frame_number = f % config.frames_per_sequence + 1;
            const auto frame_name = padded("f", frame_number, frame_digits);
            const auto& core = cores[static_cast<std::size_t>(labels[static_cast<std::size_t>(f)])];
            std::uniform_int_distribution<std::size_t> pick(0, core.size() - 1);
            const int pspi = core[pick(rng)];

            dataset::FrameRecord r;
            r.subject_id = subject;
            r.sequence_id = sequence;
            r.frame_index = frame_number;
            r.frame_name = frame_name;
            r.au = sample_action_units(pspi, rng);
            r.pspi = facs::compute_pspi(r.au);
            r.pain_class = facs::quantize_pspi(r.pspi, n_classes);

            BoundingBox box;
            const auto image = render_face(r.au, style, config.image_size, rng, box);
            r.face_box = box;
            r.image_path = dataset::image_file_for(out, subject, sequence, frame_name);
            const auto au_path = dataset::au_file_for(out, subject, sequence, frame_name);
            fs::create_directories(r.image_path.parent_path(), ec);
            fs::create_directories(au_path.parent_path(), ec);
            if (ec) throw IoError("cannot create directories under " + out.string() + ": " + ec.message());
            save_png(image, r.image_path);

            std::ostringstream au_text;
            for (auto unit : facs::kPainActionUnits) {
                if (r.au.get(unit) > 0) au_text << facs::au_code(unit) << ' ' << r.au.get(unit) << '\n';
            }
            write_file_atomic(au_path, au_text.str());
            boxes << subject << ',' << sequence << ',' << frame_name << ',' << box.x << ',' << box.y << ','
                  << box.w << ',' << box.h << '\n';
            records.push_back(std::move(r));
        }
    }
    write_file_atomic(out / dataset::kFaceBoxSidecar, boxes.str());

    nlohmann::json manifest = {{"generator", "painpipe synthetic faces"},
                               {"version", 1},
                               {"n_subjects", config.n_subjects},
                               {"frames_per_subject", config.frames_per_subject},
                               {"frames_per_sequence", config.frames_per_sequence},
                               {"image_size", config.image_size},
                               {"class_mix", config.class_mix},
                               {"seed", config.seed}};
    write_file_atomic(out / "synthetic_config.json", manifest.dump(2) + "\n");

    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return std::tie(a.subject_id, a.sequence_id, a.frame_index, a.frame_name) <
               std::tie(b.subject_id, b.sequence_id, b.frame_index, b.frame_name);
    });
    return dataset::DatasetIndex(std::move(records), n_classes);
}

}  // namespace painpipe::synthetic
