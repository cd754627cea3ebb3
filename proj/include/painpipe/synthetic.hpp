#pragma once

// Procedural stand-in for a FACS-coded face video dataset. Every frame is a
// drawn face whose geometry follows its action-unit intensities, written in
// the same directory layout that `ingest` reads.

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "painpipe/dataset.hpp"
#include "painpipe/facs.hpp"
#include "painpipe/image.hpp"

namespace painpipe::synthetic {

struct SyntheticConfig {
    int n_subjects = 10;
    int frames_per_subject = 100;
    int frames_per_sequence = 50;
    int image_size = 48;
    /// Target share of each pain band; its length is the number of bands.
    std::vector<double> class_mix{0.7, 0.2, 0.1};
    std::uint64_t seed = 0;

    void validate() const;
};

/// PSPI values the generator draws for a band: the band's integers, minus
/// those within a quarter band-width of a boundary shared with another band.
/// Falls back to every integer of the band when that leaves nothing.
std::vector<int> core_scores(int class_index, int n_classes);

/// Uniform draw over AU vectors whose PSPI equals `pspi`.
facs::ActionUnitVector sample_action_units(int pspi, std::mt19937_64& rng);

/// Per-subject appearance: skin tone, face proportions, background.
struct SubjectStyle {
    float skin[3];
    float background[3];
    double aspect;       // face height / width
    double eye_y;        // in face-box units
    double eye_dx;
    double mouth_y;
    double face_scale;   // face width as a fraction of the image
};

SubjectStyle make_subject_style(std::uint64_t subject_seed);

/// Renders one frame and reports where the face oval was drawn.
ImageTensor render_face(const facs::ActionUnitVector& au, const SubjectStyle& style, int image_size,
                        std::mt19937_64& rng, BoundingBox& face_box);

/// Writes Images/, Frame_Labels/FACS/ and face_boxes.csv under `out` and
/// returns the index of intended labels (class count = class_mix size).
/// Throws IoError when `out` cannot be written.
dataset::DatasetIndex generate_synthetic(const SyntheticConfig& config, const std::filesystem::path& out);

}  // namespace painpipe::synthetic
