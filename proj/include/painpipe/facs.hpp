#pragma once

// Facial Action Coding System semantics for the six action units that make up
// the Prkachin-Solomon pain intensity (PSPI) score.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace painpipe::facs {

enum class ActionUnit : std::uint8_t { AU4, AU6, AU7, AU9, AU10, AU43 };

inline constexpr std::array<ActionUnit, 6> kPainActionUnits = {
    ActionUnit::AU4, ActionUnit::AU6, ActionUnit::AU7,
    ActionUnit::AU9, ActionUnit::AU10, ActionUnit::AU43};

/// FACS numeric code, e.g. 43 for AU43.
int au_code(ActionUnit au);
std::string_view au_name(ActionUnit au);        // "AU4"
std::string_view au_descriptor(ActionUnit au);  // "Brow Lowerer"
std::optional<ActionUnit> au_from_code(int code);

/// Largest admissible intensity: 5 for graded units (A-E mapped to 1-5), 1 for AU43.
int max_intensity(ActionUnit au);

inline constexpr int kMaxPspi = 16;
inline constexpr int kDefaultClassCount = kMaxPspi + 1;

/// Integer intensities of the six pain-related action units.
struct ActionUnitVector {
    int au4 = 0;   // brow lowerer, 0-5
    int au6 = 0;   // cheek raiser, 0-5
    int au7 = 0;   // lid tightener, 0-5
    int au9 = 0;   // nose wrinkler, 0-5
    int au10 = 0;  // upper lip raiser, 0-5
    int au43 = 0;  // eyes closed, 0/1

    int get(ActionUnit au) const;
    void set(ActionUnit au, int intensity);

    /// Throws ValidationError naming the first offending unit.
    void validate() const;

    bool operator==(const ActionUnitVector&) const = default;
};

/// PSPI value in [0, 16].
struct PainScore {
    int value = 0;
    bool operator==(const PainScore&) const = default;
};

struct PainClass {
    int index = 0;
    int n_classes = kDefaultClassCount;
    bool operator==(const PainClass&) const = default;
};

/// AU4 + max(AU6, AU7) + max(AU9, AU10) + AU43.
PainScore compute_pspi(const ActionUnitVector& au);

/// Maps a PSPI score onto one of n_classes contiguous bins over [0, 16].
/// With 17 classes this is the identity; otherwise bin edges sit at
/// multiples of 17 / n_classes and the last bin is closed.
PainClass quantize_pspi(PainScore score, int n_classes = kDefaultClassCount);

/// Half-open score interval [lower, upper) covered by a class; the last
/// class also contains its upper edge.
struct ClassBand {
    double lower = 0.0;
    double upper = 0.0;
};
ClassBand class_band(int class_index, int n_classes);

}  // namespace painpipe::facs
