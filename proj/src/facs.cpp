#include "painpipe/facs.hpp"

#include <algorithm>
#include <string>

#include "painpipe/error.hpp"

namespace painpipe::facs {

int au_code(ActionUnit au) {
    switch (au) {
        case ActionUnit::AU4: return 4;
        case ActionUnit::AU6: return 6;
        case ActionUnit::AU7: return 7;
        case ActionUnit::AU9: return 9;
        case ActionUnit::AU10: return 10;
        case ActionUnit::AU43: return 43;
    }
    return -1;
}

std::string_view au_name(ActionUnit au) {
    switch (au) {
        case ActionUnit::AU4: return "AU4";
        case ActionUnit::AU6: return "AU6";
        case ActionUnit::AU7: return "AU7";
        case ActionUnit::AU9: return "AU9";
        case ActionUnit::AU10: return "AU10";
        case ActionUnit::AU43: return "AU43";
    }
    return "?";
}

std::string_view au_descriptor(ActionUnit au) {
    switch (au) {
        case ActionUnit::AU4: return "Brow Lowerer";
        case ActionUnit::AU6: return "Cheek Raiser";
        case ActionUnit::AU7: return "Lid Tightener";
        case ActionUnit::AU9: return "Nose Wrinkler";
        case ActionUnit::AU10: return "Upper Lip Raiser";
        case ActionUnit::AU43: return "Eyes Closed";
    }
    return "?";
}

std::optional<ActionUnit> au_from_code(int code) {
    for (auto au : kPainActionUnits) {
        if (au_code(au) == code) return au;
    }
    return std::nullopt;
}

int max_intensity(ActionUnit au) { return au == ActionUnit::AU43 ? 1 : 5; }

int ActionUnitVector::get(ActionUnit au) const {
    switch (au) {
        case ActionUnit::AU4: return au4;
        case ActionUnit::AU6: return au6;
        case ActionUnit::AU7: return au7;
        case ActionUnit::AU9: return au9;
        case ActionUnit::AU10: return au10;
        case ActionUnit::AU43: return au43;
    }
    return 0;
}

void ActionUnitVector::set(ActionUnit au, int intensity) {
    switch (au) {
        case ActionUnit::AU4: au4 = intensity; break;
        case ActionUnit::AU6: au6 = intensity; break;
        case ActionUnit::AU7: au7 = intensity; break;
        case ActionUnit::AU9: au9 = intensity; break;
        case ActionUnit::AU10: au10 = intensity; break;
        case ActionUnit::AU43: au43 = intensity; break;
    }
}

void ActionUnitVector::validate() const {
    for (auto au : kPainActionUnits) {
        const int v = get(au);
        if (v < 0 || v > max_intensity(au)) {
            throw ValidationError(std::string(au_name(au)) + " intensity " + std::to_string(v) +
                                  " outside [0, " + std::to_string(max_intensity(au)) + "]");
        }
    }
}

PainScore compute_pspi(const ActionUnitVector& au) {
    au.validate();
    return PainScore{au.au4 + std::max(au.au6, au.au7) + std::max(au.au9, au.au10) + au.au43};
}

PainClass quantize_pspi(PainScore score, int n_classes) {
    if (n_classes < 2) {
        throw ValidationError("n_classes must be >= 2, got " + std::to_string(n_classes));
    }
    if (score.value < 0 || score.value > kMaxPspi) {
        throw ValidationError("PSPI score " + std::to_string(score.value) + " outside [0, 16]");
    }
    if (n_classes == kDefaultClassCount) return PainClass{score.value, n_classes};
    // Integer form of floor(value / (17 / n)) avoids edge rounding.
    const int index = std::min(score.value * n_classes / kDefaultClassCount, n_classes - 1);
    return PainClass{index, n_classes};
}

ClassBand class_band(int class_index, int n_classes) {
    if (n_classes < 2 || class_index < 0 || class_index >= n_classes) {
        throw ValidationError("class " + std::to_string(class_index) + " invalid for " +
                              std::to_string(n_classes) + " classes");
    }
    const double width = static_cast<double>(kDefaultClassCount) / n_classes;
    return ClassBand{class_index * width, (class_index + 1) * width};
}

}  // namespace painpipe::facs
