#pragma once

#include <cmath>
#include <string>

#include "bip/errors.hpp"

namespace bip {

enum class LrSchedule { cosine, step };

inline LrSchedule parse_schedule(const std::string& s) {
    if (s == "cosine") return LrSchedule::cosine;
    if (s == "step") return LrSchedule::step;
    throw config_error("unknown lr schedule '" + s + "' (cosine|step)");
}

inline std::string to_string(LrSchedule s) { return s == LrSchedule::cosine ? "cosine" : "step"; }

inline double cosine_lr(double lr0, int epoch, int total_epochs) {
    return lr0 * 0.5 * (1.0 + std::cos(3.14159265358979323846 * epoch / total_epochs));
}

// x0.1 at the 50% and 75% marks
inline double step_lr(double lr0, int epoch, int total_epochs) {
    double lr = lr0;
    if (epoch >= total_epochs / 2) lr *= 0.1;
    if (epoch >= (3 * total_epochs) / 4) lr *= 0.1;
    return lr;
}

inline double scheduled_lr(LrSchedule s, double lr0, int epoch, int total_epochs) {
    return s == LrSchedule::cosine ? cosine_lr(lr0, epoch, total_epochs) : step_lr(lr0, epoch, total_epochs);
}

}  // namespace bip
