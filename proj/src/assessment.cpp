#include "edurisk/assessment.hpp"

#include "edurisk/error.hpp"

namespace edurisk {

std::string_view to_string(Level level) {
    switch (level) {
        case Level::None: return "None";
        case Level::Low: return "Low";
        case Level::Medium: return "Medium";
        case Level::Serious: return "Serious";
    }
    return "None";
}

std::optional<Level> parse_level(std::string_view name) {
    for (auto l : kAllLevels)
        if (to_string(l) == name) return l;
    return std::nullopt;
}

Level level_from_total_risk(int total_risk) {
    if (total_risk < 0 || total_risk > 3) throw DataError("TOTAL_RISK " + std::to_string(total_risk) + " outside 0..3");
    return static_cast<Level>(total_risk);
}

}  // namespace edurisk
