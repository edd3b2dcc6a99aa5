#pragma once

#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "revassist/log.hpp"
#include "revassist/text_util.hpp"

namespace revassist::testing {

inline const std::string kFixtures = REVASSIST_FIXTURES;
inline const std::string kConfigDir = REVASSIST_CONFIG_DIR;

inline std::string fixture(const std::string& rel) { return text::read_file(kFixtures + "/" + rel); }

// Collects warnings for the lifetime of the object.
struct WarningCapture {
    std::mutex mutex;
    std::vector<std::string> messages;
    WarningSink previous;

    WarningCapture() {
        previous = set_warning_sink([this](std::string_view m) {
            std::lock_guard lock(mutex);
            messages.emplace_back(m);
        });
    }
    ~WarningCapture() { set_warning_sink(previous); }

    bool any_contains(std::string_view needle) {
        std::lock_guard lock(mutex);
        for (const auto& m : messages) {
            if (m.find(needle) != std::string::npos) return true;
        }
        return false;
    }
};

}  // namespace revassist::testing
