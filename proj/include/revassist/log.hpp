#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace revassist {

using WarningSink = std::function<void(std::string_view)>;

// Installs the process-wide warning sink and returns the previous one.
// The default sink writes "warning: <msg>" to standard error.
WarningSink set_warning_sink(WarningSink sink);

void warn(std::string_view message);

}  // namespace revassist
