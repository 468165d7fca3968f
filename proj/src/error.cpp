#include "dbncls/error.hpp"

namespace dbncls {

std::string_view to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::io: return "io";
        case ErrorCategory::format: return "format";
        case ErrorCategory::dimension: return "dimension";
        case ErrorCategory::guard: return "guard";
        case ErrorCategory::prerequisite: return "prerequisite";
        case ErrorCategory::internal: return "internal";
    }
    return "internal";
}

} // namespace dbncls
