#include "microsplat/error.hpp"

namespace microsplat {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidParameter: return "invalid_parameter";
    case ErrorCode::ShapeMismatch: return "shape_mismatch";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::Format: return "format";
    case ErrorCode::Io: return "io";
    case ErrorCode::Config: return "config";
    case ErrorCode::Training: return "training";
    }
    return "unknown";
}

} // namespace microsplat
