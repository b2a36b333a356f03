#pragma once

#include <string>
#include <string_view>

#include "sdp/errors.hpp"

namespace sdp {

/// Generative engines: the few-step shortcut flow model and the DDIM baseline.
enum class Engine { kShortcut, kDdim };

inline std::string_view to_string(Engine e) { return e == Engine::kShortcut ? "shortcut" : "ddim"; }

inline Engine parse_engine(std::string_view s) {
  if (s == "shortcut") return Engine::kShortcut;
  if (s == "ddim") return Engine::kDdim;
  throw UsageError("unknown engine '" + std::string(s) + "'");
}

}  // namespace sdp
