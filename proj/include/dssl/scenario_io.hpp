#pragma once

#include <string>

#include "dssl/scenario.hpp"

namespace dssl {

// Loads a versioned scenario document. Channel banks come in three forms:
// explicit per-pair chains, Gilbert-Elliott parameter vectors, or a fading
// family quantized into an estimated chain. Throws ParseError with the
// offending field on malformed input.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<string>");

} // namespace dssl
