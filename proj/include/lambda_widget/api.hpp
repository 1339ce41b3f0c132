#pragma once

#include <string_view>

#include "lambda_widget/syntax.hpp"

namespace lw {

/// Declared type of a Widget API builtin, or nullptr. Free capitalised atoms
/// (A in `out`/`into`) are schematic.
LinTypePtr builtin_type(std::string_view name);

/// Number of leading ∀ binders.
int leading_foralls(const LinTypePtr& t);

}  // namespace lw
