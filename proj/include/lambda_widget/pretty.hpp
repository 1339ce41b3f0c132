#pragma once

#include <string>

#include "lambda_widget/syntax.hpp"

namespace lw {

// Printers emit the Unicode surface syntax. Output of `show` on a term parses
// back to an alpha-equivalent term; shadowed binders are renamed.
std::string show(const IndexTerm& i);
std::string show(const LinTypePtr& t);
std::string show(const CartTypePtr& t);
std::string show(const DeclaredType& t);
std::string show(const TermPtr& t);
std::string show(const PatternPtr& p);
std::string show(const SourceProgram& p);

}  // namespace lw
