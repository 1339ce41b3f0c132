#pragma once

#include <map>
#include <string>

#include "lambda_widget/syntax.hpp"

namespace lw {

/// Simultaneous index substitution, keyed by binder id.
using IndexSubst = std::map<int, IndexTerm>;

IndexTerm subst_index(const IndexSubst& z, const IndexTerm& i);
LinTypePtr subst_index(const IndexSubst& z, const LinTypePtr& t);
CartTypePtr subst_index(const IndexSubst& z, const CartTypePtr& t);
TermPtr subst_index(const IndexSubst& z, const TermPtr& t);

/// [α := r]A for the ν-bound variable with the given id.
LinTypePtr subst_type_var(const LinTypePtr& t, int var_id, const LinTypePtr& r);

/// Instantiates free atoms (schematic type variables) by name.
LinTypePtr subst_atoms(const LinTypePtr& t, const std::map<std::string, LinTypePtr>& m);
CartTypePtr subst_atoms(const CartTypePtr& t, const std::map<std::string, LinTypePtr>& m);

enum class TermSubstKind { CartToCart, CartToLin, LinToLin };

/// [x := s]t, capture-avoiding. The kind names which judgment x and t live in;
/// the operation itself is the same for all three.
TermPtr subst_term(TermSubstKind kind, const Name& x, const TermPtr& s, const TermPtr& t);

}  // namespace lw
