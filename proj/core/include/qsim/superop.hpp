#pragma once

#include <span>

#include "qsim/qobj.hpp"

namespace qsim {

// Vectorization uses column stacking throughout: mat2vec stacks columns top
// to bottom, so vec(A X B) = (B^T ⊗ A) vec(X).

QuantumObject mat2vec(const QuantumObject& rho);
QuantumObject vec2mat(const QuantumObject& v);

/// Left multiplication superoperator: spre(A) vec(X) = vec(A X).
QuantumObject spre(const QuantumObject& a);

/// Right multiplication superoperator: spost(B) vec(X) = vec(X B).
QuantumObject spost(const QuantumObject& b);

/// sprepost(A, B) vec(X) = vec(A X B).
QuantumObject sprepost(const QuantumObject& a, const QuantumObject& b);

/// D[C] rho = C rho C† - (C†C rho + rho C†C)/2 as a superoperator.
QuantumObject lindblad_dissipator(const QuantumObject& c);

/// L = -i(spre(H) - spost(H)) + sum_k D[C_k].
QuantumObject liouvillian(const QuantumObject& h, std::span<const QuantumObject> c_ops = {});

}  // namespace qsim
