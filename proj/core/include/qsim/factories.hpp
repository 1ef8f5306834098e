#pragma once

#include <cstdint>
#include <utility>

#include "qsim/qobj.hpp"

namespace qsim {

// Bosonic mode operators on an N-level truncated Fock space.
QuantumObject destroy(int n);
QuantumObject create(int n);
QuantumObject num(int n);
QuantumObject qeye(int n);
QuantumObject qeye(const Dims& dims);
QuantumObject position(int n);  // (a + a†)/sqrt(2)
QuantumObject momentum(int n);  // i (a† - a)/sqrt(2)

// Pauli matrices and ladder operators for a two-level system.
QuantumObject sigmax();
QuantumObject sigmay();
QuantumObject sigmaz();
QuantumObject sigmap();
QuantumObject sigmam();

// Canonical states.
QuantumObject basis(int n, int i);
QuantumObject fock(int n, int i);
QuantumObject fock_dm(int n, int i);
QuantumObject projection(int n, int i, int j);  // |i><j|
QuantumObject thermal_dm(int n, double nbar);
QuantumObject maximally_mixed_dm(int n);

/// Coherent state from the normalized truncated expansion in Fock space
/// (renormalized after truncation).
QuantumObject coherent(int n, Complex alpha);
QuantumObject coherent_dm(int n, Complex alpha);

/// Displacement operator D(alpha) = exp(alpha a† - alpha* a).
QuantumObject displace(int n, Complex alpha);

// Seed-deterministic random objects.
QuantumObject rand_ket(int n, std::uint64_t seed);
QuantumObject rand_dm(int n, std::uint64_t seed);
QuantumObject rand_unitary(int n, std::uint64_t seed);

/// I ⊗ ... ⊗ op ⊗ ... ⊗ I with `op` at position `site` of `dims`.
QuantumObject embed_site(const Dims& dims, int site, const QuantumObject& op);

/// Dissipative transverse-field Ising model on an nx-by-ny rectangular
/// lattice (sites ordered row-major, site = y*nx + x):
///   H = Jz sum_<ij> sz_i sz_j + hx sum_i sx_i,   c_i = sqrt(gamma) sm_i.
/// Periodic boundaries add wrap bonds; each directed sweep bond counts as
/// its own term, so a 2x2 periodic lattice has 8 bond terms.
std::pair<QuantumObject, std::vector<QuantumObject>> ising_model(
    int nx, int ny, double jz, double hx, double gamma, bool periodic);

}  // namespace qsim
