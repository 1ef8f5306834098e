#include <doctest.h>

#include <qsim/factories.hpp>
#include <qsim/qobj.hpp>

#include "test_helpers.hpp"

using namespace qsim;
using test::kron_oracle;
using test::max_abs;
using test::random_hermitian;
using test::random_operator;

TEST_SUITE_BEGIN("qobj");

TEST_CASE("tensor: identity case and basis bookkeeping") {
  QuantumObject id6 = tensor(qeye(2), qeye(3));
  CHECK(id6.dims() == Dims{2, 3});
  CHECK(max_abs_diff(id6, qeye(Dims{2, 3})) == 0.0);

  QuantumObject k = tensor(fock(2, 0), fock(2, 1));
  CHECK(k.dims() == Dims{2, 2});
  CHECK(k.coeff(1, 0) == Complex(1.0));
  CHECK(std::abs(k.dense_matrix().norm() - 1.0) < 1e-15);
}

TEST_CASE("tensor matches quadruple-loop Kronecker oracle") {
  QuantumObject a = random_operator(3, 11);
  QuantumObject b = random_operator(2, 12);
  DenseMatrix expected = kron_oracle(a.dense_matrix(), b.dense_matrix());
  CHECK(max_abs(tensor(a, b).dense_matrix() - expected) < 1e-14);
  // sparse path gives the same numbers
  CHECK(max_abs(tensor(a.to_sparse(), b.to_sparse()).dense_matrix() - expected) < 1e-14);
}

TEST_CASE("tensor associativity") {
  QuantumObject a = random_operator(2, 1), b = random_operator(3, 2), c = random_operator(2, 3);
  CHECK(max_abs(tensor(tensor(a, b), c).dense_matrix() -
                tensor(a, tensor(b, c)).dense_matrix()) < 1e-14);
}

TEST_CASE("tensor kind mismatch") {
  CHECK_THROWS_AS(tensor(fock(2, 0), qeye(2)), Error);
  try {
    tensor(fock(2, 0), qeye(2));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::KindMismatch);
  }
}

TEST_CASE("ptrace: product state factorizes") {
  QuantumObject rho_a = rand_dm(3, 21);
  QuantumObject rho_b = rand_dm(4, 22);
  QuantumObject joint = tensor(rho_a, rho_b);
  CHECK(max_abs_diff(ptrace(joint, {0}), rho_a) < 1e-13);
  CHECK(max_abs_diff(ptrace(joint, {1}), rho_b) < 1e-13);
}

TEST_CASE("ptrace: Bell state reduces to maximally mixed") {
  QuantumObject bell =
      (tensor(fock(2, 0), fock(2, 0)) + tensor(fock(2, 1), fock(2, 1))) / std::sqrt(2.0);
  QuantumObject reduced = ptrace(bell, {0});
  CHECK(max_abs_diff(reduced, maximally_mixed_dm(2)) < 1e-14);
}

TEST_CASE("ptrace matches index-summation oracle on two qutrits") {
  QuantumObject rho = rand_dm(9, 31);
  QuantumObject rho9(rho.dense_matrix(), Kind::Operator, Dims{3, 3});
  QuantumObject reduced = ptrace(rho9, {0});
  DenseMatrix expected = DenseMatrix::Zero(3, 3);
  const DenseMatrix& m = rho9.dense_ref();
  for (int i = 0; i < 3; ++i)
    for (int ip = 0; ip < 3; ++ip)
      for (int j = 0; j < 3; ++j) expected(i, ip) += m(i * 3 + j, ip * 3 + j);
  CHECK(max_abs(reduced.dense_matrix() - expected) < 1e-14);
  // trace preserved
  CHECK(std::abs(tr(reduced) - tr(rho9)) < 1e-12);
  // sparse input agrees with dense input
  CHECK(max_abs_diff(ptrace(rho9.to_sparse(), {0}), reduced) < 1e-13);
}

TEST_CASE("ptrace over all subsystems is the full trace") {
  QuantumObject rho = rand_dm(8, 44);
  QuantumObject rho3(rho.dense_matrix(), Kind::Operator, Dims{2, 2, 2});
  QuantumObject scalar = ptrace(rho3, std::initializer_list<int>{});
  CHECK(scalar.dim() == 1);
  CHECK(std::abs(scalar.coeff(0, 0) - tr(rho3)) < 1e-12);
}

TEST_CASE("ptrace rejects bad subsystems") {
  QuantumObject rho = tensor(rand_dm(2, 1), rand_dm(2, 2));
  CHECK_THROWS_AS(ptrace(rho, {1, 1}), Error);
  CHECK_THROWS_AS(ptrace(rho, {2}), Error);
}

TEST_CASE("dag: involution, definition, oracle") {
  QuantumObject a = random_operator(5, 51);
  CHECK(max_abs_diff(dag(dag(a)), a) == 0.0);
  CHECK(max_abs_diff(dag(destroy(6)), create(6)) == 0.0);

  DenseMatrix expected(5, 5);
  const DenseMatrix& m = a.dense_ref();
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) expected(i, j) = std::conj(m(j, i));
  CHECK(max_abs(dag(a).dense_matrix() - expected) == 0.0);

  CHECK(dag(fock(3, 1)).kind() == Kind::Bra);
  CHECK(dag(dag(fock(3, 1))).kind() == Kind::Ket);
}

TEST_CASE("dag anti-homomorphism on random 8x8") {
  QuantumObject a = random_operator(8, 61), b = random_operator(8, 62);
  CHECK(max_abs_diff(dag(a * b), dag(b) * dag(a)) < 1e-13);
}

TEST_CASE("expect: number eigenstate, coherent amplitude, trace oracle") {
  CHECK(std::abs(expect(num(10), fock(10, 3)) - 3.0) < 1e-14);
  CHECK(std::abs(expect(destroy(30), coherent(30, 2.0)) - 2.0) < 1e-8);

  QuantumObject op = random_operator(5, 71);
  QuantumObject rho = rand_dm(5, 72);
  Complex oracle = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) oracle += op.coeff(i, j) * rho.coeff(j, i);
  CHECK(std::abs(expect(op, rho) - oracle) < 1e-13);
  CHECK(std::abs(expect(op.to_sparse(), rho) - oracle) < 1e-13);

  // Hermitian op on a ket: imaginary part vanishes
  QuantumObject h = random_hermitian(6, 73);
  Complex v = expect(h, rand_ket(6, 74));
  CHECK(std::abs(v.imag()) < 1e-10 * (1 + std::abs(v)));

  CHECK_THROWS_AS(expect(num(4), fock(5, 0)), Error);
}

TEST_CASE("arithmetic: number operator, doubling, distributivity") {
  QuantumObject a = destroy(4);
  DenseMatrix n = (dag(a) * a).dense_matrix();
  for (int k = 0; k < 4; ++k) CHECK(std::abs(n(k, k) - static_cast<double>(k)) < 1e-15);

  CHECK(max_abs_diff(sigmax() + sigmax(), 2.0 * sigmax()) == 0.0);

  QuantumObject x = random_operator(6, 81), y = random_operator(6, 82), z = random_operator(6, 83);
  CHECK(max_abs_diff(x * (y + z), x * y + x * z) < 1e-13);
  // sparse vs dense path equality
  QuantumObject sx = x.to_sparse(), sy = y.to_sparse(), sz = z.to_sparse();
  CHECK(max_abs_diff(sx * (sy + sz), x * (y + z)) < 1e-13);
}

TEST_CASE("arithmetic kind and dims errors") {
  CHECK_THROWS_AS(destroy(3) + destroy(4), Error);
  CHECK_THROWS_AS(fock(3, 0) * fock(3, 0), Error);  // Ket*Ket undefined
  CHECK(std::abs((dag(fock(3, 1)) * fock(3, 1)).coeff(0, 0) - Complex(1.0)) < 1e-15);
}

TEST_CASE("expm: zero matrix, inverse pair, Taylor oracle") {
  QuantumObject zero(DenseMatrix::Zero(5, 5), Kind::Operator, {5});
  CHECK(max_abs_diff(expm(zero), qeye(5)) == 0.0);

  const double half_pi = std::numbers::pi / 2.0;
  QuantumObject u = expm(Complex(0, 1) * half_pi * sigmax());
  QuantumObject v = expm(Complex(0, -1) * half_pi * sigmax());
  CHECK(max_abs_diff(u * v, qeye(2)) < 1e-12);

  QuantumObject g = random_operator(6, 91);
  // Taylor oracle: 60 terms on the input scaled by 2^-8, squared back up.
  DenseMatrix a = g.dense_matrix() / 256.0;
  DenseMatrix term = DenseMatrix::Identity(6, 6), sum = term;
  for (int k = 1; k <= 60; ++k) {
    term = (term * a) / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < 8; ++s) sum = sum * sum;
  CHECK(max_abs(expm(g).dense_matrix() - sum) < 1e-10);
}

TEST_CASE("expm unitarity for anti-Hermitian generators up to dim 64") {
  for (int n : {4, 16, 64}) {
    QuantumObject h = random_hermitian(n, 100 + static_cast<std::uint64_t>(n));
    QuantumObject u = expm(Complex(0, 1) * h);
    DenseMatrix gram = u.dense_matrix() * u.dense_matrix().adjoint();
    CHECK((gram - DenseMatrix::Identity(n, n)).norm() < 1e-10);
  }
}

TEST_CASE("eigen: sigma_z spectrum, Hermitian path, residuals") {
  auto dec = eigenstates(sigmaz());
  CHECK(dec.values[0] == Complex(-1.0));
  CHECK(dec.values[1] == Complex(1.0));

  QuantumObject h = random_hermitian(8, 111);
  auto hd = eigenstates(h);
  for (int i = 0; i < 8; ++i) {
    CHECK(std::abs(hd.values[i].imag()) < 1e-12);
    Vector resid = h.dense_matrix() * hd.vectors.col(i) - hd.values[i] * hd.vectors.col(i);
    CHECK(resid.norm() < 1e-12 * (1 + std::abs(hd.values[i])));
  }
  for (int i = 1; i < 8; ++i) CHECK(hd.values[i - 1].real() <= hd.values[i].real());

  QuantumObject g = random_operator(7, 112);
  auto gd = eigenstates(g);
  for (int i = 0; i < 7; ++i) {
    Vector resid = g.dense_matrix() * gd.vectors.col(i) - gd.values[i] * gd.vectors.col(i);
    CHECK(resid.norm() < 1e-10 * (1 + std::abs(gd.values[i])));
  }
}

TEST_CASE("purity and norms") {
  CHECK(purity(fock_dm(5, 2)) == 1.0);
  CHECK(std::abs(purity(maximally_mixed_dm(4)) - 0.25) < 1e-15);
  CHECK(std::abs(norm(rand_ket(16, 5)) - 1.0) < 1e-13);
  // trace norm of a density matrix is its trace
  CHECK(std::abs(norm(rand_dm(6, 6)) - 1.0) < 1e-12);
  QuantumObject k = 2.0 * fock(4, 1);
  CHECK(std::abs(norm(normalize(k)) - 1.0) < 1e-15);
}

TEST_CASE("shape invariants are enforced") {
  CHECK_THROWS_AS(QuantumObject(DenseMatrix::Zero(3, 2), Kind::Operator, {3}), Error);
  CHECK_THROWS_AS(QuantumObject(DenseMatrix::Zero(3, 1), Kind::Ket, {2}), Error);
  CHECK_THROWS_AS(QuantumObject(DenseMatrix::Zero(3, 1), Kind::Ket, Dims{}), Error);
  CHECK_THROWS_AS(QuantumObject(DenseMatrix::Zero(2, 1), Kind::Ket, {2, 0}), Error);
  QuantumObject sup(DenseMatrix::Zero(9, 9), Kind::SuperOperator, {3});
  CHECK(sup.dim() == 3);
}

TEST_SUITE_END();
