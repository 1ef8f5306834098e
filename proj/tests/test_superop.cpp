#include <doctest.h>

#include <qsim/factories.hpp>
#include <qsim/superop.hpp>

#include "test_helpers.hpp"

using namespace qsim;
using test::max_abs;
using test::random_operator;
using test::vec_oracle;

namespace {

// Direct operator-algebra evaluation of D[C] rho.
QuantumObject dissipator_direct(const QuantumObject& c, const QuantumObject& rho) {
  QuantumObject cd = dag(c);
  QuantumObject cdc = cd * c;
  return c * rho * cd - 0.5 * (cdc * rho + rho * cdc);
}

// Direct operator-algebra evaluation of L rho = -i[H, rho] + sum_k D[C_k] rho.
QuantumObject liouvillian_direct(const QuantumObject& h, std::span<const QuantumObject> c_ops,
                                 const QuantumObject& rho) {
  QuantumObject out = Complex(0, -1) * (h * rho - rho * h);
  for (const auto& c : c_ops) out = out + dissipator_direct(c, rho);
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("superop");

TEST_CASE("mat2vec column stacking convention") {
  DenseMatrix m(2, 2);
  m << Complex(1), Complex(3), Complex(2), Complex(4);
  QuantumObject q(m, Kind::Operator, {2});
  Vector v = mat2vec(q).dense_matrix().col(0);
  CHECK(v[0] == Complex(1));
  CHECK(v[1] == Complex(2));
  CHECK(v[2] == Complex(3));
  CHECK(v[3] == Complex(4));
  CHECK(max_abs_diff(vec2mat(mat2vec(q)), q) == 0.0);
}

TEST_CASE("vec identity: mat2vec(A X B) == (B^T kron A) vec(X)") {
  QuantumObject a = random_operator(4, 1), x = random_operator(4, 2), b = random_operator(4, 3);
  Vector lhs = mat2vec(a * x * b).dense_matrix().col(0);
  DenseMatrix bt_kron_a =
      test::kron_oracle(b.dense_matrix().transpose(), a.dense_matrix());
  Vector rhs = bt_kron_a * vec_oracle(x.dense_matrix());
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("spre / spost / sprepost against direct products") {
  QuantumObject a = random_operator(3, 11), b = random_operator(3, 12),
                x = random_operator(3, 13);
  CHECK(max_abs_diff(vec2mat(spre(a) * mat2vec(x)), a * x) < 1e-13);
  CHECK(max_abs_diff(vec2mat(spost(b) * mat2vec(x)), x * b) < 1e-13);
  CHECK(max_abs_diff(vec2mat(sprepost(a, b) * mat2vec(x)), a * x * b) < 1e-13);
  CHECK(max_abs_diff(sprepost(a, b), spre(a) * spost(b)) < 1e-13);

  QuantumObject id = qeye(3);
  CHECK(max_abs_diff(spre(id), spost(id)) == 0.0);
  CHECK(max_abs(spre(id).dense_matrix() - DenseMatrix::Identity(9, 9)) == 0.0);
}

TEST_CASE("lindblad dissipator: zero operator, two-level decay, trace annihilation") {
  QuantumObject zero(DenseMatrix::Zero(3, 3), Kind::Operator, {3});
  CHECK(max_abs(lindblad_dissipator(zero).dense_matrix()) == 0.0);

  // C = sqrt(gamma) sigma_m on |e><e|: D[C]rho = gamma(|g><g| - |e><e|)
  double gamma = 0.37;
  QuantumObject c = std::sqrt(gamma) * sigmam();
  QuantumObject rho_e = fock_dm(2, 0);  // excited state projector
  QuantumObject out = vec2mat(lindblad_dissipator(c) * mat2vec(rho_e));
  QuantumObject expected = gamma * (fock_dm(2, 1) - fock_dm(2, 0));
  CHECK(max_abs_diff(out, expected) < 1e-14);

  QuantumObject cr = random_operator(4, 21), rho = rand_dm(4, 22);
  CHECK(std::abs(tr(vec2mat(lindblad_dissipator(cr) * mat2vec(rho)))) < 1e-13);
}

TEST_CASE("liouvillian: unitary generator has imaginary spectrum") {
  QuantumObject h = test::random_hermitian(3, 31);
  QuantumObject l = liouvillian(h);
  auto values = eigenstates(l).values;
  for (long i = 0; i < values.size(); ++i) CHECK(std::abs(values[i].real()) < 1e-10);
}

TEST_CASE("liouvillian: trace functional is a left null vector") {
  QuantumObject h = test::random_hermitian(4, 41);
  std::vector<QuantumObject> c_ops{random_operator(4, 42), random_operator(4, 43)};
  QuantumObject l = liouvillian(h, c_ops);
  Vector tr_row = vec_oracle(DenseMatrix::Identity(4, 4));
  Vector lhs = l.dense_matrix().transpose() * tr_row;  // row vector times L
  CHECK(lhs.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("damped two-level Liouvillian spectrum {0, -g/2, -g/2, -g}") {
  double gamma = 0.83;
  std::vector<QuantumObject> c_ops{std::sqrt(gamma) * sigmam()};
  QuantumObject zero_h(DenseMatrix::Zero(2, 2), Kind::Operator, {2});
  QuantumObject l = liouvillian(zero_h, c_ops);
  auto values = eigenstates(l).values;  // sorted by real part ascending
  CHECK(std::abs(values[0] - Complex(-gamma)) < 1e-12);
  CHECK(std::abs(values[1] - Complex(-gamma / 2)) < 1e-12);
  CHECK(std::abs(values[2] - Complex(-gamma / 2)) < 1e-12);
  CHECK(std::abs(values[3]) < 1e-12);
}

TEST_CASE("brute-force equivalence on random instances up to d = 6") {
  for (int d : {2, 3, 4, 5, 6}) {
    std::uint64_t s = 100 + static_cast<std::uint64_t>(d);
    QuantumObject h = test::random_hermitian(d, s);
    std::vector<QuantumObject> c_ops{random_operator(d, s + 1), random_operator(d, s + 2)};
    QuantumObject rho = rand_dm(d, s + 3);
    QuantumObject l = liouvillian(h, c_ops);
    QuantumObject via_superop = vec2mat(l * mat2vec(rho));
    QuantumObject direct = liouvillian_direct(h, c_ops, rho);
    CHECK(max_abs_diff(via_superop, direct) < 1e-12);

    // Hermiticity preservation through the superoperator
    QuantumObject herm_in = test::random_hermitian(d, s + 4);
    QuantumObject out = vec2mat(l * mat2vec(herm_in));
    CHECK(max_abs_diff(out, dag(out)) < 1e-12);
  }
}

TEST_CASE("mat2vec / vec2mat kind errors") {
  CHECK_THROWS_AS(mat2vec(fock(3, 0)), Error);
  CHECK_THROWS_AS(vec2mat(fock(4, 0)), Error);
}

TEST_SUITE_END();
