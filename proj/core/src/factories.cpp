#include "qsim/factories.hpp"

#include <cmath>

#include "qsim/rng.hpp"

namespace qsim {

namespace {

SparseMatrix from_triplets(long rows, long cols, std::vector<Eigen::Triplet<Complex>> trips) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

void require_mode_dim(int n) {
  require(n >= 1, ErrorCode::InvalidDimension, "mode dimension must be >= 1");
}

}  // namespace

QuantumObject destroy(int n) {
  require_mode_dim(n);
  std::vector<Eigen::Triplet<Complex>> trips;
  for (int k = 1; k < n; ++k) trips.emplace_back(k - 1, k, std::sqrt(static_cast<double>(k)));
  return QuantumObject(from_triplets(n, n, std::move(trips)), Kind::Operator, {n});
}

QuantumObject create(int n) { return dag(destroy(n)); }

QuantumObject num(int n) {
  require_mode_dim(n);
  std::vector<Eigen::Triplet<Complex>> trips;
  for (int k = 1; k < n; ++k) trips.emplace_back(k, k, static_cast<double>(k));
  return QuantumObject(from_triplets(n, n, std::move(trips)), Kind::Operator, {n});
}

QuantumObject qeye(int n) {
  require_mode_dim(n);
  SparseMatrix m(n, n);
  m.setIdentity();
  return QuantumObject(std::move(m), Kind::Operator, {n});
}

QuantumObject qeye(const Dims& dims) {
  long d = dims_product(dims);
  SparseMatrix m(d, d);
  m.setIdentity();
  return QuantumObject(std::move(m), Kind::Operator, dims);
}

QuantumObject position(int n) {
  return (destroy(n) + create(n)) / std::sqrt(2.0);
}

QuantumObject momentum(int n) {
  return Complex(0.0, 1.0) * (create(n) - destroy(n)) / std::sqrt(2.0);
}

QuantumObject sigmax() {
  std::vector<Eigen::Triplet<Complex>> trips{{0, 1, 1.0}, {1, 0, 1.0}};
  return QuantumObject(from_triplets(2, 2, std::move(trips)), Kind::Operator, {2});
}

QuantumObject sigmay() {
  std::vector<Eigen::Triplet<Complex>> trips{{0, 1, Complex(0, -1)}, {1, 0, Complex(0, 1)}};
  return QuantumObject(from_triplets(2, 2, std::move(trips)), Kind::Operator, {2});
}

QuantumObject sigmaz() {
  std::vector<Eigen::Triplet<Complex>> trips{{0, 0, 1.0}, {1, 1, -1.0}};
  return QuantumObject(from_triplets(2, 2, std::move(trips)), Kind::Operator, {2});
}

QuantumObject sigmap() {
  std::vector<Eigen::Triplet<Complex>> trips{{0, 1, 1.0}};
  return QuantumObject(from_triplets(2, 2, std::move(trips)), Kind::Operator, {2});
}

QuantumObject sigmam() { return dag(sigmap()); }

QuantumObject basis(int n, int i) {
  require_mode_dim(n);
  require(i >= 0 && i < n, ErrorCode::InvalidIndex, "basis index out of range");
  Vector v = Vector::Zero(n);
  v[i] = 1.0;
  return QuantumObject(DenseMatrix(v), Kind::Ket, {n});
}

QuantumObject fock(int n, int i) { return basis(n, i); }

QuantumObject fock_dm(int n, int i) {
  require_mode_dim(n);
  require(i >= 0 && i < n, ErrorCode::InvalidIndex, "fock_dm index out of range");
  std::vector<Eigen::Triplet<Complex>> trips{{i, i, 1.0}};
  return QuantumObject(from_triplets(n, n, std::move(trips)), Kind::Operator, {n});
}

QuantumObject projection(int n, int i, int j) {
  require_mode_dim(n);
  require(i >= 0 && i < n && j >= 0 && j < n, ErrorCode::InvalidIndex,
          "projection index out of range");
  std::vector<Eigen::Triplet<Complex>> trips{{i, j, 1.0}};
  return QuantumObject(from_triplets(n, n, std::move(trips)), Kind::Operator, {n});
}

QuantumObject thermal_dm(int n, double nbar) {
  require_mode_dim(n);
  require(nbar >= 0.0, ErrorCode::InvalidDimension, "thermal occupation must be >= 0");
  std::vector<Eigen::Triplet<Complex>> trips;
  if (nbar == 0.0) {
    trips.emplace_back(0, 0, 1.0);
  } else {
    const double q = nbar / (1.0 + nbar);
    double w = 1.0, total = 0.0;
    std::vector<double> weights(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
      weights[static_cast<size_t>(k)] = w;
      total += w;
      w *= q;
    }
    for (int k = 0; k < n; ++k) trips.emplace_back(k, k, weights[static_cast<size_t>(k)] / total);
  }
  return QuantumObject(from_triplets(n, n, std::move(trips)), Kind::Operator, {n});
}

QuantumObject maximally_mixed_dm(int n) {
  require_mode_dim(n);
  std::vector<Eigen::Triplet<Complex>> trips;
  for (int k = 0; k < n; ++k) trips.emplace_back(k, k, 1.0 / n);
  return QuantumObject(from_triplets(n, n, std::move(trips)), Kind::Operator, {n});
}

QuantumObject coherent(int n, Complex alpha) {
  require(n >= 2 || std::abs(alpha) == 0.0, ErrorCode::InvalidDimension,
          "coherent needs n >= 2 for nonzero alpha");
  Vector v(n);
  Complex c = std::exp(-0.5 * std::norm(alpha));
  for (int k = 0; k < n; ++k) {
    v[k] = c;
    c *= alpha / std::sqrt(static_cast<double>(k + 1));
  }
  v /= v.norm();  // renormalize the truncated series
  return QuantumObject(DenseMatrix(v), Kind::Ket, {n});
}

QuantumObject coherent_dm(int n, Complex alpha) { return ket2dm(coherent(n, alpha)); }

QuantumObject displace(int n, Complex alpha) {
  QuantumObject a = destroy(n);
  return expm(alpha * dag(a) - std::conj(alpha) * a);
}

QuantumObject rand_ket(int n, std::uint64_t seed) {
  require_mode_dim(n);
  RngStream rng(seed);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = Complex(rng.normal(), rng.normal());
  v /= v.norm();
  return QuantumObject(DenseMatrix(v), Kind::Ket, {n});
}

QuantumObject rand_dm(int n, std::uint64_t seed) {
  require_mode_dim(n);
  RngStream rng(seed);
  DenseMatrix g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = Complex(rng.normal(), rng.normal());
  DenseMatrix rho = g * g.adjoint();
  rho /= rho.trace();
  return QuantumObject(std::move(rho), Kind::Operator, {n});
}

QuantumObject rand_unitary(int n, std::uint64_t seed) {
  require_mode_dim(n);
  RngStream rng(seed);
  DenseMatrix g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = Complex(rng.normal(), rng.normal());
  Eigen::HouseholderQR<DenseMatrix> qr(g);
  DenseMatrix q = qr.householderQ();
  DenseMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the phase of R's diagonal so the distribution is Haar.
  for (int j = 0; j < n; ++j) {
    Complex d = r(j, j);
    q.col(j) *= (d == Complex(0.0) ? Complex(1.0) : d / std::abs(d));
  }
  return QuantumObject(std::move(q), Kind::Operator, {n});
}

QuantumObject embed_site(const Dims& dims, int site, const QuantumObject& op) {
  require(site >= 0 && site < static_cast<int>(dims.size()), ErrorCode::InvalidSubsystem,
          "embed_site: site out of range");
  require(op.is_operator() && op.dims().size() == 1 &&
              op.dims()[0] == dims[static_cast<size_t>(site)],
          ErrorCode::DimsMismatch, "embed_site: operator does not match the site dimension");
  QuantumObject out = (site == 0) ? op : qeye(dims[0]);
  for (size_t i = 1; i < dims.size(); ++i)
    out = tensor(out, static_cast<int>(i) == site ? op : qeye(dims[i]));
  return out;
}

std::pair<QuantumObject, std::vector<QuantumObject>> ising_model(
    int nx, int ny, double jz, double hx, double gamma, bool periodic) {
  require(nx >= 1 && ny >= 1, ErrorCode::InvalidDimension, "lattice extents must be >= 1");
  const int n_sites = nx * ny;
  require(n_sites <= 12, ErrorCode::TooLarge, "lattice capped at 12 sites");
  Dims dims(static_cast<size_t>(n_sites), 2);
  auto site_of = [nx](int x, int y) { return y * nx + x; };

  // Sweep right/down from every site; periodic wrap bonds are separate terms.
  std::vector<std::pair<int, int>> bonds;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      if (x + 1 < nx)
        bonds.emplace_back(site_of(x, y), site_of(x + 1, y));
      else if (periodic && nx > 1)
        bonds.emplace_back(site_of(x, y), site_of(0, y));
      if (y + 1 < ny)
        bonds.emplace_back(site_of(x, y), site_of(x, y + 1));
      else if (periodic && ny > 1)
        bonds.emplace_back(site_of(x, y), site_of(x, 0));
    }

  const long d = dims_product(dims);
  SparseMatrix h(d, d);
  QuantumObject hq(h, Kind::Operator, dims);
  bool first = true;
  for (auto [i, j] : bonds) {
    QuantumObject term = jz * (embed_site(dims, i, sigmaz()) * embed_site(dims, j, sigmaz()));
    hq = first ? term : hq + term;
    first = false;
  }
  for (int i = 0; i < n_sites; ++i) {
    QuantumObject term = hx * embed_site(dims, i, sigmax());
    hq = first ? term : hq + term;
    first = false;
  }

  std::vector<QuantumObject> c_ops;
  c_ops.reserve(static_cast<size_t>(n_sites));
  const double amp = std::sqrt(gamma);
  for (int i = 0; i < n_sites; ++i) c_ops.push_back(amp * embed_site(dims, i, sigmam()));
  return {hq, c_ops};
}

}  // namespace qsim
