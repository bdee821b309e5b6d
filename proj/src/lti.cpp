#include "mfgs/lti.hpp"

#include <sstream>
#include <stdexcept>

namespace mfgs::lti {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::string shape(const MatX& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

bool pencil_regular(const MatX& E, const MatX& A) {
  const Complex probes[] = {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {10.0, 0.0}};
  const long n = A.rows();
  if (n == 0) return true;
  for (const Complex& s : probes) {
    CMatX P = s * E.cast<Complex>() - A.cast<Complex>();
    Eigen::ColPivHouseholderQR<CMatX> qr(P);
    if (qr.rank() == n) return true;
  }
  return false;
}

}  // namespace

PlantDims DescriptorPlant::dims() const {
  return {A.rows(), B1.cols(), B2.cols(), C1.rows(), C2.rows()};
}

DescriptorPlant DescriptorPlant::make(MatX E, MatX A, MatX B1, MatX B2, MatX C1, MatX C2,
                                      MatX D11, MatX D12, MatX D21, MatX D22) {
  const long n = A.rows();
  const long m1 = B1.cols(), m2 = B2.cols(), p1 = C1.rows(), p2 = C2.rows();
  require(A.cols() == n, "plant: A must be square, got " + shape(A));
  require(E.rows() == n && E.cols() == n, "plant: E must be " + std::to_string(n) + "x" +
                                              std::to_string(n) + ", got " + shape(E));
  require(B1.rows() == n, "plant: B1 has " + std::to_string(B1.rows()) + " rows, expected n");
  require(B2.rows() == n, "plant: B2 has " + std::to_string(B2.rows()) + " rows, expected n");
  require(C1.cols() == n, "plant: C1 has " + std::to_string(C1.cols()) + " cols, expected n");
  require(C2.cols() == n, "plant: C2 has " + std::to_string(C2.cols()) + " cols, expected n");
  require(D11.rows() == p1 && D11.cols() == m1, "plant: D11 is " + shape(D11) + ", expected p1 x m1");
  require(D12.rows() == p1 && D12.cols() == m2, "plant: D12 is " + shape(D12) + ", expected p1 x m2");
  require(D21.rows() == p2 && D21.cols() == m1, "plant: D21 is " + shape(D21) + ", expected p2 x m1");
  require(D22.rows() == p2 && D22.cols() == m2, "plant: D22 is " + shape(D22) + ", expected p2 x m2");
  require(D22.isZero(0.0), "plant: D22 must be exactly zero (no feed-through)");
  require(pencil_regular(E, A), "plant: pencil lambda*E - A is singular at all probe points");

  DescriptorPlant p;
  p.E = std::move(E);
  p.A = std::move(A);
  p.B1 = std::move(B1);
  p.B2 = std::move(B2);
  p.C1 = std::move(C1);
  p.C2 = std::move(C2);
  p.D11 = std::move(D11);
  p.D12 = std::move(D12);
  p.D21 = std::move(D21);
  p.D22 = std::move(D22);
  return p;
}

Controller Controller::make(MatX AK, MatX BK, MatX CK, MatX DK, bool dk_fixed_zero) {
  const long nK = AK.rows();
  require(AK.cols() == nK, "controller: AK must be square, got " + shape(AK));
  require(BK.rows() == nK, "controller: BK has " + std::to_string(BK.rows()) + " rows, expected nK");
  require(CK.cols() == nK, "controller: CK has " + std::to_string(CK.cols()) + " cols, expected nK");
  require(DK.rows() == CK.rows() && DK.cols() == BK.cols(),
          "controller: DK is " + shape(DK) + ", expected m2 x p2");
  require(AK.allFinite() && BK.allFinite() && CK.allFinite() && DK.allFinite(),
          "controller: entries must be finite");
  if (dk_fixed_zero)
    require(DK.isZero(0.0), "controller: DK must be exactly zero when dk_fixed_zero");

  Controller k;
  k.AK = std::move(AK);
  k.BK = std::move(BK);
  k.CK = std::move(CK);
  k.DK = std::move(DK);
  k.dk_fixed_zero = dk_fixed_zero;
  return k;
}

Controller Controller::zero(long nK, long m2, long p2, bool dk_fixed_zero) {
  return make(MatX::Zero(nK, nK), MatX::Zero(nK, p2), MatX::Zero(m2, nK), MatX::Zero(m2, p2),
              dk_fixed_zero);
}

bool ControllerLayout::matches(const Controller& k) const {
  return k.AK.rows() == nK && k.BK.cols() == p2 && k.CK.rows() == m2 &&
         k.dk_fixed_zero == dk_fixed_zero;
}

VecX pack_controller(const Controller& k) {
  const long nK = k.order(), p2 = k.BK.cols(), m2 = k.CK.rows();
  const long n_free = nK * nK + nK * p2 + m2 * nK + (k.dk_fixed_zero ? 0 : m2 * p2);
  VecX x(n_free);
  long at = 0;
  auto put = [&](const MatX& m) {
    for (long j = 0; j < m.cols(); ++j)
      for (long i = 0; i < m.rows(); ++i) x[at++] = m(i, j);
  };
  put(k.AK);
  put(k.BK);
  put(k.CK);
  if (!k.dk_fixed_zero) put(k.DK);
  return x;
}

Controller unpack_controller(const ControllerLayout& layout, const VecX& x) {
  require(x.size() == layout.size(), "unpack_controller: vector length " +
                                         std::to_string(x.size()) + " does not match layout N = " +
                                         std::to_string(layout.size()));
  long at = 0;
  auto take = [&](long rows, long cols) {
    MatX m(rows, cols);
    for (long j = 0; j < cols; ++j)
      for (long i = 0; i < rows; ++i) m(i, j) = x[at++];
    return m;
  };
  MatX AK = take(layout.nK, layout.nK);
  MatX BK = take(layout.nK, layout.p2);
  MatX CK = take(layout.m2, layout.nK);
  MatX DK = layout.dk_fixed_zero ? MatX::Zero(layout.m2, layout.p2) : take(layout.m2, layout.p2);
  return Controller::make(std::move(AK), std::move(BK), std::move(CK), std::move(DK),
                          layout.dk_fixed_zero);
}

ClosedLoop assemble_closed_loop(const DescriptorPlant& plant, const Controller& k,
                                std::optional<int> level) {
  const PlantDims d = plant.dims();
  const long nK = k.order();
  require(k.BK.cols() == d.p2, "assemble_closed_loop: BK has " + std::to_string(k.BK.cols()) +
                                   " cols, plant p2 = " + std::to_string(d.p2));
  require(k.CK.rows() == d.m2, "assemble_closed_loop: CK has " + std::to_string(k.CK.rows()) +
                                   " rows, plant m2 = " + std::to_string(d.m2));

  const long nc = d.n + nK;
  ClosedLoop cl;
  cl.level = level;

  cl.Ec = MatX::Zero(nc, nc);
  cl.Ec.topLeftCorner(d.n, d.n) = plant.E;
  cl.Ec.bottomRightCorner(nK, nK).setIdentity();

  cl.Ac = MatX::Zero(nc, nc);
  cl.Ac.topLeftCorner(d.n, d.n) = plant.A + plant.B2 * k.DK * plant.C2;
  cl.Ac.topRightCorner(d.n, nK) = plant.B2 * k.CK;
  cl.Ac.bottomLeftCorner(nK, d.n) = k.BK * plant.C2;
  cl.Ac.bottomRightCorner(nK, nK) = k.AK;

  cl.Bc = MatX::Zero(nc, d.m1);
  cl.Bc.topRows(d.n) = plant.B1 + plant.B2 * k.DK * plant.D21;
  cl.Bc.bottomRows(nK) = k.BK * plant.D21;

  cl.Cc = MatX::Zero(d.p1, nc);
  cl.Cc.leftCols(d.n) = plant.C1 + plant.D12 * k.DK * plant.C2;
  cl.Cc.rightCols(nK) = plant.D12 * k.CK;

  cl.Dc = plant.D11 + plant.D12 * k.DK * plant.D21;
  return cl;
}

DescriptorPlant make_normalized_lqg(MatX E, MatX A, MatX B, MatX C) {
  const long n = A.rows(), m = B.cols(), p = C.rows();
  require(A.cols() == n && E.rows() == n && E.cols() == n,
          "make_normalized_lqg: E, A must be square n x n");
  require(B.rows() == n, "make_normalized_lqg: B has " + std::to_string(B.rows()) +
                             " rows, expected " + std::to_string(n));
  require(C.cols() == n, "make_normalized_lqg: C has " + std::to_string(C.cols()) +
                             " cols, expected " + std::to_string(n));

  MatX B1(n, m + p);
  B1 << B, MatX::Zero(n, p);
  MatX C1(p + m, n);
  C1 << C, MatX::Zero(m, n);
  MatX D12(p + m, m);
  D12 << MatX::Zero(p, m), MatX::Identity(m, m);
  MatX D21(p, m + p);
  D21 << MatX::Zero(p, m), MatX::Identity(p, p);

  return DescriptorPlant::make(std::move(E), std::move(A), std::move(B1), B, std::move(C1), C,
                               MatX::Zero(p + m, m + p), std::move(D12), std::move(D21),
                               MatX::Zero(p, m));
}

DescriptorPlant make_general_plant(MatX E, MatX A, MatX B1, MatX B2, MatX C2) {
  const long n = A.rows(), m1 = B1.cols(), m2 = B2.cols(), p2 = C2.rows();
  require(A.cols() == n && E.rows() == n && E.cols() == n,
          "make_general_plant: E, A must be square n x n");
  require(B1.rows() == n && B2.rows() == n, "make_general_plant: B1/B2 row count must equal n");
  require(C2.cols() == n, "make_general_plant: C2 has " + std::to_string(C2.cols()) +
                              " cols, expected " + std::to_string(n));

  // Leading columns (m2 <= p2) or rows (m2 > p2) of the max(m2,p2) identity,
  // and likewise for D21 with m1 against p2.
  MatX D12 = MatX::Identity(std::max(m2, p2), std::max(m2, p2)).topLeftCorner(p2, m2);
  MatX D21 = MatX::Identity(std::max(m1, p2), std::max(m1, p2)).topLeftCorner(p2, m1);

  MatX C1 = C2;
  return DescriptorPlant::make(std::move(E), std::move(A), std::move(B1), std::move(B2),
                               std::move(C1), std::move(C2), MatX::Zero(p2, m1), std::move(D12),
                               std::move(D21), MatX::Zero(p2, m2));
}

const DescriptorPlant& ModelHierarchy::level(int ell) const {
  if (ell < 1 || ell > num_levels())
    throw std::invalid_argument("hierarchy: level " + std::to_string(ell) + " out of range 1.." +
                                std::to_string(num_levels()));
  return plants[static_cast<size_t>(ell - 1)];
}

ControllerLayout ModelHierarchy::layout(long nK, bool dk_fixed_zero) const {
  const PlantDims d = plants.front().dims();
  return {nK, d.m2, d.p2, dk_fixed_zero};
}

ModelHierarchy ModelHierarchy::make(std::vector<DescriptorPlant> plants) {
  require(!plants.empty(), "hierarchy: needs at least one level");
  const PlantDims d0 = plants.front().dims();
  for (size_t i = 1; i < plants.size(); ++i) {
    const PlantDims d = plants[i].dims();
    require(d.m1 == d0.m1 && d.m2 == d0.m2 && d.p1 == d0.p1 && d.p2 == d0.p2,
            "hierarchy: levels 1 and " + std::to_string(i + 1) +
                " disagree on external dimensions (m1, m2, p1, p2)");
    require(d.n >= plants[i - 1].dims().n,
            "hierarchy: state dimension must be nondecreasing, violated at level " +
                std::to_string(i + 1));
  }
  ModelHierarchy h;
  h.plants = std::move(plants);
  return h;
}

}  // namespace mfgs::lti
