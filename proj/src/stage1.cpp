#include "gpcpd/stage1.hpp"

#include "gpcpd/errors.hpp"

#include <cmath>
#include <memory>

namespace gpcpd {

Mat EigRowSet::stacked() const {
  if (rows.empty())
    return Mat(0, r);
  Mat s(size(), rows.front().s.size());
  for (Index i = 0; i < size(); ++i)
    s.row(i) = rows[static_cast<std::size_t>(i)].s.transpose();
  return s;
}

Mat EigRowSet::lambda_matrix() const {
  if (rows.empty())
    return Mat(0, 0);
  Mat l(size(), rows.front().lambdas.size());
  for (Index i = 0; i < size(); ++i)
    l.row(i) = rows[static_cast<std::size_t>(i)].lambdas.transpose();
  return l;
}

namespace {

// Transposed slices T_k^T (n2 x r), computed once per reduced tensor.
struct SliceCache {
  std::vector<Mat> Tt;
  Index r = 0, n2 = 0;

  explicit SliceCache(const ReducedTensor& rt) : r(rt.T.dim(0)), n2(rt.T.dim(1)) {
    for (Index k = 0; k < rt.T.dim(2); ++k)
      Tt.push_back(rt.T.slice(k).transpose());
  }
  Index n3() const { return static_cast<Index>(Tt.size()); }
};

Vec frame_point(const Vec& x, const Mat& Q) {
  const Index r = Q.rows();
  if (x.size() != r - 1)
    throw StructuralError("f_Q: expected a point of length r-1");
  return Q.leftCols(r - 1) * x + Q.col(r - 1);
}

cplx guarded_square(const Vec& y, double iso_eps) {
  const cplx c = (y.array() * y.array()).sum();
  if (!(std::abs(c) >= iso_eps * y.squaredNorm()) || y.squaredNorm() == 0.0)
    throw DomainGuardViolation("f_Q: x_bar(0:n2) is (nearly) isotropic");
  return c;
}

Mat slice_products(const SliceCache& cache, const Vec& xbar) {
  Mat W(cache.n2, cache.n3());
  for (Index k = 0; k < cache.n3(); ++k)
    W.col(k) = cache.Tt[static_cast<std::size_t>(k)] * xbar;
  return W;
}

Vec fQ_cached(const Vec& x, const Mat& Q, const SliceCache& cache, double iso_eps) {
  const Vec xbar = frame_point(x, Q);
  const Vec y = xbar.head(cache.n2);
  const cplx c = guarded_square(y, iso_eps);
  const Mat W = slice_products(cache, xbar);
  const Mat ZW = W - y * ((y.transpose() * W) / c);
  return vec(ZW);
}

Mat jac_fQ_cached(const Vec& x, const Mat& Q, const SliceCache& cache, double iso_eps) {
  const Index r = cache.r, n2 = cache.n2, n3 = cache.n3();
  const Vec xbar = frame_point(x, Q);
  const Vec y = xbar.head(n2);
  const cplx c = guarded_square(y, iso_eps);
  const Mat W = slice_products(cache, xbar);
  const Mat Z = Mat::Identity(n2, n2) - (y * y.transpose()) / c;

  Mat Jbar(n2 * n3, r);
  for (Index k = 0; k < n3; ++k) {
    const Vec w = W.col(k);
    const cplx a = (y.transpose() * w)(0);
    auto block = Jbar.middleRows(k * n2, n2);
    block = Z * cache.Tt[static_cast<std::size_t>(k)];
    // derivative of Z with respect to y applied to w
    Mat G = -(a / c) * Mat::Identity(n2, n2) - (y * w.transpose()) / c + (2.0 * a / (c * c)) * (y * y.transpose());
    block.leftCols(n2) += G;
  }
  return Jbar * Q.leftCols(r - 1);
}

} // namespace

Vec eval_fQ(const Vec& x, const SearchFrame& frame, const ReducedTensor& rt, double iso_eps) {
  return fQ_cached(x, frame.Q, SliceCache(rt), iso_eps);
}

Mat jac_fQ(const Vec& x, const SearchFrame& frame, const ReducedTensor& rt, double iso_eps) {
  return jac_fQ_cached(x, frame.Q, SliceCache(rt), iso_eps);
}

ResidualSystem fQ_system(const SearchFrame& frame, const ReducedTensor& rt, double iso_eps) {
  auto cache = std::make_shared<const SliceCache>(rt);
  Mat Q = frame.Q;
  return {[cache, Q, iso_eps](const Vec& x) { return fQ_cached(x, Q, *cache, iso_eps); },
          [cache, Q, iso_eps](const Vec& x) { return jac_fQ_cached(x, Q, *cache, iso_eps); }};
}

Vec extract_eigenvalues(const Vec& s, const ReducedTensor& rt) {
  const Index n2 = rt.n2(), n3 = rt.n3();
  const Vec y = s.head(n2);
  const cplx c = (y.array() * y.array()).sum();
  Vec lambdas(n3 - 1);
  for (Index k = 1; k < n3; ++k) {
    const Vec w = rt.slice(k).transpose() * s;
    lambdas(k - 1) = c != cplx(0.0, 0.0) ? cplx((y.transpose() * w)(0)) / c : cplx(0.0, 0.0);
  }
  return lambdas;
}

double eigenrow_residual(const Vec& s, const Vec& lambdas, const ReducedTensor& rt) {
  const Vec u = s / s.norm();
  const Index n2 = rt.n2();
  double worst = 0.0;
  for (Index k = 1; k < rt.n3(); ++k) {
    const Vec w = rt.slice(k).transpose() * u;
    worst = std::max(worst, (w - lambdas(k - 1) * u.head(n2)).norm());
  }
  return worst;
}

SearchFrame make_frame(const ReducedTensor& rt, const EigRowSet& found, std::uint64_t seed, int attempt) {
  const Index r = rt.T.dim(0);
  const Index p = found.size();
  SearchFrame frame;
  frame.seed = seed;
  frame.attempt = attempt;
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
  if (p == 0) {
    frame.Q = random_unitary(r, rng);
    return frame;
  }
  frame.Q = qr_full(found.stacked().transpose()).Q;
  if (r - p > 0)
    frame.Q.rightCols(r - p) = frame.Q.rightCols(r - p) * random_unitary(r - p, rng);
  return frame;
}

std::optional<CommonEigRow> find_next_row(const ReducedTensor& rt, const EigRowSet& found,
                                          const Stage1Options& opts) {
  const Index r = rt.T.dim(0);
  if (found.size() >= r)
    throw StructuralError("find_next_row: all rows already found");
  const double tnorm = rt.norm();
  const Mat prev = found.stacked();
  const std::uint64_t row_seed = derive_seed(opts.seed, static_cast<std::uint64_t>(found.size()));

  for (int start = 0; start < opts.starts; ++start) {
    const SearchFrame frame = make_frame(rt, found, row_seed, start);
    const ResidualSystem sys = fQ_system(frame, rt, opts.iso_eps);
    Rng rng(derive_seed(row_seed, 1000 + static_cast<std::uint64_t>(start)));
    const Vec x0 = rng.complex_gaussian(r - 1, 1);

    LMOptions lm = opts.lm;
    lm.residual_scale = tnorm;
    LMOutcome res;
    try {
      res = lm_minimize(sys, x0, lm);
    } catch (const DomainGuardViolation&) {
      continue;
    } catch (const NonFiniteError&) {
      continue;
    }

    Vec s = frame.Q.leftCols(r - 1) * res.x_final + frame.Q.col(r - 1);
    s /= s.norm();
    if (!s.allFinite() || s.head(rt.n2()).norm() == 0.0)
      continue;
    CommonEigRow row;
    row.lambdas = extract_eigenvalues(s, rt);
    row.residual = eigenrow_residual(s, row.lambdas, rt);
    row.s = std::move(s);
    if (!(row.residual <= opts.tol.residual_zero_tol * tnorm))
      continue;

    Mat stacked(prev.rows() + 1, r);
    stacked.topRows(prev.rows()) = prev;
    stacked.bottomRows(1) = row.s.transpose();
    const Eigen::VectorXd sv = singular_values(stacked);
    if (!(sv(sv.size() - 1) > opts.independence_tol * sv(0)))
      continue;
    return row;
  }
  return std::nullopt;
}

EigRowSet run_stage1(const ReducedTensor& rt, const Stage1Options& opts) {
  EigRowSet set;
  set.r = rt.T.dim(0);
  const Index limit = opts.max_rows < 0 ? set.r : std::min(opts.max_rows, set.r);
  while (set.size() < limit) {
    auto row = find_next_row(rt, set, opts);
    if (!row)
      break;
    set.rows.push_back(std::move(*row));
  }
  return set;
}

} // namespace gpcpd
