#include "ivsign/multi_iv.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "ivsign/estimators.hpp"

namespace ivsign {

namespace {

constexpr double kMaxWeight = 1e8;          // larger weights count as degenerate
constexpr double kDegenerateShare = 1e-3;   // tolerated fraction of bad draws

// Lower Cholesky factor with one jittered retry (1e-12 * trace / dim on the
// diagonal); the model assumes positive definite Sigma, so a second failure
// is a hard error.
Eigen::MatrixXd chol_lower_with_jitter(const Eigen::MatrixXd& sigma, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-12 * sigma.trace() / static_cast<double>(sigma.rows());
    llt.compute(sigma + jitter * Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
    if (llt.info() != Eigen::Success) {
      throw ConditioningError(std::string(what) + ": covariance factorization failed");
    }
  }
  return llt.matrixL();
}

bool weights_ok(const Eigen::VectorXd& w) {
  return w.allFinite() && w.cwiseAbs().maxCoeff() <= kMaxWeight;
}

// w_i = (W xi2)_i * xi2_i / (xi2' W xi2); the denominator is accumulated as
// the sum of the numerators so the weights sum to 1 up to rounding.
bool quadratic_weights(const Eigen::MatrixXd& w_matrix, const Eigen::VectorXd& xi2_b,
                       Eigen::VectorXd& out) {
  out = (w_matrix * xi2_b).cwiseProduct(xi2_b);
  const double denom = out.sum();
  if (!std::isfinite(denom) || denom == 0.0) return false;
  out /= denom;
  return weights_ok(out);
}

}  // namespace

WeightSpec WeightSpec::fixed(Eigen::VectorXd w) {
  if (w.size() < 1 || !w.allFinite()) {
    throw std::invalid_argument("WeightSpec::fixed: invalid weight vector");
  }
  if (std::fabs(w.sum() - 1.0) > 1e-10) {
    throw std::invalid_argument("WeightSpec::fixed: weights must sum to 1");
  }
  WeightSpec spec;
  spec.kind = Kind::Fixed;
  spec.fixed_weights = std::move(w);
  return spec;
}

WeightSpec WeightSpec::quadratic(Eigen::MatrixXd w_matrix) {
  require_spd(w_matrix, "WeightSpec::quadratic");
  WeightSpec spec;
  spec.kind = Kind::Quadratic;
  spec.quadratic_weight = std::move(w_matrix);
  return spec;
}

WeightSpec WeightSpec::gmm_two_step() {
  WeightSpec spec;
  spec.kind = Kind::GmmTwoStep;
  return spec;
}

double beta_2sls_multi(const ReducedFormStats& stats, const Eigen::MatrixXd& w_matrix) {
  if (w_matrix.rows() != stats.k() || w_matrix.cols() != stats.k()) {
    throw std::invalid_argument("beta_2sls_multi: weight matrix must be k x k");
  }
  const Eigen::VectorXd wxi2 = w_matrix * stats.xi2;
  const double denom = wxi2.dot(stats.xi2);
  if (!std::isfinite(denom) || denom == 0.0) {
    throw std::invalid_argument("beta_2sls_multi: degenerate quadratic-form denominator");
  }
  return wxi2.dot(stats.xi1) / denom;
}

Eigen::MatrixXd gmm_two_step_weight(const ReducedFormStats& stats, double preliminary_beta) {
  const double b = preliminary_beta;
  Eigen::MatrixXd inner = stats.sigma11() - b * (stats.sigma12() + stats.sigma21()) +
                          b * b * stats.sigma22();
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(inner);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("gmm_two_step_weight: inner matrix not positive definite at beta = " +
                            std::to_string(b));
  }
  const Eigen::Index kk = stats.k();
  return llt.solve(Eigen::MatrixXd::Identity(kk, kk));
}

SplitPair split_draw(const ReducedFormStats& stats, RandomStream& rng) {
  const Eigen::MatrixXd l = chol_lower_with_jitter(stats.sigma, "split_draw");
  Eigen::VectorXd n(2 * stats.k());
  rng.normals(n);
  const Eigen::VectorXd zeta = l * n;
  const Eigen::VectorXd xi = stats.stacked();
  return SplitPair{xi + zeta, xi - zeta};
}

Eigen::VectorXd rb_weights(const Eigen::VectorXd& xi2_b, const WeightSpec& spec,
                           const Eigen::MatrixXd& z_gram) {
  (void)z_gram;  // only the GmmTwoStep overload consumes it
  switch (spec.kind) {
    case WeightSpec::Kind::Fixed:
      if (spec.fixed_weights.size() != xi2_b.size()) {
        throw std::invalid_argument("rb_weights: fixed weight length mismatch");
      }
      return spec.fixed_weights;
    case WeightSpec::Kind::Quadratic: {
      Eigen::VectorXd w;
      if (!quadratic_weights(spec.quadratic_weight, xi2_b, w)) {
        throw DegenerateWeightError("rb_weights: degenerate quadratic-form denominator");
      }
      return w;
    }
    case WeightSpec::Kind::GmmTwoStep:
      throw std::invalid_argument(
          "rb_weights: GmmTwoStep needs the full split half; use the overload taking xi1_b");
  }
  throw std::logic_error("rb_weights: unreachable");
}

Eigen::VectorXd rb_weights(const Eigen::VectorXd& xi1_b, const Eigen::VectorXd& xi2_b,
                           const WeightSpec& spec, const Eigen::MatrixXd& z_gram,
                           const ReducedFormStats& stats) {
  if (spec.kind != WeightSpec::Kind::GmmTwoStep) {
    return rb_weights(xi2_b, spec, z_gram);
  }
  const Eigen::VectorXd gxi2 = z_gram * xi2_b;
  const double denom = gxi2.dot(xi2_b);
  if (!std::isfinite(denom) || denom == 0.0) {
    throw DegenerateWeightError("rb_weights: degenerate preliminary denominator");
  }
  const double prelim = gxi2.dot(xi1_b) / denom;
  const Eigen::MatrixXd w_matrix = gmm_two_step_weight(stats, prelim);
  Eigen::VectorXd w;
  if (!quadratic_weights(w_matrix, xi2_b, w)) {
    throw DegenerateWeightError("rb_weights: degenerate two-step denominator");
  }
  return w;
}

double beta_w(const ReducedFormStats& stats, const Eigen::VectorXd& w) {
  if (w.size() != stats.k()) {
    throw std::invalid_argument("beta_w: weight length mismatch");
  }
  if (std::fabs(w.sum() - 1.0) > 1e-10) {
    throw std::invalid_argument("beta_w: weights must sum to 1");
  }
  double out = 0.0;
  for (Eigen::Index i = 0; i < stats.k(); ++i) {
    out += w[i] * beta_u(instrument_block(stats, i));
  }
  return out;
}

namespace {

// Precomputed per-variant quantities for the shared-draw RB loop.
struct VariantState {
  bool transform = false;
  Eigen::MatrixXd m;          // M(c); empty when transform == false
  Eigen::VectorXd xi1_t, xi2_t;
  // Per-instrument block entries of 2 * Sigma_t(i).
  Eigen::VectorXd s12_2, s2sq_2;
  WeightSpec::Kind wkind = WeightSpec::Kind::Quadratic;
  Eigen::VectorXd fixed_w;
  Eigen::MatrixXd quad_w;     // quadratic weight in transformed coordinates
  Eigen::MatrixXd zg_t;       // transformed z_gram (GmmTwoStep preliminary)
  Eigen::MatrixXd s11_t, s12m_t, s22_t;  // Sigma_t blocks (GmmTwoStep inner)
};

struct ChunkAccum {
  double sum = 0.0, sumsq = 0.0;
  std::int64_t used = 0, degenerate = 0;
};

VariantState make_variant_state(const ReducedFormStats& stats, const Eigen::MatrixXd& z_gram,
                                const RbVariant& variant) {
  VariantState st;
  st.wkind = variant.spec.kind;
  const Eigen::Index kk = stats.k();

  Eigen::MatrixXd sigma_t;
  if (variant.use_transform) {
    TransformedModel tm = robust_transform(stats, z_gram, variant.c);
    st.transform = true;
    st.m = tm.transform.m;
    st.xi1_t = tm.stats.xi1;
    st.xi2_t = tm.stats.xi2;
    sigma_t = tm.stats.sigma;
    st.zg_t = tm.w_matrix;
    if (st.wkind == WeightSpec::Kind::Quadratic) {
      const Eigen::MatrixXd& mi = tm.transform.m_inverse;
      Eigen::MatrixXd w = mi.transpose() * variant.spec.quadratic_weight * mi;
      st.quad_w = 0.5 * (w + w.transpose());
    }
  } else {
    st.xi1_t = stats.xi1;
    st.xi2_t = stats.xi2;
    sigma_t = stats.sigma;
    st.zg_t = z_gram;
    if (st.wkind == WeightSpec::Kind::Quadratic) st.quad_w = variant.spec.quadratic_weight;
  }
  if (st.wkind == WeightSpec::Kind::Quadratic &&
      (st.quad_w.rows() != kk || st.quad_w.cols() != kk)) {
    throw std::invalid_argument("beta_rb: quadratic weight matrix must be k x k");
  }
  if (st.wkind == WeightSpec::Kind::Fixed) {
    if (variant.spec.fixed_weights.size() != kk) {
      throw std::invalid_argument("beta_rb: fixed weight length mismatch");
    }
    st.fixed_w = variant.spec.fixed_weights;
  }
  if (st.wkind == WeightSpec::Kind::GmmTwoStep) {
    st.s11_t = sigma_t.topLeftCorner(kk, kk);
    st.s12m_t = sigma_t.topRightCorner(kk, kk);
    st.s22_t = sigma_t.bottomRightCorner(kk, kk);
  }
  st.s12_2.resize(kk);
  st.s2sq_2.resize(kk);
  for (Eigen::Index i = 0; i < kk; ++i) {
    st.s12_2[i] = sigma_t(i, kk + i) + sigma_t(kk + i, i);  // 2 * Sigma_t12(i,i)
    st.s2sq_2[i] = 2.0 * sigma_t(kk + i, kk + i);
    if (!(st.s2sq_2[i] > 0.0)) {
      throw ConditioningError("beta_rb: nonpositive first-stage variance");
    }
  }
  return st;
}

}  // namespace

std::vector<RbEstimate> beta_rb_shared(const ReducedFormStats& stats,
                                       const Eigen::MatrixXd& z_gram,
                                       const std::vector<RbVariant>& variants,
                                       std::int64_t s_draws, std::uint64_t seed) {
  if (s_draws < 1) {
    throw std::invalid_argument("beta_rb: s_draws must be >= 1");
  }
  if (variants.empty()) {
    throw std::invalid_argument("beta_rb: no variants given");
  }
  const Eigen::Index kk = stats.k();
  const bool needs_gram = std::any_of(variants.begin(), variants.end(), [](const RbVariant& v) {
    return v.use_transform || v.spec.kind == WeightSpec::Kind::GmmTwoStep;
  });
  if (needs_gram) require_spd(z_gram, "beta_rb.z_gram");

  std::vector<VariantState> states;
  states.reserve(variants.size());
  for (const RbVariant& v : variants) states.push_back(make_variant_state(stats, z_gram, v));

  const Eigen::MatrixXd l = chol_lower_with_jitter(stats.sigma, "beta_rb");
  const std::int64_t n_chunks = n_chunks_for(s_draws);
  const std::size_t nv = variants.size();
  std::vector<std::vector<ChunkAccum>> acc(nv, std::vector<ChunkAccum>(n_chunks));

  for_each_chunk(n_chunks, [&](std::int64_t chunk) {
    RandomStream rng(substream_seed(seed, static_cast<std::uint64_t>(chunk)));
    const std::int64_t lo = chunk * kMcChunk;
    const std::int64_t hi = std::min(lo + kMcChunk, s_draws);

    Eigen::VectorXd n2k(2 * kk), zeta(2 * kk);
    Eigen::VectorXd z1t(kk), z2t(kk), xa1(kk), xa2(kk), xb2(kk), xb1(kk), w(kk), v(kk);
    Eigen::MatrixXd inner(kk, kk);
    Eigen::LLT<Eigen::MatrixXd> llt(kk);

    for (std::int64_t s = lo; s < hi; ++s) {
      rng.normals(n2k);
      zeta.noalias() = l * n2k;
      for (std::size_t iv = 0; iv < nv; ++iv) {
        const VariantState& st = states[iv];
        ChunkAccum& a = acc[iv][chunk];
        if (st.transform) {
          z1t.noalias() = st.m * zeta.head(kk);
          z2t.noalias() = st.m * zeta.tail(kk);
        } else {
          z1t = zeta.head(kk);
          z2t = zeta.tail(kk);
        }
        xa1 = st.xi1_t + z1t;
        xa2 = st.xi2_t + z2t;
        xb2 = st.xi2_t - z2t;

        bool ok = true;
        switch (st.wkind) {
          case WeightSpec::Kind::Fixed:
            w = st.fixed_w;
            break;
          case WeightSpec::Kind::Quadratic:
            ok = quadratic_weights(st.quad_w, xb2, w);
            break;
          case WeightSpec::Kind::GmmTwoStep: {
            xb1 = st.xi1_t - z1t;
            v.noalias() = st.zg_t * xb2;
            const double den = v.dot(xb2);
            if (!std::isfinite(den) || den == 0.0) {
              ok = false;
              break;
            }
            const double prelim = v.dot(xb1) / den;
            inner = st.s11_t - prelim * (st.s12m_t + st.s12m_t.transpose()) +
                    prelim * prelim * st.s22_t;
            llt.compute(inner);
            if (llt.info() != Eigen::Success) {
              ok = false;
              break;
            }
            v = llt.solve(xb2);
            w = v.cwiseProduct(xb2);
            const double den2 = w.sum();
            if (!std::isfinite(den2) || den2 == 0.0) {
              ok = false;
              break;
            }
            w /= den2;
            ok = weights_ok(w);
            break;
          }
        }
        if (!ok) {
          ++a.degenerate;
          continue;
        }
        double bs = 0.0;
        for (Eigen::Index i = 0; i < kk; ++i) {
          bs += w[i] * beta_u_scalar(xa1[i], xa2[i], st.s12_2[i], st.s2sq_2[i]);
        }
        if (!std::isfinite(bs)) {
          ++a.degenerate;
          continue;
        }
        a.sum += bs;
        a.sumsq += bs * bs;
        ++a.used;
      }
    }
  });

  std::vector<RbEstimate> out(nv);
  for (std::size_t iv = 0; iv < nv; ++iv) {
    double sum = 0.0, sumsq = 0.0;
    std::int64_t used = 0, degenerate = 0;
    for (std::int64_t c = 0; c < n_chunks; ++c) {
      sum += acc[iv][c].sum;
      sumsq += acc[iv][c].sumsq;
      used += acc[iv][c].used;
      degenerate += acc[iv][c].degenerate;
    }
    if (degenerate > kDegenerateShare * static_cast<double>(s_draws) || used == 0) {
      throw DegenerateWeightError("beta_rb: degenerate weights in " +
                                  std::to_string(degenerate) + " of " +
                                  std::to_string(s_draws) + " draws");
    }
    RbEstimate est;
    est.value = sum / static_cast<double>(used);
    if (used > 1) {
      const double var =
          std::max(0.0, (sumsq - static_cast<double>(used) * est.value * est.value) /
                            static_cast<double>(used - 1));
      est.mc_std_error = std::sqrt(var / static_cast<double>(used));
    }
    est.draws = s_draws;
    est.degenerate_draws = degenerate;
    out[iv] = est;
  }
  return out;
}

RbEstimate beta_rb(const ReducedFormStats& stats, const WeightSpec& spec,
                   const Eigen::MatrixXd& z_gram, std::int64_t s_draws,
                   std::uint64_t seed) {
  return beta_rb_shared(stats, z_gram, {RbVariant{spec, 0.0, false}}, s_draws, seed)[0];
}

TransformedModel robust_transform(const ReducedFormStats& stats,
                                  const Eigen::MatrixXd& z_gram, double c) {
  if (!(c >= 0.0 && c < 1.0)) {
    throw std::invalid_argument("robust_transform: c must lie in [0, 1)");
  }
  const Eigen::Index kk = stats.k();
  if (z_gram.rows() != kk || z_gram.cols() != kk) {
    throw std::invalid_argument("robust_transform: z_gram must be k x k");
  }
  Eigen::VectorXd d(kk);
  for (Eigen::Index i = 0; i < kk; ++i) {
    const double v22 = stats.sigma(kk + i, kk + i);
    if (!(v22 > 0.0)) {
      throw std::invalid_argument("robust_transform: Sigma22 diagonal must be positive");
    }
    d[i] = 1.0 / std::sqrt(v22);
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(kk, kk, c);
  m.diagonal().setOnes();
  m = m * d.asDiagonal();

  RobustTransform tr;
  tr.c = c;
  tr.m = m;
  tr.m_inverse = m.partialPivLu().solve(Eigen::MatrixXd::Identity(kk, kk));

  Eigen::VectorXd xi1_t = m * stats.xi1;
  Eigen::VectorXd xi2_t = m * stats.xi2;
  Eigen::MatrixXd sigma_t(2 * kk, 2 * kk);
  sigma_t.topLeftCorner(kk, kk) = m * stats.sigma11() * m.transpose();
  sigma_t.topRightCorner(kk, kk) = m * stats.sigma12() * m.transpose();
  sigma_t.bottomLeftCorner(kk, kk) = sigma_t.topRightCorner(kk, kk).transpose();
  sigma_t.bottomRightCorner(kk, kk) = m * stats.sigma22() * m.transpose();
  sigma_t = 0.5 * (sigma_t + sigma_t.transpose()).eval();

  Eigen::MatrixXd w_t = tr.m_inverse.transpose() * z_gram * tr.m_inverse;
  w_t = 0.5 * (w_t + w_t.transpose()).eval();

  return TransformedModel{ReducedFormStats(std::move(xi1_t), std::move(xi2_t), std::move(sigma_t)),
                          std::move(w_t), std::move(tr)};
}

RbEstimate beta_rb_c(const ReducedFormStats& stats, const Eigen::MatrixXd& z_gram,
                     double c, const WeightSpec& spec, std::int64_t s_draws,
                     std::uint64_t seed) {
  TransformedModel tm = robust_transform(stats, z_gram, c);
  WeightSpec spec_t = spec;
  if (spec.kind == WeightSpec::Kind::Quadratic) {
    Eigen::MatrixXd w = tm.transform.m_inverse.transpose() * spec.quadratic_weight *
                        tm.transform.m_inverse;
    spec_t = WeightSpec::quadratic(0.5 * (w + w.transpose()));
  }
  return beta_rb(tm.stats, spec_t, tm.w_matrix, s_draws, seed);
}

}  // namespace ivsign
