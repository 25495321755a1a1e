#include "sentinel/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sentinel::reference {

Signal2D dilated_conv1d(const Signal2D& x, const ConvFilter& f) {
  // Effective weights computed here on purpose instead of reusing the
  // library helper: the reference stays a self-contained oracle.
  const std::size_t slice = static_cast<std::size_t>(f.k) * f.d_in;
  std::vector<double> w(f.v.size());
  for (int o = 0; o < f.d_out; ++o) {
    double ss = 0.0;
    for (std::size_t i = 0; i < slice; ++i) {
      const double vi = f.v[static_cast<std::size_t>(o) * slice + i];
      ss += vi * vi;
    }
    const double norm = std::sqrt(ss);
    for (std::size_t i = 0; i < slice; ++i)
      w[static_cast<std::size_t>(o) * slice + i] = f.g[static_cast<std::size_t>(o)] * f.v[static_cast<std::size_t>(o) * slice + i] / norm;
  }

  const int shift = f.causal ? 0 : f.k / 2;
  Signal2D y(x.T, f.d_out);
  for (std::int64_t n = 0; n < x.T; ++n) {
    for (int o = 0; o < f.d_out; ++o) {
      double acc = f.bias[static_cast<std::size_t>(o)];
      for (int j = 0; j < f.k; ++j) {
        const std::int64_t m = n - static_cast<std::int64_t>(f.dilation) * (j - shift);
        if (m < 0 || m >= x.T) continue;
        for (int ci = 0; ci < f.d_in; ++ci)
          acc += w[(static_cast<std::size_t>(o) * f.k + static_cast<std::size_t>(j)) * f.d_in + static_cast<std::size_t>(ci)] * x.at(m, ci);
      }
      y.at(n, o) = acc;
    }
  }
  return y;
}

std::vector<double> mahalanobis_explicit_inverse(const std::vector<double>& rows, std::size_t n, std::size_t dim,
                                                 const std::vector<double>& mu, const std::vector<double>& cov) {
  // Gauss-Jordan inverse of the covariance with partial pivoting.
  std::vector<double> a(cov);
  std::vector<double> inv(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) inv[i * dim + i] = 1.0;
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < dim; ++r)
      if (std::fabs(a[r * dim + col]) > std::fabs(a[piv * dim + col])) piv = r;
    if (a[piv * dim + col] == 0.0) throw NumericError("reference inverse: singular covariance");
    if (piv != col) {
      for (std::size_t c = 0; c < dim; ++c) {
        std::swap(a[piv * dim + c], a[col * dim + c]);
        std::swap(inv[piv * dim + c], inv[col * dim + c]);
      }
    }
    const double p = a[col * dim + col];
    for (std::size_t c = 0; c < dim; ++c) {
      a[col * dim + c] /= p;
      inv[col * dim + c] /= p;
    }
    for (std::size_t r = 0; r < dim; ++r) {
      if (r == col) continue;
      const double f = a[r * dim + col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < dim; ++c) {
        a[r * dim + c] -= f * a[col * dim + c];
        inv[r * dim + c] -= f * inv[col * dim + c];
      }
    }
  }

  std::vector<double> scores(n, 0.0);
  std::vector<double> r(dim), t(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < dim; ++c) r[c] = rows[i * dim + c] - mu[c];
    for (std::size_t c = 0; c < dim; ++c) {
      double acc = 0.0;
      for (std::size_t c2 = 0; c2 < dim; ++c2) acc += inv[c * dim + c2] * r[c2];
      t[c] = acc;
    }
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) s += r[c] * t[c];
    scores[i] = s;
  }
  return scores;
}

double ScalarAdam::step(double w, double grad, double lr, double beta1, double beta2, double eps) {
  t += 1;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double mhat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
  const double vhat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
  return w - lr * mhat / (std::sqrt(vhat) + eps);
}

double exhaustive_best_f1_threshold(const std::vector<double>& scores, const std::vector<unsigned char>& labels) {
  std::vector<double> uniq(scores);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  std::vector<double> candidates;
  candidates.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i) candidates.push_back((uniq[i] + uniq[i + 1]) / 2.0);
  candidates.push_back(std::numeric_limits<double>::infinity());

  double best_f1 = -1.0, best_t = candidates.back();
  for (double t : candidates) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool flag = scores[i] >= t;
      if (flag && labels[i]) ++tp;
      if (flag && !labels[i]) ++fp;
      if (!flag && labels[i]) ++fn;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    const double f1 = denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
    if (f1 >= best_f1) {  // >= : ties resolve toward the largest threshold
      best_f1 = f1;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace sentinel::reference
