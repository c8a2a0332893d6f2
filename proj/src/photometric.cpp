#include "reflectdepth/photometric.hpp"

#include <cmath>

#include "reflectdepth/parallel.hpp"

namespace reflectdepth {

namespace {

inline int reflect101(int i, int n) {
  if (i < 0) i = -i;
  if (i >= n) i = 2 * n - 2 - i;
  return i < 0 ? 0 : (i >= n ? n - 1 : i);  // degenerate n guard
}

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_pair(const ImageBuffer& a, const ImageBuffer& b, const char* who) {
  if (!a.same_shape(b))
    throw DimensionMismatch(std::string(who) + ": image shapes differ");
  if (a.domain != Domain::Linear || b.domain != Domain::Linear)
    throw InvalidArgument(std::string(who) + ": linear-domain images required");
}

// Per-channel SSIM planes plus everything the adjoint needs.
struct SsimPlanes {
  std::vector<double> m_a, m_b, p_aa, p_bb, p_ab;
};

SsimPlanes ssim_planes(const ImageBuffer& a, const ImageBuffer& b, int ch) {
  size_t n = static_cast<size_t>(a.height) * a.width;
  std::vector<double> pa(n), pb(n), paa(n), pbb(n), pab(n);
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      size_t i = static_cast<size_t>(y) * a.width + x;
      double va = a.at(y, x, ch), vb = b.at(y, x, ch);
      pa[i] = va;
      pb[i] = vb;
      paa[i] = va * va;
      pbb[i] = vb * vb;
      pab[i] = va * vb;
    }
  return {box3_reflect(pa, a.height, a.width), box3_reflect(pb, a.height, a.width),
          box3_reflect(paa, a.height, a.width),
          box3_reflect(pbb, a.height, a.width),
          box3_reflect(pab, a.height, a.width)};
}

inline double ssim_value(const SsimPlanes& p, size_t i) {
  double ma = p.m_a[i], mb = p.m_b[i];
  double va = p.p_aa[i] - ma * ma;
  double vb = p.p_bb[i] - mb * mb;
  double cab = p.p_ab[i] - ma * mb;
  double num = (2.0 * ma * mb + kSsimC1) * (2.0 * cab + kSsimC2);
  double den = (ma * ma + mb * mb + kSsimC1) * (va + vb + kSsimC2);
  return num / den;
}

}  // namespace

std::vector<double> box3_reflect(const std::vector<double>& plane, int h, int w) {
  std::vector<double> out(plane.size(), 0.0);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          s += plane[static_cast<size_t>(reflect101(y + dy, h)) * w +
                     reflect101(x + dx, w)];
      out[static_cast<size_t>(y) * w + x] = s / 9.0;
    }
  });
  return out;
}

std::vector<double> box3_reflect_adjoint(const std::vector<double>& grad, int h,
                                         int w) {
  std::vector<double> out(grad.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double g = grad[static_cast<size_t>(y) * w + x] / 9.0;
      if (g == 0.0) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          out[static_cast<size_t>(reflect101(y + dy, h)) * w +
              reflect101(x + dx, w)] += g;
    }
  return out;
}

std::vector<double> ssim_map(const ImageBuffer& a, const ImageBuffer& b) {
  check_pair(a, b, "ssim");
  size_t n = static_cast<size_t>(a.height) * a.width;
  std::vector<double> out(n, 0.0);
  for (int ch = 0; ch < a.channels; ++ch) {
    SsimPlanes planes = ssim_planes(a, b, ch);
    for (size_t i = 0; i < n; ++i) out[i] += ssim_value(planes, i);
  }
  for (double& v : out) v /= a.channels;
  return out;
}

ErrorMap photometric_error(const ImageBuffer& ref, const ImageBuffer& other,
                           const BinaryMask& valid, double alpha) {
  check_pair(ref, other, "photometric");
  if (valid.height != ref.height || valid.width != ref.width)
    throw DimensionMismatch("photometric: validity mask shape mismatch");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InvalidArgument("photometric: alpha must lie in [0, 1]");

  size_t n = static_cast<size_t>(ref.height) * ref.width;
  std::vector<double> values(n, 0.0);
  std::vector<double> ssim =
      alpha > 0.0 ? ssim_map(ref, other) : std::vector<double>(n, 1.0);
  for (int y = 0; y < ref.height; ++y)
    for (int x = 0; x < ref.width; ++x) {
      size_t i = static_cast<size_t>(y) * ref.width + x;
      double l1 = 0.0;
      for (int ch = 0; ch < ref.channels; ++ch)
        l1 += std::abs(ref.at(y, x, ch) - other.at(y, x, ch));
      l1 /= ref.channels;
      values[i] = alpha * (1.0 - ssim[i]) / 2.0 + (1.0 - alpha) * l1;
    }
  return ErrorMap(ref.height, ref.width, std::move(values), valid);
}

PhotometricGrad photometric_error_backward(const ImageBuffer& ref,
                                           const ImageBuffer& other,
                                           const std::vector<double>& upstream,
                                           double alpha) {
  check_pair(ref, other, "photometric backward");
  size_t n = static_cast<size_t>(ref.height) * ref.width;
  if (upstream.size() != n)
    throw DimensionMismatch("photometric backward: upstream size mismatch");

  int h = ref.height, w = ref.width, channels = ref.channels;
  PhotometricGrad grad;
  grad.d_ref.assign(ref.size(), 0.0);
  grad.d_other.assign(ref.size(), 0.0);

  // L1 part.
  double l1_w = (1.0 - alpha) / channels;
  if (l1_w != 0.0)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        size_t i = static_cast<size_t>(y) * w + x;
        if (upstream[i] == 0.0) continue;
        for (int ch = 0; ch < channels; ++ch) {
          double s = sgn(ref.at(y, x, ch) - other.at(y, x, ch));
          size_t k = ref.index(y, x, ch);
          grad.d_ref[k] += upstream[i] * l1_w * s;
          grad.d_other[k] -= upstream[i] * l1_w * s;
        }
      }

  // SSIM part: E contributes -alpha/2 per unit of channel-mean SSIM.
  if (alpha != 0.0) {
    double ssim_w = -alpha / (2.0 * channels);
    for (int ch = 0; ch < channels; ++ch) {
      SsimPlanes p = ssim_planes(ref, other, ch);
      std::vector<double> g_ma(n, 0.0), g_mb(n, 0.0), g_paa(n, 0.0),
          g_pbb(n, 0.0), g_pab(n, 0.0);
      for (size_t i = 0; i < n; ++i) {
        double u = upstream[i] * ssim_w;
        if (u == 0.0) continue;
        double ma = p.m_a[i], mb = p.m_b[i];
        double va = p.p_aa[i] - ma * ma;
        double vb = p.p_bb[i] - mb * mb;
        double cab = p.p_ab[i] - ma * mb;
        double A = 2.0 * ma * mb + kSsimC1;
        double B = 2.0 * cab + kSsimC2;
        double C = ma * ma + mb * mb + kSsimC1;
        double D = va + vb + kSsimC2;
        double icd = 1.0 / (C * D);
        double ab_icd = A * B * icd;
        g_ma[i] = u * (2.0 * mb * (B - A) * icd +
                       2.0 * ma * ab_icd * (1.0 / D - 1.0 / C));
        g_mb[i] = u * (2.0 * ma * (B - A) * icd +
                       2.0 * mb * ab_icd * (1.0 / D - 1.0 / C));
        g_paa[i] = u * (-ab_icd / D);
        g_pbb[i] = u * (-ab_icd / D);
        g_pab[i] = u * (2.0 * A * icd);
      }
      std::vector<double> Gma = box3_reflect_adjoint(g_ma, h, w);
      std::vector<double> Gmb = box3_reflect_adjoint(g_mb, h, w);
      std::vector<double> Gpaa = box3_reflect_adjoint(g_paa, h, w);
      std::vector<double> Gpbb = box3_reflect_adjoint(g_pbb, h, w);
      std::vector<double> Gpab = box3_reflect_adjoint(g_pab, h, w);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          size_t i = static_cast<size_t>(y) * w + x;
          size_t k = ref.index(y, x, ch);
          double av = ref.data[k], bv = other.data[k];
          grad.d_ref[k] += Gma[i] + 2.0 * av * Gpaa[i] + bv * Gpab[i];
          grad.d_other[k] += Gmb[i] + 2.0 * bv * Gpbb[i] + av * Gpab[i];
        }
    }
  }
  return grad;
}

ErrorMap min_reprojection(const std::vector<ErrorMap>& errors) {
  if (errors.empty()) throw EmptyInput("min_reprojection: no error maps");
  const ErrorMap& first = errors.front();
  for (const auto& e : errors)
    if (!e.same_shape(first))
      throw DimensionMismatch("min_reprojection: shapes differ");

  size_t n = first.values.size();
  std::vector<double> out(n, 0.0);
  std::vector<std::uint8_t> valid(n, 0);
  for (size_t i = 0; i < n; ++i) {
    double best = 0.0;
    bool any = false;
    for (const auto& e : errors) {
      if (!e.valid.values[i]) continue;
      if (!any || e.values[i] < best) best = e.values[i];
      any = true;
    }
    out[i] = any ? best : 0.0;
    valid[i] = any ? 1 : 0;
  }
  return ErrorMap(first.height, first.width, std::move(out),
                  BinaryMask(first.height, first.width, std::move(valid)));
}

std::vector<int> min_reprojection_argmin(const std::vector<ErrorMap>& errors) {
  if (errors.empty()) throw EmptyInput("min_reprojection: no error maps");
  size_t n = errors.front().values.size();
  std::vector<int> arg(n, -1);
  for (size_t i = 0; i < n; ++i) {
    double best = 0.0;
    for (size_t m = 0; m < errors.size(); ++m) {
      if (!errors[m].valid.values[i]) continue;
      if (arg[i] < 0 || errors[m].values[i] < best) {
        best = errors[m].values[i];
        arg[i] = static_cast<int>(m);
      }
    }
  }
  return arg;
}

BinaryMask auto_mask_from_errors(const ErrorMap& warped_error,
                                 const ErrorMap& identity_error) {
  if (!warped_error.same_shape(identity_error))
    throw DimensionMismatch("auto_mask: shapes differ");
  size_t n = warped_error.values.size();
  std::vector<std::uint8_t> bits(n, 0);
  for (size_t i = 0; i < n; ++i)
    bits[i] = (warped_error.valid.values[i] && identity_error.valid.values[i] &&
               warped_error.values[i] < identity_error.values[i])
                  ? 1
                  : 0;
  return BinaryMask(warped_error.height, warped_error.width, std::move(bits));
}

BinaryMask auto_mask(const ImageBuffer& ref, const ImageBuffer& src_unwarped,
                     const ImageBuffer& warped, const BinaryMask& valid,
                     double alpha) {
  BinaryMask all = BinaryMask::filled(ref.height, ref.width, 1);
  return auto_mask_from_errors(photometric_error(ref, warped, valid, alpha),
                               photometric_error(ref, src_unwarped, all, alpha));
}

double smoothness(const std::vector<double>& disparity, int h, int w,
                  const ImageBuffer& ref) {
  if (static_cast<size_t>(h) * w != disparity.size() || ref.height != h ||
      ref.width != w)
    throw DimensionMismatch("smoothness: shape mismatch");
  double mean = 0.0;
  for (double d : disparity) {
    if (!(d > 0.0))
      throw NonPositiveValue("smoothness: disparity must be positive");
    mean += d;
  }
  mean = mean / disparity.size() + 1e-7;

  double loss_x = 0.0, loss_y = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x + 1 < w; ++x) {
      size_t i = static_cast<size_t>(y) * w + x;
      double g = std::abs(disparity[i + 1] - disparity[i]) / mean;
      double edge = 0.0;
      for (int ch = 0; ch < ref.channels; ++ch)
        edge += std::abs(ref.at(y, x + 1, ch) - ref.at(y, x, ch));
      loss_x += g * std::exp(-edge / ref.channels);
    }
  for (int y = 0; y + 1 < h; ++y)
    for (int x = 0; x < w; ++x) {
      size_t i = static_cast<size_t>(y) * w + x;
      double g = std::abs(disparity[i + w] - disparity[i]) / mean;
      double edge = 0.0;
      for (int ch = 0; ch < ref.channels; ++ch)
        edge += std::abs(ref.at(y + 1, x, ch) - ref.at(y, x, ch));
      loss_y += g * std::exp(-edge / ref.channels);
    }
  double nx = static_cast<double>(h) * (w - 1);
  double ny = static_cast<double>(h - 1) * w;
  return (nx > 0 ? loss_x / nx : 0.0) + (ny > 0 ? loss_y / ny : 0.0);
}

std::vector<double> smoothness_backward(const std::vector<double>& disparity,
                                        int h, int w, const ImageBuffer& ref) {
  double mean_raw = 0.0;
  for (double d : disparity) mean_raw += d;
  double n = static_cast<double>(disparity.size());
  double mean = mean_raw / n + 1e-7;

  // d(loss)/d(norm) by stencil scatter, then the quotient rule for the
  // mean normalization.
  std::vector<double> u(disparity.size(), 0.0);
  double nx = static_cast<double>(h) * (w - 1);
  double ny = static_cast<double>(h - 1) * w;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x + 1 < w; ++x) {
      size_t i = static_cast<size_t>(y) * w + x;
      double diff = disparity[i + 1] - disparity[i];
      double edge = 0.0;
      for (int ch = 0; ch < ref.channels; ++ch)
        edge += std::abs(ref.at(y, x + 1, ch) - ref.at(y, x, ch));
      double s = sgn(diff) * std::exp(-edge / ref.channels) / nx;
      u[i + 1] += s;
      u[i] -= s;
    }
  for (int y = 0; y + 1 < h; ++y)
    for (int x = 0; x < w; ++x) {
      size_t i = static_cast<size_t>(y) * w + x;
      double diff = disparity[i + w] - disparity[i];
      double edge = 0.0;
      for (int ch = 0; ch < ref.channels; ++ch)
        edge += std::abs(ref.at(y + 1, x, ch) - ref.at(y, x, ch));
      double s = sgn(diff) * std::exp(-edge / ref.channels) / ny;
      u[i + w] += s;
      u[i] -= s;
    }

  double dot = 0.0;
  for (size_t i = 0; i < u.size(); ++i) dot += u[i] * disparity[i];
  std::vector<double> grad(disparity.size());
  for (size_t i = 0; i < grad.size(); ++i)
    grad[i] = u[i] / mean - dot / (mean * mean * n);
  return grad;
}

}  // namespace reflectdepth
