#include <cmath>
#include <numbers>

#include "bctrace/align.hpp"
#include "bctrace/error.hpp"

namespace bctrace::align {
namespace {

using cd = std::complex<double>;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void radix2(std::vector<cd>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    // Twiddles computed directly per index to avoid drift from repeated
    // multiplication.
    std::vector<cd> w(half);
    for (std::size_t k = 0; k < half; ++k) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(len);
      w[k] = {std::cos(angle), std::sin(angle)};
    }
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const cd u = a[i + k];
        const cd v = a[i + k + half] * w[k];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

// Chirp-z reformulation of an arbitrary-length DFT as a power-of-two
// circular convolution.
void bluestein(std::vector<cd>& a, bool inverse) {
  const std::size_t n = a.size();
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<cd> chirp(n);
  const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2N keeps the angle small.
    const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) % two_n;
    const double angle = sign * std::numbers::pi * static_cast<double>(k2) /
                         static_cast<double>(n);
    chirp[k] = {std::cos(angle), std::sin(angle)};
  }
  std::vector<cd> u(m), v(m);
  for (std::size_t k = 0; k < n; ++k) u[k] = a[k] * chirp[k];
  v[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    v[k] = std::conj(chirp[k]);
    v[m - k] = std::conj(chirp[k]);
  }
  radix2(u, false);
  radix2(v, false);
  for (std::size_t i = 0; i < m; ++i) u[i] *= v[i];
  radix2(u, true);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = u[k] * scale * chirp[k];
}

}  // namespace

void fft(std::vector<cd>& data, bool inverse) {
  if (data.size() <= 1) return;
  if (is_power_of_two(data.size())) {
    radix2(data, inverse);
  } else {
    bluestein(data, inverse);
  }
}

Spectrum dft(std::span<const double> signal) {
  if (signal.empty()) throw Error(ErrorCode::kEmptyInput, "DFT of an empty signal");
  std::vector<cd> a(signal.begin(), signal.end());
  fft(a, false);
  Spectrum s;
  s.cos_part.resize(a.size());
  s.sin_part.resize(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    s.cos_part[k] = a[k].real();
    s.sin_part[k] = a[k].imag();
  }
  return s;
}

double phase_cosine_similarity(const Spectrum& x, const Spectrum& y) {
  if (x.size() != y.size() || x.sin_part.size() != x.size() ||
      y.sin_part.size() != y.size()) {
    throw Error(ErrorCode::kLengthMismatch, "spectra differ in length");
  }
  double dot = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    dot += x.cos_part[k] * y.cos_part[k] + x.sin_part[k] * y.sin_part[k];
    xx += x.cos_part[k] * x.cos_part[k] + x.sin_part[k] * x.sin_part[k];
    yy += y.cos_part[k] * y.cos_part[k] + y.sin_part[k] * y.sin_part[k];
  }
  if (xx == 0.0 || yy == 0.0) {
    throw Error(ErrorCode::kZeroNorm, "cosine similarity of an all-zero spectrum");
  }
  return dot / (std::sqrt(xx) * std::sqrt(yy));
}

}  // namespace bctrace::align
