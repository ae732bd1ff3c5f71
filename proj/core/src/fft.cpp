#include "otlpf/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace otlpf {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace

RealDft::RealDft(int size) : size_(size), num_modes_(size / 2 + 1), pow2_(is_pow2(size)) {
  if (size < 2) throw std::invalid_argument("RealDft: size must be >= 2");
  twiddle_fwd_.resize(size_);
  for (int j = 0; j < size_; ++j) {
    const double angle = -kTwoPi * j / size_;
    twiddle_fwd_[j] = {std::cos(angle), std::sin(angle)};
  }
  if (pow2_) {
    bitrev_.resize(size_);
    int log2n = 0;
    while ((1 << log2n) < size_) ++log2n;
    for (int i = 0; i < size_; ++i) {
      int rev = 0;
      for (int b = 0; b < log2n; ++b) {
        if (i & (1 << b)) rev |= 1 << (log2n - 1 - b);
      }
      bitrev_[i] = rev;
    }
  }
}

void RealDft::fft_inplace(std::complex<double>* data, bool invert) const {
  const int n = size_;
  for (int i = 0; i < n; ++i) {
    const int j = bitrev_[i];
    if (i < j) std::swap(data[i], data[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const int stride = n / len;
    for (int start = 0; start < n; start += len) {
      for (int k = 0; k < len / 2; ++k) {
        std::complex<double> w = twiddle_fwd_[static_cast<std::size_t>(k) * stride];
        if (invert) w = std::conj(w);
        const std::complex<double> u = data[start + k];
        const std::complex<double> v = data[start + k + len / 2] * w;
        data[start + k] = u + v;
        data[start + k + len / 2] = u - v;
      }
    }
  }
}

void RealDft::forward(const double* x, std::complex<double>* xt, Workspace& ws) const {
  const int n = size_;
  if (pow2_) {
    ws.buffer.resize(n);
    for (int m = 0; m < n; ++m) ws.buffer[m] = {x[m], 0.0};
    fft_inplace(ws.buffer.data(), /*invert=*/false);
    const double scale = 1.0 / n;
    for (int k = 0; k < num_modes_; ++k) xt[k] = ws.buffer[k] * scale;
  } else {
    // Direct evaluation; only exercised for small non power-of-two sizes.
    const double scale = 1.0 / n;
    for (int k = 0; k < num_modes_; ++k) {
      std::complex<double> acc{0.0, 0.0};
      for (int m = 0; m < n; ++m) {
        acc += x[m] * twiddle_fwd_[(static_cast<long long>(k) * m) % n];
      }
      xt[k] = acc * scale;
    }
  }
  // A real field has real zero/Nyquist coefficients; enforce exactly.
  xt[0] = {xt[0].real(), 0.0};
  if (size_ % 2 == 0) xt[num_modes_ - 1] = {xt[num_modes_ - 1].real(), 0.0};
}

void RealDft::inverse(const std::complex<double>* xt, double* x, Workspace& ws) const {
  const int n = size_;
  if (pow2_) {
    ws.buffer.resize(n);
    ws.buffer[0] = {xt[0].real(), 0.0};
    for (int k = 1; k < n / 2; ++k) {
      ws.buffer[k] = xt[k];
      ws.buffer[n - k] = std::conj(xt[k]);
    }
    ws.buffer[n / 2] = {xt[n / 2].real(), 0.0};
    fft_inplace(ws.buffer.data(), /*invert=*/true);
    for (int m = 0; m < n; ++m) x[m] = ws.buffer[m].real();
  } else {
    const int half = (n - 1) / 2;
    const bool even = n % 2 == 0;
    for (int m = 0; m < n; ++m) {
      double acc = xt[0].real();
      for (int k = 1; k <= half; ++k) {
        const std::complex<double> w =
            std::conj(twiddle_fwd_[(static_cast<long long>(k) * m) % n]);
        acc += 2.0 * (xt[k] * w).real();
      }
      if (even) acc += xt[n / 2].real() * (m % 2 == 0 ? 1.0 : -1.0);
      x[m] = acc;
    }
  }
}

std::vector<std::complex<double>> RealDft::forward(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != size_) {
    throw std::invalid_argument("RealDft::forward: size mismatch");
  }
  std::vector<std::complex<double>> xt(num_modes_);
  Workspace ws;
  forward(x.data(), xt.data(), ws);
  return xt;
}

std::vector<double> RealDft::inverse(const std::vector<std::complex<double>>& xt) const {
  if (static_cast<int>(xt.size()) != num_modes_) {
    throw std::invalid_argument("RealDft::inverse: size mismatch");
  }
  std::vector<double> x(size_);
  Workspace ws;
  inverse(xt.data(), x.data(), ws);
  return x;
}

}  // namespace otlpf
