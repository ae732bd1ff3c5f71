#pragma once

#include <complex>
#include <vector>

namespace otlpf {

// Real discrete Fourier transform pair used by the spectral models.
//
// Forward:  xt[k] = (1/M) sum_m x[m] exp(-2*pi*i*k*m/M)   for k = 0..floor(M/2)
// Inverse:  x[m]  = xt[0] + 2*sum_{0<k<M/2} Re(xt[k] exp(2*pi*i*k*m/M))
//                   (+ xt[M/2]*(-1)^m when M is even)
//
// The pair is mutually inverse to machine precision. Zero and (for even M)
// Nyquist coefficients of a real field are real; the inverse only reads their
// real parts.
class RealDft {
 public:
  explicit RealDft(int size);

  int size() const { return size_; }
  // Number of retained coefficients, floor(M/2) + 1.
  int num_modes() const { return num_modes_; }

  // Scratch space for one concurrent transform. Each thread needs its own.
  struct Workspace {
    std::vector<std::complex<double>> buffer;
  };

  void forward(const double* x, std::complex<double>* xt, Workspace& ws) const;
  void inverse(const std::complex<double>* xt, double* x, Workspace& ws) const;

  // Convenience allocating forms.
  std::vector<std::complex<double>> forward(const std::vector<double>& x) const;
  std::vector<double> inverse(const std::vector<std::complex<double>>& xt) const;

 private:
  void fft_inplace(std::complex<double>* data, bool invert) const;

  int size_;
  int num_modes_;
  bool pow2_;
  std::vector<std::complex<double>> twiddle_fwd_;  // exp(-2*pi*i*j/M)
  std::vector<int> bitrev_;
};

}  // namespace otlpf
