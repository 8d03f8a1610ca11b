#pragma once

// Minimal iterative radix-2 FFT, enough for the convolution-style filtering
// done on zero-padded sinogram rows (whose padded length is always a power
// of two).

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dfdreg {

// In-place FFT of a power-of-two-length complex vector.  `inverse` applies
// the conjugate transform including the 1/n normalization, so
// fft(v); ifft(v) restores v.
inline void fft_inplace(std::vector<std::complex<double>>& v, bool inverse = false) {
    const std::size_t n = v.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft_inplace: length must be a power of two");
    if (n == 1) return;

    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }

    const double base_sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = base_sign * 2.0 * 3.14159265358979323846 /
                           static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> even = v[i + k];
                const std::complex<double> odd = v[i + k + len / 2] * w;
                v[i + k] = even + odd;
                v[i + k + len / 2] = even - odd;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& x : v) x *= scale;
    }
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace dfdreg
