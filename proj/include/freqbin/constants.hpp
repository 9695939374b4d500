#pragma once

namespace freqbin {

// Exact SI value, used everywhere a propagation speed is needed.
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Gaussian FWHM = 2*sqrt(2*ln 2) * sigma.
inline constexpr double kFwhmPerSigma = 2.354820045030949327;

inline constexpr double fwhm_to_sigma(double fwhm) { return fwhm / kFwhmPerSigma; }
inline constexpr double sigma_to_fwhm(double sigma) { return sigma * kFwhmPerSigma; }

inline constexpr double kPicosecond = 1e-12;   // s
inline constexpr double kFemtosecondsPerPicosecond = 1000.0;

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace freqbin
