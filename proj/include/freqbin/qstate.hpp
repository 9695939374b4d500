#pragma once

#include <complex>
#include <span>
#include <utility>
#include <vector>

namespace freqbin {

// One spectral mode: a Gaussian wave packet centred at omega_center with
// bandwidth standard deviation sigma (both rad/s).
struct FrequencyBin {
  double omega_center = 0.0;  // rad/s, > 0
  double sigma = 0.0;         // rad/s, >= 0

  FrequencyBin() = default;
  FrequencyBin(double omega_center_, double sigma_);
};

// Ordered pair of bins encoding logical 0 (lower) and 1 (upper). Equal
// centres are tolerated so overlap studies can scan through zero
// separation; operations that need a strictly positive separation check it
// themselves.
struct BinPair {
  FrequencyBin bin0;
  FrequencyBin bin1;

  BinPair(FrequencyBin b0, FrequencyBin b1);
  double delta_omega() const { return bin1.omega_center - bin0.omega_center; }
};

// Two-bin superposition state. Construction renormalizes the amplitudes
// (callers usually specify ratios); the applied factor is retained so the
// raw scale is not lost. The zero vector is rejected.
class FBinQubit {
 public:
  FBinQubit(BinPair pair, std::complex<double> a0, std::complex<double> a1);

  static FBinQubit balanced(BinPair pair, double relative_phase = 0.0);

  const BinPair& pair() const { return pair_; }
  std::complex<double> a0() const { return a0_; }
  std::complex<double> a1() const { return a1_; }
  // Factor the raw amplitudes were divided by to reach unit norm.
  double norm_factor() const { return norm_factor_; }
  // arg(a1) - arg(a0); enters the beat as a phase offset.
  double relative_phase() const;

 private:
  BinPair pair_;
  std::complex<double> a0_;
  std::complex<double> a1_;
  double norm_factor_ = 1.0;
};

// Basis-dependent visibility penalties from mode mismatch and other
// experimental imperfections. Both in [0,1].
struct VisibilityFactors {
  double v_x_eps = 1.0;
  double v_z_eps = 1.0;

  VisibilityFactors() = default;
  VisibilityFactors(double vx, double vz);
};

// Finite-bandwidth beat envelope model. The closed-form expression and the
// numerical quadrature over the spectral packets disagree by a factor
// sqrt(2) at t=0 for equal bandwidths; both are kept side by side and the
// choice is explicit. See beat_envelope.
enum class EnvelopeModel { closed_form, quadrature };

// How a quoted system-jitter figure enters the Gaussian degradation factor.
// fwhm (default): the quoted FWHM is plugged into the exponent directly;
// this is the reading that reproduces the measured detector-series
// visibilities. stddev: the FWHM is first converted to the Gaussian
// standard deviation (strict reading). The Monte Carlo simulator draws
// timestamp jitter with the same effective sigma, so simulated and
// analytic visibilities agree under either convention.
enum class JitterConvention { fwhm, stddev };

double jitter_sigma_eff(double delta_t, JitterConvention convention);

// Spectral overlap <bin0|bin1> of the two Gaussian packets, in [0,1].
// Delta-function bins (sigma0 = sigma1 = 0) give 1 at zero separation and
// 0 otherwise.
double bin_overlap(const BinPair& pair);

// Beat visibility of the state before any timing effects:
// 2|a0 a1| / (|a0|^2 + |a1|^2) * v_x_eps.
double beat_visibility_x(const FBinQubit& q, const VisibilityFactors& f);

// Dimensionless factor multiplying the monochromatic beat visibility to
// account for finite bandwidth, evaluated at wave-packet time t.
//   closed_form:  sqrt(2 s0 s1) e^{-t^2(s0^2+s1^2)}
//                 / (s0 e^{-2 t^2 s0^2} + s1 e^{-2 t^2 s1^2})
//   quadrature:   E0(t) E1(t) / (|a0|^2 E0(t)^2 + |a1|^2 E1(t)^2), with
//                 E_i the numerically integrated temporal amplitude of
//                 packet i.
// Both reduce to 1 when sigma0 = sigma1 = 0. For equal nonzero bandwidths
// the closed form evaluates to 1/sqrt(2) while the quadrature gives 1;
// the discrepancy is reported by the tests, not hidden.
double beat_envelope(const FBinQubit& q, double t,
                     EnvelopeModel model = EnvelopeModel::closed_form);

// Relative intensity 1/2 (1 + v'(t) cos(delta_omega t + phase)), in [0,1].
// Averages to 1/2 over a beat period in the monochromatic case.
double beat_signal(const FBinQubit& q, const VisibilityFactors& f, double t,
                   EnvelopeModel model = EnvelopeModel::closed_form);

// Demultiplexer visibility including the finite-bandwidth phase spread:
// v_z_eps * exp(-2 pi^4 (s0^2 + s1^2) / delta_omega^2). Requires a
// strictly positive separation.
double visibility_z(const BinPair& pair, const VisibilityFactors& f);

// Beat visibility degraded by total system timing jitter delta_t:
// v0 * exp(-(delta_omega * sigma_eff)^2 / 2). Components combine in
// quadrature upstream (combine_jitter_fwhm).
double jitter_visibility(double v0, double delta_omega, double delta_t,
                         JitterConvention convention = JitterConvention::fwhm);

// Pointwise jitter_visibility over a sweep of bin separations; returns
// (delta_omega, visibility) samples. Empty input gives an empty curve.
std::vector<std::pair<double, double>> visibility_vs_spacing_curve(
    double v0, double delta_t, std::span<const double> delta_omegas,
    JitterConvention convention = JitterConvention::fwhm);

}  // namespace freqbin
