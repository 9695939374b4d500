#include "freqbin/qstate.hpp"

#include <cmath>
#include <stdexcept>

#include "freqbin/constants.hpp"

namespace freqbin {

FrequencyBin::FrequencyBin(double omega_center_, double sigma_)
    : omega_center(omega_center_), sigma(sigma_) {
  if (!(omega_center > 0.0)) {
    throw std::invalid_argument("FrequencyBin: omega_center must be > 0");
  }
  if (!(sigma >= 0.0)) {
    throw std::invalid_argument("FrequencyBin: sigma must be >= 0");
  }
}

BinPair::BinPair(FrequencyBin b0, FrequencyBin b1) : bin0(b0), bin1(b1) {
  if (!(bin1.omega_center >= bin0.omega_center)) {
    throw std::invalid_argument("BinPair: bin1 must not lie below bin0");
  }
}

FBinQubit::FBinQubit(BinPair pair, std::complex<double> a0,
                     std::complex<double> a1)
    : pair_(pair), a0_(a0), a1_(a1) {
  const double norm = std::sqrt(std::norm(a0_) + std::norm(a1_));
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::invalid_argument("FBinQubit: amplitude vector must be nonzero");
  }
  a0_ /= norm;
  a1_ /= norm;
  norm_factor_ = norm;
}

FBinQubit FBinQubit::balanced(BinPair pair, double relative_phase) {
  return FBinQubit(pair, {1.0, 0.0}, std::polar(1.0, relative_phase));
}

double FBinQubit::relative_phase() const {
  if (std::abs(a0_) == 0.0 || std::abs(a1_) == 0.0) return 0.0;
  return std::arg(a1_) - std::arg(a0_);
}

VisibilityFactors::VisibilityFactors(double vx, double vz)
    : v_x_eps(vx), v_z_eps(vz) {
  if (!(vx >= 0.0 && vx <= 1.0) || !(vz >= 0.0 && vz <= 1.0)) {
    throw std::invalid_argument("VisibilityFactors: values must be in [0,1]");
  }
}

double jitter_sigma_eff(double delta_t, JitterConvention convention) {
  return convention == JitterConvention::fwhm ? delta_t
                                              : fwhm_to_sigma(delta_t);
}

double bin_overlap(const BinPair& pair) {
  const double s0 = pair.bin0.sigma;
  const double s1 = pair.bin1.sigma;
  const double dw = pair.delta_omega();
  const double ss = s0 * s0 + s1 * s1;
  if (ss == 0.0) {
    // Delta-function bins: unity only for identical centres.
    return dw == 0.0 ? 1.0 : 0.0;
  }
  return std::sqrt(2.0 * s0 * s1 / ss) * std::exp(-dw * dw / (4.0 * ss));
}

double beat_visibility_x(const FBinQubit& q, const VisibilityFactors& f) {
  const double m0 = std::abs(q.a0());
  const double m1 = std::abs(q.a1());
  return 2.0 * m0 * m1 / (m0 * m0 + m1 * m1) * f.v_x_eps;
}

namespace {

// Temporal amplitude E(t) of one Gaussian packet, by composite Simpson
// integration of its spectrum: E(t) = int dx (2 pi s^2)^{-1/4}
// exp(-x^2/(4 s^2)) cos(x t). The integrand is even, so integrate half.
double packet_amplitude_quadrature(double sigma, double t) {
  // Truncation at w sigma leaves an absolute tail ~exp(-w^2/4); 12 sigma
  // keeps it below the envelope even a few decay times out.
  const double half_width = 12.0 * sigma;
  const int n = 1024;  // panels; integrand is smooth and almost band-limited
  const double h = half_width / n;
  const double prefactor = std::pow(2.0 * kPi * sigma * sigma, -0.25);
  auto integrand = [&](double x) {
    return std::exp(-x * x / (4.0 * sigma * sigma)) * std::cos(x * t);
  };
  double sum = integrand(0.0) + integrand(half_width);
  for (int i = 1; i < n; ++i) {
    sum += integrand(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return 2.0 * prefactor * sum * h / 3.0;
}

}  // namespace

double beat_envelope(const FBinQubit& q, double t, EnvelopeModel model) {
  const double s0 = q.pair().bin0.sigma;
  const double s1 = q.pair().bin1.sigma;
  if (s0 == 0.0 && s1 == 0.0) return 1.0;
  if (model == EnvelopeModel::quadrature && s0 > 0.0 && s1 > 0.0) {
    const double e0 = packet_amplitude_quadrature(s0, t);
    const double e1 = packet_amplitude_quadrature(s1, t);
    const double p0 = std::norm(q.a0()) * e0 * e0;
    const double p1 = std::norm(q.a1()) * e1 * e1;
    if (p0 + p1 == 0.0) return 0.0;
    return e0 * e1 / (p0 + p1);
  }
  const double num =
      std::sqrt(2.0 * s0 * s1) * std::exp(-t * t * (s0 * s0 + s1 * s1));
  const double den = s0 * std::exp(-2.0 * t * t * s0 * s0) +
                     s1 * std::exp(-2.0 * t * t * s1 * s1);
  if (den == 0.0) return 0.0;
  return num / den;
}

double beat_signal(const FBinQubit& q, const VisibilityFactors& f, double t,
                   EnvelopeModel model) {
  double v = beat_visibility_x(q, f) * beat_envelope(q, t, model);
  if (v > 1.0) v = 1.0;
  if (v < 0.0) v = 0.0;
  const double theta = q.pair().delta_omega() * t + q.relative_phase();
  return 0.5 * (1.0 + v * std::cos(theta));
}

double visibility_z(const BinPair& pair, const VisibilityFactors& f) {
  const double dw = pair.delta_omega();
  if (!(dw > 0.0)) {
    throw std::domain_error("visibility_z: delta_omega must be > 0");
  }
  const double s0 = pair.bin0.sigma;
  const double s1 = pair.bin1.sigma;
  const double pi4 = kPi * kPi * kPi * kPi;
  return f.v_z_eps * std::exp(-2.0 * pi4 * (s0 * s0 + s1 * s1) / (dw * dw));
}

double jitter_visibility(double v0, double delta_omega, double delta_t,
                         JitterConvention convention) {
  if (!(v0 >= 0.0 && v0 <= 1.0)) {
    throw std::invalid_argument("jitter_visibility: v0 must be in [0,1]");
  }
  if (!(delta_t >= 0.0)) {
    throw std::invalid_argument("jitter_visibility: delta_t must be >= 0");
  }
  const double x = delta_omega * jitter_sigma_eff(delta_t, convention);
  return v0 * std::exp(-0.5 * x * x);
}

std::vector<std::pair<double, double>> visibility_vs_spacing_curve(
    double v0, double delta_t, std::span<const double> delta_omegas,
    JitterConvention convention) {
  std::vector<std::pair<double, double>> curve;
  curve.reserve(delta_omegas.size());
  double prev = 0.0;
  for (double dw : delta_omegas) {
    if (!(dw > 0.0)) {
      throw std::invalid_argument(
          "visibility_vs_spacing_curve: separations must be > 0");
    }
    if (dw < prev) {
      throw std::invalid_argument(
          "visibility_vs_spacing_curve: separations must be sorted");
    }
    prev = dw;
    curve.emplace_back(dw, jitter_visibility(v0, dw, delta_t, convention));
  }
  return curve;
}

}  // namespace freqbin
