#pragma once

#include <complex>
#include <cstdint>

namespace ddafl {

struct Position3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// Per-vehicle fading state. gain is the complex AR(1) channel coefficient;
// rho the slot-to-slot correlation; doppler_hz the magnitude of the Doppler
// shift that produced rho.
struct ChannelState {
  std::complex<double> gain{1.0, 0.0};
  double rho = 1.0;
  double doppler_hz = 0.0;
};

struct LinkBudget {
  double bandwidth_hz = 1000.0;
  double tx_power_w = 0.25;
  double noise_power_w = 1e-12;
  double path_loss_exp = 2.0;

  // Throws std::invalid_argument unless every field is strictly positive.
  void validate() const;
};

// x-coordinate after slot_index slots of straight-line travel along +x.
double advance_position(double start_x, double speed, std::int64_t slot_index,
                        double slot_duration);

double distance_to_rsu(const Position3& vehicle, const Position3& rsu);

// Cosine of the angle between the motion direction (1,0,0) and the uplink
// direction rsu - vehicle. Throws GeometryError for coincident points.
double cos_uplink_angle(const Position3& vehicle, const Position3& rsu);

// Signed Doppler shift; negative when the vehicle recedes from the RSU.
double doppler_freq(double speed, double wavelength, double cos_theta);

// Zeroth-order Bessel function of the first kind. Power series for
// |x| <= 12, Hankel asymptotic expansion beyond.
double bessel_j0(double x);

// Jakes correlation J0(2 pi f_d T) between consecutive slots.
double channel_correlation(double doppler_hz, double slot_duration);

// One AR(1) step: gain' = rho * gain + sqrt(1 - rho^2) * innovation.
// The returned state keeps prev.rho and prev.doppler_hz; callers refresh
// them from the new geometry before the next step.
ChannelState evolve_channel(const ChannelState& prev, std::complex<double> innovation);

// Shannon uplink rate in bit/s, using |gain|^2 as the power gain.
double transmission_rate(const LinkBudget& link, std::complex<double> gain, double distance);

}  // namespace ddafl
