#include "ddafl/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "ddafl/errors.hpp"

namespace ddafl {

namespace {

constexpr double kSeriesLimit = 12.0;

double j0_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (std::abs(term) < 1e-17 * std::max(1.0, std::abs(sum))) break;
  }
  return sum;
}

// J0(x) ~ sqrt(2/(pi x)) [P cos(chi) - Q sin(chi)], chi = x - pi/4.
// P and Q are summed until the asymptotic terms stop shrinking.
double j0_hankel(double x) {
  const double inv8x = 1.0 / (8.0 * x);
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;  // a_k / x^k with sign folded in
  double last = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(odd * odd) * inv8x / k;
    const double mag = std::abs(term);
    if (mag >= last || mag < 1e-18) break;
    last = mag;
    // even k feed P with sign (-1)^(k/2), odd k feed Q with (-1)^((k-1)/2)
    switch (k % 4) {
      case 0: p += term; break;
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
    }
  }
  const double chi = x - 0.25 * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

void LinkBudget::validate() const {
  if (!(bandwidth_hz > 0.0) || !(tx_power_w > 0.0) || !(noise_power_w > 0.0) ||
      !(path_loss_exp > 0.0)) {
    throw std::invalid_argument("link budget fields must be strictly positive");
  }
}

double advance_position(double start_x, double speed, std::int64_t slot_index,
                        double slot_duration) {
  return start_x + speed * static_cast<double>(slot_index) * slot_duration;
}

double distance_to_rsu(const Position3& vehicle, const Position3& rsu) {
  return std::hypot(vehicle.x - rsu.x, vehicle.y - rsu.y, vehicle.z - rsu.z);
}

double cos_uplink_angle(const Position3& vehicle, const Position3& rsu) {
  const double d = distance_to_rsu(vehicle, rsu);
  if (!(d > 0.0)) throw GeometryError("vehicle and RSU antenna coincide");
  return std::clamp((rsu.x - vehicle.x) / d, -1.0, 1.0);
}

double doppler_freq(double speed, double wavelength, double cos_theta) {
  return speed / wavelength * cos_theta;
}

double bessel_j0(double x) {
  const double ax = std::abs(x);
  return ax <= kSeriesLimit ? j0_series(ax) : j0_hankel(ax);
}

double channel_correlation(double doppler_hz, double slot_duration) {
  return bessel_j0(2.0 * std::numbers::pi * doppler_hz * slot_duration);
}

ChannelState evolve_channel(const ChannelState& prev, std::complex<double> innovation) {
  ChannelState next = prev;
  const double rho = prev.rho;
  next.gain = rho * prev.gain + innovation * std::sqrt(std::max(0.0, 1.0 - rho * rho));
  return next;
}

double transmission_rate(const LinkBudget& link, std::complex<double> gain, double distance) {
  if (!(distance > 0.0)) throw GeometryError("transmission distance must be positive");
  const double power_gain = std::norm(gain);
  const double snr =
      link.tx_power_w * power_gain * std::pow(distance, -link.path_loss_exp) / link.noise_power_w;
  return link.bandwidth_hz * std::log2(1.0 + snr);
}

}  // namespace ddafl
