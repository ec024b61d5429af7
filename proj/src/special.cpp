#include "fracnoether/special.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "fracnoether/error.hpp"

namespace fracnoether {

namespace {
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoeff{
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
}  // namespace

double gamma(double x) {
  if (!(x > 0) || !std::isfinite(x))
    throw ValidationError("gamma requires a finite positive argument, got " + std::to_string(x));
  // the series is accurate for x >= 1/2; lift smaller arguments by recurrence
  if (x < 0.5) return gamma(x + 1.0) / x;

  const double z = x - 1.0;
  double sum = kLanczosCoeff[0];
  for (std::size_t i = 1; i < kLanczosCoeff.size(); ++i) sum += kLanczosCoeff[i] / (z + static_cast<double>(i));
  const double t = z + kLanczosG + 0.5;
  return std::sqrt(2.0 * std::numbers::pi) * std::exp((z + 0.5) * std::log(t) - t) * sum;
}

}  // namespace fracnoether
