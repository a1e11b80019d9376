#include "waveletgan/rng.hpp"

#include "waveletgan/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace wg {

std::size_t Rng::uniform_index(std::size_t n) {
    if (n == 0) throw ParameterError("uniform_index: n must be positive");
    return static_cast<std::size_t>(engine_() % n);
}

double Rng::gaussian() {
    // u1 in (0,1] keeps the log finite.
    double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void Rng::fill_gaussian(double* out, std::size_t n, double stddev) {
    for (std::size_t i = 0; i < n; ++i) out[i] = stddev * gaussian();
}

std::string Rng::state_string() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::set_state_string(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    if (is.fail()) throw FormatError("rng: malformed engine state string");
}

} // namespace wg
