#include "nobleqm/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nobleqm {

double exponential_amplitude_constant(double T, double photons)
{
    return photons / (std::sqrt(2.0 * T) * (1.0 - std::exp(-3.0)));
}

Envelope exponential_input(double T, double photons, double dt)
{
    if (!(T > 0.0) || !(photons >= 0.0))
        throw ResolutionError("exponential_input: need T > 0 and photons >= 0");
    if (!(dt > 0.0) || dt > T / 100.0 * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "exponential_input: dt = " << dt << " s is coarser than T/100 = " << T / 100.0;
        throw ResolutionError(os.str());
    }
    const auto intervals = static_cast<std::size_t>(std::ceil(3.0 * T / dt - 1e-9));
    const double step = 3.0 * T / static_cast<double>(intervals);
    const double A = exponential_amplitude_constant(T, photons);

    Envelope env = Envelope::zeros(-2.0 * T, step, intervals + 1);
    for (std::size_t i = 0; i < env.size(); ++i) {
        const double t = env.time(i);
        env.samples[i] = std::sqrt(A * std::sqrt(2.0 / T) * std::exp((t - T) / T));
    }
    const double n = photon_number(env);
    if (n > 0.0) {
        const double fix = std::sqrt(photons / n);
        for (auto &v : env.samples) v *= fix;
    }
    return env;
}

double photon_number(const Envelope &env)
{
    const std::size_t n = env.size();
    if (n < 2) return 0.0;
    double acc = 0.5 * (std::norm(env.samples.front()) + std::norm(env.samples.back()));
    for (std::size_t i = 1; i + 1 < n; ++i) acc += std::norm(env.samples[i]);
    return acc * env.dt;
}

cplx mode_overlap(const Envelope &a, const Envelope &b)
{
    require_same_grid(a, b, "mode_overlap");
    const std::size_t n = a.size();
    if (n < 2) return {};
    cplx acc = 0.5 * (std::conj(a.samples.front()) * b.samples.front() +
                      std::conj(a.samples.back()) * b.samples.back());
    for (std::size_t i = 1; i + 1 < n; ++i) acc += std::conj(a.samples[i]) * b.samples[i];
    return acc * a.dt;
}

Envelope time_reverse(const Envelope &env)
{
    Envelope out = env;
    std::reverse(out.samples.begin(), out.samples.end());
    for (auto &v : out.samples) v = std::conj(v);
    return out;
}

Envelope scaled(const Envelope &env, cplx factor)
{
    Envelope out = env;
    for (auto &v : out.samples) v *= factor;
    return out;
}

} // namespace nobleqm
