#include "sgl/noise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sgl {

NoiseSpectrum NoiseSpectrum::degenerate_default(int n_modes, double alpha, int k_star) {
    NoiseSpectrum s;
    s.alpha = alpha;
    s.beta = alpha;
    s.c1 = 1.0;
    s.c2 = 1.0;
    s.k_star = k_star;
    s.q.assign(static_cast<std::size_t>(n_modes) + 1, 0.0);
    for (int k = k_star + 1; k <= n_modes; ++k) s.q[static_cast<std::size_t>(k)] = std::pow(k, -2.0 * alpha);
    return s;
}

std::string SpectrumViolation::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "violation = " << bound << '\n';
    if (k >= 0) os << "k = " << k << '\n';
    os << "value = " << value << '\n';
    os << "limit = " << limit << '\n';
    os << "message = " << message << '\n';
    return os.str();
}

std::optional<SpectrumViolation> validate(const NoiseSpectrum& spec) {
    auto fail = [](std::string bound, int k, double value, double limit, std::string msg) {
        return SpectrumViolation{std::move(bound), k, value, limit, std::move(msg)};
    };
    if (!(spec.alpha >= 2.0)) return fail("alpha_min", -1, spec.alpha, 2.0, "alpha must be >= 2");
    if (!(spec.beta > spec.alpha - 0.125 && spec.beta <= spec.alpha))
        return fail("beta_window", -1, spec.beta, spec.beta > spec.alpha ? spec.alpha : spec.alpha - 0.125,
                    "beta must lie in (alpha - 1/8, alpha]");
    if (!(spec.c1 > 0.0)) return fail("c1_positive", -1, spec.c1, 0.0, "C1 must be > 0");
    if (!(spec.c2 > 0.0)) return fail("c2_positive", -1, spec.c2, 0.0, "C2 must be > 0");
    if (spec.k_star < 0) return fail("k_star_nonnegative", -1, spec.k_star, 0.0, "k_star must be >= 0");
    if (spec.q.empty()) return fail("q_nonempty", -1, 0.0, 0.0, "spectrum needs at least q_0");
    for (std::size_t k = 0; k < spec.q.size(); ++k) {
        const double qk = spec.q[k];
        const int ki = static_cast<int>(k);
        if (!std::isfinite(qk) || qk < 0.0) return fail("q_nonnegative", ki, qk, 0.0, "q_k must be finite and >= 0");
        if (ki <= spec.k_star) continue;
        const double lower = spec.c1 * std::pow(ki, -2.0 * spec.alpha);
        const double upper = spec.c2 * std::pow(ki, -2.0 * spec.beta);
        if (qk < lower) return fail("lower_bound", ki, qk, lower, "C1 k^(-2 alpha) <= q_k violated");
        if (qk > upper) return fail("upper_bound", ki, qk, upper, "q_k <= C2 k^(-2 beta) violated");
    }
    return std::nullopt;
}

double convolution_step_variance(double q_k, int k, double h) {
    const double lk = mode_eigenvalue(k);
    // -expm1(-2 l h) keeps precision for small h.
    return q_k * q_k * (-std::expm1(-2.0 * lk * h)) / (2.0 * lk);
}

ConvolutionStepSampler::ConvolutionStepSampler(NoiseSpectrum spectrum, double h)
    : spectrum_(std::move(spectrum)), h_(h) {
    if (!(h > 0.0)) throw std::invalid_argument("convolution step needs h > 0");
    if (spectrum_.q.empty()) throw std::invalid_argument("noise spectrum is empty");
    const int n = spectrum_.n_modes();
    stddev_.resize(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k)
        stddev_[static_cast<std::size_t>(k)] =
            std::sqrt(convolution_step_variance(spectrum_.q[static_cast<std::size_t>(k)], k, h));
    const auto slots = static_cast<std::size_t>(2 * n + 1);
    decay_.resize(slots);
    slot_stddev_.resize(slots);
    for (std::size_t i = 0; i < slots; ++i) {
        const int k = SpectralField::mode_of_slot(i);
        decay_[i] = std::exp(-mode_eigenvalue(k) * h);
        slot_stddev_[i] = stddev_[static_cast<std::size_t>(k)];
    }
}

void ConvolutionStepSampler::sample(const StreamKey& stream, std::uint64_t step, std::span<double> out) const {
    const std::size_t slots = slot_stddev_.size();
    // Slot i always consumes normal number i of the step, whether or not it is
    // forced, so changing one q_k never shifts the draws of another mode.
    for (std::size_t i = 0; i < slots; i += 2) {
        const auto [z0, z1] = stream.normals(step, static_cast<std::uint32_t>(i / 2));
        out[i] = slot_stddev_[i] == 0.0 ? 0.0 : slot_stddev_[i] * z0;
        if (i + 1 < slots) out[i + 1] = slot_stddev_[i + 1] == 0.0 ? 0.0 : slot_stddev_[i + 1] * z1;
    }
}

SpectralField ConvolutionStepSampler::sample(const StreamKey& stream, std::uint64_t step) const {
    SpectralField out(n_modes());
    sample(stream, step, out.coeffs());
    return out;
}

void ConvolutionStepSampler::advance(SpectralField& convolution, std::span<const double> increment) const {
    auto c = convolution.coeffs();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = decay_[i] * c[i] + increment[i];
}

SupGaussianEstimate sup_gaussian_check(const NoiseSpectrum& spec, double t, double p, std::size_t n_samples,
                                       std::uint64_t seed, double h) {
    if (!(t > 0.0)) throw std::invalid_argument("sup_gaussian_check needs t > 0");
    if (!(p >= 1.0)) throw std::invalid_argument("sup_gaussian_check needs p >= 1");
    if (n_samples < 2) throw std::invalid_argument("sup_gaussian_check needs at least 2 samples");
    const ConvolutionStepSampler sampler(spec, h);
    const int n = spec.n_modes();
    const auto steps = static_cast<std::uint64_t>(std::llround(t / h));
    const int grid = std::max(8 * n, 2 * n + 1);
    const TrigTransform transform(n, grid);
    std::vector<double> values(static_cast<std::size_t>(grid));
    std::vector<double> increment(static_cast<std::size_t>(2 * n + 1));

    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const StreamKey stream(seed, s);
        SpectralField w(n);
        double sup = 0.0;
        for (std::uint64_t step = 0; step < steps; ++step) {
            sampler.sample(stream, step, increment);
            sampler.advance(w, increment);
            transform.synthesize(w.coeffs(), values);
            for (double v : values) sup = std::max(sup, std::abs(v));
        }
        const double x = std::pow(sup, p);
        sum += x;
        sum_sq += x * x;
    }
    const double nn = static_cast<double>(n_samples);
    SupGaussianEstimate est;
    est.n_samples = n_samples;
    est.mean = sum / nn;
    const double var = std::max(0.0, (sum_sq - nn * est.mean * est.mean) / (nn - 1.0));
    est.std_error = std::sqrt(var / nn);
    est.ci_low = est.mean - 1.96 * est.std_error;
    est.ci_high = est.mean + 1.96 * est.std_error;
    return est;
}

}  // namespace sgl
