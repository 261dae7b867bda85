#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <variant>
#include <vector>

namespace flaf {

struct WhiteGaussian {};
struct ColoredAr1 {
    double alpha = 0.8;
};
struct WavFile {
    std::filesystem::path path;
};
using Source = std::variant<WhiteGaussian, ColoredAr1, WavFile>;

struct NoDistortion {};
struct SoftClip {
    double zeta = 0.2;
};
struct Composite {};
using Nonlinearity = std::variant<NoDistortion, SoftClip, Composite>;

struct RirSpec {
    double t60_ms = 150.0; // +inf gives a flat envelope
    std::size_t length = 300;
    double fs = 8000.0;
    std::uint64_t seed = 1;

    void validate() const;
};

/// From `start` on, the source is multiplied by `gain`.
struct GainStep {
    std::size_t start = 0;
    double gain = 1.0;
};

struct ScenarioConfig {
    Source source = WhiteGaussian{};
    Nonlinearity nonlinearity = SoftClip{};
    RirSpec rir;
    double snr_db = 20.0; // +inf disables the additive noise
    std::size_t duration_samples = 0; // 0 with a WAV source: whole file
    std::uint64_t seed = 1;
    std::vector<GainStep> volume_schedule;

    void validate() const;
};

struct ScenarioStream {
    std::vector<double> x; // far-end (loudspeaker) signal
    std::vector<double> d; // microphone signal, s + v
    std::vector<double> s; // echo
    std::vector<double> v; // noise
    std::vector<double> rir;
};

double soft_clip(double x, double zeta);
double composite_nl(double x_now, double x_lag4);
std::vector<double> ar1_colorize(std::span<const double> white, double alpha);
double rir_envelope(std::size_t n, double t60_ms, double fs);
std::vector<double> generate_rir(const RirSpec& spec);
/// Gain in effect at sample n under a schedule (1 before the first step).
double scheduled_gain(std::span<const GainStep> schedule, std::size_t n);
/// Causal convolution truncated to the input length.
std::vector<double> convolve_causal(std::span<const double> x, std::span<const double> h);

ScenarioStream run_scenario(const ScenarioConfig& config);

} // namespace flaf
