#pragma once

#include <string>

#include "sfanc/signal.hpp"

namespace sfanc {

// 16-bit signed PCM, mono, 16 kHz only. Samples are scaled to [-1, 1) by
// dividing by 32768. Anything else raises DataError naming the property.
Signal read_wav_pcm16_mono_16k(const std::string& path);

// Writes mono PCM16 at the signal's sample rate; samples are clamped to
// [-1, 1) and scaled by 32768.
void write_wav_pcm16(const std::string& path, const Signal& x);

}  // namespace sfanc
