#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phm/signal.hpp"

namespace phm {

enum class WavEncoding { kPcm16, kFloat32 };

/// Reads a 16 kHz mono RIFF/WAVE file (16-bit PCM or 32-bit float).
SignalBuffer read_wav(const std::string &path);
SignalBuffer decode_wav(const std::vector<std::uint8_t> &bytes);

void write_wav(const std::string &path, const SignalBuffer &signal,
               WavEncoding encoding = WavEncoding::kFloat32);
std::vector<std::uint8_t> encode_wav(const SignalBuffer &signal, WavEncoding encoding);

}  // namespace phm
