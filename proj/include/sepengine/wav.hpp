// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>

#include "sepengine/waveform.hpp"

namespace sepengine {

// RIFF/WAVE, PCM 16-bit, mono, little-endian. Samples are clamped to
// [-1, 1 - 2^-15] and rounded to the nearest code.
void WriteWav(const Waveform& w, const std::filesystem::path& path);

// Accepts only PCM16 mono; unknown chunks are skipped.
Waveform ReadWav(const std::filesystem::path& path);

}  // namespace sepengine
