// Copyright 2026 The cotrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Frame sampling, robustness perturbations and the canonical encode plan.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cotrl/common.hpp"

namespace cotrl {

// Planar 8-bit RGB: three height x width planes, R then G then B.
struct Frame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;

  Frame() = default;
  Frame(std::size_t h, std::size_t w) : height(h), width(w), data(3 * h * w, 0) {}
  std::uint8_t& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * height + y) * width + x];
  }
  std::uint8_t at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
  bool operator==(const Frame&) const = default;
};

struct FrameClip {
  std::vector<Frame> frames;
  double source_fps = 24.0;
  double duration_s = 0.0;
};

struct SamplingSpec {
  std::size_t target_frames = 16;
  double sample_fps = 4.0;
  std::size_t resize_height = 256;
  std::size_t resize_width = 256;
};

// Source indices after resampling the timeline at sample_fps:
// round(m * source_fps / sample_fps) for every value below frame_count.
std::vector<std::size_t> ResampleIndices(std::size_t frame_count, double source_fps,
                                         double sample_fps);

// round(k * (m - 1) / (target - 1)) for k < target; {0} when target == 1.
// When m < target the m positions are followed by copies of the last one.
std::vector<std::size_t> UniformSelect(std::size_t m, std::size_t target);

// Resample, select target_frames, bilinear-resize. Throws Error("empty_clip").
FrameClip UniformSample(const FrameClip& clip, const SamplingSpec& spec);

// Half-pixel-centered bilinear interpolation.
Frame ResizeBilinear(const Frame& frame, std::size_t height, std::size_t width);

// Keeps ceil(fraction * n) frames of an already-sampled clip via
// UniformSelect.
FrameClip PerturbFrameDrop(const FrameClip& sampled, double fraction);
// UniformSample with sample_fps replaced.
FrameClip PerturbFps(const FrameClip& clip, double fps, SamplingSpec spec);
// Baseline JPEG encode/decode round trip at quality 1..100.
FrameClip PerturbJpeg(const FrameClip& clip, int quality);
// i.i.d. N(0, sigma) per channel in 0..255 units, clamped and rounded.
FrameClip PerturbGaussian(const FrameClip& clip, double sigma, std::uint64_t seed);

Frame JpegRoundTrip(const Frame& frame, int quality);
double Psnr(const Frame& a, const Frame& b);

// PNG frame directories (files sorted by name).
void WritePngFrames(const FrameClip& clip, const std::filesystem::path& dir);
FrameClip ReadPngFrames(const std::filesystem::path& dir, double fps);

// Packed raw container: "CFRM", u32 height, u32 width, u32 count (little
// endian), then each frame as row-major interleaved RGB bytes.
void WritePackedFrames(const FrameClip& clip, const std::filesystem::path& path);
FrameClip ReadPackedFrames(const std::filesystem::path& path, double fps);

struct TranscodePlan {
  std::string codec = "hevc";
  std::string encoder = "libx265";
  std::string encoder_params = "default";
  std::string pixel_format = "yuv420p10le";
  int width = 1024;
  int height = 1024;
  int fps = 24;
  int duration_s = 5;

  bool operator==(const TranscodePlan&) const = default;
};

TranscodePlan DefaultTranscodePlan();
// Canonical JSON with sorted keys and no whitespace.
std::string TranscodePlanJson(const TranscodePlan& plan);
TranscodePlan ParseTranscodePlan(const std::string& json_text);
// Arguments for an external ffmpeg invocation (input/output excluded).
std::vector<std::string> TranscodeArgs(const TranscodePlan& plan);

}  // namespace cotrl
