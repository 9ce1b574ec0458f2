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

#include "cotrl/video.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <map>

#include <jpeglib.h>
#include <png.h>

#include "json.hpp"

namespace cotrl {

std::vector<std::size_t> ResampleIndices(std::size_t frame_count, double source_fps,
                                         double sample_fps) {
  if (!(source_fps > 0.0) || !(sample_fps > 0.0)) {
    throw Error("bad_config", "frame rates must be positive");
  }
  std::vector<std::size_t> out;
  const double stride = source_fps / sample_fps;
  for (std::size_t m = 0;; ++m) {
    const double pos = std::round(static_cast<double>(m) * stride);
    if (pos >= static_cast<double>(frame_count)) break;
    out.push_back(static_cast<std::size_t>(pos));
  }
  return out;
}

std::vector<std::size_t> UniformSelect(std::size_t m, std::size_t target) {
  if (m == 0) throw Error("empty_clip", "cannot select frames from an empty sequence");
  if (target == 0) throw Error("bad_config", "target frame count must be positive");
  std::vector<std::size_t> out;
  if (m < target) {
    for (std::size_t k = 0; k < target; ++k) out.push_back(std::min(k, m - 1));
    return out;
  }
  if (target == 1) return {0};
  for (std::size_t k = 0; k < target; ++k) {
    const double pos = static_cast<double>(k) * static_cast<double>(m - 1) /
                       static_cast<double>(target - 1);
    out.push_back(static_cast<std::size_t>(std::round(pos)));
  }
  return out;
}

Frame ResizeBilinear(const Frame& f, std::size_t height, std::size_t width) {
  if (f.height == height && f.width == width) return f;
  Frame out(height, width);
  const double sy = static_cast<double>(f.height) / static_cast<double>(height);
  const double sx = static_cast<double>(f.width) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(f.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, f.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(f.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, f.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = f.at(c, y0, x0) * (1.0 - wx) + f.at(c, y0, x1) * wx;
        const double bot = f.at(c, y1, x0) * (1.0 - wx) + f.at(c, y1, x1) * wx;
        out.at(c, y, x) = static_cast<std::uint8_t>(
            std::clamp(std::round(top * (1.0 - wy) + bot * wy), 0.0, 255.0));
      }
    }
  }
  return out;
}

FrameClip UniformSample(const FrameClip& clip, const SamplingSpec& spec) {
  if (clip.frames.empty()) throw Error("empty_clip", "clip has no frames");
  const auto resampled = ResampleIndices(clip.frames.size(), clip.source_fps, spec.sample_fps);
  const auto picks = UniformSelect(resampled.size(), spec.target_frames);
  FrameClip out;
  out.source_fps = spec.sample_fps;
  out.duration_s = clip.duration_s;
  for (std::size_t k : picks) {
    out.frames.push_back(
        ResizeBilinear(clip.frames[resampled[k]], spec.resize_height, spec.resize_width));
  }
  return out;
}

FrameClip PerturbFrameDrop(const FrameClip& sampled, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error("bad_config", "frame-drop fraction must lie in (0, 1]");
  }
  if (sampled.frames.empty()) throw Error("empty_clip", "clip has no frames");
  const auto keep = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(sampled.frames.size()) - 1e-9));
  FrameClip out;
  out.source_fps = sampled.source_fps;
  out.duration_s = sampled.duration_s;
  for (std::size_t k : UniformSelect(sampled.frames.size(), keep)) {
    out.frames.push_back(sampled.frames[k]);
  }
  return out;
}

FrameClip PerturbFps(const FrameClip& clip, double fps, SamplingSpec spec) {
  if (!(fps > 0.0)) throw Error("bad_config", "fps must be positive");
  spec.sample_fps = fps;
  return UniformSample(clip, spec);
}

namespace {

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void JpegErrorExit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

std::vector<std::uint8_t> Interleave(const Frame& f) {
  std::vector<std::uint8_t> out(f.data.size());
  for (std::size_t y = 0; y < f.height; ++y)
    for (std::size_t x = 0; x < f.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) out[(y * f.width + x) * 3 + c] = f.at(c, y, x);
  return out;
}

Frame Deinterleave(const std::uint8_t* rgb, std::size_t h, std::size_t w) {
  Frame f(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) f.at(c, y, x) = rgb[(y * w + x) * 3 + c];
  return f;
}

// Returns false and fills `error` on codec failure.
bool JpegEncodeDecode(const std::vector<std::uint8_t>& rgb, std::size_t h, std::size_t w,
                      int quality, std::vector<std::uint8_t>& decoded, std::string& error) {
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  {
    jpeg_compress_struct cinfo{};
    JpegErrorManager jerr{};
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = JpegErrorExit;
    if (setjmp(jerr.jump)) {
      error = jerr.message;
      jpeg_destroy_compress(&cinfo);
      std::free(buffer);
      return false;
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &size);
    cinfo.image_width = static_cast<JDIMENSION>(w);
    cinfo.image_height = static_cast<JDIMENSION>(h);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
      JSAMPROW row = const_cast<JSAMPROW>(&rgb[cinfo.next_scanline * w * 3]);
      jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
  }
  {
    jpeg_decompress_struct dinfo{};
    JpegErrorManager jerr{};
    dinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = JpegErrorExit;
    if (setjmp(jerr.jump)) {
      error = jerr.message;
      jpeg_destroy_decompress(&dinfo);
      std::free(buffer);
      return false;
    }
    jpeg_create_decompress(&dinfo);
    jpeg_mem_src(&dinfo, buffer, size);
    jpeg_read_header(&dinfo, TRUE);
    dinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&dinfo);
    decoded.assign(h * w * 3, 0);
    while (dinfo.output_scanline < dinfo.output_height) {
      JSAMPROW row = &decoded[dinfo.output_scanline * w * 3];
      jpeg_read_scanlines(&dinfo, &row, 1);
    }
    jpeg_finish_decompress(&dinfo);
    jpeg_destroy_decompress(&dinfo);
  }
  std::free(buffer);
  return true;
}

}  // namespace

Frame JpegRoundTrip(const Frame& frame, int quality) {
  if (quality < 1 || quality > 100) throw Error("bad_config", "JPEG quality must be in [1, 100]");
  std::vector<std::uint8_t> decoded;
  std::string error;
  if (!JpegEncodeDecode(Interleave(frame), frame.height, frame.width, quality, decoded, error)) {
    throw Error("codec_failure", "JPEG round trip failed: " + error);
  }
  return Deinterleave(decoded.data(), frame.height, frame.width);
}

FrameClip PerturbJpeg(const FrameClip& clip, int quality) {
  FrameClip out = clip;
  for (Frame& f : out.frames) f = JpegRoundTrip(f, quality);
  return out;
}

FrameClip PerturbGaussian(const FrameClip& clip, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error("bad_config", "sigma must be nonnegative");
  FrameClip out = clip;
  if (sigma == 0.0) return out;
  Rng rng(DeriveSeed(seed, 0x6A55));
  std::normal_distribution<double> noise(0.0, sigma);
  for (Frame& f : out.frames) {
    for (std::uint8_t& px : f.data) {
      const double v = std::round(static_cast<double>(px) + noise(rng));
      px = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

double Psnr(const Frame& a, const Frame& b) {
  if (a.height != b.height || a.width != b.width) {
    throw Error("shape_mismatch", "PSNR needs equal frame sizes");
  }
  double se = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    se += d * d;
  }
  if (se == 0.0) return INFINITY;
  const double mse = se / static_cast<double>(a.data.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

void WritePngFrames(const FrameClip& clip, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    const Frame& f = clip.frames[i];
    const auto rgb = Interleave(f);
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(f.width);
    image.height = static_cast<png_uint_32>(f.height);
    image.format = PNG_FORMAT_RGB;
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05zu.png", i);
    const auto path = (dir / name).string();
    if (!png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr)) {
      throw Error("io_error", "cannot write " + path + ": " + image.message);
    }
  }
}

FrameClip ReadPngFrames(const std::filesystem::path& dir, double fps) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error("missing_input", "frame directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  FrameClip clip;
  clip.source_fps = fps;
  for (const auto& p : files) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, p.string().c_str())) {
      throw Error("io_error", "cannot read " + p.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
      throw Error("io_error", "cannot decode " + p.string() + ": " + image.message);
    }
    clip.frames.push_back(Deinterleave(rgb.data(), image.height, image.width));
  }
  if (clip.frames.empty()) throw Error("empty_clip", "no PNG frames in " + dir.string());
  clip.duration_s = static_cast<double>(clip.frames.size()) / fps;
  return clip;
}

namespace {

void PutU32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

std::uint32_t GetU32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error("bad_container", "truncated header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void WritePackedFrames(const FrameClip& clip, const std::filesystem::path& path) {
  if (clip.frames.empty()) throw Error("empty_clip", "clip has no frames");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  const Frame& first = clip.frames.front();
  out.write("CFRM", 4);
  PutU32(out, static_cast<std::uint32_t>(first.height));
  PutU32(out, static_cast<std::uint32_t>(first.width));
  PutU32(out, static_cast<std::uint32_t>(clip.frames.size()));
  for (const Frame& f : clip.frames) {
    if (f.height != first.height || f.width != first.width) {
      throw Error("shape_mismatch", "all frames must share dimensions");
    }
    const auto rgb = Interleave(f);
    out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  }
}

FrameClip ReadPackedFrames(const std::filesystem::path& path, double fps) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing_input", "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "CFRM") {
    throw Error("bad_container", "not a packed frame container: " + path.string());
  }
  const std::uint32_t h = GetU32(in), w = GetU32(in), n = GetU32(in);
  FrameClip clip;
  clip.source_fps = fps;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(h) * w * 3);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()))) {
      throw Error("bad_container", "truncated frame data in " + path.string());
    }
    clip.frames.push_back(Deinterleave(rgb.data(), h, w));
  }
  clip.duration_s = static_cast<double>(n) / fps;
  return clip;
}

TranscodePlan DefaultTranscodePlan() { return TranscodePlan{}; }

std::string TranscodePlanJson(const TranscodePlan& p) {
  nlohmann::json j = {{"codec", p.codec},
                      {"encoder", p.encoder},
                      {"encoder_params", p.encoder_params},
                      {"pixel_format", p.pixel_format},
                      {"width", p.width},
                      {"height", p.height},
                      {"fps", p.fps},
                      {"duration_s", p.duration_s}};
  return j.dump();
}

TranscodePlan ParseTranscodePlan(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    TranscodePlan p;
    p.codec = j.at("codec").get<std::string>();
    p.encoder = j.at("encoder").get<std::string>();
    p.encoder_params = j.at("encoder_params").get<std::string>();
    p.pixel_format = j.at("pixel_format").get<std::string>();
    p.width = j.at("width").get<int>();
    p.height = j.at("height").get<int>();
    p.fps = j.at("fps").get<int>();
    p.duration_s = j.at("duration_s").get<int>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad_plan", std::string("invalid transcode plan: ") + e.what());
  }
}

std::vector<std::string> TranscodeArgs(const TranscodePlan& p) {
  return {"-vf",
          "scale=" + std::to_string(p.width) + ":" + std::to_string(p.height) +
              ",fps=" + std::to_string(p.fps),
          "-t", std::to_string(p.duration_s), "-c:v", p.encoder, "-pix_fmt", p.pixel_format};
}

}  // namespace cotrl
