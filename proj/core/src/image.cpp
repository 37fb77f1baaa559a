#include "framelog/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>

#include <jpeglib.h>
#include <openssl/evp.h>

#include <fmt/format.h>

#include "framelog/error.hpp"

namespace framelog {

int scaled_dimension(int native, double scale) {
  return std::max(1, static_cast<int>(std::lround(native * scale)));
}

Image scale_nearest(const Image& src, double scale) {
  if (!src.valid()) {
    throw Error(ErrorCode::kInvalidArgument, "scale_nearest: invalid source image");
  }
  if (!(scale > 0.0) || scale > 1.0) {
    throw Error(ErrorCode::kBadRange, fmt::format("scale {} outside (0, 1]", scale));
  }
  Image out;
  out.width = scaled_dimension(src.width, scale);
  out.height = scaled_dimension(src.height, scale);
  out.channels = src.channels;
  if (out.width == src.width && out.height == src.height) {
    out.pixels = src.pixels;
    return out;
  }
  out.pixels.resize(out.expected_size());

  // Integer source coordinate of each destination column, centre-sampled.
  std::vector<std::size_t> col(static_cast<std::size_t>(out.width));
  for (int x = 0; x < out.width; ++x) {
    auto sx = (static_cast<std::int64_t>(2 * x + 1) * src.width) / (2 * out.width);
    col[static_cast<std::size_t>(x)] = static_cast<std::size_t>(sx);
  }
  const auto ch = static_cast<std::size_t>(src.channels);
  const auto src_stride = static_cast<std::size_t>(src.width) * ch;
  const auto dst_stride = static_cast<std::size_t>(out.width) * ch;
  for (int y = 0; y < out.height; ++y) {
    auto sy = (static_cast<std::int64_t>(2 * y + 1) * src.height) / (2 * out.height);
    const std::uint8_t* srow = src.pixels.data() + static_cast<std::size_t>(sy) * src_stride;
    std::uint8_t* drow = out.pixels.data() + static_cast<std::size_t>(y) * dst_stride;
    for (int x = 0; x < out.width; ++x) {
      const std::uint8_t* sp = srow + col[static_cast<std::size_t>(x)] * ch;
      std::copy(sp, sp + ch, drow + static_cast<std::size_t>(x) * ch);
    }
  }
  return out;
}

std::string pixel_digest(const Image& image) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int md_len = 0;
  const std::array<std::uint32_t, 3> geometry{static_cast<std::uint32_t>(image.width),
                                              static_cast<std::uint32_t>(image.height),
                                              static_cast<std::uint32_t>(image.channels)};

  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw Error(ErrorCode::kIo, "EVP_MD_CTX_new failed");
  bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
            EVP_DigestUpdate(ctx, geometry.data(), sizeof(geometry)) == 1 &&
            EVP_DigestUpdate(ctx, image.pixels.data(), image.pixels.size()) == 1 &&
            EVP_DigestFinal_ex(ctx, md.data(), &md_len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error(ErrorCode::kIo, "sha256 digest failed");

  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(md_len * 2);
  for (unsigned int i = 0; i < md_len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 0x0f]);
  }
  return hex;
}

namespace {

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void silence_jpeg_output(j_common_ptr) {}

}  // namespace

std::vector<std::uint8_t> encode_jpeg(const Image& image, double quality) {
  if (!image.valid()) {
    throw Error(ErrorCode::kEncodeFailure, "encode_jpeg: invalid image");
  }
  if (!(quality > 0.0) || quality > 1.0) {
    throw Error(ErrorCode::kBadRange, fmt::format("quality {} outside (0, 1]", quality));
  }

  jpeg_compress_struct cinfo{};
  JpegErrorManager jerr{};
  unsigned char* buffer = nullptr;
  unsigned long size = 0;

  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = on_jpeg_error;
  jerr.pub.output_message = silence_jpeg_output;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw Error(ErrorCode::kEncodeFailure, fmt::format("jpeg encode: {}", jerr.message));
  }

  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(image.width);
  cinfo.image_height = static_cast<JDIMENSION>(image.height);
  cinfo.input_components = image.channels;
  cinfo.in_color_space = image.channels == 3 ? JCS_RGB : JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, std::clamp(static_cast<int>(std::lround(quality * 100)), 1, 100),
                   TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const auto stride = static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.channels);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPLE*>(image.pixels.data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);

  std::vector<std::uint8_t> out(buffer, buffer + size);
  std::free(buffer);
  return out;
}

Image decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager jerr{};
  Image out;

  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = on_jpeg_error;
  jerr.pub.output_message = silence_jpeg_output;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::kEncodeFailure, fmt::format("jpeg decode: {}", jerr.message));
  }

  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.channels = cinfo.output_components;
  out.pixels.resize(out.expected_size());
  const auto stride = static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPLE* row = out.pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

}  // namespace framelog
