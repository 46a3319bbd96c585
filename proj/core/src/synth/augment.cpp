#include "rbi/synth/augment.hpp"

#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include <jpeglib.h>
#include <nlohmann/json.hpp>
#include <opencv2/imgproc.hpp>

#include "rbi/core/error.hpp"
#include "rbi/core/image.hpp"

namespace rbi::synth {

cv::Mat shift_channels(const cv::Mat& image, const std::array<double, 3>& shift) {
  cv::Mat out;
  cv::add(image, cv::Scalar(shift[0], shift[1], shift[2]), out);
  return clamp01(out);
}

cv::Mat adjust_hsv(const cv::Mat& image, double hue_deg, double saturation, double value) {
  if (hue_deg == 0.0 && saturation == 0.0 && value == 0.0) return image.clone();
  cv::Mat hsv;
  cv::cvtColor(image, hsv, cv::COLOR_RGB2HSV);  // H in [0, 360), S, V in [0, 1]
  hsv.forEach<cv::Vec3f>([&](cv::Vec3f& p, const int*) {
    float h = p[0] + static_cast<float>(hue_deg);
    h = std::fmod(h, 360.0f);
    if (h < 0.0f) h += 360.0f;
    p[0] = h;
    p[1] = std::clamp(p[1] + static_cast<float>(saturation), 0.0f, 1.0f);
    p[2] = std::clamp(p[2] + static_cast<float>(value), 0.0f, 1.0f);
  });
  cv::Mat rgb;
  cv::cvtColor(hsv, rgb, cv::COLOR_HSV2RGB);
  return clamp01(rgb);
}

cv::Mat brightness_contrast(const cv::Mat& image, double brightness, double contrast) {
  if (brightness == 0.0 && contrast == 0.0) return image.clone();
  cv::Mat out;
  image.convertTo(out, -1, 1.0 + contrast, brightness);
  return clamp01(out);
}

cv::Mat gaussian_blur(const cv::Mat& image, double sigma) {
  if (sigma <= 0.0) return image.clone();
  const int k = 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
  cv::Mat out;
  cv::GaussianBlur(image, out, cv::Size(k, k), sigma, sigma, cv::BORDER_REFLECT101);
  return out;
}

cv::Mat sharpen(const cv::Mat& image, double amount) {
  if (amount == 0.0) return image.clone();
  cv::Mat blurred = gaussian_blur(image, 1.0);
  cv::Mat out;
  cv::addWeighted(image, 1.0 + amount, blurred, -amount, 0.0, out);
  return clamp01(out);
}

namespace {

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_throw(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegError*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

}  // namespace

// libjpeg directly rather than cv::imencode. Channels are coded as RGB at full
// resolution; the YCbCr transform by itself costs up to 3.5 levels at quality 100.
cv::Mat jpeg_roundtrip(const cv::Mat& image, int quality) {
  require_color(image, "jpeg_roundtrip");
  cv::Mat u8;
  image.convertTo(u8, CV_8UC3, 255.0);
  if (!u8.isContinuous()) u8 = u8.clone();

  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  JpegError err;
  {
    jpeg_compress_struct c;
    c.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_throw;
    if (setjmp(err.jump)) {
      jpeg_destroy_compress(&c);
      std::free(buffer);
      throw DataError(std::string("jpeg encode failed: ") + err.message);
    }
    jpeg_create_compress(&c);
    jpeg_mem_dest(&c, &buffer, &size);
    c.image_width = static_cast<JDIMENSION>(u8.cols);
    c.image_height = static_cast<JDIMENSION>(u8.rows);
    c.input_components = 3;
    c.in_color_space = JCS_RGB;
    jpeg_set_defaults(&c);
    jpeg_set_quality(&c, std::clamp(quality, 0, 100), TRUE);
    for (int k = 0; k < 3; ++k) c.comp_info[k].h_samp_factor = c.comp_info[k].v_samp_factor = 1;
    c.dct_method = JDCT_FLOAT;
    jpeg_set_colorspace(&c, JCS_RGB);
    jpeg_start_compress(&c, TRUE);
    while (c.next_scanline < c.image_height) {
      JSAMPROW row = u8.ptr<unsigned char>(static_cast<int>(c.next_scanline));
      jpeg_write_scanlines(&c, &row, 1);
    }
    jpeg_finish_compress(&c);
    jpeg_destroy_compress(&c);
  }

  cv::Mat decoded(u8.size(), CV_8UC3);
  {
    jpeg_decompress_struct d;
    d.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_throw;
    if (setjmp(err.jump)) {
      jpeg_destroy_decompress(&d);
      std::free(buffer);
      throw DataError(std::string("jpeg decode failed: ") + err.message);
    }
    jpeg_create_decompress(&d);
    jpeg_mem_src(&d, buffer, size);
    jpeg_read_header(&d, TRUE);
    d.out_color_space = JCS_RGB;
    d.dct_method = JDCT_FLOAT;
    jpeg_start_decompress(&d);
    while (d.output_scanline < d.output_height) {
      JSAMPROW row = decoded.ptr<unsigned char>(static_cast<int>(d.output_scanline));
      jpeg_read_scanlines(&d, &row, 1);
    }
    jpeg_finish_decompress(&d);
    jpeg_destroy_decompress(&d);
  }
  std::free(buffer);

  cv::Mat out;
  decoded.convertTo(out, CV_32FC3, 1.0 / 255.0);
  return out;
}

SstaResult ssta(const cv::Mat& image, Rng& rng, const SstaConfig& cfg) {
  require_color(image, "ssta");
  SstaResult out;
  SstaLog& log = out.log;
  for (int c = 0; c < 3; ++c) log.rgb_shift[c] = cfg.rgb_shift[c].sample(rng);
  log.hue_shift_deg = cfg.hue_shift_deg.sample(rng);
  log.saturation_shift = cfg.saturation_shift.sample(rng);
  log.value_shift = cfg.value_shift.sample(rng);
  log.brightness = cfg.brightness.sample(rng);
  log.contrast = cfg.contrast.sample(rng);
  log.filter = rng.bernoulli(cfg.blur_probability) ? FilterKind::kBlur : FilterKind::kSharpen;
  log.filter_strength =
      log.filter == FilterKind::kBlur ? cfg.blur_sigma.sample(rng) : cfg.sharpen_amount.sample(rng);

  cv::Mat img = image.clone();
  if (log.rgb_shift[0] != 0.0 || log.rgb_shift[1] != 0.0 || log.rgb_shift[2] != 0.0) {
    img = shift_channels(img, log.rgb_shift);
  }
  img = adjust_hsv(img, log.hue_shift_deg, log.saturation_shift, log.value_shift);
  img = brightness_contrast(img, log.brightness, log.contrast);
  img = log.filter == FilterKind::kBlur ? gaussian_blur(img, log.filter_strength)
                                        : sharpen(img, log.filter_strength);
  out.image = clamp01(img);
  return out;
}

SourceTarget assign_source_target(const cv::Mat& genuine, const cv::Mat& reconstructed, Rng& rng,
                                  const AssignConfig& cfg) {
  if (genuine.size() != reconstructed.size() || genuine.type() != reconstructed.type()) {
    throw ShapeError("assign_source_target: genuine and reconstructed rasters differ in shape");
  }
  SourceTarget out;
  out.roles_swapped = cfg.randomize_roles && rng.bernoulli(0.5);
  out.source = (out.roles_swapped ? genuine : reconstructed).clone();
  out.target = (out.roles_swapped ? reconstructed : genuine).clone();
  if (!cfg.ssta_enabled) return out;

  const bool augment_source = rng.bernoulli(cfg.augment_source_probability);
  out.augmented = augment_source ? AugmentedSide::kSource : AugmentedSide::kTarget;
  cv::Mat& chosen = augment_source ? out.source : out.target;
  auto result = ssta(chosen, rng, cfg.ssta);
  chosen = std::move(result.image);
  out.ssta_log = result.log;
  return out;
}

cv::Mat train_time_augment(const cv::Mat& image, Rng& rng, const AugmentConfig& cfg) {
  require_color(image, "train_time_augment");
  cv::Mat img = image.clone();
  if (rng.bernoulli(cfg.color_jitter_probability)) {
    const double h = cfg.hue_shift_deg.sample(rng);
    const double s = cfg.saturation_shift.sample(rng);
    const double v = cfg.value_shift.sample(rng);
    img = adjust_hsv(img, h, s, v);
  }
  if (rng.bernoulli(cfg.brightness_contrast_probability)) {
    const double b = cfg.brightness.sample(rng);
    const double c = cfg.contrast.sample(rng);
    img = brightness_contrast(img, b, c);
  }
  if (rng.bernoulli(cfg.jpeg_probability)) {
    img = jpeg_roundtrip(img, static_cast<int>(std::lround(cfg.jpeg_quality.sample(rng))));
  }
  return clamp01(img);
}

void to_json(nlohmann::json& j, const SstaLog& log) {
  j = nlohmann::json{{"rgb_shift", log.rgb_shift},
                     {"hue_shift_deg", log.hue_shift_deg},
                     {"saturation_shift", log.saturation_shift},
                     {"value_shift", log.value_shift},
                     {"brightness", log.brightness},
                     {"contrast", log.contrast},
                     {"filter", log.filter == FilterKind::kBlur ? "blur" : "sharpen"},
                     {"filter_strength", log.filter_strength}};
}

}  // namespace rbi::synth
