#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "therif/core/text_settings.hpp"

namespace therif::raster {

inline constexpr int kColumnWidthPx = 576;  // 6in at 96dpi
inline constexpr int kCropSide = 128;
inline constexpr double kMinInkCoverage = 0.05;
inline constexpr int kMaxCropAttempts = 10000;
inline constexpr std::uint8_t kInkThreshold = 128;  // pixels below this count as ink

struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 0 = ink, 255 = background

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const RasterImage&) const = default;
};

struct Question {
  std::string prompt;
  std::vector<std::string> options;
  int answer = 0;  // index into options
};

struct PassageText {
  std::string passage_id;
  std::string body;  // words separated by whitespace
  int grade_level = 8;
  // Word-index boundaries, screens + 1 entries: screen i covers [splits[i], splits[i+1]).
  std::vector<int> screen_splits;
  std::vector<Question> questions;

  int screen_count() const { return static_cast<int>(screen_splits.size()) - 1; }
};

std::vector<std::string> split_words(const std::string& body);
std::vector<std::string> screen_words(const PassageText& passage, int screen);
// Throws Error when splits do not partition the body or the screen count
// does not match the grade (4 for grade 8, 6 for grade 12).
void validate(const PassageText& passage);

const PassageText& grade8_passage();
// Four distinct 8th-grade passages for reading trials; the first is grade8_passage().
const std::vector<PassageText>& grade8_trial_passages();
const PassageText& grade12_passage();
std::vector<PassageText> builtin_passages();

struct RenderOptions {
  int width = kColumnWidthPx;
};

// Screens are laid out as paragraphs separated by 1em.
RasterImage render(const TextSettings& settings, const PassageText& passage,
                   const FontMetricTable& table = FontMetricTable::builtin(), const RenderOptions& options = {});

double ink_coverage(const RasterImage& image);

struct Crop {
  int side = kCropSide;
  int x = 0;  // offset in the source image
  int y = 0;
  std::vector<std::uint8_t> pixels;
  std::string source_format_id;
};

double ink_coverage(const Crop& crop);

// Exactly n crops at seeded uniform positions, each with >= 5% ink.
// Throws LayoutError when the image is too small, Error when a crop cannot
// reach the ink floor within 10,000 attempts.
std::vector<Crop> sample_crops(const RasterImage& image, int n, std::uint64_t seed,
                               const std::string& format_id = {}, int side = kCropSide);

void write_pgm(const std::filesystem::path& path, const RasterImage& image);
RasterImage read_pgm(const std::filesystem::path& path);

// Packed crop file: magic, count, side, raw crop bytes, then the format-id
// table and, per crop, its table index and x/y offset. Integers are
// little-endian uint32.
void write_crops(const std::filesystem::path& path, std::span<const Crop> crops);
std::vector<Crop> read_crops(const std::filesystem::path& path);

}  // namespace therif::raster
