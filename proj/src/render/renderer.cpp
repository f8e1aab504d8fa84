#include "therif/render/renderer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "therif/core/error.hpp"

namespace therif::raster {

namespace {

constexpr double kAscent = 0.80;     // baseline offset from the top of the content area, em
constexpr double kCapHeight = 0.70;  // em
constexpr double kDescent = 0.21;    // em
constexpr double kStroke = 0.15;     // em
constexpr double kSpaceRatio = 0.5;  // space width relative to the average advance

// Float coverage canvas; coverage adds and saturates at 1.
class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), cov_(static_cast<std::size_t>(w) * h, 0.0f) {}

  void fill(double x0, double y0, double x1, double y1) {
    x0 = std::max(x0, 0.0);
    y0 = std::max(y0, 0.0);
    x1 = std::min(x1, static_cast<double>(w_));
    y1 = std::min(y1, static_cast<double>(h_));
    if (x1 <= x0 || y1 <= y0) return;
    const int ix0 = static_cast<int>(std::floor(x0)), ix1 = static_cast<int>(std::ceil(x1));
    const int iy0 = static_cast<int>(std::floor(y0)), iy1 = static_cast<int>(std::ceil(y1));
    for (int y = iy0; y < iy1; ++y) {
      const double cy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
      for (int x = ix0; x < ix1; ++x) {
        const double cx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
        float& c = cov_[static_cast<std::size_t>(y) * w_ + x];
        c = std::min(1.0f, c + static_cast<float>(cx * cy));
      }
    }
  }

  RasterImage image() const {
    RasterImage img{w_, h_, std::vector<std::uint8_t>(cov_.size())};
    for (std::size_t i = 0; i < cov_.size(); ++i) {
      img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - cov_[i])));
    }
    return img;
  }

 private:
  int w_, h_;
  std::vector<float> cov_;
};

struct GlyphStyle {
  double fs;
  double x_height;
  double advance;  // natural advance, before letter-spacing
  bool serif;
};

enum class Shape { Round, Arch, Ascender, Descender, Dotted, Capital, Low, Mid, High };

Shape shape_of(unsigned char c) {
  if (std::isupper(c) || std::isdigit(c)) return Shape::Capital;
  switch (c) {
    case 'a': case 'c': case 'e': case 'o': case 's':
      return Shape::Round;
    case 'b': case 'd': case 'f': case 'h': case 'k': case 'l': case 't':
      return Shape::Ascender;
    case 'g': case 'p': case 'q': case 'y':
      return Shape::Descender;
    case 'i': case 'j':
      return Shape::Dotted;
    case '.': case ',': case ';': case ':':
      return Shape::Low;
    case '-':
      return Shape::Mid;
    case '\'': case '"': case '!': case '?':
      return Shape::High;
    default:
      return std::isalpha(c) ? Shape::Arch : Shape::Low;
  }
}

void stem(Canvas& cv, const GlyphStyle& g, double x, double top, double bottom) {
  const double t = kStroke * g.fs;
  cv.fill(x, top, x + t, bottom);
  if (g.serif) {
    cv.fill(x - t, bottom - 0.5 * t, x + 2 * t, bottom);
    cv.fill(x - t, top, x + t, top + 0.5 * t);
  }
}

void draw_glyph(Canvas& cv, const GlyphStyle& g, unsigned char c, double pen, double baseline) {
  const double t = kStroke * g.fs;
  const double left = pen + 0.06 * g.advance;
  const double right = pen + 0.94 * g.advance - t;
  const double xh = baseline - g.x_height;
  const double asc = baseline - kCapHeight * g.fs;
  const double desc = baseline + kDescent * g.fs;
  switch (shape_of(c)) {
    case Shape::Round:
      cv.fill(left, xh, right + t, xh + t);
      cv.fill(left, baseline - t, right + t, baseline);
      cv.fill(left, xh, left + t, baseline);
      cv.fill(right, xh, right + t, baseline);
      break;
    case Shape::Arch:
      stem(cv, g, left, xh, baseline);
      stem(cv, g, right, xh, baseline);
      cv.fill(left, xh, right + t, xh + t);
      break;
    case Shape::Ascender:
      stem(cv, g, left, asc, baseline);
      cv.fill(left, xh, right + t, xh + t);
      if (c != 'l' && c != 't' && c != 'f') stem(cv, g, right, xh, baseline);
      break;
    case Shape::Descender:
      stem(cv, g, c == 'q' || c == 'g' || c == 'y' ? right : left, xh, desc);
      cv.fill(left, xh, right + t, xh + t);
      cv.fill(left, baseline - t, right + t, baseline);
      cv.fill(c == 'p' ? right : left, xh, (c == 'p' ? right : left) + t, baseline);
      break;
    case Shape::Dotted:
      stem(cv, g, left + 0.5 * (right - left), xh, c == 'j' ? desc : baseline);
      cv.fill(left + 0.5 * (right - left), xh - 2.5 * t, left + 0.5 * (right - left) + t, xh - 1.5 * t);
      break;
    case Shape::Capital:
      stem(cv, g, left, asc, baseline);
      stem(cv, g, right, asc, baseline);
      cv.fill(left, asc, right + t, asc + t);
      cv.fill(left, baseline - t, right + t, baseline);
      break;
    case Shape::Low:
      cv.fill(left, baseline - 1.5 * t, left + 1.5 * t, baseline);
      break;
    case Shape::Mid:
      cv.fill(left, baseline - 0.5 * g.x_height - 0.5 * t, right + t, baseline - 0.5 * g.x_height + 0.5 * t);
      break;
    case Shape::High:
      cv.fill(left, asc, left + t, asc + 0.4 * g.fs);
      break;
  }
}

struct Layout {
  double pitch = 0;
  double gap = 0;
  std::vector<std::vector<std::vector<std::string>>> paragraphs;  // paragraph -> line -> words
};

}  // namespace

RasterImage render(const TextSettings& settings, const PassageText& passage, const FontMetricTable& table,
                   const RenderOptions& options) {
  validate(settings);
  validate(passage);
  const auto& m = table.at(settings.font);
  GlyphStyle g{settings.font_size_px, m.x_height_ratio * settings.font_size_px,
               m.avg_advance_ratio * settings.font_size_px, m.serif};
  const double letter = settings.character_spacing_em * g.fs;
  const double char_advance = g.advance + letter;
  const double space = kSpaceRatio * g.advance + letter + settings.word_spacing_em * g.fs;
  const double width = options.width;
  auto word_width = [&](const std::string& w) { return static_cast<double>(w.size()) * char_advance; };

  Layout layout;
  layout.pitch = settings.line_height * g.fs;
  layout.gap = g.fs;
  const auto words = split_words(passage.body);
  for (int s = 0; s < passage.screen_count(); ++s) {
    std::vector<std::vector<std::string>> lines;
    double used = 0.0;
    for (int i = passage.screen_splits[s]; i < passage.screen_splits[s + 1]; ++i) {
      const double w = word_width(words[i]);
      if (w > width) throw LayoutError("word '" + words[i] + "' is wider than the column");
      if (!lines.empty() && used + space + w <= width) {
        lines.back().push_back(words[i]);
        used += space + w;
      } else {
        lines.push_back({words[i]});
        used = w;
      }
    }
    layout.paragraphs.push_back(std::move(lines));
  }
  double total = 0.0;
  for (std::size_t p = 0; p < layout.paragraphs.size(); ++p) {
    if (p > 0) total += layout.gap;
    total += static_cast<double>(layout.paragraphs[p].size()) * layout.pitch;
  }
  const int height = std::max(1, static_cast<int>(std::ceil(total - 1e-9)));

  Canvas cv(options.width, height);
  double top = 0.0;
  const double half_leading = 0.5 * (layout.pitch - g.fs);
  for (std::size_t p = 0; p < layout.paragraphs.size(); ++p) {
    if (p > 0) top += layout.gap;
    for (const auto& line : layout.paragraphs[p]) {
      const double baseline = top + half_leading + kAscent * g.fs;
      double pen = 0.0;
      for (std::size_t w = 0; w < line.size(); ++w) {
        if (w > 0) pen += space;
        for (unsigned char c : line[w]) {
          draw_glyph(cv, g, c, pen, baseline);
          pen += char_advance;
        }
      }
      top += layout.pitch;
    }
  }
  return cv.image();
}

namespace {

template <class Bytes>
double coverage_of(const Bytes& pixels) {
  if (pixels.empty()) return 0.0;
  const auto ink = std::count_if(pixels.begin(), pixels.end(), [](std::uint8_t v) { return v < kInkThreshold; });
  return static_cast<double>(ink) / static_cast<double>(pixels.size());
}

}  // namespace

double ink_coverage(const RasterImage& image) { return coverage_of(image.pixels); }
double ink_coverage(const Crop& crop) { return coverage_of(crop.pixels); }

std::vector<Crop> sample_crops(const RasterImage& image, int n, std::uint64_t seed, const std::string& format_id,
                               int side) {
  if (n < 0) throw Error("crop count must be >= 0");
  if (n == 0) return {};
  if (image.width <= side || image.height <= side) {
    throw LayoutError("image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                      " is too small for " + std::to_string(side) + "px crops");
  }
  // Integral image of ink pixels for O(1) coverage per candidate.
  const int w = image.width, h = image.height;
  std::vector<std::int32_t> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      integral[(y + 1) * (w + 1) + x + 1] = (image.at(x, y) < kInkThreshold) + integral[y * (w + 1) + x + 1] +
                                            integral[(y + 1) * (w + 1) + x] - integral[y * (w + 1) + x];
    }
  }
  auto ink_in = [&](int x, int y) {
    return integral[(y + side) * (w + 1) + x + side] - integral[y * (w + 1) + x + side] -
           integral[(y + side) * (w + 1) + x] + integral[y * (w + 1) + x];
  };
  const double needed = kMinInkCoverage * side * side;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> px(0, w - side), py(0, h - side);
  std::vector<Crop> crops;
  crops.reserve(n);
  for (int i = 0; i < n; ++i) {
    int attempt = 0;
    int x = 0, y = 0;
    for (;; ++attempt) {
      if (attempt == kMaxCropAttempts) {
        throw Error("blank image: no crop reached " + std::to_string(kMinInkCoverage * 100) + "% ink in " +
                    std::to_string(kMaxCropAttempts) + " attempts");
      }
      x = px(rng);
      y = py(rng);
      if (ink_in(x, y) >= needed) break;
    }
    Crop c;
    c.side = side;
    c.x = x;
    c.y = y;
    c.source_format_id = format_id;
    c.pixels.resize(static_cast<std::size_t>(side) * side);
    for (int r = 0; r < side; ++r) {
      std::copy_n(image.pixels.begin() + static_cast<std::ptrdiff_t>((y + r) * w + x), side,
                  c.pixels.begin() + static_cast<std::ptrdiff_t>(r * side));
    }
    crops.push_back(std::move(c));
  }
  return crops;
}

void write_pgm(const std::filesystem::path& path, const RasterImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

RasterImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::string magic;
  int maxval = 0;
  RasterImage img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 255 || img.width <= 0 || img.height <= 0) throw ParseError("not an 8-bit P5 file");
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw ParseError("truncated PGM data");
  return img;
}

namespace {

constexpr char kCropMagic[8] = {'T', 'H', 'C', 'R', 'O', 'P', '0', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated crop file");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_crops(const std::filesystem::path& path, std::span<const Crop> crops) {
  const std::uint32_t side = crops.empty() ? kCropSide : static_cast<std::uint32_t>(crops.front().side);
  std::map<std::string, std::uint32_t> index;
  std::vector<std::string> table;
  for (const auto& c : crops) {
    if (static_cast<std::uint32_t>(c.side) != side || c.pixels.size() != static_cast<std::size_t>(side) * side) {
      throw ShapeError("crops in one file must share a side length");
    }
    if (index.emplace(c.source_format_id, static_cast<std::uint32_t>(table.size())).second) {
      table.push_back(c.source_format_id);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kCropMagic, sizeof kCropMagic);
  put_u32(out, static_cast<std::uint32_t>(crops.size()));
  put_u32(out, side);
  for (const auto& c : crops) {
    out.write(reinterpret_cast<const char*>(c.pixels.data()), static_cast<std::streamsize>(c.pixels.size()));
  }
  put_u32(out, static_cast<std::uint32_t>(table.size()));
  for (const auto& id : table) {
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  for (const auto& c : crops) {
    put_u32(out, index[c.source_format_id]);
    put_u32(out, static_cast<std::uint32_t>(c.x));
    put_u32(out, static_cast<std::uint32_t>(c.y));
  }
}

std::vector<Crop> read_crops(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kCropMagic)) throw ParseError("not a crop file");
  const auto count = get_u32(in);
  const auto side = get_u32(in);
  std::vector<Crop> crops(count);
  for (auto& c : crops) {
    c.side = static_cast<int>(side);
    c.pixels.resize(static_cast<std::size_t>(side) * side);
    if (!in.read(reinterpret_cast<char*>(c.pixels.data()), static_cast<std::streamsize>(c.pixels.size()))) {
      throw ParseError("truncated crop file");
    }
  }
  std::vector<std::string> table(get_u32(in));
  for (auto& id : table) {
    id.resize(get_u32(in));
    if (!in.read(id.data(), static_cast<std::streamsize>(id.size()))) throw ParseError("truncated crop file");
  }
  for (auto& c : crops) {
    const auto idx = get_u32(in);
    if (idx >= table.size()) throw ParseError("format index out of range");
    c.source_format_id = table[idx];
    c.x = static_cast<int>(get_u32(in));
    c.y = static_cast<int>(get_u32(in));
  }
  return crops;
}

}  // namespace therif::raster
