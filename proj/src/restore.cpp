#include "wavecaster/restore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace wavecaster::restore {
namespace {

// Burg without the public length guard; needs samples.size() > order.
ArModel burg_fit(std::span<const double> x, std::size_t order) {
  const std::size_t n = x.size();
  std::vector<double> f(x.begin(), x.end());
  std::vector<double> b(x.begin(), x.end());
  // Error-filter polynomial A(z) = 1 + a_1 z^-1 + ... (a[0] = 1).
  std::vector<double> a(order + 1, 0.0);
  a[0] = 1.0;

  ArModel model;
  model.order = order;
  double energy = 0.0;
  for (double v : x) energy += v * v;
  model.errors.push_back(energy / static_cast<double>(n));

  for (std::size_t m = 0; m < order; ++m) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = m + 1; i < n; ++i) {
      num += f[i] * b[i - 1];
      den += f[i] * f[i] + b[i - 1] * b[i - 1];
    }
    double k = den > 0.0 ? -2.0 * num / den : 0.0;
    k = std::clamp(k, -1.0, 1.0);

    for (std::size_t i = 0; i <= (m + 1) / 2; ++i) {
      const double lo = a[i];
      const double hi = a[m + 1 - i];
      a[i] = lo + k * hi;
      a[m + 1 - i] = hi + k * lo;
    }
    // Update in descending order so b[i-1] is still the previous stage's.
    for (std::size_t i = n - 1; i > m; --i) {
      const double fi = f[i];
      f[i] = fi + k * b[i - 1];
      b[i] = b[i - 1] + k * fi;
    }
    model.reflection.push_back(k);
    model.errors.push_back(model.errors.back() * (1.0 - k * k));
  }
  model.coefficients.resize(order);
  for (std::size_t i = 0; i < order; ++i) model.coefficients[i] = -a[i + 1];
  return model;
}

void check_finite(std::span<const double> samples) {
  if (!std::all_of(samples.begin(), samples.end(), [](double v) { return std::isfinite(v); })) {
    throw std::invalid_argument("non-finite sample");
  }
}

}  // namespace

ArModel burg_coefficients(std::span<const double> samples, std::size_t order) {
  if (order < 1) throw std::invalid_argument("order must be at least 1");
  if (samples.size() <= 2 * order) {
    throw std::invalid_argument("need more than 2*order samples (" + std::to_string(samples.size()) +
                                " given, order " + std::to_string(order) + ")");
  }
  check_finite(samples);
  return burg_fit(samples, order);
}

std::vector<double> extrapolate(const ArModel& model, std::span<const double> history,
                                std::size_t count) {
  const std::size_t p = model.order;
  if (history.size() < p) throw std::invalid_argument("history shorter than model order");
  std::vector<double> buf(history.end() - static_cast<std::ptrdiff_t>(p), history.end());
  buf.reserve(p + count);
  for (std::size_t i = 0; i < count; ++i) {
    double v = 0.0;
    const std::size_t last = buf.size() - 1;
    for (std::size_t k = 0; k < p; ++k) v += model.coefficients[k] * buf[last - k];
    buf.push_back(v);
  }
  return {buf.begin() + static_cast<std::ptrdiff_t>(p), buf.end()};
}

std::vector<double> gap_fill(std::span<const double> samples, std::size_t gap_start,
                             std::size_t gap_length, const GapFillOptions& options) {
  std::vector<double> out(samples.begin(), samples.end());
  if (gap_length == 0) return out;
  const std::size_t p = options.order;
  if (p < 1) throw std::invalid_argument("order must be at least 1");
  if (gap_start > samples.size() || gap_length > samples.size() - gap_start) {
    throw std::invalid_argument("gap extends past the end of the signal");
  }
  const std::size_t gap_end = gap_start + gap_length;
  const std::size_t context = options.context ? options.context : 32 * p;
  const std::size_t before = std::min(gap_start, context);
  const std::size_t after = std::min(samples.size() - gap_end, context);
  if (before < 2 * p || after < 2 * p) {
    throw std::invalid_argument("need at least 2*order valid samples on each side of the gap");
  }
  auto pre = samples.subspan(gap_start - before, before);
  auto post = samples.subspan(gap_end, after);
  check_finite(pre);
  check_finite(post);
  std::vector<double> post_reversed(post.rbegin(), post.rend());

  const ArModel forward_model = burg_fit(pre, p);
  const ArModel backward_model = burg_fit(post_reversed, p);
  const auto forward = extrapolate(forward_model, pre, gap_length);
  auto backward = extrapolate(backward_model, post_reversed, gap_length);
  std::reverse(backward.begin(), backward.end());

  const double span = static_cast<double>(gap_length + 1);
  for (std::size_t i = 0; i < gap_length; ++i) {
    const double w = 1.0 - static_cast<double>(i + 1) / span;
    out[gap_start + i] = w * forward[i] + (1.0 - w) * backward[i];
  }
  return out;
}

// ---- WAV ----

namespace {

std::uint32_t le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t{p[3]} << 24);
}
std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                         std::istreambuf_iterator<char>()};
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error(path.string() + ": not a RIFF/WAVE file");
  }
  WavData wav;
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) throw std::runtime_error(path.string() + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0 && size >= 16) {
      format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      wav.sample_rate = le32(bytes.data() + body + 4);
      wav.bits_per_sample = le16(bytes.data() + body + 14);
      if (format == 0xFFFE && size >= 26) format = le16(bytes.data() + body + 24);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error(path.string() + ": data before fmt");
      if (channels != 1) throw std::runtime_error(path.string() + ": only mono WAV is supported");
      wav.is_float = format == 3;
      if (!(format == 1 || (format == 3 && wav.bits_per_sample == 32))) {
        throw std::runtime_error(path.string() + ": unsupported sample format");
      }
      const std::size_t width = wav.bits_per_sample / 8;
      if (width < 1 || width > 4) throw std::runtime_error(path.string() + ": bad sample width");
      const std::size_t count = size / width;
      wav.samples.reserve(count);
      for (std::size_t i = 0; i < count; ++i) {
        const unsigned char* s = bytes.data() + body + i * width;
        if (wav.is_float) {
          float f;
          std::uint32_t raw = le32(s);
          std::memcpy(&f, &raw, 4);
          wav.samples.push_back(f);
        } else if (width == 1) {
          wav.samples.push_back((static_cast<int>(s[0]) - 128) / 128.0);
        } else {
          std::int32_t v = 0;
          for (std::size_t k = 0; k < width; ++k) v |= static_cast<std::int32_t>(s[k]) << (8 * k);
          const int shift = 32 - static_cast<int>(width) * 8;
          v = static_cast<std::int32_t>(static_cast<std::uint32_t>(v) << shift) >> shift;
          wav.samples.push_back(v / static_cast<double>(1u << (width * 8 - 1)));
        }
      }
      return wav;
    }
    pos = body + size + (size & 1);
  }
  throw std::runtime_error(path.string() + ": no data chunk");
}

void write_wav(const std::filesystem::path& path, const WavData& wav) {
  const std::uint16_t bits = wav.is_float ? 32 : wav.bits_per_sample;
  if (!wav.is_float && (bits % 8 != 0 || bits < 8 || bits > 32)) {
    throw std::invalid_argument("unsupported bit depth");
  }
  const std::uint32_t width = bits / 8;
  const std::uint32_t data_size = static_cast<std::uint32_t>(wav.samples.size() * width);
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put32(out, 36 + data_size);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, wav.is_float ? 3 : 1);
  put16(out, 1);
  put32(out, wav.sample_rate);
  put32(out, wav.sample_rate * width);
  put16(out, static_cast<std::uint16_t>(width));
  put16(out, bits);
  out += "data";
  put32(out, data_size);
  for (double v : wav.samples) {
    const double c = std::clamp(v, -1.0, 1.0);
    if (wav.is_float) {
      const float f = static_cast<float>(c);
      std::uint32_t raw;
      std::memcpy(&raw, &f, 4);
      put32(out, raw);
    } else if (width == 1) {
      out.push_back(static_cast<char>(std::lround(c * 127.0) + 128));
    } else {
      const double scale = static_cast<double>(1u << (bits - 1)) - 1.0;
      const auto v_int = static_cast<std::int32_t>(std::lround(c * scale));
      for (std::uint32_t k = 0; k < width; ++k) {
        out.push_back(static_cast<char>((static_cast<std::uint32_t>(v_int) >> (8 * k)) & 0xFF));
      }
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace wavecaster::restore
