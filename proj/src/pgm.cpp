#include "seqc/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace seqc {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error("load_pgm: " + what + " in " + path.string());
}

// Reads the next header token, skipping whitespace and # comments.
bool next_token(const std::string& data, std::size_t& pos, std::string& token) {
  while (pos < data.size()) {
    const char c = data[pos];
    if (c == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < data.size() &&
         !std::isspace(static_cast<unsigned char>(data[pos])) &&
         data[pos] != '#')
    ++pos;
  token = data.substr(start, pos - start);
  return !token.empty();
}

long parse_long(const std::string& token, const std::filesystem::path& path,
                const char* what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    fail(path, std::string("malformed ") + what);
  }
}

}  // namespace

Image load_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(path, "cannot open file");
  std::ostringstream buffer;
  buffer << is.rdbuf();
  const std::string data = buffer.str();

  std::size_t pos = 0;
  std::string token;
  if (!next_token(data, pos, token)) fail(path, "missing magic number");
  const bool ascii = token == "P2";
  if (!ascii && token != "P5") fail(path, "unsupported magic number '" + token + "'");

  if (!next_token(data, pos, token)) fail(path, "missing width");
  const long width = parse_long(token, path, "width");
  if (!next_token(data, pos, token)) fail(path, "missing height");
  const long height = parse_long(token, path, "height");
  if (!next_token(data, pos, token)) fail(path, "missing maxval");
  const long maxval = parse_long(token, path, "maxval");
  if (width <= 0 || height <= 0) fail(path, "non-positive dimensions");
  if (maxval <= 0 || maxval > 65535) fail(path, "maxval out of range [1, 65535]");

  const std::size_t count = static_cast<std::size_t>(width) * height;
  std::vector<double> values(count);
  const double scale = 1.0 / static_cast<double>(maxval);

  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) {
      if (!next_token(data, pos, token)) fail(path, "truncated pixel data");
      const long v = parse_long(token, path, "pixel value");
      if (v < 0 || v > maxval) fail(path, "pixel value out of range");
      values[i] = static_cast<double>(v) * scale;
    }
  } else {
    // Binary payload starts after exactly one whitespace byte.
    if (pos >= data.size() ||
        !std::isspace(static_cast<unsigned char>(data[pos])))
      fail(path, "missing separator before pixel data");
    ++pos;
    const int bytes = maxval > 255 ? 2 : 1;
    if (data.size() - pos < count * bytes) fail(path, "truncated pixel data");
    for (std::size_t i = 0; i < count; ++i) {
      unsigned long v;
      if (bytes == 2) {
        // Two-byte samples are big-endian.
        v = (static_cast<unsigned char>(data[pos]) << 8) |
            static_cast<unsigned char>(data[pos + 1]);
        pos += 2;
      } else {
        v = static_cast<unsigned char>(data[pos]);
        ++pos;
      }
      if (v > static_cast<unsigned long>(maxval))
        fail(path, "pixel value out of range");
      values[i] = static_cast<double>(v) * scale;
    }
  }
  return Image(static_cast<int>(width), static_cast<int>(height),
               std::move(values));
}

void save_pgm(const Image& image, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("save_pgm: cannot open " + path.string());
  os << "P5\n" << image.width() << " " << image.height() << "\n65535\n";
  std::string payload;
  payload.reserve(image.size() * 2);
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double clamped = std::min(1.0, std::max(0.0, image[i]));
    const unsigned v = static_cast<unsigned>(std::lround(clamped * 65535.0));
    payload.push_back(static_cast<char>((v >> 8) & 0xff));
    payload.push_back(static_cast<char>(v & 0xff));
  }
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!os) throw std::runtime_error("save_pgm: write failed for " + path.string());
}

Image box_downsample(const Image& image, int factor) {
  if (factor < 1) throw std::invalid_argument("box_downsample: factor must be >= 1");
  if (factor == 1) return image;
  if (image.width() % factor != 0 || image.height() % factor != 0)
    throw std::invalid_argument(
        "box_downsample: dimensions not divisible by factor");
  const int w = image.width() / factor, h = image.height() / factor;
  Image out(w, h);
  const double norm = 1.0 / (static_cast<double>(factor) * factor);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double acc = 0.0;
      for (int di = 0; di < factor; ++di)
        for (int dj = 0; dj < factor; ++dj)
          acc += image(i * factor + di, j * factor + dj);
      out(i, j) = acc * norm;
    }
  return out;
}

}  // namespace seqc
