#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "reflectdepth/io.hpp"

namespace reflectdepth {

namespace {

void swap_float_bytes(float& f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  u = ((u & 0xff000000u) >> 24) | ((u & 0x00ff0000u) >> 8) |
      ((u & 0x0000ff00u) << 8) | ((u & 0x000000ffu) << 24);
  std::memcpy(&f, &u, 4);
}

constexpr bool host_little_endian() {
  return std::endian::native == std::endian::little;
}

// Header tokens are whitespace separated; '#' starts a comment line.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.peek()) != EOF) {
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      break;
    }
  }
  while ((c = in.peek()) != EOF && !std::isspace(c)) tok.push_back(in.get());
  return tok;
}

}  // namespace

ImageBuffer load_pfm(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("pfm: cannot open " + path);

  std::string magic = next_token(file);
  int channels;
  if (magic == "PF")
    channels = 3;
  else if (magic == "Pf")
    channels = 1;
  else
    throw FormatError("pfm: bad magic in " + path);

  std::string wtok = next_token(file), htok = next_token(file),
              stok = next_token(file);
  int width = 0, height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(wtok);
    height = std::stoi(htok);
    scale = std::stod(stok);
  } catch (const std::exception&) {
    throw FormatError("pfm: malformed header in " + path);
  }
  if (width <= 0 || height <= 0 || scale == 0.0)
    throw FormatError("pfm: malformed header in " + path);
  file.get();  // single whitespace byte terminates the header

  bool file_little = scale < 0.0;
  size_t count = static_cast<size_t>(width) * height * channels;
  std::vector<float> raw(count);
  file.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<size_t>(file.gcount()) != count * sizeof(float))
    throw FormatError("pfm: truncated data in " + path);

  if (file_little != host_little_endian())
    for (float& f : raw) swap_float_bytes(f);

  // Rows are stored bottom-to-top.
  std::vector<double> data(count);
  for (int y = 0; y < height; ++y) {
    const float* src = raw.data() +
                       static_cast<size_t>(height - 1 - y) * width * channels;
    double* dst = data.data() + static_cast<size_t>(y) * width * channels;
    for (int i = 0; i < width * channels; ++i) dst[i] = src[i];
  }
  return ImageBuffer(height, width, channels, Domain::Linear, std::move(data));
}

void save_pfm(const ImageBuffer& img, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("pfm: cannot open for writing " + path);

  std::ostringstream header;
  header << (img.channels == 3 ? "PF" : "Pf") << "\n"
         << img.width << " " << img.height << "\n"
         << (host_little_endian() ? "-1.0" : "1.0") << "\n";
  file << header.str();

  std::vector<float> row(static_cast<size_t>(img.width) * img.channels);
  for (int y = img.height - 1; y >= 0; --y) {
    const double* src =
        img.data.data() + static_cast<size_t>(y) * img.width * img.channels;
    for (int i = 0; i < img.width * img.channels; ++i)
      row[i] = static_cast<float>(src[i]);
    file.write(reinterpret_cast<const char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!file) throw IoError("pfm: write failed: " + path);
}

DepthMap load_depth_pfm(const std::string& path) {
  ImageBuffer img = load_pfm(path);
  if (img.channels != 1) throw FormatError("pfm depth: expected 1 channel");
  return DepthMap(img.height, img.width, std::move(img.data));
}

void save_depth_pfm(const DepthMap& depth, const std::string& path) {
  save_pfm(ImageBuffer(depth.height, depth.width, 1, Domain::Linear,
                       depth.values),
           path);
}

}  // namespace reflectdepth
