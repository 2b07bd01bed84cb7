#include "uwadmm/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uwadmm {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_pgm16(const std::string& path, const GridImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm16: cannot open " + path);
  out << "P5\n" << img.width << " " << img.height << "\n65535\n";
  for (int i = 0; i < img.n(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 1.0);
    const auto q = static_cast<uint16_t>(std::lround(v * 65535.0));
    const unsigned char bytes[2] = {static_cast<unsigned char>(q >> 8),
                                    static_cast<unsigned char>(q & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes), 2);
  }
}

GridImage read_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pgm16: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error("read_pgm16: not a P5 file");
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  if (w <= 0 || h <= 0 || maxval != 65535) {
    throw std::runtime_error("read_pgm16: unsupported PGM header");
  }
  in.get();  // single whitespace after maxval
  GridImage img;
  img.width = w;
  img.height = h;
  img.pixels = Vector::Zero(w * h);
  for (int i = 0; i < w * h; ++i) {
    unsigned char bytes[2];
    in.read(reinterpret_cast<char*>(bytes), 2);
    if (!in) throw std::runtime_error("read_pgm16: truncated pixel data");
    const uint16_t q = static_cast<uint16_t>((bytes[0] << 8) | bytes[1]);
    img.pixels[i] = q / 65535.0;
  }
  return img;
}

void write_image_csv(const std::string& path, const GridImage& img) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_image_csv: cannot open " + path);
  out << "# width=" << img.width << " height=" << img.height << "\n";
  for (int i = 0; i < img.n(); ++i) out << format_double(img.pixels[i]) << "\n";
}

GridImage read_image_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_image_csv: cannot open " + path);
  GridImage img;
  std::string line;
  std::vector<double> vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream is(line);
      std::string tok;
      while (is >> tok) {
        if (tok.rfind("width=", 0) == 0) img.width = std::stoi(tok.substr(6));
        if (tok.rfind("height=", 0) == 0) img.height = std::stoi(tok.substr(7));
      }
      continue;
    }
    vals.push_back(std::stod(line));
  }
  if (img.width <= 0 || img.height <= 0 ||
      static_cast<int>(vals.size()) != img.width * img.height) {
    throw std::runtime_error("read_image_csv: inconsistent image data in " +
                             path);
  }
  img.pixels = Eigen::Map<Vector>(vals.data(), vals.size());
  return img;
}

void write_vector_csv(const std::string& path, const Vector& v,
                      const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_vector_csv: cannot open " + path);
  for (const auto& c : header_comments) out << "# " << c << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out << format_double(v[i]) << "\n";
  }
}

Vector read_vector_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_vector_csv: cannot open " + path);
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    vals.push_back(std::stod(line));
  }
  return Eigen::Map<Vector>(vals.data(), vals.size());
}

}  // namespace uwadmm
