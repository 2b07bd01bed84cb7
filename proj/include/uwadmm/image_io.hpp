#pragma once

#include <string>

#include "uwadmm/operators.hpp"

namespace uwadmm {

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples). Values are
/// clamped to [0,1] and quantized on write; read returns values in [0,1].
void write_pgm16(const std::string& path, const GridImage& img);
GridImage read_pgm16(const std::string& path);

/// Flat CSV: "# width=W height=H" header comment, then one pixel per line
/// (row-major), full double precision.
void write_image_csv(const std::string& path, const GridImage& img);
GridImage read_image_csv(const std::string& path);

/// Plain column vector, one value per line; lines starting with '#' are
/// metadata comments and are skipped on read.
void write_vector_csv(const std::string& path, const Vector& v,
                      const std::vector<std::string>& header_comments = {});
Vector read_vector_csv(const std::string& path);

/// Fixed full-precision formatting used by every text writer ("%.17g").
std::string format_double(double v);

}  // namespace uwadmm
