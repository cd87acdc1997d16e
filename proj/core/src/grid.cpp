#include "eraseg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace eraseg {

std::size_t cell_count(const Extents& dims) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return dims.empty() ? 0 : n;
}

void ImageGrid::validate() const {
  if (rank() != 2 && rank() != 3)
    throw DataError("ImageGrid must be 2-D or 3-D, got rank " +
                    std::to_string(rank()));
  for (int d : dims)
    if (d < 1) throw DataError("ImageGrid extent must be >= 1");
  if (data.size() != cell_count(dims))
    throw DataError("ImageGrid data length does not match dims");
  for (double v : data)
    if (!(v >= 0.0 && v <= 255.0))
      throw DataError("ImageGrid intensity outside [0, 255]");
}

void BoundingBox::validate_within(const Extents& dims) const {
  if (origin.size() != dims.size() || extent.size() != dims.size())
    throw DataError("BoundingBox rank does not match grid rank");
  for (std::size_t a = 0; a < dims.size(); ++a) {
    if (origin[a] < 0) throw DataError("BoundingBox origin must be >= 0");
    if (extent[a] < 1) throw DataError("BoundingBox extent must be >= 1");
    if (origin[a] + extent[a] > dims[a])
      throw DataError("BoundingBox exceeds grid bounds on axis " +
                      std::to_string(a));
  }
}

void BoundingBox::validate_annotation(const Extents& dims) const {
  validate_within(dims);
  for (int e : extent)
    if (e < 4) throw DataError("annotation box extent must be >= 4");
}

std::size_t BinaryMask::count() const {
  std::size_t n = 0;
  for (std::uint8_t b : bits) n += b ? 1 : 0;
  return n;
}

namespace {

// Iterates all index tuples of `extent`, calling fn(offset_in_extent_grid,
// flat_index_in_outer_grid_at_origin).
template <typename Fn>
void for_each_box_cell(const Extents& dims, const Extents& origin,
                       const Extents& extent, Fn&& fn) {
  if (dims.size() == 2) {
    std::size_t out = 0;
    for (int r = 0; r < extent[0]; ++r) {
      std::size_t base =
          static_cast<std::size_t>(origin[0] + r) * dims[1] + origin[1];
      for (int c = 0; c < extent[1]; ++c) fn(out++, base + c);
    }
  } else {
    std::size_t out = 0;
    for (int s = 0; s < extent[0]; ++s)
      for (int r = 0; r < extent[1]; ++r) {
        std::size_t base = (static_cast<std::size_t>(origin[0] + s) * dims[1] +
                            (origin[1] + r)) *
                               dims[2] +
                           origin[2];
        for (int c = 0; c < extent[2]; ++c) fn(out++, base + c);
      }
  }
}

}  // namespace

ImageGrid crop(const ImageGrid& image, const BoundingBox& box) {
  box.validate_within(image.dims);
  ImageGrid out(box.extent);
  for_each_box_cell(image.dims, box.origin, box.extent,
                    [&](std::size_t o, std::size_t i) { out.data[o] = image.data[i]; });
  return out;
}

void embed(ImageGrid& target, const BoundingBox& box, const ImageGrid& patch) {
  box.validate_within(target.dims);
  if (patch.dims != box.extent)
    throw DataError("embed: patch dims differ from box extent");
  for_each_box_cell(target.dims, box.origin, box.extent,
                    [&](std::size_t o, std::size_t i) { target.data[i] = patch.data[o]; });
}

void embed(BinaryMask& target, const BoundingBox& box, const BinaryMask& patch) {
  if (patch.dims != box.extent)
    throw DataError("embed: patch dims differ from box extent");
  for_each_box_cell(target.dims, box.origin, box.extent,
                    [&](std::size_t o, std::size_t i) { target.bits[i] = patch.bits[o]; });
}

namespace {

struct AxisSample {
  int lo;
  int hi;
  double w_hi;  // weight of the hi sample
};

// Pixel-center mapping: out index i samples input at (i+0.5)*in/out - 0.5.
// When in == out this reduces to the identity, which keeps normalization
// idempotent bit-for-bit.
AxisSample axis_sample(int i, int in_dim, int out_dim) {
  double src = (static_cast<double>(i) + 0.5) *
                   (static_cast<double>(in_dim) / out_dim) -
               0.5;
  if (src < 0.0) src = 0.0;
  const double max_src = static_cast<double>(in_dim - 1);
  if (src > max_src) src = max_src;
  AxisSample s;
  s.lo = static_cast<int>(src);
  if (s.lo > in_dim - 1) s.lo = in_dim - 1;
  s.hi = std::min(s.lo + 1, in_dim - 1);
  s.w_hi = src - static_cast<double>(s.lo);
  return s;
}

}  // namespace

ImageGrid resample(const ImageGrid& image, const Extents& out_dims) {
  if (out_dims.size() != image.dims.size())
    throw DataError("resample: output rank differs from input rank");
  for (int d : out_dims)
    if (d < 1) throw DataError("resample: output extent must be >= 1");
  if (out_dims == image.dims) return image;

  ImageGrid out(out_dims);
  if (image.rank() == 2) {
    std::vector<AxisSample> rows(out_dims[0]), cols(out_dims[1]);
    for (int r = 0; r < out_dims[0]; ++r)
      rows[r] = axis_sample(r, image.dims[0], out_dims[0]);
    for (int c = 0; c < out_dims[1]; ++c)
      cols[c] = axis_sample(c, image.dims[1], out_dims[1]);
    for (int r = 0; r < out_dims[0]; ++r) {
      const AxisSample& ar = rows[r];
      for (int c = 0; c < out_dims[1]; ++c) {
        const AxisSample& ac = cols[c];
        const double top = image.at2(ar.lo, ac.lo) * (1.0 - ac.w_hi) +
                           image.at2(ar.lo, ac.hi) * ac.w_hi;
        const double bot = image.at2(ar.hi, ac.lo) * (1.0 - ac.w_hi) +
                           image.at2(ar.hi, ac.hi) * ac.w_hi;
        out.at2(r, c) = top * (1.0 - ar.w_hi) + bot * ar.w_hi;
      }
    }
  } else {
    std::vector<AxisSample> s0(out_dims[0]), s1(out_dims[1]), s2(out_dims[2]);
    for (int i = 0; i < out_dims[0]; ++i)
      s0[i] = axis_sample(i, image.dims[0], out_dims[0]);
    for (int i = 0; i < out_dims[1]; ++i)
      s1[i] = axis_sample(i, image.dims[1], out_dims[1]);
    for (int i = 0; i < out_dims[2]; ++i)
      s2[i] = axis_sample(i, image.dims[2], out_dims[2]);
    for (int a = 0; a < out_dims[0]; ++a) {
      const AxisSample& sa = s0[a];
      for (int b = 0; b < out_dims[1]; ++b) {
        const AxisSample& sb = s1[b];
        for (int c = 0; c < out_dims[2]; ++c) {
          const AxisSample& sc = s2[c];
          auto plane = [&](int s) {
            const double top = image.at3(s, sb.lo, sc.lo) * (1.0 - sc.w_hi) +
                               image.at3(s, sb.lo, sc.hi) * sc.w_hi;
            const double bot = image.at3(s, sb.hi, sc.lo) * (1.0 - sc.w_hi) +
                               image.at3(s, sb.hi, sc.hi) * sc.w_hi;
            return top * (1.0 - sb.w_hi) + bot * sb.w_hi;
          };
          out.at3(a, b, c) =
              plane(sa.lo) * (1.0 - sa.w_hi) + plane(sa.hi) * sa.w_hi;
        }
      }
    }
  }
  return out;
}

BinaryMask resample_nearest(const BinaryMask& mask, const Extents& out_dims) {
  if (out_dims.size() != mask.dims.size())
    throw DataError("resample_nearest: output rank differs from input rank");
  if (out_dims == mask.dims) return mask;
  BinaryMask out(out_dims);
  auto nearest = [](int i, int in_dim, int out_dim) {
    int src = static_cast<int>((static_cast<double>(i) + 0.5) *
                               (static_cast<double>(in_dim) / out_dim));
    return std::clamp(src, 0, in_dim - 1);
  };
  if (mask.rank() == 2) {
    for (int r = 0; r < out_dims[0]; ++r) {
      const int sr = nearest(r, mask.dims[0], out_dims[0]);
      for (int c = 0; c < out_dims[1]; ++c) {
        const int sc = nearest(c, mask.dims[1], out_dims[1]);
        out.bits[out.dims[1] * static_cast<std::size_t>(r) + c] =
            mask.bits[mask.dims[1] * static_cast<std::size_t>(sr) + sc];
      }
    }
  } else {
    for (int s = 0; s < out_dims[0]; ++s) {
      const int ss = nearest(s, mask.dims[0], out_dims[0]);
      for (int r = 0; r < out_dims[1]; ++r) {
        const int sr = nearest(r, mask.dims[1], out_dims[1]);
        for (int c = 0; c < out_dims[2]; ++c) {
          const int sc = nearest(c, mask.dims[2], out_dims[2]);
          out.bits[(static_cast<std::size_t>(s) * out_dims[1] + r) * out_dims[2] +
                   c] =
              mask.bits[(static_cast<std::size_t>(ss) * mask.dims[1] + sr) *
                            mask.dims[2] +
                        sc];
        }
      }
    }
  }
  return out;
}

Extents normalized_extents(const Extents& dims, int target) {
  int shortest = dims[0];
  for (int d : dims) shortest = std::min(shortest, d);
  const double scale = static_cast<double>(target) / shortest;
  Extents out(dims.size());
  for (std::size_t a = 0; a < dims.size(); ++a) {
    out[a] = std::max(1, static_cast<int>(std::lround(dims[a] * scale)));
  }
  return out;
}

ImageGrid resize_shortest_side(const ImageGrid& image, int target) {
  for (int d : image.dims)
    if (d < 1) throw DataError("resize_shortest_side: extents must be >= 1");
  return resample(image, normalized_extents(image.dims, target));
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

namespace {

std::uint8_t quantize(double v) {
  const long q = std::lround(v);
  return static_cast<std::uint8_t>(std::clamp(q, 0l, 255l));
}

class HeaderReader {
 public:
  HeaderReader(std::istream& in, std::string path)
      : in_(in), path_(std::move(path)) {}

  std::size_t offset() const { return offset_; }

  int get() {
    const int ch = in_.get();
    if (ch != EOF) ++offset_;
    return ch;
  }

  // Skips PGM whitespace and '#' comments, returns the next token.
  std::string token() {
    int ch = get();
    while (ch != EOF && (std::isspace(ch) || ch == '#')) {
      if (ch == '#')
        while (ch != EOF && ch != '\n') ch = get();
      ch = get();
    }
    if (ch == EOF) throw ParseError(path_ + ": unexpected end of header", offset_);
    std::string tok;
    while (ch != EOF && !std::isspace(ch)) {
      tok.push_back(static_cast<char>(ch));
      ch = get();
    }
    return tok;
  }

  int int_token(const char* what) {
    const std::size_t at = offset_;
    const std::string tok = token();
    try {
      std::size_t pos = 0;
      const int v = std::stoi(tok, &pos);
      if (pos != tok.size() || v < 0) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(path_ + ": bad " + std::string(what) + " '" + tok + "'",
                       at);
    }
  }

 private:
  std::istream& in_;
  std::string path_;
  std::size_t offset_ = 0;
};

ImageGrid read_payload(std::istream& in, Extents dims, std::size_t header_bytes,
                       const std::string& path) {
  const std::size_t n = cell_count(dims);
  std::vector<std::uint8_t> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw ParseError(path + ": truncated payload",
                     header_bytes + static_cast<std::size_t>(in.gcount()));
  ImageGrid out(std::move(dims));
  for (std::size_t i = 0; i < n; ++i) out.data[i] = raw[i];
  return out;
}

}  // namespace

ImageGrid read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image file: " + path);
  HeaderReader hdr(in, path);
  const std::string magic = hdr.token();
  if (magic == "P5") {
    const int width = hdr.int_token("width");
    const int height = hdr.int_token("height");
    const int maxval = hdr.int_token("maxval");
    if (maxval != 255)
      throw ParseError(path + ": PGM maxval must be 255, got " +
                           std::to_string(maxval),
                       hdr.offset());
    if (width < 1 || height < 1)
      throw ParseError(path + ": PGM dims must be >= 1", hdr.offset());
    // `token` consumed exactly one whitespace byte after the maxval.
    return read_payload(in, Extents{height, width}, hdr.offset(), path);
  }
  if (magic == "FLV1") {
    const int d0 = hdr.int_token("extent");
    const int d1 = hdr.int_token("extent");
    const int d2 = hdr.int_token("extent");
    if (d0 < 1 || d1 < 1 || d2 < 1)
      throw ParseError(path + ": FLV1 dims must be >= 1", hdr.offset());
    return read_payload(in, Extents{d0, d1, d2}, hdr.offset(), path);
  }
  throw ParseError(path + ": unknown magic '" + magic + "'", 0);
}

void write_image(const std::string& path, const ImageGrid& image) {
  image.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  if (image.rank() == 2) {
    out << "P5\n" << image.dims[1] << ' ' << image.dims[0] << "\n255\n";
  } else {
    out << "FLV1 " << image.dims[0] << ' ' << image.dims[1] << ' '
        << image.dims[2] << '\n';
  }
  std::vector<std::uint8_t> raw(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) raw[i] = quantize(image.data[i]);
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError("write failed: " + path);
}

BinaryMask read_mask(const std::string& path) {
  const ImageGrid g = read_image(path);
  BinaryMask m(g.dims);
  for (std::size_t i = 0; i < g.size(); ++i) m.bits[i] = g.data[i] > 127.0 ? 1 : 0;
  return m;
}

void write_mask(const std::string& path, const BinaryMask& mask) {
  ImageGrid g(mask.dims);
  for (std::size_t i = 0; i < mask.size(); ++i) g.data[i] = mask.bits[i] ? 255.0 : 0.0;
  write_image(path, g);
}

BoundingBox read_box(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open box file: " + path);
  std::vector<int> values;
  int v = 0;
  while (in >> v) values.push_back(v);
  if (values.size() != 4 && values.size() != 6)
    throw DataError(path + ": box file must hold 4 (2-D) or 6 (3-D) integers");
  const std::size_t rank = values.size() / 2;
  BoundingBox box;
  box.origin.assign(values.begin(), values.begin() + rank);
  box.extent.assign(values.begin() + rank, values.end());
  return box;
}

void write_box(const std::string& path, const BoundingBox& box) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (std::size_t a = 0; a < box.origin.size(); ++a)
    out << box.origin[a] << (a + 1 < box.origin.size() ? ' ' : ' ');
  for (std::size_t a = 0; a < box.extent.size(); ++a)
    out << box.extent[a] << (a + 1 < box.extent.size() ? ' ' : '\n');
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace eraseg
