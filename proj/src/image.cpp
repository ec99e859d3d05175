#include "lodloc/image.hpp"

#include <cmath>
#include <fstream>

#include "lodloc/errors.hpp"

namespace lodloc {

namespace {

// Reads the next whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !std::isspace(c)) {
                tok.push_back(static_cast<char>(in.get()));
            }
            return tok;
        }
    }
    throw ParseError("unexpected end of raster header");
}

int header_int(std::istream& in) {
    const std::string tok = next_token(in);
    try {
        return std::stoi(tok);
    } catch (const std::exception&) {
        throw ParseError("bad integer '" + tok + "' in raster header");
    }
}

void read_header(std::istream& in, const char* magic, const std::string& path,
                 int& w, int& h) {
    if (next_token(in) != magic) {
        throw ParseError(path + ": expected " + magic + " raster");
    }
    w = header_int(in);
    h = header_int(in);
    const int maxval = header_int(in);
    if (w <= 0 || h <= 0) {
        throw ParseError(path + ": non-positive raster dimensions");
    }
    if (maxval != 255) {
        throw ParseError(path + ": only maxval 255 is supported");
    }
    in.get();  // single whitespace byte before the pixel block
}

}  // namespace

GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    int w, h;
    read_header(in, "P5", path, w, h);
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size())) {
        throw ParseError(path + ": truncated pixel data");
    }
    return img;
}

void save_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw IoError("write failed for " + path);
}

ColorImage load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    int w, h;
    read_header(in, "P6", path, w, h);
    ColorImage img(w, h);
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size())) {
        throw ParseError(path + ": truncated pixel data");
    }
    return img;
}

void save_ppm(const ColorImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw IoError("write failed for " + path);
}

GrayImage to_gray(const ColorImage& img) {
    GrayImage out(img.width, img.height);
    for (size_t i = 0, n = static_cast<size_t>(img.width) * img.height; i < n; ++i) {
        const std::uint8_t* p = &img.data[i * 3];
        const double y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        out.data[i] = static_cast<std::uint8_t>(std::lround(y));
    }
    return out;
}

GrayImage load_gray(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    in.close();
    if (m0 == 'P' && m1 == '5') return load_pgm(path);
    if (m0 == 'P' && m1 == '6') return to_gray(load_ppm(path));
    throw ParseError(path + ": not a P5/P6 raster");
}

}  // namespace lodloc
