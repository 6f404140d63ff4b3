#include "maxdrop/image_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace maxdrop {

namespace {

struct Cursor {
    const std::string& buf;
    std::size_t pos = 0;

    bool eof() const { return pos >= buf.size(); }
    char peek() const { return buf[pos]; }

    void skip_space_and_comments() {
        while (!eof()) {
            const char ch = peek();
            if (ch == '#') {
                while (!eof() && peek() != '\n') ++pos;
            } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }

    int read_int(const char* what) {
        skip_space_and_comments();
        if (eof() || peek() < '0' || peek() > '9')
            throw PpmError(std::string("expected ") + what, pos);
        long v = 0;
        while (!eof() && peek() >= '0' && peek() <= '9') {
            v = v * 10 + (peek() - '0');
            if (v > 1000000) throw PpmError(std::string(what) + " out of range", pos);
            ++pos;
        }
        return static_cast<int>(v);
    }
};

}  // namespace

Tensor parse_ppm(const std::string& bytes) {
    Cursor cur{bytes};
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw PpmError("missing P6 magic", 0);
    cur.pos = 2;
    const int w = cur.read_int("width");
    const int h = cur.read_int("height");
    const int maxval = cur.read_int("maxval");
    if (w < 1 || h < 1) throw PpmError("non-positive dimensions", cur.pos);
    if (maxval != 255) throw PpmError("only maxval 255 supported", cur.pos);
    if (cur.eof()) throw PpmError("missing pixel data", cur.pos);
    ++cur.pos;  // single whitespace byte after maxval

    const std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (bytes.size() - cur.pos < need)
        throw PpmError("truncated pixel payload", bytes.size());

    Tensor img(Shape{1, 3, h, w});
    for (int k = 0; k < h; ++k)
        for (int l = 0; l < w; ++l)
            for (int j = 0; j < 3; ++j) {
                const auto byte = static_cast<unsigned char>(bytes[cur.pos++]);
                img.at(0, j, k, l) = static_cast<float>(byte) / 255.0f;
            }
    return img;
}

Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_ppm(ss.str());
}

std::string encode_ppm(const Tensor& img) {
    if (img.shape.n != 1 || (img.shape.c != 1 && img.shape.c != 3))
        throw std::invalid_argument("encode_ppm: expected (1,{1|3},h,w), got " +
                                    img.shape.str());
    const int h = img.shape.h, w = img.shape.w;
    std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(h) * w * 3);
    for (int k = 0; k < h; ++k)
        for (int l = 0; l < w; ++l)
            for (int j = 0; j < 3; ++j) {
                const float v = img.at(0, img.shape.c == 1 ? 0 : j, k, l);
                const float clamped = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
                out.push_back(static_cast<char>(
                    static_cast<unsigned char>(std::lround(clamped * 255.0f))));
            }
    return out;
}

void write_ppm(const std::string& path, const Tensor& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    const std::string bytes = encode_ppm(img);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace maxdrop
