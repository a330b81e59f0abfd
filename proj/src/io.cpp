#include "bstd/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace bstd {

namespace fs = std::filesystem;

namespace {

struct RawGray {
    int width = 0;
    int height = 0;
    unsigned maxval = 255;
    std::vector<std::uint16_t> samples;
};

std::vector<unsigned char> slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("read failed: " + path.string());
    }
    return bytes;
}

// ---------------------------------------------------------------------------
// Portable graymap

class PnmCursor {
public:
    PnmCursor(const std::vector<unsigned char>& bytes, const fs::path& path)
        : bytes_(bytes), path_(path)
    {
    }

    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    unsigned long read_uint(const char* what)
    {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
            throw FormatError(path_.string() + ": corrupt graymap (expected " + what + ")");
        }
        unsigned long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
            if (v > 0xFFFFFFFFul) {
                throw FormatError(path_.string() + ": corrupt graymap (" + what + " overflow)");
            }
            ++pos_;
        }
        return v;
    }

    // Exactly one whitespace byte separates the header from the raster.
    void expect_single_space()
    {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            throw FormatError(path_.string() + ": corrupt graymap header");
        }
        ++pos_;
    }

    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    const std::vector<unsigned char>& bytes_;
    const fs::path& path_;
    std::size_t pos_ = 2;
};

RawGray parse_pnm(const std::vector<unsigned char>& bytes, const fs::path& path)
{
    const char kind = static_cast<char>(bytes[1]);
    if (kind == '3' || kind == '6') {
        throw FormatError(path.string() + ": color pixmap input is not supported");
    }
    if (kind != '2' && kind != '5') {
        throw FormatError(path.string() + ": unsupported netpbm variant P" + kind);
    }

    PnmCursor cur(bytes, path);
    RawGray raw;
    const auto w = cur.read_uint("width");
    const auto h = cur.read_uint("height");
    const auto maxval = cur.read_uint("maxval");
    if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) {
        throw FormatError(path.string() + ": invalid graymap dimensions");
    }
    if (maxval == 0 || maxval > 65535) {
        throw FormatError(path.string() + ": invalid graymap maxval " + std::to_string(maxval));
    }
    raw.width = static_cast<int>(w);
    raw.height = static_cast<int>(h);
    raw.maxval = static_cast<unsigned>(maxval);
    const std::size_t n = static_cast<std::size_t>(w) * h;
    raw.samples.resize(n);

    if (kind == '5') {
        cur.expect_single_space();
        const std::size_t bps = maxval > 255 ? 2 : 1;
        if (cur.remaining() < n * bps) {
            throw FormatError(path.string() + ": truncated graymap raster");
        }
        const unsigned char* p = bytes.data() + cur.pos();
        for (std::size_t i = 0; i < n; ++i) {
            raw.samples[i] = bps == 2 ? static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1])
                                      : p[i];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const auto s = cur.read_uint("sample");
            if (s > maxval) {
                throw FormatError(path.string() + ": sample exceeds maxval");
            }
            raw.samples[i] = static_cast<std::uint16_t>(s);
        }
    }
    for (auto s : raw.samples) {
        if (s > raw.maxval) {
            throw FormatError(path.string() + ": sample exceeds maxval");
        }
    }
    return raw;
}

void write_pnm(const fs::path& path, int width, int height, int bit_depth,
               const std::vector<std::uint16_t>& samples)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
    out << "P5\n" << width << ' ' << height << '\n' << maxval << '\n';
    std::vector<unsigned char> buf;
    buf.reserve(samples.size() * (bit_depth == 16 ? 2 : 1));
    for (auto s : samples) {
        if (bit_depth == 16) {
            buf.push_back(static_cast<unsigned char>(s >> 8));
            buf.push_back(static_cast<unsigned char>(s & 0xFF));
        } else {
            buf.push_back(static_cast<unsigned char>(s));
        }
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    out.close();
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

// ---------------------------------------------------------------------------
// PNG via libpng. Errors longjmp back into the small functions below, which
// only hold trivially destructible locals.

struct PngError {
    std::array<char, 256> message{};
};

void png_error_handler(png_structp png, png_const_charp msg)
{
    auto* err = static_cast<PngError*>(png_get_error_ptr(png));
    std::snprintf(err->message.data(), err->message.size(), "%s", msg);
    png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReadState {
    png_structp png = nullptr;
    png_infop info = nullptr;
    PngError err;

    ~PngReadState() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngHeader {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    int color_type = 0;
};

bool png_read_header(PngReadState& st, std::FILE* fp, PngHeader& hdr)
{
    if (setjmp(png_jmpbuf(st.png))) {
        return false;
    }
    png_init_io(st.png, fp);
    png_read_info(st.png, st.info);
    png_get_IHDR(st.png, st.info, &hdr.width, &hdr.height, &hdr.bit_depth, &hdr.color_type,
                 nullptr, nullptr, nullptr);
    if (hdr.color_type == PNG_COLOR_TYPE_GRAY && hdr.bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(st.png);
    }
    png_read_update_info(st.png, st.info);
    hdr.bit_depth = png_get_bit_depth(st.png, st.info);
    return true;
}

bool png_read_rows(PngReadState& st, png_bytepp rows)
{
    if (setjmp(png_jmpbuf(st.png))) {
        return false;
    }
    png_read_image(st.png, rows);
    png_read_end(st.png, nullptr);
    return true;
}

RawGray read_png(const fs::path& path)
{
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) {
        throw IoError("cannot open " + path.string());
    }
    PngReadState st;
    st.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st.err, png_error_handler,
                                    png_warning_handler);
    if (st.png == nullptr) {
        throw IoError("libpng initialization failed");
    }
    st.info = png_create_info_struct(st.png);
    if (st.info == nullptr) {
        throw IoError("libpng initialization failed");
    }

    PngHeader hdr;
    if (!png_read_header(st, fp.get(), hdr)) {
        throw FormatError(path.string() + ": corrupt PNG (" + st.err.message.data() + ")");
    }
    if (hdr.color_type != PNG_COLOR_TYPE_GRAY) {
        throw FormatError(path.string() +
                          ": only single-channel grayscale PNG is supported (color type " +
                          std::to_string(hdr.color_type) + ")");
    }
    if (hdr.width == 0 || hdr.height == 0 || hdr.width > (1u << 16) || hdr.height > (1u << 16)) {
        throw FormatError(path.string() + ": invalid PNG dimensions");
    }

    const std::size_t bps = hdr.bit_depth == 16 ? 2 : 1;
    const std::size_t stride = hdr.width * bps;
    std::vector<unsigned char> buffer(stride * hdr.height);
    std::vector<png_bytep> rows(hdr.height);
    for (png_uint_32 y = 0; y < hdr.height; ++y) {
        rows[y] = buffer.data() + y * stride;
    }
    if (!png_read_rows(st, rows.data())) {
        throw FormatError(path.string() + ": corrupt PNG (" + st.err.message.data() + ")");
    }

    RawGray raw;
    raw.width = static_cast<int>(hdr.width);
    raw.height = static_cast<int>(hdr.height);
    raw.maxval = bps == 2 ? 65535u : 255u;
    raw.samples.resize(static_cast<std::size_t>(hdr.width) * hdr.height);
    for (std::size_t i = 0; i < raw.samples.size(); ++i) {
        raw.samples[i] = bps == 2 ? static_cast<std::uint16_t>((buffer[2 * i] << 8) |
                                                               buffer[2 * i + 1])
                                  : buffer[i];
    }
    return raw;
}

struct PngWriteState {
    png_structp png = nullptr;
    png_infop info = nullptr;
    PngError err;

    ~PngWriteState() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

bool png_write_all(PngWriteState& st, std::FILE* fp, png_uint_32 width, png_uint_32 height,
                   int bit_depth, png_bytepp rows)
{
    if (setjmp(png_jmpbuf(st.png))) {
        return false;
    }
    png_init_io(st.png, fp);
    png_set_IHDR(st.png, st.info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(st.png, st.info);
    png_write_image(st.png, rows);
    png_write_end(st.png, nullptr);
    return true;
}

void write_png(const fs::path& path, int width, int height, int bit_depth,
               const std::vector<std::uint16_t>& samples)
{
    const std::size_t bps = bit_depth == 16 ? 2 : 1;
    const std::size_t stride = static_cast<std::size_t>(width) * bps;
    std::vector<unsigned char> buffer(stride * static_cast<std::size_t>(height));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (bps == 2) {
            buffer[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
            buffer[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xFF);
        } else {
            buffer[i] = static_cast<unsigned char>(samples[i]);
        }
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] = buffer.data() + static_cast<std::size_t>(y) * stride;
    }

    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) {
        throw IoError("cannot open for writing: " + path.string());
    }
    PngWriteState st;
    st.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &st.err, png_error_handler,
                                     png_warning_handler);
    if (st.png == nullptr) {
        throw IoError("libpng initialization failed");
    }
    st.info = png_create_info_struct(st.png);
    if (st.info == nullptr) {
        throw IoError("libpng initialization failed");
    }
    if (!png_write_all(st, fp.get(), static_cast<png_uint_32>(width),
                       static_cast<png_uint_32>(height), bit_depth, rows.data())) {
        throw IoError("PNG write failed for " + path.string() + ": " + st.err.message.data());
    }
    if (std::fflush(fp.get()) != 0) {
        throw IoError("write failed: " + path.string());
    }
}

bool has_png_signature(const std::vector<unsigned char>& bytes)
{
    static constexpr std::array<unsigned char, 8> sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    return bytes.size() >= sig.size() && std::equal(sig.begin(), sig.end(), bytes.begin());
}

std::string lower_extension(const fs::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

Image to_image(const RawGray& raw)
{
    Image img(raw.width, raw.height);
    const double scale = raw.maxval;
    for (std::size_t i = 0; i < raw.samples.size(); ++i) {
        img[i] = raw.samples[i] / scale;
    }
    return img;
}

void write_samples(const fs::path& path, int width, int height, int bit_depth,
                   const std::vector<std::uint16_t>& samples)
{
    const std::string ext = lower_extension(path);
    if (ext == ".png") {
        write_png(path, width, height, bit_depth, samples);
    } else if (ext == ".pgm" || ext == ".pnm") {
        write_pnm(path, width, height, bit_depth, samples);
    } else {
        throw FormatError("cannot infer output format from extension '" + ext + "' of " +
                          path.string());
    }
}

} // namespace

Image read_grayscale(const fs::path& path)
{
    if (!fs::exists(path)) {
        throw IoError("no such file: " + path.string());
    }
    if (fs::is_directory(path)) {
        throw IoError("is a directory: " + path.string());
    }
    const auto bytes = slurp(path);
    if (has_png_signature(bytes)) {
        return to_image(read_png(path));
    }
    if (bytes.size() >= 2 && bytes[0] == 'P') {
        return to_image(parse_pnm(bytes, path));
    }
    throw FormatError(path.string() + ": unrecognized image format");
}

std::size_t write_grayscale(const Image& img, const fs::path& path, int bit_depth)
{
    if (bit_depth != 8 && bit_depth != 16) {
        throw std::invalid_argument("unsupported bit depth " + std::to_string(bit_depth));
    }
    std::size_t clamped = 0;
    for (double v : img.pixels()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            ++clamped;
        }
    }
    write_samples(path, img.width(), img.height(), bit_depth,
                  denormalize(img.pixels(), bit_depth));
    return clamped;
}

Mask read_mask(const fs::path& path)
{
    const Image img = read_grayscale(path);
    Mask m(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) {
        m.set(i, img[i] > 0.5);
    }
    return m;
}

void write_mask(const Mask& mask, const fs::path& path)
{
    std::vector<std::uint16_t> samples(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        samples[i] = mask[i] ? 255 : 0;
    }
    write_samples(path, mask.width(), mask.height(), 8, samples);
}

std::string report_to_json(const Report& r)
{
    nlohmann::ordered_json j;
    j["input_path"] = r.input_path;
    j["width"] = r.width;
    j["height"] = r.height;
    j["alpha"] = r.alpha;
    j["solver_residual"] = r.solver_residual;
    j["solver_iterations"] = r.solver_iterations;
    j["clamped_pixel_count"] = r.clamped_pixel_count;
    j["contrast_gain_median"] = r.contrast_gain_median;
    j["timings"] = {{"mask_s", r.timings.mask_s},
                    {"solve_s", r.timings.solve_s},
                    {"decompose_s", r.timings.decompose_s},
                    {"total_s", r.timings.total_s}};
    j["converged"] = r.converged;
    j["degenerate"] = r.degenerate;
    return j.dump(2) + "\n";
}

Report report_from_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        Report r;
        r.input_path = j.at("input_path").get<std::string>();
        r.width = j.at("width").get<int>();
        r.height = j.at("height").get<int>();
        r.alpha = j.at("alpha").get<double>();
        r.solver_residual = j.at("solver_residual").get<double>();
        r.solver_iterations = j.at("solver_iterations").get<int>();
        r.clamped_pixel_count = j.at("clamped_pixel_count").get<std::size_t>();
        r.contrast_gain_median = j.at("contrast_gain_median").get<double>();
        const auto& t = j.at("timings");
        r.timings.mask_s = t.at("mask_s").get<double>();
        r.timings.solve_s = t.at("solve_s").get<double>();
        r.timings.decompose_s = t.at("decompose_s").get<double>();
        r.timings.total_s = t.at("total_s").get<double>();
        r.converged = j.value("converged", true);
        r.degenerate = j.value("degenerate", false);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed report: ") + e.what());
    }
}

void write_report(const Report& report, const fs::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    out << report_to_json(report);
    out.close();
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

Report read_report(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return report_from_json(ss.str());
}

} // namespace bstd
