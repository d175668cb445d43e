#include "cellseg/io.hpp"

#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cellseg {

namespace {

// Decoded samples before normalization: row-major, `channels` interleaved samples per pixel.
struct RawRaster {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint16_t> samples;
    std::string error;
    // Scratch space owned outside the setjmp frame.
    std::vector<std::uint8_t> bytes;
    std::vector<png_bytep> rows;
};

bool is_png(std::span<const std::uint8_t> b) {
    return b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0;
}

bool is_tiff(std::span<const std::uint8_t> b) {
    if (b.size() < 4) return false;
    return (b[0] == 'I' && b[1] == 'I' && b[2] == 42 && b[3] == 0) ||
           (b[0] == 'M' && b[1] == 'M' && b[2] == 0 && b[3] == 42);
}

// ---- PNG ----------------------------------------------------------------------------

struct ReadCursor {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t n) {
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + n > cur->size) png_error(png, "unexpected end of PNG data");
    std::memcpy(out, cur->data + cur->pos, n);
    cur->pos += n;
}

void png_error_to_string(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err) *err = msg;
    png_longjmp(png, 1);
}

void png_silent_warning(png_structp, png_const_charp) {}

// libpng reports errors by longjmp; everything that must survive lives in `out`.
bool decode_png_raw(std::span<const std::uint8_t> bytes, RawRaster& out) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &out.error,
                                             png_error_to_string, png_silent_warning);
    if (!png) {
        out.error = "png_create_read_struct failed";
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        out.error = "png_create_info_struct failed";
        return false;
    }
    ReadCursor cursor{bytes.data(), bytes.size(), 0};
    auto* rows = &out.rows;
    auto* buffer = &out.bytes;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_set_read_fn(png, &cursor, png_read_from_memory);
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    buffer->resize(rowbytes * static_cast<std::size_t>(out.height));
    rows->resize(static_cast<std::size_t>(out.height));
    for (int y = 0; y < out.height; ++y) {
        (*rows)[static_cast<std::size_t>(y)] = buffer->data() + rowbytes * static_cast<std::size_t>(y);
    }
    png_read_image(png, rows->data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const std::size_t n = static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height) *
                          static_cast<std::size_t>(out.channels);
    out.samples.resize(n);
    if (out.bit_depth == 16) {
        for (std::size_t i = 0; i < n; ++i) {
            out.samples[i] = static_cast<std::uint16_t>(((*buffer)[2 * i] << 8) | (*buffer)[2 * i + 1]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) out.samples[i] = (*buffer)[i];
    }
    out.rows.clear();
    out.bytes.clear();
    out.bytes.shrink_to_fit();
    return true;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + n);
}

void png_flush_noop(png_structp) {}

// `samples` holds width*height*channels values at `bit_depth` (8 or 16).
bool encode_png_raw(int width, int height, int channels, int bit_depth,
                    const std::vector<std::uint16_t>& samples, std::vector<std::uint8_t>& out,
                    std::string& error, std::vector<std::uint8_t>& scratch) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error,
                                              png_error_to_string, png_silent_warning);
    if (!png) {
        error = "png_create_write_struct failed";
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        error = "png_create_info_struct failed";
        return false;
    }
    const std::size_t bytes_per_sample = bit_depth == 16 ? 2 : 1;
    const std::size_t rowbytes =
        static_cast<std::size_t>(width) * static_cast<std::size_t>(channels) * bytes_per_sample;
    scratch.assign(rowbytes * static_cast<std::size_t>(height), 0);
    auto* buffer = &scratch;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (bit_depth == 16) {
            (*buffer)[2 * i] = static_cast<std::uint8_t>(samples[i] >> 8);
            (*buffer)[2 * i + 1] = static_cast<std::uint8_t>(samples[i] & 0xff);
        } else {
            (*buffer)[i] = static_cast<std::uint8_t>(samples[i]);
        }
    }
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    const int color_type = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, buffer->data() + rowbytes * static_cast<std::size_t>(y));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

// ---- TIFF ---------------------------------------------------------------------------

struct TiffMemory {
    const std::uint8_t* data;
    toff_t size;
    toff_t pos;
};

tmsize_t tiff_read(thandle_t h, void* buf, tmsize_t n) {
    auto* m = static_cast<TiffMemory*>(h);
    if (m->pos >= m->size) return 0;
    const toff_t avail = m->size - m->pos;
    const toff_t take = std::min<toff_t>(avail, static_cast<toff_t>(n));
    std::memcpy(buf, m->data + m->pos, take);
    m->pos += take;
    return static_cast<tmsize_t>(take);
}

tmsize_t tiff_write(thandle_t, void*, tmsize_t) { return -1; }

toff_t tiff_seek(thandle_t h, toff_t off, int whence) {
    auto* m = static_cast<TiffMemory*>(h);
    toff_t base = 0;
    if (whence == SEEK_CUR) base = m->pos;
    else if (whence == SEEK_END) base = m->size;
    m->pos = base + off;
    return m->pos;
}

int tiff_close(thandle_t) { return 0; }
toff_t tiff_size(thandle_t h) { return static_cast<TiffMemory*>(h)->size; }
int tiff_map(thandle_t, void**, toff_t*) { return 0; }
void tiff_unmap(thandle_t, void*, toff_t) {}

struct TiffCloser {
    void operator()(TIFF* t) const {
        if (t) TIFFClose(t);
    }
};

bool decode_tiff_raw(std::span<const std::uint8_t> bytes, RawRaster& out) {
    TIFFSetErrorHandler(nullptr);
    TIFFSetWarningHandler(nullptr);
    TiffMemory mem{bytes.data(), static_cast<toff_t>(bytes.size()), 0};
    std::unique_ptr<TIFF, TiffCloser> tif(TIFFClientOpen("memory", "rm", &mem, tiff_read,
                                                         tiff_write, tiff_seek, tiff_close,
                                                         tiff_size, tiff_map, tiff_unmap));
    if (!tif) {
        out.error = "not a readable TIFF";
        return false;
    }
    std::uint32_t w = 0, h = 0;
    std::uint16_t bps = 0, spp = 1, planar = PLANARCONFIG_CONTIG, photometric = 0;
    std::uint16_t sample_format = SAMPLEFORMAT_UINT;
    TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &w);
    TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &h);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &sample_format);
    TIFFGetField(tif.get(), TIFFTAG_PHOTOMETRIC, &photometric);

    if (bps != 8 && bps != 16) {
        out.error = "unsupported bit depth " + std::to_string(bps);
        return false;
    }
    if (sample_format != SAMPLEFORMAT_UINT) {
        out.error = "unsupported TIFF sample format";
        return false;
    }
    if (photometric == PHOTOMETRIC_PALETTE) {
        out.error = "palette TIFF unsupported";
        return false;
    }
    if (TIFFIsTiled(tif.get())) {
        out.error = "tiled TIFF unsupported";
        return false;
    }
    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    out.channels = spp;
    out.bit_depth = bps;
    const std::size_t n = static_cast<std::size_t>(w) * h * spp;
    out.samples.assign(n, 0);

    std::vector<std::uint8_t> line(static_cast<std::size_t>(TIFFScanlineSize(tif.get())));
    auto sample_at = [&](std::size_t i) -> std::uint16_t {
        if (bps == 16) {
            std::uint16_t v;
            std::memcpy(&v, line.data() + 2 * i, 2);
            return v;
        }
        return line[i];
    };
    const std::uint16_t planes = planar == PLANARCONFIG_SEPARATE ? spp : 1;
    for (std::uint16_t s = 0; s < planes; ++s) {
        for (std::uint32_t y = 0; y < h; ++y) {
            if (TIFFReadScanline(tif.get(), line.data(), y, s) < 0) {
                out.error = "failed to read TIFF scanline";
                return false;
            }
            const std::size_t row = static_cast<std::size_t>(y) * w * spp;
            if (planes == 1) {
                for (std::size_t i = 0; i < static_cast<std::size_t>(w) * spp; ++i) {
                    out.samples[row + i] = sample_at(i);
                }
            } else {
                for (std::size_t x = 0; x < w; ++x) out.samples[row + x * spp + s] = sample_at(x);
            }
        }
    }
    if (photometric == PHOTOMETRIC_MINISWHITE) {
        const std::uint16_t maxv = bps == 16 ? 65535 : 255;
        for (auto& v : out.samples) v = static_cast<std::uint16_t>(maxv - v);
    }
    return true;
}

RgbImage normalize(const RawRaster& raw, const LoadOptions& opts) {
    int channels = raw.channels;
    bool has_alpha = false;
    if (channels == 2 || channels == 4) {
        if (!opts.strip_alpha) {
            throw IoError("unsupported channel count " + std::to_string(channels) +
                          " (enable alpha stripping to drop the fourth channel)");
        }
        has_alpha = true;
    } else if (channels != 1 && channels != 3) {
        throw IoError("unsupported channel count " + std::to_string(channels));
    }
    if (raw.bit_depth != 8 && raw.bit_depth != 16) {
        throw IoError("unsupported bit depth " + std::to_string(raw.bit_depth));
    }
    const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
    const int color_channels = has_alpha ? channels - 1 : channels;
    const std::size_t npix = static_cast<std::size_t>(raw.width) * static_cast<std::size_t>(raw.height);
    std::vector<double> data(npix * 3);
    for (std::size_t p = 0; p < npix; ++p) {
        const std::uint16_t* px = raw.samples.data() + p * static_cast<std::size_t>(channels);
        for (int c = 0; c < 3; ++c) {
            const std::uint16_t v = color_channels == 1 ? px[0] : px[c];
            data[3 * p + static_cast<std::size_t>(c)] = static_cast<double>(v) / scale;
        }
    }
    return RgbImage(raw.width, raw.height, std::move(data), raw.bit_depth);
}

std::uint16_t quantize(double v, double maxv) {
    return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * maxv));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double_field(const std::string& s, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw IoError(std::string("malformed ") + what + ": \"" + s + "\"");
    }
    return v;
}

}  // namespace

bool looks_like_image(std::span<const std::uint8_t> bytes) {
    return is_png(bytes) || is_tiff(bytes);
}

RgbImage decode_image(std::span<const std::uint8_t> bytes, const LoadOptions& opts) {
    RawRaster raw;
    if (is_png(bytes)) {
        if (!decode_png_raw(bytes, raw)) throw IoError("PNG decode failed: " + raw.error);
    } else if (is_tiff(bytes)) {
        if (!decode_tiff_raw(bytes, raw)) throw IoError("TIFF decode failed: " + raw.error);
    } else {
        throw IoError("unrecognized image format (expected PNG or TIFF)");
    }
    return normalize(raw, opts);
}

RgbImage load_image(const std::filesystem::path& path, const LoadOptions& opts) {
    auto bytes = read_binary_file(path);
    try {
        return decode_image(bytes, opts);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void save_label_matrix(const LabelMatrix& lm, const std::filesystem::path& path) {
    if (lm.n_objects() > 65535) {
        throw InvalidArgument("label matrix has " + std::to_string(lm.n_objects()) +
                              " objects; 16-bit PNG holds at most 65535");
    }
    std::vector<std::uint16_t> samples(lm.labels().begin(), lm.labels().end());
    std::vector<std::uint8_t> bytes;
    std::string error;
    std::vector<std::uint8_t> scratch;
    if (!encode_png_raw(lm.width(), lm.height(), 1, 16, samples, bytes, error, scratch)) {
        throw IoError("PNG encode failed: " + error);
    }
    write_binary_file(path, bytes);
}

LabelMatrix load_label_matrix(const std::filesystem::path& path) {
    auto bytes = read_binary_file(path);
    RawRaster raw;
    if (!is_png(bytes) || !decode_png_raw(bytes, raw)) {
        throw IoError(path.string() + ": not a readable label PNG " + raw.error);
    }
    if (raw.channels != 1) throw IoError(path.string() + ": label PNG must be single-channel");
    std::vector<Label> labels(raw.samples.begin(), raw.samples.end());
    return LabelMatrix(raw.width, raw.height, std::move(labels));
}

void save_image(const RgbImage& img, const std::filesystem::path& path) {
    const int depth = img.source_bit_depth() == 16 ? 16 : 8;
    const double maxv = depth == 16 ? 65535.0 : 255.0;
    std::vector<std::uint16_t> samples(img.data().size());
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = quantize(img.data()[i], maxv);
    std::vector<std::uint8_t> bytes;
    std::string error;
    std::vector<std::uint8_t> scratch;
    if (!encode_png_raw(img.width(), img.height(), 3, depth, samples, bytes, error, scratch)) {
        throw IoError("PNG encode failed: " + error);
    }
    write_binary_file(path, bytes);
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
    std::vector<std::uint16_t> samples(img.size());
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = quantize(img[i], 255.0);
    std::vector<std::uint8_t> bytes;
    std::string error;
    std::vector<std::uint8_t> scratch;
    if (!encode_png_raw(img.width(), img.height(), 1, 8, samples, bytes, error, scratch)) {
        throw IoError("PNG encode failed: " + error);
    }
    return bytes;
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
    std::vector<std::uint16_t> samples(img.data().size());
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = quantize(img.data()[i], 255.0);
    std::vector<std::uint8_t> bytes;
    std::string error;
    std::vector<std::uint8_t> scratch;
    if (!encode_png_raw(img.width(), img.height(), 3, 8, samples, bytes, error, scratch)) {
        throw IoError("PNG encode failed: " + error);
    }
    return bytes;
}

void save_png(const GrayImage& img, const std::filesystem::path& path) {
    write_binary_file(path, encode_png(img));
}

void save_png(const RgbImage& img, const std::filesystem::path& path) {
    write_binary_file(path, encode_png(img));
}

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string region_table_csv(const RegionTable& rt) {
    std::string out = "label,centroid_x,centroid_y,area,mean_R,mean_G,mean_B,f_value,state\n";
    for (const auto& r : rt.rows) {
        out += std::to_string(r.label);
        out += ',' + format_real(r.centroid_x);
        out += ',' + format_real(r.centroid_y);
        out += ',' + std::to_string(r.area);
        out += ',' + format_real(r.mean_r);
        out += ',' + format_real(r.mean_g);
        out += ',' + format_real(r.mean_b);
        out += ',';
        if (r.f_value) out += format_real(*r.f_value);
        out += ',';
        switch (r.state) {
            case State::One: out += '1'; break;
            case State::Two: out += '2'; break;
            case State::Unclassified: out += "unclassified"; break;
        }
        out += '\n';
    }
    return out;
}

void export_region_table(const RegionTable& rt, const std::filesystem::path& path) {
    write_text_file(path, region_table_csv(rt));
}

RegionTable parse_region_table(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty region CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "label,centroid_x,centroid_y,area,mean_R,mean_G,mean_B,f_value,state") {
        throw IoError("unexpected region CSV header: " + line);
    }
    RegionTable rt;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line);
        if (f.size() != 9) throw IoError("region CSV row has " + std::to_string(f.size()) + " fields");
        Region r;
        r.label = static_cast<Label>(parse_double_field(f[0], "label"));
        r.centroid_x = parse_double_field(f[1], "centroid_x");
        r.centroid_y = parse_double_field(f[2], "centroid_y");
        r.area = static_cast<std::size_t>(parse_double_field(f[3], "area"));
        r.mean_r = parse_double_field(f[4], "mean_R");
        r.mean_g = parse_double_field(f[5], "mean_G");
        r.mean_b = parse_double_field(f[6], "mean_B");
        if (!f[7].empty()) r.f_value = parse_double_field(f[7], "f_value");
        if (f[8] == "1") r.state = State::One;
        else if (f[8] == "2") r.state = State::Two;
        else if (f[8] == "unclassified" || f[8].empty()) r.state = State::Unclassified;
        else throw IoError("malformed state: \"" + f[8] + "\"");
        rt.rows.push_back(std::move(r));
    }
    return rt;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": file not found or unreadable");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw IoError(path.string() + ": write failed");
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": file not found or unreadable");
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace cellseg
