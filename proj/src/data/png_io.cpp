#include "alcgan/data/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "alcgan/error.hpp"

namespace alcgan::data {

namespace {

struct ReadCursor {
    const Bytes* bytes;
    std::size_t offset;
};

void read_callback(png_structp png, png_bytep out, png_size_t length) {
    auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cursor->offset + length > cursor->bytes->size()) png_error(png, "truncated PNG stream");
    std::memcpy(out, cursor->bytes->data() + cursor->offset, length);
    cursor->offset += length;
}

void write_callback(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

[[noreturn]] void error_callback(png_structp, png_const_charp message) { throw IoError(std::string("png: ") + message); }
void warning_callback(png_structp, png_const_charp) {}

class PngReader {
public:
    explicit PngReader(const Bytes& bytes) : cursor_{&bytes, 0} {
        if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw IoError("png: not a PNG stream");
        png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, error_callback, warning_callback);
        if (!png_) throw IoError("png: cannot create read struct");
        info_ = png_create_info_struct(png_);
        if (!info_) {
            png_destroy_read_struct(&png_, nullptr, nullptr);
            throw IoError("png: cannot create info struct");
        }
        png_set_read_fn(png_, &cursor_, read_callback);
        png_read_info(png_, info_);
    }
    ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;

    png_structp png() const { return png_; }
    png_infop info() const { return info_; }

    std::vector<png_byte> read_rows(int height, std::size_t rowbytes) {
        std::vector<png_byte> buffer(rowbytes * height);
        std::vector<png_bytep> rows(height);
        for (int y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
        png_read_image(png_, rows.data());
        png_read_end(png_, nullptr);
        return buffer;
    }

private:
    ReadCursor cursor_;
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

class PngWriter {
public:
    PngWriter() {
        png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, error_callback, warning_callback);
        if (!png_) throw IoError("png: cannot create write struct");
        info_ = png_create_info_struct(png_);
        if (!info_) {
            png_destroy_write_struct(&png_, nullptr);
            throw IoError("png: cannot create info struct");
        }
        png_set_write_fn(png_, &out_, write_callback, flush_callback);
    }
    ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
    PngWriter(const PngWriter&) = delete;
    PngWriter& operator=(const PngWriter&) = delete;

    png_structp png() const { return png_; }
    png_infop info() const { return info_; }

    Bytes finish(const std::uint8_t* pixels, int height, std::size_t rowbytes) {
        png_write_info(png_, info_);
        for (int y = 0; y < height; ++y) {
            png_write_row(png_, const_cast<png_bytep>(pixels + y * rowbytes));
        }
        png_write_end(png_, nullptr);
        return std::move(out_);
    }

private:
    Bytes out_;
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

} // namespace

RgbBytes decode_png_rgb(const Bytes& bytes) {
    PngReader reader(bytes);
    auto* png = reader.png();
    auto* info = reader.info();
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int width = static_cast<int>(png_get_image_width(png, info));
    const int color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_expand_gray_1_2_4_to_8(png);
        png_set_gray_to_rgb(png);
    }
    png_set_packing(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    if (rowbytes != static_cast<std::size_t>(width) * 3) throw IoError("png: unsupported pixel layout");
    RgbBytes out;
    out.height = height;
    out.width = width;
    out.data = reader.read_rows(height, rowbytes);
    return out;
}

Bytes encode_png_rgb(const RgbBytes& image) {
    if (image.data.size() != static_cast<std::size_t>(image.height) * image.width * 3 || image.height <= 0) {
        throw ValidationError("image", "byte buffer does not match dimensions");
    }
    PngWriter writer;
    png_set_IHDR(writer.png(), writer.info(), image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    return writer.finish(image.data.data(), image.height, static_cast<std::size_t>(image.width) * 3);
}

IndexMap decode_png_indexed(const Bytes& bytes) {
    PngReader reader(bytes);
    auto* png = reader.png();
    auto* info = reader.info();
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_PALETTE && !(color == PNG_COLOR_TYPE_GRAY && depth == 8)) {
        throw IoError("png: layout must be an indexed (palette) or 8-bit grayscale PNG");
    }
    if (depth < 8) png_set_packing(png);
    png_read_update_info(png, info);
    IndexMap out;
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.width = static_cast<int>(png_get_image_width(png, info));
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    if (rowbytes != static_cast<std::size_t>(out.width)) throw IoError("png: unsupported index layout");
    out.labels = reader.read_rows(out.height, rowbytes);
    return out;
}

Bytes encode_png_indexed(const IndexMap& map) {
    if (map.labels.size() != static_cast<std::size_t>(map.height) * map.width || map.height <= 0) {
        throw ValidationError("layout", "index map does not match dimensions");
    }
    PngWriter writer;
    png_set_IHDR(writer.png(), writer.info(), map.width, map.height, 8, PNG_COLOR_TYPE_PALETTE,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // Full 256-entry palette so any stored index stays representable.
    std::vector<png_color> palette(256, png_color{0, 0, 0});
    const auto& colors = layout_palette();
    for (std::size_t i = 0; i < colors.size(); ++i) palette[i] = {colors[i].r, colors[i].g, colors[i].b};
    png_set_PLTE(writer.png(), writer.info(), palette.data(), static_cast<int>(palette.size()));
    return writer.finish(map.labels.data(), map.height, static_cast<std::size_t>(map.width));
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

RgbBytes read_png_rgb(const std::filesystem::path& path) {
    try {
        return decode_png_rgb(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_png_rgb(const std::filesystem::path& path, const RgbBytes& image) {
    write_file(path, encode_png_rgb(image));
}

IndexMap read_png_indexed(const std::filesystem::path& path) {
    try {
        return decode_png_indexed(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_png_indexed(const std::filesystem::path& path, const IndexMap& map) {
    write_file(path, encode_png_indexed(map));
}

} // namespace alcgan::data
